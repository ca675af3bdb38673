// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Timing harness for the encrypted-query, encrypted-database and plaintext
// settings.
//
// Phases (milliseconds):
//   keygen       key pair generation (encrypted settings, when no keys given)
//   encryption   query vector (encrypted_query) or whole corpus (encrypted_db)
//   evaluation   one query scanned against all N vectors
//   decryption   opening the N scores
//
// CSV columns: setting,dimension,N,phase,median_ms,min_ms,max_ms,ct_bytes,reps,seed

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahems/fixed_point.h"
#include "ahems/paillier.h"

namespace ahems::bench {

enum class BenchSetting { kEncryptedQuery, kEncryptedDb, kPlaintext };

const char* to_string(BenchSetting s);
// Throws UsageError on unknown names.
BenchSetting parse_setting(const std::string& name);

inline constexpr std::size_t kPaperDims[] = {128, 256, 512, 1024};

struct PhaseStats {
  std::string phase;
  double median_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::size_t reps = 0;
};

PhaseStats summarize(std::string phase, std::vector<double> samples_ms);

struct BenchResult {
  BenchSetting setting = BenchSetting::kPlaintext;
  std::size_t dimension = 0;
  std::size_t n = 0;
  std::vector<PhaseStats> phases;
  std::uint64_t ct_bytes = 0;  // resident input ciphertexts at fixed width
  std::uint64_t seed = 0;
  std::optional<long> peak_rss_kb;

  const PhaseStats& phase(const std::string& name) const;
  bool has_phase(const std::string& name) const;
  // Sum of phase medians, per-thread timers excluded.
  double total_ms() const;
  // encryption + evaluation medians.
  double end_to_end_ms() const;
};

struct BenchOptions {
  std::size_t reps = 11;
  std::size_t warmup = 2;
  std::size_t setup_reps = 5;
  std::size_t gate_pairs = 10;
  std::size_t threads = 1;
  int key_bits = ahe::kDefaultKeyBits;
  codec::ScaleConfig scale;
};

// Runs one setting over `dims`. When `keys` is null a key pair of
// options.key_bits is generated (and timed) from the seed.
// Errors: N = 0, empty dims, reps < 5, budget violation, correctness gate.
std::vector<BenchResult> run_bench(std::span<const std::size_t> dims, std::size_t n,
                                   BenchSetting setting, std::uint64_t seed,
                                   const BenchOptions& options,
                                   const ahe::KeyPair* keys = nullptr);

// Asserts oracle equivalence on `pairs` random pairs at dimension d; throws
// IntegrityError on any mismatch.
void correctness_gate(std::size_t d, std::size_t pairs, std::uint64_t seed,
                      const ahe::KeyPair& keys, const codec::ScaleConfig& cfg);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct ReportPaths {
  std::filesystem::path main;    // one evaluation row per (setting, d)
  std::filesystem::path phases;  // every phase row
  std::filesystem::path ratios;  // main rows + ratio_vs_plain128
  std::filesystem::path memory;  // ct_bytes and peak RSS per (setting, d)
};

ReportPaths report_paths(const std::filesystem::path& csv);

std::string main_csv(const std::vector<BenchResult>& results);
std::string phases_csv(const std::vector<BenchResult>& results);
std::string ratios_csv(const std::vector<BenchResult>& results);
std::string memory_csv(const std::vector<BenchResult>& results);

// Writes the four files next to `csv`; returns their paths.
ReportPaths emit_report(const std::vector<BenchResult>& results,
                        const std::filesystem::path& csv);

std::optional<long> peak_rss_kb();

}  // namespace ahems::bench
