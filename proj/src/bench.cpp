// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "ahems/error.h"
#include "ahems/similarity.h"
#include "ahems/store.h"

namespace ahems::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
std::vector<double> time_reps(std::size_t warmup, std::size_t reps, F&& body) {
  for (std::size_t i = 0; i < warmup; ++i) body();
  std::vector<double> out;
  out.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto start = Clock::now();
    body();
    out.push_back(elapsed_ms(start));
  }
  return out;
}

BlockSchema bench_schema(std::size_t d) {
  return BlockSchema::equal_partition(d, std::min<std::size_t>(4, d));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool is_derived_phase(const std::string& name) {
  return name.rfind("evaluation_", 0) == 0;
}

}  // namespace

const char* to_string(BenchSetting s) {
  switch (s) {
    case BenchSetting::kEncryptedQuery: return "encrypted_query";
    case BenchSetting::kEncryptedDb: return "encrypted_db";
    case BenchSetting::kPlaintext: return "plaintext";
  }
  return "?";
}

BenchSetting parse_setting(const std::string& name) {
  for (BenchSetting s : {BenchSetting::kEncryptedQuery, BenchSetting::kEncryptedDb,
                         BenchSetting::kPlaintext}) {
    if (name == to_string(s)) return s;
  }
  throw UsageError("unknown setting '" + name +
                   "' (expected encrypted_query, encrypted_db or plaintext)");
}

PhaseStats summarize(std::string phase, std::vector<double> samples) {
  if (samples.empty()) throw ValidationError("no samples for phase " + phase);
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const double median =
      n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  return {std::move(phase), median, samples.front(), samples.back(), n};
}

const PhaseStats& BenchResult::phase(const std::string& name) const {
  for (const auto& p : phases) {
    if (p.phase == name) return p;
  }
  throw ValidationError(std::string("no phase '") + name + "' for " + to_string(setting));
}

bool BenchResult::has_phase(const std::string& name) const {
  return std::any_of(phases.begin(), phases.end(),
                     [&](const PhaseStats& p) { return p.phase == name; });
}

double BenchResult::total_ms() const {
  double total = 0.0;
  for (const auto& p : phases) {
    if (!is_derived_phase(p.phase)) total += p.median_ms;
  }
  return total;
}

double BenchResult::end_to_end_ms() const {
  double total = phase("evaluation").median_ms;
  if (has_phase("encryption")) total += phase("encryption").median_ms;
  return total;
}

void correctness_gate(std::size_t d, std::size_t pairs, std::uint64_t seed,
                      const ahe::KeyPair& keys, const codec::ScaleConfig& cfg) {
  if (pairs == 0) return;
  const BlockSchema schema = bench_schema(d);
  const auto corpus = store::synth_corpus(seed, 2 * pairs, schema, store::UniformProfile{},
                                          cfg.max_abs);
  engine::Evaluator evaluator(keys.pub, cfg);
  engine::Opener opener(keys, cfg);
  SeededRandom rng(seed ^ 0x6A7E);
  const double bound = codec::product_error_bound(cfg, d);
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& x = corpus.set.vectors[2 * i];
    const auto& y = corpus.set.vectors[2 * i + 1];
    mpz_class expect = 0;
    for (std::size_t j = 0; j < d; ++j) {
      expect += mpz_class(codec::encode(x.values[j], cfg)) *
                mpz_class(codec::encode(y.values[j], cfg));
    }
    const auto ex = store::encrypt_vector(x, keys.pub, cfg, rng);
    const auto ey = store::encrypt_vector(y, keys.pub, cfg, rng);
    const mpz_class q = opener.open_raw(evaluator.encquery_inner(ex, y));
    const mpz_class db = opener.open_raw(evaluator.encdb_inner(x, ey));
    const double oracle = engine::dot(x.values, y.values);
    if (q != expect || db != expect ||
        std::fabs(codec::decode_product(q, cfg, false) - oracle) > bound) {
      throw IntegrityError("correctness gate failed at d=" + std::to_string(d) + " pair " +
                           std::to_string(i));
    }
  }
}

std::vector<BenchResult> run_bench(std::span<const std::size_t> dims, std::size_t n,
                                   BenchSetting setting, std::uint64_t seed,
                                   const BenchOptions& options, const ahe::KeyPair* keys) {
  if (n == 0) throw ValidationError("corpus size N must be positive");
  if (dims.empty()) throw ValidationError("no dimensions to benchmark");
  if (options.reps < 5 || options.setup_reps < 5) {
    throw ValidationError("benchmarks need at least 5 repetitions");
  }
  if (options.threads == 0) throw ValidationError("threads must be positive");
  const codec::ScaleConfig& cfg = options.scale;
  cfg.validate();
  const bool encrypted = setting != BenchSetting::kPlaintext;

  std::optional<ahe::KeyPair> own_keys;
  std::optional<PhaseStats> keygen_stats;
  if (encrypted && keys == nullptr) {
    std::uint64_t rep = 0;
    auto samples = time_reps(0, options.setup_reps, [&] {
      SeededRandom rng(seed + 0x4B45 + rep++);
      own_keys = ahe::keygen(options.key_bits, rng);
    });
    keygen_stats = summarize("keygen", std::move(samples));
    keys = &*own_keys;
  }
  if (encrypted) {
    const std::size_t max_d = *std::max_element(dims.begin(), dims.end());
    store::require_budget(cfg, max_d, keys->pub);
  }

  // Setup runs per dimension; timed evaluation repetitions then run
  // round-robin across dimensions so slow periods affect every d alike.
  struct Prepared {
    BenchResult result;
    store::SynthCorpus corpus;
    EmbeddingVector query;
    EncryptedVector enc_query;
    EncryptedSet enc_db;
    std::vector<ahe::Ciphertext> scores;
    std::vector<double> sink;
    std::vector<double> eval_ms;
    std::vector<std::vector<double>> thread_ms;
  };
  std::vector<std::unique_ptr<Prepared>> prepared;
  std::optional<engine::Evaluator> evaluator;
  if (encrypted) evaluator.emplace(keys->pub, cfg);

  auto scan_once = [&](Prepared& p) {
    auto one = [&](std::size_t i) {
      if (setting == BenchSetting::kPlaintext) {
        p.sink[i] = engine::dot(p.query.values, p.corpus.set.vectors[i].values);
      } else if (setting == BenchSetting::kEncryptedQuery) {
        p.scores[i] = evaluator->encquery_inner(p.enc_query, p.corpus.set.vectors[i]);
      } else {
        p.scores[i] = evaluator->encdb_inner(p.query, p.enc_db.vectors[i]);
      }
    };
    if (options.threads == 1) {
      for (std::size_t i = 0; i < n; ++i) one(i);
      return;
    }
    // Splits [0, n) across threads; each thread times its own slice.
    std::vector<std::thread> pool;
    std::vector<double> local(options.threads);
    for (std::size_t t = 0; t < options.threads; ++t) {
      pool.emplace_back([&, t] {
        const auto start = Clock::now();
        for (std::size_t i = t; i < n; i += options.threads) one(i);
        local[t] = elapsed_ms(start);
      });
    }
    for (auto& th : pool) th.join();
    for (std::size_t t = 0; t < options.threads; ++t) p.thread_ms[t].push_back(local[t]);
  };

  for (std::size_t d : dims) {
    if (d == 0) throw ValidationError("dimension must be positive");
    const BlockSchema schema = bench_schema(d);
    auto p = std::make_unique<Prepared>();
    p->corpus = store::synth_corpus(seed, n, schema, store::UniformProfile{}, cfg.max_abs);
    p->query = store::synth_corpus(seed ^ 0x51E7, 1, schema, store::UniformProfile{},
                                   cfg.max_abs).set.vectors[0];
    p->query.id = "query";
    p->thread_ms.resize(options.threads);

    BenchResult& r = p->result;
    r.setting = setting;
    r.dimension = d;
    r.n = n;
    r.seed = seed;
    if (keygen_stats) r.phases.push_back(*keygen_stats);

    if (encrypted) {
      correctness_gate(d, options.gate_pairs, seed + d, *keys, cfg);
      p->scores.assign(n, ahe::zero(keys->pub));
      SeededRandom rng(seed + 0xE4C + d);
      if (setting == BenchSetting::kEncryptedQuery) {
        auto enc_ms = time_reps(0, options.setup_reps, [&] {
          p->enc_query = store::encrypt_vector(p->query, keys->pub, cfg, rng);
        });
        r.phases.push_back(summarize("encryption", std::move(enc_ms)));
        r.ct_bytes = static_cast<std::uint64_t>(d) * keys->pub.ciphertext_bytes();
      } else {
        auto enc_ms = time_reps(0, options.setup_reps, [&] {
          p->enc_db = store::encrypt_collection(p->corpus.set, keys->pub, cfg, rng);
        });
        r.phases.push_back(summarize("encryption", std::move(enc_ms)));
        r.ct_bytes = store::ciphertext_bytes(p->enc_db, keys->pub);
      }
    } else {
      p->sink.resize(n);
    }
    for (std::size_t w = 0; w < options.warmup; ++w) scan_once(*p);
    prepared.push_back(std::move(p));
  }

  for (std::size_t rep = 0; rep < options.reps; ++rep) {
    for (auto& p : prepared) {
      const auto start = Clock::now();
      scan_once(*p);
      p->eval_ms.push_back(elapsed_ms(start));
    }
  }

  std::vector<BenchResult> results;
  for (auto& p : prepared) {
    BenchResult& r = p->result;
    r.phases.push_back(summarize("evaluation", p->eval_ms));
    if (encrypted) {
      engine::Opener opener(*keys, cfg);
      auto dec_ms = time_reps(0, options.setup_reps, [&] {
        for (const auto& c : p->scores) (void)opener.open_raw(c);
      });
      r.phases.push_back(summarize("decryption", std::move(dec_ms)));
    }
    std::vector<double> per_vector = p->eval_ms;
    for (double& v : per_vector) v /= static_cast<double>(n);
    r.phases.push_back(summarize("evaluation_per_vector", std::move(per_vector)));
    if (options.threads > 1) {
      for (std::size_t t = 0; t < options.threads; ++t) {
        // Drop warm-up samples.
        auto& s = p->thread_ms[t];
        s.erase(s.begin(), s.begin() + std::min(s.size(), options.warmup));
        r.phases.push_back(summarize("evaluation_thread" + std::to_string(t), s));
      }
    }
    r.peak_rss_kb = peak_rss_kb();
    results.push_back(std::move(r));
    p.reset();
  }
  return results;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("linear fit needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw ValidationError("linear fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / syy;
  return f;
}

ReportPaths report_paths(const std::filesystem::path& csv) {
  const auto dir = csv.parent_path();
  const std::string stem = csv.stem().string();
  return {csv, dir / (stem + "_phases.csv"), dir / (stem + "_ratios.csv"),
          dir / (stem + "_memory.csv")};
}

namespace {

constexpr const char* kHeader = "setting,dimension,N,phase,median_ms,min_ms,max_ms,ct_bytes,reps,seed";

std::string row(const BenchResult& r, const PhaseStats& p) {
  std::ostringstream out;
  out << to_string(r.setting) << ',' << r.dimension << ',' << r.n << ',' << p.phase << ','
      << fmt(p.median_ms) << ',' << fmt(p.min_ms) << ',' << fmt(p.max_ms) << ','
      << r.ct_bytes << ',' << p.reps << ',' << r.seed;
  return out.str();
}

}  // namespace

std::string main_csv(const std::vector<BenchResult>& results) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : results) out += row(r, r.phase("evaluation")) + "\n";
  return out;
}

std::string phases_csv(const std::vector<BenchResult>& results) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : results) {
    for (const auto& p : r.phases) out += row(r, p) + "\n";
  }
  return out;
}

std::string ratios_csv(const std::vector<BenchResult>& results) {
  std::optional<double> base;
  for (const auto& r : results) {
    if (r.setting == BenchSetting::kPlaintext && r.dimension == 128) {
      base = r.phase("evaluation").median_ms;
    }
  }
  std::string out = std::string(kHeader) + ",ratio_vs_plain128\n";
  for (const auto& r : results) {
    const auto& p = r.phase("evaluation");
    out += row(r, p) + ",";
    if (base && *base > 0) out += fmt(p.median_ms / *base);
    out += "\n";
  }
  return out;
}

std::string memory_csv(const std::vector<BenchResult>& results) {
  std::string out = "setting,dimension,N,ct_bytes,peak_rss_kb\n";
  for (const auto& r : results) {
    out += std::string(to_string(r.setting)) + "," + std::to_string(r.dimension) + "," +
           std::to_string(r.n) + "," + std::to_string(r.ct_bytes) + ",";
    if (r.peak_rss_kb) out += std::to_string(*r.peak_rss_kb);
    out += "\n";
  }
  return out;
}

ReportPaths emit_report(const std::vector<BenchResult>& results,
                        const std::filesystem::path& csv) {
  const ReportPaths paths = report_paths(csv);
  std::error_code ec;
  if (!paths.main.parent_path().empty()) {
    std::filesystem::create_directories(paths.main.parent_path(), ec);
    if (ec) throw IoError("cannot create " + paths.main.parent_path().string() + ": " + ec.message());
  }
  auto write = [](const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw IoError("cannot write " + p.string());
  };
  write(paths.main, main_csv(results));
  write(paths.phases, phases_csv(results));
  write(paths.ratios, ratios_csv(results));
  write(paths.memory, memory_csv(results));
  return paths;
}

std::optional<long> peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      try {
        return std::stol(line.substr(6));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

}  // namespace ahems::bench
