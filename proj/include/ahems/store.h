// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Ingestion, synthetic corpora, encryption and persistence of embedding
// collections.
//
// JSONL embedding line: {"id": str, "creator": str (optional), "values": [d reals]}
//
// Database directory:
//   manifest.json      mode, schema, scale config, key_id, count, payload digest
//   vectors.jsonl      plaintext mode, one embedding line per vector
//   cells.hex.jsonl    encrypted mode, {"id", "creator"?, "cells": [hex...]}

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ahems/embedding.h"
#include "ahems/fixed_point.h"
#include "ahems/paillier.h"
#include "ahems/random.h"
#include "json.hpp"

namespace ahems::store {

// ---- ingestion -------------------------------------------------------------

EmbeddingSet ingest_jsonl(std::istream& in, const BlockSchema& schema);
EmbeddingSet ingest_jsonl(const std::filesystem::path& path,
                          const BlockSchema& schema);

nlohmann::json to_json(const EmbeddingVector& v);
std::string to_jsonl(const std::vector<EmbeddingVector>& vectors);
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<EmbeddingVector>& vectors);

// ---- synthetic corpora -----------------------------------------------------

// Coordinates i.i.d. uniform on [-1, 1].
struct UniformProfile {};

// Uniform base; `planted_count` vectors (chosen by the corpus seed) get
// strength * sigma * p added to block `block_label`, where p is the
// unit-norm pattern drawn from `pattern_seed` and sigma = 1/sqrt(3) is the
// per-coordinate standard deviation of the uniform base.
struct PlantedPatternProfile {
  std::string block_label;
  std::uint64_t pattern_seed = 0;
  double strength = 0.0;
  std::size_t planted_count = 0;
};

// Each artist has a unit-norm centroid; member vectors add Gaussian noise
// with per-coordinate deviation spread / sqrt(d), so the expected noise norm
// is `spread`. Vector i belongs to artist i % num_artists.
struct ArtistClustersProfile {
  std::size_t num_artists = 4;
  double spread = 0.1;
};

using Profile =
    std::variant<UniformProfile, PlantedPatternProfile, ArtistClustersProfile>;

inline constexpr double kUniformNoiseSigma = 0.57735026918962576;  // 1/sqrt(3)

struct SynthCorpus {
  EmbeddingSet set;
  // Harness-side ground truth.
  std::vector<std::string> planted_ids;
  std::vector<double> pattern;
  std::vector<std::vector<double>> centroids;
};

// Deterministic under `seed`. Values are clamped to [-max_abs, max_abs].
SynthCorpus synth_corpus(std::uint64_t seed, std::size_t count,
                         const BlockSchema& schema, const Profile& profile,
                         double max_abs = 4.0);

// Unit-norm pattern of the given length derived from `pattern_seed`.
std::vector<double> pattern_vector(std::uint64_t pattern_seed, std::size_t length);

std::string creator_name(std::size_t artist);

// ---- encryption ------------------------------------------------------------

// Throws BudgetError when the schema dimension violates the overflow budget
// of `cfg` under `pk`.
void require_budget(const codec::ScaleConfig& cfg, std::size_t dimension,
                    const ahe::PublicKey& pk);

EncryptedVector encrypt_vector(const EmbeddingVector& v,
                               const ahe::PublicKey& pk,
                               const codec::ScaleConfig& cfg,
                               RandomSource& rng);

EncryptedSet encrypt_collection(const EmbeddingSet& set,
                                const ahe::PublicKey& pk,
                                const codec::ScaleConfig& cfg,
                                RandomSource& rng);

// Key-holder audit: decrypt and decode every cell.
EmbeddingVector decrypt_vector(const EncryptedVector& v, const ahe::KeyPair& keys,
                               const codec::ScaleConfig& cfg);

// Exact byte size of all resident ciphertexts at fixed width.
std::size_t ciphertext_bytes(const EncryptedSet& set, const ahe::PublicKey& pk);

// ---- persistence -----------------------------------------------------------

enum class DbMode { kPlaintext, kEncrypted };

struct Manifest {
  DbMode mode = DbMode::kPlaintext;
  BlockSchema schema;
  codec::ScaleConfig scale;
  std::optional<ahe::KeyId> key_id;
  std::size_t count = 0;
  std::string payload_file;
  std::uint64_t payload_bytes = 0;
  std::string payload_sha256;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kPlainPayload = "vectors.jsonl";
inline constexpr const char* kEncryptedPayload = "cells.hex.jsonl";

nlohmann::json to_json(const BlockSchema& schema);
BlockSchema schema_from_json(const nlohmann::json& j);
nlohmann::json to_json(const codec::ScaleConfig& cfg);
codec::ScaleConfig scale_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

Manifest read_manifest(const std::filesystem::path& dir);

void save_db(const std::filesystem::path& dir, const EmbeddingSet& set,
             const codec::ScaleConfig& cfg);
void save_db(const std::filesystem::path& dir, const EncryptedSet& set);

EmbeddingSet load_plain_db(const std::filesystem::path& dir,
                           codec::ScaleConfig* scale_out = nullptr);
// When `expected_key` is set, a differing manifest key_id is a key mismatch.
EncryptedSet load_encrypted_db(const std::filesystem::path& dir,
                               const std::optional<ahe::KeyId>& expected_key = {});

std::string sha256_hex(std::string_view bytes);

}  // namespace ahems::store
