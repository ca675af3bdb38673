// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Encrypted inner products in both one-sided settings.
//
// The Evaluator holds only the public key and computes encrypted scores; the
// Opener holds the key pair and is the single place scores are decrypted.
//
//   encrypted query:     Enc(x), plaintext y  ->  (+)_i encode(y_i) (x) Enc(x_i)
//   encrypted database:  plaintext x, Enc(y)  ->  (+)_i encode(x_i) (x) Enc(y_i)
//   blocked:             per block b: (+)_{i in b} ...;  total = (+)_b per_block[b]
//   weighted:            (+)_b encode_weight(w_b) (x) per_block[b]
//
// Plain and blocked scores carry scale 2^(2f); weighted 2^(2f + f_w).

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ahems/embedding.h"
#include "ahems/fixed_point.h"
#include "ahems/paillier.h"

namespace ahems::engine {

enum class ScoreKind { kPlain, kBlocked, kWeighted };
enum class Setting { kEncryptedQuery, kEncryptedDb, kPlaintextOracle };

const char* to_string(ScoreKind kind);
const char* to_string(Setting setting);
// Throws UsageError on unknown names.
ScoreKind parse_kind(const std::string& name);

struct SimilarityScore {
  std::string query_id;
  std::string target_id;
  mpz_class raw;  // decrypted accumulator; zero for the plaintext oracle
  double value = 0.0;
  ScoreKind kind = ScoreKind::kPlain;
  Setting setting = Setting::kPlaintextOracle;
};

struct RetrievalResult {
  // Descending by value, ties by ascending target_id.
  std::vector<SimilarityScore> ranked;

  std::vector<std::string> ids() const;
};

struct BlockedCiphertexts {
  std::vector<ahe::Ciphertext> per_block;
  ahe::Ciphertext total;
};

// ---- plaintext oracle ------------------------------------------------------

double dot(std::span<const double> x, std::span<const double> y);
SimilarityScore plain_inner(const EmbeddingVector& x, const EmbeddingVector& y);
std::vector<double> plain_blocked(const EmbeddingVector& x, const EmbeddingVector& y,
                                  const BlockSchema& schema);
double plain_weighted(const EmbeddingVector& x, const EmbeddingVector& y,
                      const BlockSchema& schema, const WeightVector& w);

// ---- evaluator (public key only) --------------------------------------------

class Evaluator {
 public:
  Evaluator(ahe::PublicKey pk, codec::ScaleConfig cfg);

  const ahe::PublicKey& public_key() const { return pk_; }
  const codec::ScaleConfig& scale() const { return cfg_; }

  // Throws BudgetError when dimension d is unsafe under this key and scale.
  void require_budget(std::size_t d) const;

  ahe::Ciphertext encquery_inner(const EncryptedVector& enc_x,
                                 const EmbeddingVector& y) const;
  ahe::Ciphertext encdb_inner(const EmbeddingVector& x,
                              const EncryptedVector& enc_y) const;

  BlockedCiphertexts blocked_similarity(const EmbeddingVector& x,
                                        const EncryptedVector& enc_y,
                                        const BlockSchema& schema) const;
  BlockedCiphertexts blocked_similarity(const EncryptedVector& enc_x,
                                        const EmbeddingVector& y,
                                        const BlockSchema& schema) const;

  ahe::Ciphertext weighted_similarity(const EmbeddingVector& x,
                                      const EncryptedVector& enc_y,
                                      const BlockSchema& schema,
                                      const WeightVector& w) const;
  ahe::Ciphertext weighted_similarity(const EncryptedVector& enc_x,
                                      const EmbeddingVector& y,
                                      const BlockSchema& schema,
                                      const WeightVector& w) const;

  // (+)_b encode_weight(w_b) (x) per_block[b]
  ahe::Ciphertext apply_weights(const BlockedCiphertexts& blocks,
                                const WeightVector& w) const;

  // Lifts a 2^(2f) score to 2^(2f + f_w) via encode_weight(1.0).
  ahe::Ciphertext promote_to_weighted_scale(const ahe::Ciphertext& c) const;

  // Dispatch on kind; weights are required for kWeighted.
  ahe::Ciphertext score(const EmbeddingVector& x, const EncryptedVector& enc_y,
                        const BlockSchema& schema, ScoreKind kind,
                        const WeightVector* w) const;
  ahe::Ciphertext score(const EncryptedVector& enc_x, const EmbeddingVector& y,
                        const BlockSchema& schema, ScoreKind kind,
                        const WeightVector* w) const;

 private:
  ahe::Ciphertext combine(std::span<const ahe::Ciphertext> cells,
                          std::span<const double> plain) const;
  BlockedCiphertexts blocked(std::span<const ahe::Ciphertext> cells,
                             std::span<const double> plain,
                             const BlockSchema& schema) const;
  void check_shapes(std::size_t cells, std::size_t plain,
                    const BlockSchema& schema) const;

  ahe::PublicKey pk_;
  codec::ScaleConfig cfg_;
  mpz_class max_dimension_;
};

// ---- opener (key holder) ---------------------------------------------------

class Opener {
 public:
  Opener(ahe::KeyPair keys, codec::ScaleConfig cfg);

  const ahe::PublicKey& public_key() const { return keys_.pub; }

  mpz_class open_raw(const ahe::Ciphertext& c) const;
  SimilarityScore open(const ahe::Ciphertext& c, ScoreKind kind, Setting setting,
                       std::string query_id, std::string target_id) const;

 private:
  ahe::KeyPair keys_;
  codec::ScaleConfig cfg_;
};

// ---- top-k retrieval -------------------------------------------------------

// Sorts descending by value with ascending target_id tie-break and keeps k_top.
RetrievalResult rank(std::vector<SimilarityScore> scores, std::size_t k_top);

RetrievalResult topk_search(const EmbeddingVector& query, const EmbeddingSet& db,
                            std::size_t k_top, ScoreKind kind,
                            const WeightVector* w);

// Encrypted database. `opener` null -> MissingKeyError.
RetrievalResult topk_search(const EmbeddingVector& query, const EncryptedSet& db,
                            std::size_t k_top, ScoreKind kind,
                            const WeightVector* w, const Evaluator& evaluator,
                            const Opener* opener);

// Encrypted query against a plaintext database.
RetrievalResult topk_search(const EncryptedVector& query, const EmbeddingSet& db,
                            std::size_t k_top, ScoreKind kind,
                            const WeightVector* w, const Evaluator& evaluator,
                            const Opener* opener);

}  // namespace ahems::engine
