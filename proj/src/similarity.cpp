// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/similarity.h"

#include <algorithm>

#include "ahems/error.h"

namespace ahems::engine {

namespace {

void require_weights(const WeightVector* w, const BlockSchema& schema) {
  if (w == nullptr) throw ValidationError("weighted similarity requires weights");
  if (w->weights.size() != schema.size()) {
    throw ValidationError("expected " + std::to_string(schema.size()) +
                          " weights, got " + std::to_string(w->weights.size()));
  }
}

void check_dim(const EmbeddingVector& v, const BlockSchema& schema) {
  if (v.values.size() != schema.total_dim()) {
    throw ValidationError("vector '" + v.id + "' has dimension " +
                          std::to_string(v.values.size()) + ", schema expects " +
                          std::to_string(schema.total_dim()));
  }
}

const Opener& require_opener(const Opener* opener) {
  if (opener == nullptr) {
    throw MissingKeyError("opening scores requires the private key");
  }
  return *opener;
}

}  // namespace

const char* to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kPlain: return "plain";
    case ScoreKind::kBlocked: return "blocked";
    case ScoreKind::kWeighted: return "weighted";
  }
  return "?";
}

const char* to_string(Setting setting) {
  switch (setting) {
    case Setting::kEncryptedQuery: return "encrypted_query";
    case Setting::kEncryptedDb: return "encrypted_db";
    case Setting::kPlaintextOracle: return "plaintext";
  }
  return "?";
}

ScoreKind parse_kind(const std::string& name) {
  if (name == "plain") return ScoreKind::kPlain;
  if (name == "blocked") return ScoreKind::kBlocked;
  if (name == "weighted") return ScoreKind::kWeighted;
  throw UsageError("unknown score kind '" + name + "' (plain|blocked|weighted)");
}

std::vector<std::string> RetrievalResult::ids() const {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const SimilarityScore& s : ranked) out.push_back(s.target_id);
  return out;
}

// ---- plaintext oracle ------------------------------------------------------

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * y[i];
  return sum;
}

SimilarityScore plain_inner(const EmbeddingVector& x, const EmbeddingVector& y) {
  if (x.values.size() != y.values.size()) {
    throw ValidationError("schema mismatch: dimensions " +
                          std::to_string(x.values.size()) + " and " +
                          std::to_string(y.values.size()));
  }
  SimilarityScore s;
  s.query_id = x.id;
  s.target_id = y.id;
  s.value = dot(x.values, y.values);
  return s;
}

std::vector<double> plain_blocked(const EmbeddingVector& x, const EmbeddingVector& y,
                                  const BlockSchema& schema) {
  check_dim(x, schema);
  check_dim(y, schema);
  std::vector<double> out;
  out.reserve(schema.size());
  for (std::size_t b = 0; b < schema.size(); ++b) {
    out.push_back(dot(schema.project<double>(x.values, b),
                      schema.project<double>(y.values, b)));
  }
  return out;
}

double plain_weighted(const EmbeddingVector& x, const EmbeddingVector& y,
                      const BlockSchema& schema, const WeightVector& w) {
  require_weights(&w, schema);
  std::vector<double> blocks = plain_blocked(x, y, schema);
  double sum = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) sum += w.weights[b] * blocks[b];
  return sum;
}

// ---- evaluator -------------------------------------------------------------

Evaluator::Evaluator(ahe::PublicKey pk, codec::ScaleConfig cfg)
    : pk_(std::move(pk)), cfg_(cfg) {
  cfg_.validate();
  max_dimension_ = codec::overflow_budget(cfg_, 0, pk_.n()).max_dimension;
}

void Evaluator::require_budget(std::size_t d) const {
  if (mpz_class(static_cast<unsigned long>(d)) > max_dimension_) {
    throw BudgetError("overflow budget violated: dimension " + std::to_string(d) +
                      " exceeds max safe dimension " + max_dimension_.get_str());
  }
}

void Evaluator::check_shapes(std::size_t cells, std::size_t plain,
                             const BlockSchema& schema) const {
  if (cells != schema.total_dim() || plain != schema.total_dim()) {
    throw ValidationError("schema mismatch: expected dimension " +
                          std::to_string(schema.total_dim()) + ", got " +
                          std::to_string(cells) + " encrypted and " +
                          std::to_string(plain) + " plaintext coordinates");
  }
  require_budget(schema.total_dim());
}

ahe::Ciphertext Evaluator::combine(std::span<const ahe::Ciphertext> cells,
                                   std::span<const double> plain) const {
  std::vector<std::int64_t> scalars;
  scalars.reserve(plain.size());
  for (double v : plain) scalars.push_back(codec::encode(v, cfg_));
  return ahe::linear_combination(pk_, cells, scalars);
}

BlockedCiphertexts Evaluator::blocked(std::span<const ahe::Ciphertext> cells,
                                      std::span<const double> plain,
                                      const BlockSchema& schema) const {
  check_shapes(cells.size(), plain.size(), schema);
  BlockedCiphertexts out;
  out.per_block.reserve(schema.size());
  out.total = ahe::zero(pk_);
  for (std::size_t b = 0; b < schema.size(); ++b) {
    out.per_block.push_back(combine(schema.project(cells, b), schema.project(plain, b)));
    out.total = ahe::add(pk_, out.total, out.per_block.back());
  }
  return out;
}

ahe::Ciphertext Evaluator::encquery_inner(const EncryptedVector& enc_x,
                                          const EmbeddingVector& y) const {
  if (enc_x.cells.size() != y.values.size()) {
    throw ValidationError("schema mismatch: query has " +
                          std::to_string(enc_x.cells.size()) + " cells, vector '" +
                          y.id + "' has " + std::to_string(y.values.size()) + " values");
  }
  require_budget(y.values.size());
  return combine(enc_x.cells, y.values);
}

ahe::Ciphertext Evaluator::encdb_inner(const EmbeddingVector& x,
                                       const EncryptedVector& enc_y) const {
  if (enc_y.cells.size() != x.values.size()) {
    throw ValidationError("schema mismatch: vector '" + enc_y.id + "' has " +
                          std::to_string(enc_y.cells.size()) + " cells, query has " +
                          std::to_string(x.values.size()) + " values");
  }
  require_budget(x.values.size());
  return combine(enc_y.cells, x.values);
}

BlockedCiphertexts Evaluator::blocked_similarity(const EmbeddingVector& x,
                                                 const EncryptedVector& enc_y,
                                                 const BlockSchema& schema) const {
  return blocked(enc_y.cells, x.values, schema);
}

BlockedCiphertexts Evaluator::blocked_similarity(const EncryptedVector& enc_x,
                                                 const EmbeddingVector& y,
                                                 const BlockSchema& schema) const {
  return blocked(enc_x.cells, y.values, schema);
}

ahe::Ciphertext Evaluator::apply_weights(const BlockedCiphertexts& blocks,
                                         const WeightVector& w) const {
  if (w.weights.size() != blocks.per_block.size()) {
    throw ValidationError("expected " + std::to_string(blocks.per_block.size()) +
                          " weights, got " + std::to_string(w.weights.size()));
  }
  std::vector<std::int64_t> scalars;
  scalars.reserve(w.weights.size());
  for (double v : w.weights) scalars.push_back(codec::encode_weight(v, cfg_));
  return ahe::linear_combination(pk_, blocks.per_block, scalars);
}

ahe::Ciphertext Evaluator::weighted_similarity(const EmbeddingVector& x,
                                               const EncryptedVector& enc_y,
                                               const BlockSchema& schema,
                                               const WeightVector& w) const {
  require_weights(&w, schema);
  return apply_weights(blocked_similarity(x, enc_y, schema), w);
}

ahe::Ciphertext Evaluator::weighted_similarity(const EncryptedVector& enc_x,
                                               const EmbeddingVector& y,
                                               const BlockSchema& schema,
                                               const WeightVector& w) const {
  require_weights(&w, schema);
  return apply_weights(blocked_similarity(enc_x, y, schema), w);
}

ahe::Ciphertext Evaluator::promote_to_weighted_scale(const ahe::Ciphertext& c) const {
  return ahe::scalar_mul(pk_, c, mpz_class(codec::encode_weight(1.0, cfg_)));
}

ahe::Ciphertext Evaluator::score(const EmbeddingVector& x,
                                 const EncryptedVector& enc_y,
                                 const BlockSchema& schema, ScoreKind kind,
                                 const WeightVector* w) const {
  switch (kind) {
    case ScoreKind::kPlain: return encdb_inner(x, enc_y);
    case ScoreKind::kBlocked: return blocked_similarity(x, enc_y, schema).total;
    case ScoreKind::kWeighted:
      require_weights(w, schema);
      return weighted_similarity(x, enc_y, schema, *w);
  }
  throw std::logic_error("unreachable");
}

ahe::Ciphertext Evaluator::score(const EncryptedVector& enc_x,
                                 const EmbeddingVector& y,
                                 const BlockSchema& schema, ScoreKind kind,
                                 const WeightVector* w) const {
  switch (kind) {
    case ScoreKind::kPlain: return encquery_inner(enc_x, y);
    case ScoreKind::kBlocked: return blocked_similarity(enc_x, y, schema).total;
    case ScoreKind::kWeighted:
      require_weights(w, schema);
      return weighted_similarity(enc_x, y, schema, *w);
  }
  throw std::logic_error("unreachable");
}

// ---- opener ----------------------------------------------------------------

Opener::Opener(ahe::KeyPair keys, codec::ScaleConfig cfg)
    : keys_(std::move(keys)), cfg_(cfg) {
  if (keys_.pub.key_id() != keys_.priv.key_id()) {
    throw KeyMismatchError("private key does not belong to public key");
  }
}

mpz_class Opener::open_raw(const ahe::Ciphertext& c) const {
  return ahe::decrypt(keys_.priv, keys_.pub, c);
}

SimilarityScore Opener::open(const ahe::Ciphertext& c, ScoreKind kind,
                             Setting setting, std::string query_id,
                             std::string target_id) const {
  SimilarityScore s;
  s.query_id = std::move(query_id);
  s.target_id = std::move(target_id);
  s.raw = open_raw(c);
  s.value = codec::decode_product(s.raw, cfg_, kind == ScoreKind::kWeighted);
  s.kind = kind;
  s.setting = setting;
  return s;
}

// ---- top-k -----------------------------------------------------------------

RetrievalResult rank(std::vector<SimilarityScore> scores, std::size_t k_top) {
  if (k_top == 0) throw ValidationError("k must be >= 1");
  std::sort(scores.begin(), scores.end(),
            [](const SimilarityScore& a, const SimilarityScore& b) {
              if (a.value != b.value) return a.value > b.value;
              return a.target_id < b.target_id;
            });
  if (scores.size() > k_top) scores.resize(k_top);
  return RetrievalResult{std::move(scores)};
}

RetrievalResult topk_search(const EmbeddingVector& query, const EmbeddingSet& db,
                            std::size_t k_top, ScoreKind kind,
                            const WeightVector* w) {
  if (k_top == 0) throw ValidationError("k must be >= 1");
  if (db.vectors.empty()) throw ValidationError("database is empty");
  check_dim(query, db.schema);
  std::vector<SimilarityScore> scores;
  scores.reserve(db.vectors.size());
  for (const EmbeddingVector& y : db.vectors) {
    SimilarityScore s = plain_inner(query, y);
    if (kind == ScoreKind::kWeighted) {
      require_weights(w, db.schema);
      s.value = plain_weighted(query, y, db.schema, *w);
    }
    s.kind = kind;
    scores.push_back(std::move(s));
  }
  return rank(std::move(scores), k_top);
}

RetrievalResult topk_search(const EmbeddingVector& query, const EncryptedSet& db,
                            std::size_t k_top, ScoreKind kind,
                            const WeightVector* w, const Evaluator& evaluator,
                            const Opener* opener) {
  if (k_top == 0) throw ValidationError("k must be >= 1");
  if (db.vectors.empty()) throw ValidationError("database is empty");
  const Opener& open = require_opener(opener);
  check_dim(query, db.schema);
  std::vector<SimilarityScore> scores;
  scores.reserve(db.vectors.size());
  for (const EncryptedVector& y : db.vectors) {
    ahe::Ciphertext c = evaluator.score(query, y, db.schema, kind, w);
    scores.push_back(open.open(c, kind, Setting::kEncryptedDb, query.id, y.id));
  }
  return rank(std::move(scores), k_top);
}

RetrievalResult topk_search(const EncryptedVector& query, const EmbeddingSet& db,
                            std::size_t k_top, ScoreKind kind,
                            const WeightVector* w, const Evaluator& evaluator,
                            const Opener* opener) {
  if (k_top == 0) throw ValidationError("k must be >= 1");
  if (db.vectors.empty()) throw ValidationError("database is empty");
  const Opener& open = require_opener(opener);
  std::vector<SimilarityScore> scores;
  scores.reserve(db.vectors.size());
  for (const EmbeddingVector& y : db.vectors) {
    ahe::Ciphertext c = evaluator.score(query, y, db.schema, kind, w);
    scores.push_back(open.open(c, kind, Setting::kEncryptedQuery, query.id, y.id));
  }
  return rank(std::move(scores), k_top);
}

}  // namespace ahems::engine
