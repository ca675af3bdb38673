// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Key-holder attacks on similarity scores.
//
// The attacker entry points receive only encrypted collections and an
// Opener; ground truth is attached afterwards by the experiment drivers.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ahems/embedding.h"
#include "ahems/similarity.h"
#include "ahems/store.h"
#include "json.hpp"

namespace ahems::threat {

enum class AttackKind { kPatternInference, kCreatorAttribution };
std::string to_string(AttackKind kind);

// Pattern in the named block, zeros elsewhere.
EmbeddingVector craft_pattern_query(std::span<const double> pattern,
                                    std::string_view block_label,
                                    const BlockSchema& schema);

struct ThresholdPolicy {
  enum class Kind { kTwoMeansMidpoint, kFixed };
  Kind kind = Kind::kTwoMeansMidpoint;
  double fixed = 0.0;
  // Fraction of targets used to fit the threshold, drawn with `seed`.
  double calibration_fraction = 0.5;
  std::uint64_t seed = 0;
};

// Exact 1-D 2-means (minimum within-cluster sum of squares); returns the
// midpoint of the two cluster means. Needs at least two values.
double two_means_threshold(std::vector<double> scores);

// Mann-Whitney AUC, ties count one half. Needs both classes present.
double auc(std::span<const double> scores, const std::vector<bool>& positive);

// Welch t statistic of mean(a) - mean(b).
double welch_t(std::span<const double> a, std::span<const double> b);

struct TargetScore {
  std::string id;
  std::optional<std::string> creator;
  double score = 0.0;
  bool flagged = false;
  bool calibration = false;
  std::optional<bool> truth;  // harness-side label
};

struct DetectionMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double auc = 0.0;
};

struct CreatorScore {
  std::string creator;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AttackReport {
  AttackKind attack = AttackKind::kPatternInference;
  engine::Setting setting = engine::Setting::kEncryptedDb;
  std::uint64_t seed = 0;
  std::string profile;
  std::vector<TargetScore> targets;

  // pattern inference
  std::string block_label;
  double threshold = 0.0;
  std::optional<DetectionMetrics> detection;

  // creator attribution
  std::vector<CreatorScore> creators;  // descending by mean
  std::string attribution;
  double margin = 0.0;
  double t_statistic = 0.0;
  bool inconclusive = false;
  std::optional<std::string> true_creator;
};

std::vector<bool> decisions(const AttackReport& report);

// ---- attacker side ---------------------------------------------------------

// Scores each encrypted vector with the crafted query via blocked
// similarity and keeps the named block's score.
AttackReport pattern_inference_attack(std::span<const double> pattern,
                                      std::string_view block_label,
                                      const EncryptedSet& corpus,
                                      const engine::Evaluator& evaluator,
                                      const engine::Opener& opener,
                                      const ThresholdPolicy& policy);

// Plaintext-score oracle of the same attack.
AttackReport pattern_inference_attack(std::span<const double> pattern,
                                      std::string_view block_label,
                                      const EmbeddingSet& corpus,
                                      const ThresholdPolicy& policy);

struct AttributionOptions {
  double inconclusive_t = 3.0;
};

AttackReport creator_attribution_attack(const EmbeddingVector& disputed,
                                        const EncryptedSet& corpus,
                                        const engine::Evaluator& evaluator,
                                        const engine::Opener& opener,
                                        const AttributionOptions& options = {});

AttackReport creator_attribution_attack(const EmbeddingVector& disputed,
                                        const EmbeddingSet& corpus,
                                        const AttributionOptions& options = {});

// ---- harness side ----------------------------------------------------------

// Attaches planted labels and fills detection metrics.
void score_detection(AttackReport& report, const std::set<std::string>& planted);

// Recomputes detection metrics from the stored per-target rows.
DetectionMetrics recompute_detection(const AttackReport& report);

nlohmann::json to_json(const AttackReport& report);
std::string summary(const AttackReport& report);

struct PatternExperiment {
  std::size_t dimension = 128;
  std::size_t blocks = 4;
  std::string block_label = "melody";
  std::size_t count = 100;
  std::size_t planted = 20;
  double strength = 5.0;
  std::uint64_t seed = 1;
  std::uint64_t pattern_seed = 7;
  ThresholdPolicy policy;
};

struct PatternOutcome {
  AttackReport encrypted;
  AttackReport plaintext;
  bool decisions_match = false;
};

PatternOutcome run_pattern_experiment(const PatternExperiment& exp,
                                      const ahe::KeyPair& keys,
                                      const codec::ScaleConfig& cfg,
                                      RandomSource& rng);

struct AttributionExperiment {
  std::size_t dimension = 128;
  std::size_t artists = 4;
  std::size_t per_artist = 25;
  double spread = 0.1;
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  AttributionOptions options;
};

struct AttributionOutcome {
  std::vector<AttackReport> encrypted;
  std::vector<AttackReport> plaintext;
  double accuracy = 0.0;
  bool all_agree = false;
};

// Each trial draws a fresh clustered corpus plus one held-out disputed
// vector from artist (trial % artists).
AttributionOutcome run_attribution_experiment(const AttributionExperiment& exp,
                                              const ahe::KeyPair& keys,
                                              const codec::ScaleConfig& cfg,
                                              RandomSource& rng);

// Unit vector orthogonal to every centroid, derived from `seed`.
std::vector<double> orthogonal_probe(const std::vector<std::vector<double>>& centroids,
                                     std::size_t dimension, std::uint64_t seed);

}  // namespace ahems::threat
