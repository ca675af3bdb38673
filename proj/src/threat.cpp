// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/threat.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "ahems/error.h"

namespace ahems::threat {

using engine::Evaluator;
using engine::Opener;
using engine::Setting;

std::string to_string(AttackKind kind) {
  return kind == AttackKind::kPatternInference ? "pattern_inference"
                                               : "creator_attribution";
}

EmbeddingVector craft_pattern_query(std::span<const double> pattern,
                                    std::string_view block_label,
                                    const BlockSchema& schema) {
  const std::size_t idx = schema.index_of(std::string(block_label));
  const Block& b = schema.block(idx);
  if (pattern.size() != b.length) {
    throw ValidationError("pattern length " + std::to_string(pattern.size()) +
                          " does not match block '" + b.label + "' length " +
                          std::to_string(b.length));
  }
  EmbeddingVector q{"pattern:" + b.label, std::nullopt,
                    std::vector<double>(schema.total_dim(), 0.0)};
  std::copy(pattern.begin(), pattern.end(), q.values.begin() + b.offset);
  return q;
}

double two_means_threshold(std::vector<double> scores) {
  if (scores.size() < 2) throw ValidationError("2-means needs at least two scores");
  std::sort(scores.begin(), scores.end());
  const std::size_t n = scores.size();
  std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + scores[i];
    prefix_sq[i + 1] = prefix_sq[i] + scores[i] * scores[i];
  }
  std::size_t best_k = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < n; ++k) {
    const double left = prefix[k], right = prefix[n] - prefix[k];
    const double sse = prefix_sq[n] - left * left / k - right * right / (n - k);
    if (sse < best) best = sse, best_k = k;
  }
  const double lo = prefix[best_k] / best_k;
  const double hi = (prefix[n] - prefix[best_k]) / (n - best_k);
  return 0.5 * (lo + hi);
}

double auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ValidationError("auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i]) rank_sum += rank[i], ++n_pos;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("auc needs both classes");
  const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

struct Moments {
  double mean = 0.0, var = 0.0;
  std::size_t n = 0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  m.n = v.size();
  if (m.n == 0) return m;
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  if (m.n > 1) {
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= (m.n - 1);
  }
  return m;
}

}  // namespace

double welch_t(std::span<const double> a, std::span<const double> b) {
  const Moments ma = moments(a), mb = moments(b);
  if (ma.n == 0 || mb.n == 0) throw ValidationError("welch_t needs non-empty samples");
  const double diff = ma.mean - mb.mean;
  const double se = std::sqrt(ma.var / ma.n + mb.var / mb.n);
  if (se == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
  }
  return diff / se;
}

std::vector<bool> decisions(const AttackReport& report) {
  std::vector<bool> out;
  out.reserve(report.targets.size());
  for (const auto& t : report.targets) out.push_back(t.flagged);
  return out;
}

namespace {

void apply_threshold(AttackReport& report, const ThresholdPolicy& policy) {
  auto& targets = report.targets;
  const std::size_t n = targets.size();
  if (policy.kind == ThresholdPolicy::Kind::kFixed) {
    report.threshold = policy.fixed;
  } else {
    if (!(policy.calibration_fraction > 0.0 && policy.calibration_fraction <= 1.0)) {
      throw ValidationError("calibration fraction must be in (0, 1]");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    SeededRandom rng(policy.seed);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = rng.below(mpz_class(static_cast<unsigned long>(i))).get_ui();
      std::swap(idx[i - 1], idx[j]);
    }
    std::size_t m = static_cast<std::size_t>(std::ceil(policy.calibration_fraction * n));
    m = std::clamp<std::size_t>(m, std::min<std::size_t>(2, n), n);
    std::vector<double> calib;
    for (std::size_t i = 0; i < m; ++i) {
      targets[idx[i]].calibration = true;
      calib.push_back(targets[idx[i]].score);
    }
    report.threshold = two_means_threshold(std::move(calib));
  }
  for (auto& t : targets) t.flagged = t.score > report.threshold;
}

AttackReport new_pattern_report(std::string_view label, Setting setting) {
  AttackReport r;
  r.attack = AttackKind::kPatternInference;
  r.setting = setting;
  r.block_label = std::string(label);
  return r;
}

}  // namespace

AttackReport pattern_inference_attack(std::span<const double> pattern,
                                      std::string_view block_label,
                                      const EncryptedSet& corpus,
                                      const Evaluator& evaluator, const Opener& opener,
                                      const ThresholdPolicy& policy) {
  const BlockSchema& schema = corpus.schema;
  const EmbeddingVector query = craft_pattern_query(pattern, block_label, schema);
  const std::size_t idx = schema.index_of(std::string(block_label));
  AttackReport report = new_pattern_report(block_label, Setting::kEncryptedDb);
  for (const auto& v : corpus.vectors) {
    const auto blocks = evaluator.blocked_similarity(query, v, schema);
    const auto s = opener.open(blocks.per_block[idx], engine::ScoreKind::kBlocked,
                               Setting::kEncryptedDb, query.id, v.id);
    report.targets.push_back({v.id, v.creator, s.value, false, false, std::nullopt});
  }
  apply_threshold(report, policy);
  return report;
}

AttackReport pattern_inference_attack(std::span<const double> pattern,
                                      std::string_view block_label,
                                      const EmbeddingSet& corpus,
                                      const ThresholdPolicy& policy) {
  const BlockSchema& schema = corpus.schema;
  const EmbeddingVector query = craft_pattern_query(pattern, block_label, schema);
  const std::size_t idx = schema.index_of(std::string(block_label));
  AttackReport report = new_pattern_report(block_label, Setting::kPlaintextOracle);
  for (const auto& v : corpus.vectors) {
    if (v.values.size() != schema.total_dim()) {
      throw ValidationError("vector '" + v.id + "' has wrong dimension");
    }
    const double s = engine::dot(schema.project<double>(query.values, idx),
                                 schema.project<double>(v.values, idx));
    report.targets.push_back({v.id, v.creator, s, false, false, std::nullopt});
  }
  apply_threshold(report, policy);
  return report;
}

namespace {

template <typename Vec>
std::vector<std::string> creator_order(const std::vector<Vec>& vectors) {
  std::vector<std::string> order;
  for (const auto& v : vectors) {
    if (!v.creator) throw ValidationError("vector '" + v.id + "' has no creator");
    if (std::find(order.begin(), order.end(), *v.creator) == order.end()) {
      order.push_back(*v.creator);
    }
  }
  if (order.size() < 2) {
    throw UsageError("creator attribution needs at least 2 creators, got " +
                     std::to_string(order.size()));
  }
  return order;
}

void attribute(AttackReport& report, const std::vector<std::string>& order,
               const AttributionOptions& options) {
  std::map<std::string, std::vector<double>> samples;
  for (const auto& t : report.targets) samples[*t.creator].push_back(t.score);
  for (const auto& name : order) {
    const Moments m = moments(samples[name]);
    report.creators.push_back({name, m.n, m.mean, std::sqrt(m.var)});
  }
  std::stable_sort(report.creators.begin(), report.creators.end(),
                   [](const CreatorScore& a, const CreatorScore& b) {
                     if (a.mean != b.mean) return a.mean > b.mean;
                     return a.creator < b.creator;
                   });
  const auto& top = report.creators[0];
  const auto& second = report.creators[1];
  report.attribution = top.creator;
  report.margin = top.mean - second.mean;
  report.t_statistic = welch_t(samples[top.creator], samples[second.creator]);
  report.inconclusive = !(report.t_statistic >= options.inconclusive_t);
}

}  // namespace

AttackReport creator_attribution_attack(const EmbeddingVector& disputed,
                                        const EncryptedSet& corpus,
                                        const Evaluator& evaluator, const Opener& opener,
                                        const AttributionOptions& options) {
  const auto order = creator_order(corpus.vectors);
  AttackReport report;
  report.attack = AttackKind::kCreatorAttribution;
  report.setting = Setting::kEncryptedDb;
  for (const auto& v : corpus.vectors) {
    const auto s = opener.open(evaluator.encdb_inner(disputed, v), engine::ScoreKind::kPlain,
                               Setting::kEncryptedDb, disputed.id, v.id);
    report.targets.push_back({v.id, v.creator, s.value, false, false, std::nullopt});
  }
  attribute(report, order, options);
  return report;
}

AttackReport creator_attribution_attack(const EmbeddingVector& disputed,
                                        const EmbeddingSet& corpus,
                                        const AttributionOptions& options) {
  const auto order = creator_order(corpus.vectors);
  AttackReport report;
  report.attack = AttackKind::kCreatorAttribution;
  report.setting = Setting::kPlaintextOracle;
  for (const auto& v : corpus.vectors) {
    report.targets.push_back(
        {v.id, v.creator, engine::plain_inner(disputed, v).value, false, false, std::nullopt});
  }
  attribute(report, order, options);
  return report;
}

void score_detection(AttackReport& report, const std::set<std::string>& planted) {
  for (auto& t : report.targets) t.truth = planted.count(t.id) > 0;
  report.detection = recompute_detection(report);
}

DetectionMetrics recompute_detection(const AttackReport& report) {
  DetectionMetrics m;
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& t : report.targets) {
    if (!t.truth) throw ValidationError("target '" + t.id + "' has no ground truth");
    const bool pos = *t.truth;
    if (t.flagged) {
      pos ? ++m.tp : ++m.fp;
    } else {
      pos ? ++m.fn : ++m.tn;
    }
    scores.push_back(t.score);
    labels.push_back(pos);
  }
  m.auc = auc(scores, labels);
  return m;
}

nlohmann::json to_json(const AttackReport& r) {
  nlohmann::json j;
  j["attack"] = to_string(r.attack);
  j["setting"] = engine::to_string(r.setting);
  j["seed"] = r.seed;
  j["profile"] = r.profile;
  auto& targets = j["targets"] = nlohmann::json::array();
  for (const auto& t : r.targets) {
    nlohmann::json row{{"id", t.id}, {"score", t.score}};
    if (t.creator) row["creator"] = *t.creator;
    if (r.attack == AttackKind::kPatternInference) {
      row["flagged"] = t.flagged;
      row["calibration"] = t.calibration;
    }
    if (t.truth) row["truth"] = *t.truth;
    targets.push_back(std::move(row));
  }
  if (r.attack == AttackKind::kPatternInference) {
    j["block"] = r.block_label;
    j["threshold"] = r.threshold;
    if (r.detection) {
      j["metrics"] = {{"tp", r.detection->tp}, {"fp", r.detection->fp},
                      {"tn", r.detection->tn}, {"fn", r.detection->fn},
                      {"auc", r.detection->auc}};
    }
  } else {
    auto& creators = j["creators"] = nlohmann::json::array();
    for (const auto& c : r.creators) {
      creators.push_back(
          {{"creator", c.creator}, {"count", c.count}, {"mean", c.mean}, {"stddev", c.stddev}});
    }
    j["attribution"] = r.attribution;
    j["margin"] = r.margin;
    j["t_statistic"] = std::isfinite(r.t_statistic) ? nlohmann::json(r.t_statistic)
                                                     : nlohmann::json(nullptr);
    j["inconclusive"] = r.inconclusive;
    if (r.true_creator) {
      j["true_creator"] = *r.true_creator;
      j["correct"] = *r.true_creator == r.attribution;
    }
  }
  return j;
}

std::string summary(const AttackReport& r) {
  std::ostringstream out;
  out << to_string(r.attack) << " (" << engine::to_string(r.setting) << ", "
      << r.targets.size() << " targets";
  if (!r.profile.empty()) out << ", " << r.profile;
  out << ", seed " << r.seed << ")\n";
  if (r.attack == AttackKind::kPatternInference) {
    std::size_t flagged = 0;
    for (const auto& t : r.targets) flagged += t.flagged;
    out << "  block " << r.block_label << ", threshold " << r.threshold << ", flagged "
        << flagged << "\n";
    if (r.detection) {
      const auto& m = *r.detection;
      out << "  tp " << m.tp << "  fp " << m.fp << "  tn " << m.tn << "  fn " << m.fn
          << "  auc " << m.auc << "\n";
    }
  } else {
    for (const auto& c : r.creators) {
      out << "  " << c.creator << "  mean " << c.mean << "  sd " << c.stddev << "  n "
          << c.count << "\n";
    }
    out << "  attribution " << r.attribution << ", margin " << r.margin << ", t "
        << r.t_statistic << (r.inconclusive ? " (inconclusive)" : "") << "\n";
    if (r.true_creator) out << "  true creator " << *r.true_creator << "\n";
  }
  return out.str();
}

PatternOutcome run_pattern_experiment(const PatternExperiment& exp,
                                      const ahe::KeyPair& keys,
                                      const codec::ScaleConfig& cfg, RandomSource& rng) {
  if (exp.count == 0) throw ValidationError("corpus size must be positive");
  const BlockSchema schema = BlockSchema::equal_partition(exp.dimension, exp.blocks);
  store::PlantedPatternProfile profile{exp.block_label, exp.pattern_seed, exp.strength,
                                       exp.planted};
  const store::SynthCorpus corpus =
      store::synth_corpus(exp.seed, exp.count, schema, profile, cfg.max_abs);
  const EncryptedSet encrypted = store::encrypt_collection(corpus.set, keys.pub, cfg, rng);

  Evaluator evaluator(keys.pub, cfg);
  Opener opener(keys, cfg);
  PatternOutcome out;
  out.encrypted = pattern_inference_attack(corpus.pattern, exp.block_label, encrypted,
                                           evaluator, opener, exp.policy);
  out.plaintext =
      pattern_inference_attack(corpus.pattern, exp.block_label, corpus.set, exp.policy);

  std::ostringstream prof;
  prof << "planted_pattern(strength=" << exp.strength << ", planted="
       << corpus.planted_ids.size() << ", d=" << exp.dimension << ")";
  const std::set<std::string> planted(corpus.planted_ids.begin(), corpus.planted_ids.end());
  for (AttackReport* r : {&out.encrypted, &out.plaintext}) {
    r->seed = exp.seed;
    r->profile = prof.str();
    score_detection(*r, planted);
  }
  out.decisions_match = decisions(out.encrypted) == decisions(out.plaintext);
  return out;
}

AttributionOutcome run_attribution_experiment(const AttributionExperiment& exp,
                                              const ahe::KeyPair& keys,
                                              const codec::ScaleConfig& cfg,
                                              RandomSource& rng) {
  if (exp.trials == 0) throw ValidationError("trials must be positive");
  if (exp.artists < 2) {
    throw UsageError("creator attribution needs at least 2 creators, got " +
                     std::to_string(exp.artists));
  }
  const BlockSchema schema =
      BlockSchema::equal_partition(exp.dimension, std::min<std::size_t>(4, exp.dimension));
  Evaluator evaluator(keys.pub, cfg);
  Opener opener(keys, cfg);
  store::ArtistClustersProfile profile{exp.artists, exp.spread};

  AttributionOutcome out;
  std::size_t correct = 0;
  out.all_agree = true;
  for (std::size_t t = 0; t < exp.trials; ++t) {
    const std::uint64_t seed = exp.seed + t;
    // One extra vector per artist is held out as the disputed candidate.
    store::SynthCorpus corpus = store::synth_corpus(
        seed, exp.artists * (exp.per_artist + 1), schema, profile, cfg.max_abs);
    const std::size_t artist = t % exp.artists;
    const std::size_t held_base = exp.artists * exp.per_artist;
    EmbeddingVector disputed = corpus.set.vectors[held_base + artist];
    disputed.id = "disputed";
    disputed.creator.reset();
    corpus.set.vectors.resize(held_base);

    const EncryptedSet encrypted = store::encrypt_collection(corpus.set, keys.pub, cfg, rng);
    AttackReport enc = creator_attribution_attack(disputed, encrypted, evaluator, opener,
                                                  exp.options);
    AttackReport plain = creator_attribution_attack(disputed, corpus.set, exp.options);
    std::ostringstream prof;
    prof << "artist_clusters(artists=" << exp.artists << ", spread=" << exp.spread
         << ", per_artist=" << exp.per_artist << ", d=" << exp.dimension << ")";
    for (AttackReport* r : {&enc, &plain}) {
      r->seed = seed;
      r->profile = prof.str();
      r->true_creator = store::creator_name(artist);
    }
    correct += enc.attribution == *enc.true_creator;
    out.all_agree = out.all_agree && enc.attribution == plain.attribution;
    out.encrypted.push_back(std::move(enc));
    out.plaintext.push_back(std::move(plain));
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(exp.trials);
  return out;
}

std::vector<double> orthogonal_probe(const std::vector<std::vector<double>>& centroids,
                                     std::size_t dimension, std::uint64_t seed) {
  if (centroids.size() >= dimension) {
    throw ValidationError("no direction orthogonal to all centroids");
  }
  std::mt19937_64 engine(seed);
  auto uniform = [&] { return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53; };
  std::vector<std::vector<double>> basis;
  auto reduce = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double c = engine::dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
      }
    }
  };
  auto normalize = [](std::vector<double>& v) {
    const double norm = std::sqrt(engine::dot(v, v));
    if (norm < 1e-12) return false;
    for (double& x : v) x /= norm;
    return true;
  };
  for (auto c : centroids) {
    if (c.size() != dimension) throw ValidationError("centroid dimension mismatch");
    reduce(c);
    if (normalize(c)) basis.push_back(std::move(c));
  }
  for (;;) {
    std::vector<double> v(dimension);
    for (double& x : v) {
      x = std::sqrt(-2.0 * std::log(uniform())) * std::cos(2.0 * M_PI * uniform());
    }
    reduce(v);
    if (normalize(v)) return v;
  }
}

}  // namespace ahems::threat
