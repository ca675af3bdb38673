// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. With no arguments every criterion runs; otherwise only the
// numbered ones. Prints one PASS/FAIL line per criterion and exits non-zero
// when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ahems/bench.h"
#include "ahems/fixed_point.h"
#include "ahems/key_io.h"
#include "ahems/paillier.h"
#include "ahems/random.h"
#include "ahems/service.h"
#include "ahems/similarity.h"
#include "ahems/store.h"
#include "ahems/threat.h"
#include "test_util.h"

namespace {

using namespace ahems;
using ahems::testing::random_values;
using ahems::testing::test_keys;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      ++failures_;
      if (first_.empty()) first_ = what;
    }
  }
  int failures() const { return failures_; }
  const std::string& first() const { return first_; }

 private:
  int failures_ = 0;
  std::string first_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<std::size_t> kDims{128, 256, 512, 1024};

mpz_class integer_dot(const std::vector<double>& x, const std::vector<double>& y,
                      const codec::ScaleConfig& cfg) {
  mpz_class acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += mpz_class(static_cast<long>(codec::encode(x[i], cfg))) *
           mpz_class(static_cast<long>(codec::encode(y[i], cfg)));
  }
  return acc;
}

long double float_dot(const std::vector<double>& x, const std::vector<double>& y) {
  long double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += static_cast<long double>(x[i]) * static_cast<long double>(y[i]);
  }
  return acc;
}

// Random partition of [0, d) into k non-empty blocks.
BlockSchema random_schema(std::size_t d, std::size_t k, std::mt19937_64& gen) {
  std::vector<std::size_t> cuts(d - 1);
  for (std::size_t i = 0; i < cuts.size(); ++i) cuts[i] = i + 1;
  std::shuffle(cuts.begin(), cuts.end(), gen);
  cuts.resize(k - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(d);
  std::vector<Block> blocks;
  std::size_t offset = 0;
  for (std::size_t b = 0; b < k; ++b) {
    blocks.push_back({"b" + std::to_string(b), offset, cuts[b] - offset});
    offset = cuts[b];
  }
  return BlockSchema::from_blocks(std::move(blocks));
}

EmbeddingVector make_vector(std::vector<double> values, std::string id) {
  return EmbeddingVector{std::move(id), std::nullopt, std::move(values)};
}

Verdict criterion_exactness() {
  const codec::ScaleConfig cfg;
  const auto& keys = test_keys();
  engine::Evaluator ev(keys.pub, cfg);
  engine::Opener op(keys, cfg);
  std::mt19937_64 gen(101);
  SeededRandom rng(102);
  Checker c;
  double worst_ratio = 0.0;
  std::size_t pairs = 0;
  for (std::size_t d : kDims) {
    const double bound = codec::product_error_bound(cfg, d);
    for (int p = 0; p < 100; ++p, ++pairs) {
      auto x = make_vector(random_values(gen, d, -cfg.max_abs, cfg.max_abs), "x");
      auto y = make_vector(random_values(gen, d, -cfg.max_abs, cfg.max_abs), "y");
      const mpz_class want = integer_dot(x.values, y.values, cfg);
      auto ex = store::encrypt_vector(x, keys.pub, cfg, rng);
      auto ey = store::encrypt_vector(y, keys.pub, cfg, rng);
      const mpz_class q = op.open_raw(ev.encquery_inner(ex, y));
      const mpz_class db = op.open_raw(ev.encdb_inner(x, ey));
      c.expect(q == want, "encquery_inner differs from integer oracle at d=" + std::to_string(d));
      c.expect(db == want, "encdb_inner differs from integer oracle at d=" + std::to_string(d));
      const double err = std::fabs(static_cast<double>(
          codec::decode_product(q, cfg, false) - float_dot(x.values, y.values)));
      c.expect(err <= bound, "decoded value outside codec bound at d=" + std::to_string(d));
      worst_ratio = std::max(worst_ratio, err / bound);
    }
  }
  return {c.failures() == 0,
          std::to_string(pairs) + " pairs, " + std::to_string(c.failures()) +
              " mismatches, worst error/bound " + fmt("%.3f", worst_ratio) +
              (c.first().empty() ? "" : "; " + c.first())};
}

Verdict criterion_partition() {
  const codec::ScaleConfig cfg;
  const auto& keys = test_keys();
  engine::Evaluator ev(keys.pub, cfg);
  engine::Opener op(keys, cfg);
  std::mt19937_64 gen(201);
  SeededRandom rng(202);
  const std::size_t ks[] = {1, 2, 4, 8};
  Checker c;
  std::size_t schemas = 0;
  for (std::size_t d : kDims) {
    for (int s = 0; s < 20; ++s, ++schemas) {
      const BlockSchema schema = random_schema(d, ks[s % 4], gen);
      auto x = make_vector(random_values(gen, d), "x");
      auto y = make_vector(random_values(gen, d), "y");
      auto ex = store::encrypt_vector(x, keys.pub, cfg, rng);
      auto ey = store::encrypt_vector(y, keys.pub, cfg, rng);
      const std::string where = " (d=" + std::to_string(d) + ", " + schema.id() + ")";

      auto db_blocks = ev.blocked_similarity(x, ey, schema);
      const mpz_class db_total = op.open_raw(db_blocks.total);
      c.expect(db_total == op.open_raw(ev.encdb_inner(x, ey)),
               "encrypted-db blocked total differs" + where);
      mpz_class sum = 0;
      for (const auto& b : db_blocks.per_block) sum += op.open_raw(b);
      c.expect(sum == db_total, "per-block sum differs from total" + where);

      auto q_blocks = ev.blocked_similarity(ex, y, schema);
      c.expect(op.open_raw(q_blocks.total) == op.open_raw(ev.encquery_inner(ex, y)),
               "encrypted-query blocked total differs" + where);
    }
  }
  return {c.failures() == 0, std::to_string(schemas) + " schemas, " +
                                 std::to_string(c.failures()) + " mismatches" +
                                 (c.first().empty() ? "" : "; " + c.first())};
}

Verdict criterion_weights() {
  const codec::ScaleConfig cfg;
  const auto& keys = test_keys();
  engine::Evaluator ev(keys.pub, cfg);
  engine::Opener op(keys, cfg);
  std::mt19937_64 gen(301);
  SeededRandom rng(302);
  const mpz_class unit = static_cast<long>(codec::encode_weight(1.0, cfg));
  Checker c;
  std::size_t cases = 0;
  for (std::size_t d : kDims) {
    for (std::size_t k : {2u, 4u, 8u}) {
      const BlockSchema schema = random_schema(d, k, gen);
      auto x = make_vector(random_values(gen, d), "x");
      auto y = make_vector(random_values(gen, d), "y");
      auto ey = store::encrypt_vector(y, keys.pub, cfg, rng);
      auto blocks = ev.blocked_similarity(x, ey, schema);
      const mpz_class total = op.open_raw(blocks.total);

      WeightVector ones{std::vector<double>(k, 1.0)};
      c.expect(op.open_raw(ev.weighted_similarity(x, ey, schema, ones)) == total * unit,
               "unit weights differ from blocked total at d=" + std::to_string(d));
      ++cases;
      for (std::size_t b = 0; b < k; ++b, ++cases) {
        WeightVector hot{std::vector<double>(k, 0.0)};
        hot.weights[b] = 1.0;
        c.expect(op.open_raw(ev.weighted_similarity(x, ey, schema, hot)) ==
                     op.open_raw(blocks.per_block[b]) * unit,
                 "one-hot weight does not isolate block " + std::to_string(b));
      }
    }
  }

  // Weight 5 exceeds the default max_abs of 4, so the hand case widens it.
  codec::ScaleConfig wide = cfg;
  wide.max_abs = 8.0;
  engine::Evaluator wev(keys.pub, wide);
  engine::Opener wop(keys, wide);
  const BlockSchema two = BlockSchema::from_blocks({{"a", 0, 1}, {"b", 1, 1}});
  auto x = make_vector({1.0, 1.0}, "x");
  auto ey = store::encrypt_vector(make_vector({2.0, 3.0}, "y"), keys.pub, wide, rng);
  const double hand = codec::decode_product(
      wop.open_raw(wev.weighted_similarity(x, ey, two, WeightVector{{2.0, 5.0}})), wide, true);
  c.expect(std::fabs(hand - 19.0) <= codec::product_error_bound(wide, 2) * 5.0,
           "hand case decoded to " + fmt("%.9g", hand));
  return {c.failures() == 0, std::to_string(cases) + " weight cases exact, hand case " +
                                 fmt("%.9g", hand) +
                                 (c.first().empty() ? "" : "; " + c.first())};
}

Verdict criterion_linearity() {
  bench::BenchOptions opt;
  opt.reps = 11;
  Checker c;
  std::ostringstream detail;
  for (auto s : {bench::BenchSetting::kEncryptedQuery, bench::BenchSetting::kEncryptedDb}) {
    auto results = bench::run_bench(kDims, 100, s, 1, opt, &test_keys());
    std::vector<double> x, y;
    for (const auto& r : results) {
      x.push_back(static_cast<double>(r.dimension));
      y.push_back(r.phase("evaluation").median_ms);
    }
    const auto fit = bench::fit_line(x, y);
    const double ratio = y.back() / y.front();
    c.expect(fit.r2 >= 0.98, std::string(bench::to_string(s)) + " r2 below 0.98");
    c.expect(ratio >= 5.6 && ratio <= 10.4,
             std::string(bench::to_string(s)) + " ratio outside [5.6, 10.4]");
    detail << bench::to_string(s) << " r2 " << fmt("%.4f", fit.r2) << " ratio "
           << fmt("%.2f", ratio) << " (";
    for (std::size_t i = 0; i < y.size(); ++i) {
      detail << (i ? " " : "") << fmt("%.1f", y[i]);
    }
    detail << " ms); ";
  }
  std::string d = detail.str();
  d.resize(d.size() - 2);
  return {c.failures() == 0, d + (c.first().empty() ? "" : "; " + c.first())};
}

Verdict criterion_asymmetry() {
  bench::BenchOptions opt;
  const std::size_t n = 100;
  const std::size_t dims[] = {128};
  auto q = bench::run_bench(dims, n, bench::BenchSetting::kEncryptedQuery, 1, opt, &test_keys());
  auto db = bench::run_bench(dims, n, bench::BenchSetting::kEncryptedDb, 1, opt, &test_keys());
  const double eq = q.front().end_to_end_ms();
  const double edb = db.front().end_to_end_ms();
  const double bytes = static_cast<double>(db.front().ct_bytes) /
                       static_cast<double>(q.front().ct_bytes);
  const bool ok = edb > eq && bytes >= 0.8 * n && bytes <= 1.2 * n;
  return {ok, "end-to-end encrypted_db " + fmt("%.1f", edb) + " ms vs encrypted_query " +
                  fmt("%.1f", eq) + " ms, bytes ratio " + fmt("%.2f", bytes)};
}

Verdict criterion_pattern() {
  const codec::ScaleConfig cfg;
  SeededRandom rng(601);
  threat::PatternExperiment planted;
  auto strong = threat::run_pattern_experiment(planted, test_keys(), cfg, rng);
  threat::PatternExperiment null_exp = planted;
  null_exp.strength = 0.0;
  auto null_run = threat::run_pattern_experiment(null_exp, test_keys(), cfg, rng);
  const double auc_strong = strong.encrypted.detection->auc;
  const double auc_null = null_run.encrypted.detection->auc;
  const bool ok = auc_strong >= 0.95 && auc_null >= 0.4 && auc_null <= 0.6 &&
                  strong.decisions_match && null_run.decisions_match;
  return {ok, "planted AUC " + fmt("%.4f", auc_strong) + ", unplanted AUC " +
                  fmt("%.4f", auc_null) + ", decisions match " +
                  (strong.decisions_match && null_run.decisions_match ? "yes" : "no")};
}

Verdict criterion_attribution() {
  const codec::ScaleConfig cfg;
  SeededRandom rng(701);
  threat::AttributionExperiment exp;
  auto out = threat::run_attribution_experiment(exp, test_keys(), cfg, rng);
  const bool ok = out.accuracy >= 0.9 && out.all_agree;
  return {ok, std::to_string(out.encrypted.size()) + " trials, accuracy " +
                  fmt("%.3f", out.accuracy) + ", encrypted equals plaintext " +
                  (out.all_agree ? "in every trial" : "NOT in every trial")};
}

Verdict criterion_crypto() {
  constexpr int kCases = 1000;
  constexpr int kKeys = 4;
  std::vector<ahe::KeyPair> keys;
  for (int k = 0; k < kKeys; ++k) {
    SeededRandom krng(800 + k);
    keys.push_back(ahe::keygen(ahe::kTestKeyBits, krng));
  }
  SeededRandom rng(810);
  int fail_round = 0, fail_add = 0, fail_scalar = 0, fail_fold = 0;
  for (int i = 0; i < kCases; ++i) {
    const auto& kp = keys[i % kKeys];
    const auto& pk = kp.pub;
    auto signed_plain = [&] { return ahe::from_residue(pk, rng.below(pk.n())); };
    auto wrap = [&](const mpz_class& v) {
      mpz_class r;
      mpz_mod(r.get_mpz_t(), v.get_mpz_t(), pk.n().get_mpz_t());
      return ahe::from_residue(pk, r);
    };

    const mpz_class m = signed_plain();
    const auto c = ahe::encrypt(pk, m, rng);
    if (ahe::decrypt(kp.priv, pk, c) != m) ++fail_round;

    const mpz_class a = signed_plain(), b = signed_plain();
    const auto sum = ahe::add(pk, ahe::encrypt(pk, a, rng), ahe::encrypt(pk, b, rng));
    if (ahe::decrypt(kp.priv, pk, sum) != wrap(a + b)) {
      ++fail_add;
    }

    const mpz_class s = ahe::from_residue(pk, rng.below(pk.n()));
    const auto prod = ahe::scalar_mul(pk, c, s);
    if (ahe::decrypt(kp.priv, pk, prod) != wrap(s * m)) {
      ++fail_scalar;
    }

    const unsigned long fold = mpz_class(rng.below(65)).get_ui();
    ahe::Ciphertext acc = ahe::zero(pk);
    for (unsigned long j = 0; j < fold; ++j) acc = ahe::add(pk, acc, c);
    const auto direct = ahe::scalar_mul(pk, c, mpz_class(fold));
    if (ahe::decrypt(kp.priv, pk, acc) != ahe::decrypt(kp.priv, pk, direct)) ++fail_fold;
  }
  const int total = fail_round + fail_add + fail_scalar + fail_fold;
  return {total == 0, std::to_string(kCases) + " cases each over " + std::to_string(kKeys) +
                          " keys; failures round-trip " + std::to_string(fail_round) +
                          ", add " + std::to_string(fail_add) + ", scalar " +
                          std::to_string(fail_scalar) + ", s-fold " + std::to_string(fail_fold)};
}

Verdict criterion_service() {
  const codec::ScaleConfig cfg;
  const std::size_t d = 128;
  const BlockSchema schema = BlockSchema::equal_partition(d, 4);
  auto corpus = store::synth_corpus(901, 50, schema, store::UniformProfile{});
  service::ServiceOptions opts;
  opts.allow_insecure_keys = true;
  service::SearchService svc(corpus.set, cfg, opts);
  service::Server server(svc);
  const int port = server.start({"127.0.0.1", 0});
  service::Client client("http://127.0.0.1:" + std::to_string(port));

  const auto& keys = test_keys();
  std::mt19937_64 gen(902);
  SeededRandom rng(903);
  auto q = make_vector(random_values(gen, d), "query");
  auto eq = store::encrypt_vector(q, keys.pub, cfg, rng);
  engine::Opener opener(keys, cfg);
  Checker c;

  const WeightVector w{{1.0, 0.5, 2.0, 0.0}};
  for (auto kind : {engine::ScoreKind::kPlain, engine::ScoreKind::kBlocked,
                    engine::ScoreKind::kWeighted}) {
    const WeightVector* wp = kind == engine::ScoreKind::kWeighted ? &w : nullptr;
    auto reply = client.search(keys.pub, eq, kind, wp);
    c.expect(service::open_and_rank(reply, opener, 50, q.id).ids() ==
                 engine::topk_search(q, corpus.set, 50, kind, wp).ids(),
             std::string("ranking differs for ") + engine::to_string(kind));
  }

  auto a = client.search(keys.pub, eq, engine::ScoreKind::kPlain, nullptr);
  auto b = client.search(keys.pub, eq, engine::ScoreKind::kPlain, nullptr);
  std::size_t distinct = 0, same_value = 0;
  for (std::size_t i = 0; i < a.scores.size() && i < b.scores.size(); ++i) {
    if (ahe::to_hex(a.scores[i].value.value()) != ahe::to_hex(b.scores[i].value.value())) {
      ++distinct;
    }
    if (opener.open_raw(a.scores[i].value) == opener.open_raw(b.scores[i].value)) ++same_value;
  }
  server.stop();
  c.expect(a.scores.size() == 50 && b.scores.size() == 50, "expected 50 scores per reply");
  c.expect(distinct == 50, "repeated replies share ciphertext bytes");
  c.expect(same_value == 50, "repeated replies decrypt differently");
  return {c.failures() == 0,
          "rankings match for plain, blocked and weighted; repeated replies " +
              std::to_string(distinct) + "/50 byte-distinct, " + std::to_string(same_value) +
              "/50 equal after decryption" + (c.first().empty() ? "" : "; " + c.first())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exact oracle equivalence", criterion_exactness},
      {2, "blocked partition invariance", criterion_partition},
      {3, "weighted degeneracy and selectivity", criterion_weights},
      {4, "evaluation time linear in d", criterion_linearity},
      {5, "setting asymmetry", criterion_asymmetry},
      {6, "pattern inference attack", criterion_pattern},
      {7, "creator attribution attack", criterion_attribution},
      {8, "crypto property suite", criterion_crypto},
      {9, "service loopback", criterion_service},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > static_cast<int>(all.size())) {
      std::cerr << "usage: " << argv[0] << " [criterion 1-9 ...]\n";
      return 2;
    }
    wanted.insert(id);
  }

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": "
              << v.detail << " (" << fmt("%.1f", secs) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
