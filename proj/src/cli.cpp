// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/cli.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "ahems/bench.h"
#include "ahems/key_io.h"
#include "ahems/service.h"
#include "ahems/similarity.h"
#include "ahems/store.h"
#include "ahems/threat.h"
#include "json.hpp"

namespace ahems::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kValidation: return kExitValidation;
    case ErrorKind::kBudget: return kExitBudget;
    case ErrorKind::kKeyMismatch: return kExitKeyMismatch;
    case ErrorKind::kMissingKey: return kExitMissingKey;
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kIntegrity: return kExitIntegrity;
  }
  return kExitOther;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("not a number: '" + s + "'");
}

}  // namespace

BlockSchema parse_blocks(const std::string& spec, std::size_t dimension) {
  std::size_t k = 0;
  if (parse_number(spec, k)) {
    if (k == 0 || k > dimension) {
      throw UsageError("block count must be in [1, " + std::to_string(dimension) + "]");
    }
    return BlockSchema::equal_partition(dimension, k);
  }
  const auto parts = split(spec, ',');
  if (parts.empty()) throw UsageError("empty block specification");
  if (spec.find(':') == std::string::npos) {
    if (parts.size() > dimension) throw UsageError("more blocks than dimensions");
    return BlockSchema::equal_partition(dimension, parts);
  }
  std::vector<Block> blocks;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto colon = p.find(':');
    std::size_t len = 0;
    if (colon == std::string::npos || !parse_number(p.substr(colon + 1), len)) {
      throw UsageError("block '" + p + "' must look like label:length");
    }
    blocks.push_back({p.substr(0, colon), offset, len});
    offset += len;
  }
  if (offset != dimension) {
    throw UsageError("block lengths sum to " + std::to_string(offset) + ", expected " +
                     std::to_string(dimension));
  }
  return BlockSchema::from_blocks(std::move(blocks));
}

WeightVector parse_weights(const std::string& spec) {
  WeightVector w;
  for (const auto& p : split(spec, ',')) w.weights.push_back(parse_double(p));
  if (w.weights.empty()) throw UsageError("empty weight list");
  return w;
}

std::vector<std::size_t> parse_dims(const std::string& spec) {
  std::vector<std::size_t> dims;
  for (const auto& p : split(spec, ',')) {
    std::size_t d = 0;
    if (!parse_number(p, d) || d == 0) throw UsageError("bad dimension '" + p + "'");
    dims.push_back(d);
  }
  if (dims.empty()) throw UsageError("empty dimension list");
  return dims;
}

namespace {

struct Common {
  std::uint64_t seed = 1;
  bool insecure = false;
  bool force = false;
};

void check_key_bits(int bits, bool insecure) {
  if (bits <= 0 || !ahe::is_allowed_key_size(static_cast<unsigned>(bits))) {
    throw UsageError("key size " + std::to_string(bits) +
                     " not supported (512, 1024, 2048 or 3072)");
  }
  if (bits < static_cast<int>(ahe::kDefaultKeyBits) && !insecure) {
    throw UsageError("refusing " + std::to_string(bits) +
                     "-bit keys without --insecure-test-keys");
  }
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

void require_keys_dir(const fs::path& dir, bool need_private) {
  if (!fs::exists(dir / ahe::kPublicKeyFile) ||
      (need_private && !fs::exists(dir / ahe::kPrivateKeyFile))) {
    throw MissingKeyError("key files missing in " + dir.string());
  }
}

void refuse_existing_db(const fs::path& dir, bool force) {
  if (fs::exists(dir / store::kManifestFile) && !force) {
    throw IoError(dir.string() + " already holds a database (use --force)");
  }
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + p.string());
}

EmbeddingVector pick_query(const fs::path& path, const BlockSchema& schema,
                           const std::string& id) {
  require_exists(path, "query file");
  EmbeddingSet qs = store::ingest_jsonl(path, schema);
  if (qs.vectors.empty()) throw ValidationError("query file holds no vectors");
  if (id.empty()) return qs.vectors.front();
  for (auto& v : qs.vectors) {
    if (v.id == id) return v;
  }
  throw ValidationError("no query with id '" + id + "'");
}

void print_result(const engine::RetrievalResult& r, const std::string& query_id,
                  engine::Setting setting, engine::ScoreKind kind, const std::string& out_path,
                  std::ostream& out) {
  out << "query " << query_id << "  setting " << engine::to_string(setting) << "  kind "
      << engine::to_string(kind) << "\n";
  out << std::left << std::setw(6) << "rank" << std::setw(24) << "id" << "score\n";
  json rows = json::array();
  std::size_t rank = 1;
  for (const auto& s : r.ranked) {
    out << std::left << std::setw(6) << rank << std::setw(24) << s.target_id
        << std::setprecision(8) << s.value << "\n";
    rows.push_back({{"rank", rank}, {"id", s.target_id}, {"score", s.value}});
    ++rank;
  }
  json j{{"query_id", query_id},
         {"setting", engine::to_string(setting)},
         {"kind", engine::to_string(kind)},
         {"results", std::move(rows)}};
  if (out_path.empty()) {
    out << j.dump() << "\n";
  } else {
    write_text(out_path, j.dump(2) + "\n");
  }
}

// ---- subcommands -----------------------------------------------------------

struct KeygenArgs {
  int bits = ahe::kDefaultKeyBits;
  std::string out;
};

int cmd_keygen(const KeygenArgs& a, const Common& c, std::ostream& out) {
  check_key_bits(a.bits, c.insecure);
  const fs::path dir(a.out);
  if (!c.force && (fs::exists(dir / ahe::kPublicKeyFile) || fs::exists(dir / ahe::kPrivateKeyFile))) {
    throw IoError("key files already exist in " + dir.string() + " (use --force)");
  }
  SystemRandom rng;
  const ahe::KeyPair kp = ahe::keygen(static_cast<unsigned>(a.bits), rng);
  ahe::save_keypair(dir, kp, c.force);
  out << "wrote " << (dir / ahe::kPublicKeyFile).string() << " and "
      << (dir / ahe::kPrivateKeyFile).string() << "\n";
  out << "key_id " << kp.pub.key_id().hex() << "  bits " << kp.pub.bits() << "\n";
  return kExitOk;
}

struct ScaleArgs {
  int frac_bits = 16;
  int weight_frac_bits = 8;
  double max_abs = 4.0;

  codec::ScaleConfig config() const {
    codec::ScaleConfig cfg;
    cfg.frac_bits = frac_bits;
    cfg.weight_frac_bits = weight_frac_bits;
    cfg.max_abs = max_abs;
    cfg.validate();
    return cfg;
  }
};

struct ImportArgs {
  std::string in, out, blocks = "4";
  std::size_t dim = 0;
  ScaleArgs scale;
};

int cmd_import(const ImportArgs& a, const Common& c, std::ostream& out) {
  require_exists(a.in, "input");
  const codec::ScaleConfig cfg = a.scale.config();
  refuse_existing_db(a.out, c.force);
  const BlockSchema schema = parse_blocks(a.blocks, a.dim);
  EmbeddingSet set = store::ingest_jsonl(fs::path(a.in), schema);
  for (const auto& v : set.vectors) {
    for (double x : v.values) {
      if (std::fabs(x) > cfg.max_abs) {
        throw ValidationError("vector '" + v.id + "' exceeds max_abs " +
                              std::to_string(cfg.max_abs));
      }
    }
  }
  store::save_db(a.out, set, cfg);
  out << "imported " << set.vectors.size() << " vectors of dimension " << a.dim << " into "
      << a.out << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string profile = "uniform", out, blocks = "4", block = "melody";
  std::size_t n = 100, dim = 128, planted = 0, artists = 4;
  double strength = 5.0, spread = 0.1;
  std::uint64_t pattern_seed = 7;
  bool normalize = false;
  ScaleArgs scale;
};

int cmd_synth(const SynthArgs& a, const Common& c, std::ostream& out) {
  const codec::ScaleConfig cfg = a.scale.config();
  refuse_existing_db(a.out, c.force);
  const BlockSchema schema = parse_blocks(a.blocks, a.dim);
  store::Profile profile;
  if (a.profile == "uniform") {
    profile = store::UniformProfile{};
  } else if (a.profile == "planted") {
    profile = store::PlantedPatternProfile{a.block, a.pattern_seed, a.strength, a.planted};
  } else if (a.profile == "artists") {
    profile = store::ArtistClustersProfile{a.artists, a.spread};
  } else {
    throw UsageError("unknown profile '" + a.profile + "' (uniform, planted or artists)");
  }
  store::SynthCorpus corpus = store::synth_corpus(c.seed, a.n, schema, profile, cfg.max_abs);
  if (a.normalize) {
    for (auto& v : corpus.set.vectors) l2_normalize(v);
  }
  store::save_db(a.out, corpus.set, cfg);
  json truth{{"profile", a.profile}, {"seed", c.seed}};
  if (!corpus.planted_ids.empty()) {
    truth["planted_ids"] = corpus.planted_ids;
    truth["pattern"] = corpus.pattern;
    truth["block"] = a.block;
  }
  write_text(fs::path(a.out) / "truth.json", truth.dump(2) + "\n");
  out << "wrote " << corpus.set.vectors.size() << " " << a.profile << " vectors (d=" << a.dim
      << ") to " << a.out << "\n";
  return kExitOk;
}

struct EncryptDbArgs {
  std::string db, keys, out;
};

void print_budget(std::ostream& out, const codec::ScaleConfig& cfg, std::size_t d,
                  const ahe::PublicKey& pk) {
  const codec::BudgetCheck b = codec::overflow_budget(cfg, d, pk.n());
  out << "budget: d=" << d << " max safe d=" << b.max_dimension.get_str() << " -> "
      << (b.holds ? "ok" : "VIOLATED") << "\n";
  if (!b.holds) {
    throw BudgetError("dimension " + std::to_string(d) + " exceeds the overflow budget; max safe d is " +
                      b.max_dimension.get_str());
  }
}

int cmd_encrypt_db(const EncryptDbArgs& a, const Common& c, std::ostream& out,
                   std::ostream& err) {
  require_exists(a.db, "database");
  require_keys_dir(a.keys, false);
  refuse_existing_db(a.out, c.force);
  const ahe::PublicKey pk = ahe::load_public_key(a.keys);
  codec::ScaleConfig cfg;
  const EmbeddingSet set = store::load_plain_db(a.db, &cfg);
  print_budget(out, cfg, set.schema.total_dim(), pk);
  if (set.vectors.empty()) err << "warning: database is empty; writing an empty encrypted database\n";
  SystemRandom rng;
  const EncryptedSet enc = store::encrypt_collection(set, pk, cfg, rng);
  store::save_db(a.out, enc);
  out << "encrypted " << enc.vectors.size() << " vectors (" << store::ciphertext_bytes(enc, pk)
      << " ciphertext bytes) into " << a.out << "\n";
  return kExitOk;
}

struct EncryptQueryArgs {
  std::string in, keys, out, db, blocks = "4", id;
  std::size_t dim = 0;
  ScaleArgs scale;
};

int cmd_encrypt_query(const EncryptQueryArgs& a, const Common&, std::ostream& out) {
  require_keys_dir(a.keys, false);
  BlockSchema schema;
  codec::ScaleConfig cfg;
  if (!a.db.empty()) {
    require_exists(a.db, "database");
    const store::Manifest m = store::read_manifest(a.db);
    schema = m.schema;
    cfg = m.scale;
  } else {
    if (a.dim == 0) throw UsageError("encrypt-query needs --db or --dim");
    schema = parse_blocks(a.blocks, a.dim);
    cfg = a.scale.config();
  }
  const ahe::PublicKey pk = ahe::load_public_key(a.keys);
  const EmbeddingVector q = pick_query(a.in, schema, a.id);
  print_budget(out, cfg, schema.total_dim(), pk);
  SystemRandom rng;
  const EncryptedVector eq = store::encrypt_vector(q, pk, cfg, rng);
  json cells = json::array();
  for (const auto& cell : eq.cells) cells.push_back(ahe::to_hex(cell.value()));
  json j{{"format", "ahems-query"},
         {"schema", store::to_json(schema)},
         {"scale", store::to_json(cfg)},
         {"key_id", pk.key_id().hex()},
         {"query", {{"id", eq.id}, {"cells", std::move(cells)}}}};
  write_text(a.out, j.dump() + "\n");
  out << "encrypted query '" << q.id << "' (" << eq.cells.size() << " cells) to " << a.out << "\n";
  return kExitOk;
}

struct SearchArgs {
  std::string query, db, keys, kind = "plain", weights, remote, out, id;
  std::size_t k = 10;
};

int cmd_search(const SearchArgs& a, const Common&, std::ostream& out) {
  const engine::ScoreKind kind = engine::parse_kind(a.kind);
  std::optional<WeightVector> w;
  if (!a.weights.empty()) w = parse_weights(a.weights);
  if (kind == engine::ScoreKind::kWeighted && !w) throw UsageError("--kind weighted needs --weights");
  const WeightVector* wp = w ? &*w : nullptr;
  if (a.k == 0) throw UsageError("--k must be positive");

  if (!a.remote.empty()) {
    if (a.keys.empty()) throw UsageError("--remote needs --keys");
    require_keys_dir(a.keys, true);
    const ahe::KeyPair kp = ahe::load_keypair(a.keys);
    service::Client client(a.remote);
    const json m = client.manifest();
    const BlockSchema schema = store::schema_from_json(m.at("schema"));
    const codec::ScaleConfig cfg = store::scale_from_json(m.at("scale"));
    const EmbeddingVector q = pick_query(a.query, schema, a.id);
    SystemRandom rng;
    const EncryptedVector eq = store::encrypt_vector(q, kp.pub, cfg, rng);
    const auto response = client.search(kp.pub, eq, kind, wp);
    engine::Opener opener(kp, cfg);
    print_result(service::open_and_rank(response, opener, a.k, q.id), q.id,
                 engine::Setting::kEncryptedQuery, kind, a.out, out);
    return kExitOk;
  }

  if (a.db.empty()) throw UsageError("search needs --db or --remote");
  require_exists(a.db, "database");
  const store::Manifest m = store::read_manifest(a.db);
  if (m.mode == store::DbMode::kEncrypted) {
    if (a.keys.empty()) throw MissingKeyError("an encrypted database needs --keys");
    require_keys_dir(a.keys, true);
    const ahe::KeyPair kp = ahe::load_keypair(a.keys);
    const EncryptedSet db = store::load_encrypted_db(a.db, kp.pub.key_id());
    const EmbeddingVector q = pick_query(a.query, db.schema, a.id);
    engine::Evaluator evaluator(kp.pub, db.scale);
    engine::Opener opener(kp, db.scale);
    print_result(engine::topk_search(q, db, a.k, kind, wp, evaluator, &opener), q.id,
                 engine::Setting::kEncryptedDb, kind, a.out, out);
    return kExitOk;
  }
  codec::ScaleConfig cfg;
  const EmbeddingSet db = store::load_plain_db(a.db, &cfg);
  const EmbeddingVector q = pick_query(a.query, db.schema, a.id);
  if (a.keys.empty()) {
    print_result(engine::topk_search(q, db, a.k, kind, wp), q.id,
                 engine::Setting::kPlaintextOracle, kind, a.out, out);
    return kExitOk;
  }
  require_keys_dir(a.keys, true);
  const ahe::KeyPair kp = ahe::load_keypair(a.keys);
  SystemRandom rng;
  const EncryptedVector eq = store::encrypt_vector(q, kp.pub, cfg, rng);
  engine::Evaluator evaluator(kp.pub, cfg);
  engine::Opener opener(kp, cfg);
  print_result(engine::topk_search(eq, db, a.k, kind, wp, evaluator, &opener), q.id,
               engine::Setting::kEncryptedQuery, kind, a.out, out);
  return kExitOk;
}

struct AuditArgs {
  std::string db, keys, out;
};

int cmd_audit(const AuditArgs& a, const Common&, std::ostream& out) {
  require_exists(a.db, "database");
  require_keys_dir(a.keys, true);
  const ahe::KeyPair kp = ahe::load_keypair(a.keys);
  const EncryptedSet db = store::load_encrypted_db(a.db, kp.pub.key_id());
  std::vector<EmbeddingVector> plain;
  for (const auto& v : db.vectors) plain.push_back(store::decrypt_vector(v, kp, db.scale));
  if (a.out.empty()) {
    out << store::to_jsonl(plain);
  } else {
    write_text(a.out, store::to_jsonl(plain));
    out << "decrypted " << plain.size() << " vectors to " << a.out << "\n";
  }
  return kExitOk;
}

struct BenchArgs {
  std::string dims = "128,256,512,1024";
  std::string settings = "encrypted_query,encrypted_db,plaintext";
  std::string out = "bench.csv";
  std::size_t n = 100, reps = 11, warmup = 2, setup_reps = 5, threads = 1;
  int bits = ahe::kDefaultKeyBits;
};

int cmd_bench(const BenchArgs& a, const Common& c, std::ostream& out) {
  const auto dims = parse_dims(a.dims);
  std::vector<bench::BenchSetting> settings;
  for (const auto& s : split(a.settings, ',')) settings.push_back(bench::parse_setting(s));
  bench::BenchOptions opt;
  opt.reps = a.reps;
  opt.warmup = a.warmup;
  opt.setup_reps = a.setup_reps;
  opt.threads = a.threads;
  opt.key_bits = a.bits;
  const bool any_encrypted =
      std::any_of(settings.begin(), settings.end(),
                  [](auto s) { return s != bench::BenchSetting::kPlaintext; });
  if (any_encrypted) check_key_bits(a.bits, c.insecure);

  std::vector<bench::BenchResult> all;
  for (auto s : settings) {
    auto r = bench::run_bench(dims, a.n, s, c.seed, opt);
    all.insert(all.end(), r.begin(), r.end());
  }
  const auto paths = bench::emit_report(all, a.out);
  out << "wrote " << paths.main.string() << ", " << paths.phases.string() << ", "
      << paths.ratios.string() << ", " << paths.memory.string() << "\n";
  for (auto s : settings) {
    std::vector<double> x, y;
    for (const auto& r : all) {
      if (r.setting != s) continue;
      x.push_back(static_cast<double>(r.dimension));
      y.push_back(r.phase("evaluation").median_ms);
      out << bench::to_string(s) << "  d=" << r.dimension << "  evaluation median "
          << std::fixed << std::setprecision(3) << r.phase("evaluation").median_ms << " ms\n";
    }
    if (x.size() >= 2 && std::adjacent_find(x.begin(), x.end()) == x.end()) {
      const auto fit = bench::fit_line(x, y);
      out << bench::to_string(s) << "  linear fit r2 " << std::setprecision(4) << fit.r2
          << "  ratio max/min d " << y.back() / y.front() << "\n";
    }
  }
  out.unsetf(std::ios::fixed);
  return kExitOk;
}

struct AttackArgs {
  std::string type, out, block = "melody", blocks = "4";
  std::size_t dim = 128, n = 100, planted = 20, artists = 4, per_artist = 25, trials = 50;
  double strength = 5.0, spread = 0.1, calibration = 0.5, inconclusive_t = 3.0;
  std::optional<double> threshold;
  std::uint64_t pattern_seed = 7;
  int bits = ahe::kDefaultKeyBits;
};

int cmd_attack(const AttackArgs& a, const Common& c, std::ostream& out) {
  if (a.type != "pattern" && a.type != "creator") {
    throw UsageError("attack type must be 'pattern' or 'creator'");
  }
  if (a.type == "creator" && a.artists < 2) {
    throw UsageError("creator attribution needs at least 2 creators, got " +
                     std::to_string(a.artists));
  }
  check_key_bits(a.bits, c.insecure);
  SystemRandom rng;
  const ahe::KeyPair keys = ahe::keygen(static_cast<unsigned>(a.bits), rng);
  const codec::ScaleConfig cfg;
  json report;
  if (a.type == "pattern") {
    threat::PatternExperiment exp;
    exp.dimension = a.dim;
    exp.blocks = parse_blocks(a.blocks, a.dim).size();
    exp.block_label = a.block;
    exp.count = a.n;
    exp.planted = a.planted;
    exp.strength = a.strength;
    exp.seed = c.seed;
    exp.pattern_seed = a.pattern_seed;
    exp.policy.calibration_fraction = a.calibration;
    exp.policy.seed = c.seed;
    if (a.threshold) {
      exp.policy.kind = threat::ThresholdPolicy::Kind::kFixed;
      exp.policy.fixed = *a.threshold;
    }
    const auto o = threat::run_pattern_experiment(exp, keys, cfg, rng);
    out << threat::summary(o.encrypted);
    out << "decisions match plaintext oracle: " << (o.decisions_match ? "yes" : "no") << "\n";
    report = {{"encrypted", threat::to_json(o.encrypted)},
              {"plaintext", threat::to_json(o.plaintext)},
              {"decisions_match", o.decisions_match}};
  } else {
    threat::AttributionExperiment exp;
    exp.dimension = a.dim;
    exp.artists = a.artists;
    exp.per_artist = a.per_artist;
    exp.spread = a.spread;
    exp.trials = a.trials;
    exp.seed = c.seed;
    exp.options.inconclusive_t = a.inconclusive_t;
    const auto o = threat::run_attribution_experiment(exp, keys, cfg, rng);
    out << threat::summary(o.encrypted.front());
    out << "accuracy " << o.accuracy << " over " << o.encrypted.size()
        << " trials; encrypted attributions equal plaintext: " << (o.all_agree ? "yes" : "no")
        << "\n";
    json trials = json::array();
    for (const auto& r : o.encrypted) trials.push_back(threat::to_json(r));
    json plain_attr = json::array();
    for (const auto& r : o.plaintext) plain_attr.push_back(r.attribution);
    report = {{"attack", "creator_attribution"},
              {"accuracy", o.accuracy},
              {"all_agree", o.all_agree},
              {"plaintext_attributions", std::move(plain_attr)},
              {"trials", std::move(trials)}};
  }
  if (!a.out.empty()) {
    write_text(a.out, report.dump(2) + "\n");
    out << "report written to " << a.out << "\n";
  }
  return kExitOk;
}

struct ServeArgs {
  std::string db, bind = "127.0.0.1:8080";
  bool no_rerandomize = false;
};

int cmd_serve(const ServeArgs& a, const Common& c, std::ostream& out) {
  require_exists(a.db, "database");
  const service::BindAddress bind = service::parse_bind(a.bind);
  codec::ScaleConfig cfg;
  EmbeddingSet db = store::load_plain_db(a.db, &cfg);
  service::ServiceOptions opt;
  opt.allow_insecure_keys = c.insecure;
  opt.rerandomize = !a.no_rerandomize;
  service::SearchService svc(std::move(db), cfg, opt);
  service::Server server(svc);
  out << "serving " << svc.database().vectors.size() << " vectors (d="
      << svc.database().schema.total_dim() << ") on " << bind.host << ":" << bind.port << "\n";
  out.flush();
  server.run(bind);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Similarity search over additively homomorphic encrypted embeddings", "ahems"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub, bool with_seed = true) {
    if (with_seed) sub->add_option("--seed", common.seed, "Deterministic seed");
    sub->add_flag("--insecure-test-keys", common.insecure, "Allow key sizes below 2048 bits");
  };
  auto add_scale = [](CLI::App* sub, ScaleArgs& s) {
    sub->add_option("--frac-bits", s.frac_bits, "Fractional bits of the value encoding");
    sub->add_option("--weight-frac-bits", s.weight_frac_bits, "Fractional bits of weights");
    sub->add_option("--max-abs", s.max_abs, "Largest admissible |value|");
  };

  KeygenArgs keygen;
  auto* k = app.add_subcommand("keygen", "Generate a key pair");
  k->add_option("--bits", keygen.bits, "Modulus size (2048 or 3072; 512/1024 need --insecure-test-keys)");
  k->add_option("--out,--keys", keygen.out, "Key directory")->required();
  k->add_flag("--force", common.force, "Overwrite existing key files");
  add_common(k, false);

  ImportArgs import;
  auto* im = app.add_subcommand("import", "Import a JSONL embedding file as a plaintext database");
  im->add_option("--in", import.in, "JSONL input")->required();
  im->add_option("--dim", import.dim, "Vector dimension")->required();
  im->add_option("--blocks", import.blocks, "Block count, labels, or label:length list");
  im->add_option("--out,--db", import.out, "Output database directory")->required();
  im->add_flag("--force", common.force, "Overwrite an existing database");
  add_scale(im, import.scale);

  SynthArgs synth;
  auto* sy = app.add_subcommand("synth", "Write a synthetic plaintext database");
  sy->add_option("--profile", synth.profile, "uniform, planted or artists");
  sy->add_option("--n", synth.n, "Number of vectors");
  sy->add_option("--dim", synth.dim, "Vector dimension");
  sy->add_option("--blocks", synth.blocks, "Block count, labels, or label:length list");
  sy->add_option("--block", synth.block, "Planted block label");
  sy->add_option("--planted", synth.planted, "Planted vector count (0: n/5)");
  sy->add_option("--strength", synth.strength, "Planted strength in noise deviations");
  sy->add_option("--pattern-seed", synth.pattern_seed, "Pattern seed");
  sy->add_option("--artists", synth.artists, "Number of artists");
  sy->add_option("--spread", synth.spread, "Cluster spread");
  sy->add_flag("--normalize", synth.normalize, "L2-normalize every vector");
  sy->add_option("--out,--db", synth.out, "Output database directory")->required();
  sy->add_flag("--force", common.force, "Overwrite an existing database");
  add_scale(sy, synth.scale);
  add_common(sy);

  EncryptDbArgs encdb;
  auto* ed = app.add_subcommand("encrypt-db", "Encrypt a plaintext database");
  ed->add_option("--db", encdb.db, "Plaintext database directory")->required();
  ed->add_option("--keys", encdb.keys, "Key directory")->required();
  ed->add_option("--out", encdb.out, "Encrypted database directory")->required();
  ed->add_flag("--force", common.force, "Overwrite an existing database");

  EncryptQueryArgs encq;
  auto* eq = app.add_subcommand("encrypt-query", "Encrypt a query vector");
  eq->add_option("--in,--query", encq.in, "JSONL query file")->required();
  eq->add_option("--keys", encq.keys, "Key directory")->required();
  eq->add_option("--out", encq.out, "Output JSON file")->required();
  eq->add_option("--db", encq.db, "Database whose schema and scale to use");
  eq->add_option("--dim", encq.dim, "Vector dimension when no --db is given");
  eq->add_option("--blocks", encq.blocks, "Block specification when no --db is given");
  eq->add_option("--id", encq.id, "Query id within the file (default: first)");
  add_scale(eq, encq.scale);

  SearchArgs search;
  auto* se = app.add_subcommand("search", "Top-k search");
  se->add_option("--query", search.query, "JSONL query file")->required();
  se->add_option("--db", search.db, "Database directory (plaintext or encrypted)");
  se->add_option("--keys", search.keys, "Key directory");
  se->add_option("--k", search.k, "Number of results");
  se->add_option("--kind", search.kind, "plain, blocked or weighted");
  se->add_option("--weights", search.weights, "Comma-separated block weights");
  se->add_option("--remote", search.remote, "Service URL, e.g. http://127.0.0.1:8080");
  se->add_option("--out", search.out, "Write the JSON result here");
  se->add_option("--id", search.id, "Query id within the file (default: first)");

  AuditArgs audit;
  auto* au = app.add_subcommand("audit", "Decrypt an encrypted database (key holder only)");
  au->add_option("--db", audit.db, "Encrypted database directory")->required();
  au->add_option("--keys", audit.keys, "Key directory")->required();
  au->add_option("--out", audit.out, "JSONL output (default: stdout)");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Timing benchmark");
  be->add_option("--dims,--dim", bench.dims, "Comma-separated dimensions");
  be->add_option("--settings", bench.settings, "Comma-separated settings");
  be->add_option("--n", bench.n, "Corpus size N");
  be->add_option("--reps", bench.reps, "Timed repetitions (>= 5)");
  be->add_option("--warmup", bench.warmup, "Discarded warm-up runs");
  be->add_option("--setup-reps", bench.setup_reps, "Repetitions of setup phases (>= 5)");
  be->add_option("--threads", bench.threads, "Evaluation threads");
  be->add_option("--bits", bench.bits, "Key size");
  be->add_option("--out", bench.out, "CSV output path");
  add_common(be);

  AttackArgs attack;
  auto* at = app.add_subcommand("attack", "Run a score-leakage attack simulation");
  at->add_option("type", attack.type, "pattern or creator")->required();
  at->add_option("--dim", attack.dim, "Vector dimension");
  at->add_option("--blocks", attack.blocks, "Block count or labels");
  at->add_option("--block", attack.block, "Target block for pattern inference");
  at->add_option("--n", attack.n, "Corpus size (pattern)");
  at->add_option("--planted", attack.planted, "Planted vectors (pattern)");
  at->add_option("--strength", attack.strength, "Planted strength (pattern)");
  at->add_option("--pattern-seed", attack.pattern_seed, "Pattern seed");
  at->add_option("--threshold", attack.threshold, "Fixed decision threshold (pattern)");
  at->add_option("--calibration", attack.calibration, "Calibration fraction (pattern)");
  at->add_option("--artists", attack.artists, "Number of creators (creator)");
  at->add_option("--per-artist", attack.per_artist, "Vectors per creator (creator)");
  at->add_option("--spread", attack.spread, "Cluster spread (creator)");
  at->add_option("--trials", attack.trials, "Trials (creator)");
  at->add_option("--inconclusive-t", attack.inconclusive_t, "Welch t below which a result is inconclusive");
  at->add_option("--bits", attack.bits, "Key size");
  at->add_option("--out", attack.out, "JSON report path");
  add_common(at);

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "Serve encrypted-query search over HTTP");
  sv->add_option("--db", serve.db, "Plaintext database directory")->required();
  sv->add_option("--bind", serve.bind, "host:port");
  sv->add_flag("--no-rerandomize", serve.no_rerandomize, "Return scores without rerandomizing");
  add_common(sv, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (k->parsed()) return cmd_keygen(keygen, common, out);
    if (im->parsed()) return cmd_import(import, common, out);
    if (sy->parsed()) return cmd_synth(synth, common, out);
    if (ed->parsed()) return cmd_encrypt_db(encdb, common, out, err);
    if (eq->parsed()) return cmd_encrypt_query(encq, common, out);
    if (se->parsed()) return cmd_search(search, common, out);
    if (au->parsed()) return cmd_audit(audit, common, out);
    if (be->parsed()) return cmd_bench(bench, common, out);
    if (at->parsed()) return cmd_attack(attack, common, out);
    if (sv->parsed()) return cmd_serve(serve, common, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitUsage;
}

}  // namespace ahems::cli
