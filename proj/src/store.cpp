// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/store.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ahems/error.h"
#include "ahems/key_io.h"

namespace ahems::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Portable draws on top of mt19937_64; the standard distributions are not
// specified bit-for-bit across library implementations.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * unit() - 1.0; }

  double gaussian() {
    if (spare_) {
      double out = *spare_;
      spare_.reset();
      return out;
    }
    double u1;
    do {
      u1 = unit();
    } while (u1 <= 0.0);
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  std::size_t below(std::size_t bound) {
    const std::uint64_t b = bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % b;
    for (;;) {
      std::uint64_t x = engine_();
      if (x < limit) return static_cast<std::size_t>(x % b);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::vector<double> unit_gaussian(Draw& draw, std::size_t n) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = draw.gaussian();
    sum += x * x;
  }
  const double inv = 1.0 / std::sqrt(sum);
  for (double& x : v) x *= inv;
  return v;
}

std::string vector_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "vec-%05zu", i);
  return buf;
}

void clamp_all(std::vector<double>& values, double max_abs) {
  for (double& x : values) x = std::clamp(x, -max_abs, max_abs);
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed for " + path.string());
}

std::optional<std::string> parse_creator(const json& j) {
  if (!j.contains("creator") || j.at("creator").is_null()) return std::nullopt;
  if (!j.at("creator").is_string()) throw ValidationError("creator must be a string");
  return j.at("creator").get<std::string>();
}

std::string parse_id(const json& j) {
  if (!j.is_object() || !j.contains("id") || !j.at("id").is_string()) {
    throw ValidationError("missing string field 'id'");
  }
  std::string id = j.at("id").get<std::string>();
  if (id.empty()) throw ValidationError("empty id");
  return id;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line), lineno);
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kValidation) throw;
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

EmbeddingVector parse_embedding(const json& j, std::size_t dim) {
  EmbeddingVector v;
  v.id = parse_id(j);
  v.creator = parse_creator(j);
  if (!j.contains("values") || !j.at("values").is_array()) {
    throw ValidationError("missing array field 'values'");
  }
  const json& vals = j.at("values");
  if (vals.size() != dim) {
    throw ValidationError("dimension mismatch: expected " + std::to_string(dim) +
                          " values, got " + std::to_string(vals.size()));
  }
  v.values.reserve(dim);
  for (const json& x : vals) {
    if (!x.is_number()) throw ValidationError("non-numeric value");
    double d = x.get<double>();
    if (!std::isfinite(d)) throw ValidationError("non-finite value");
    v.values.push_back(d);
  }
  return v;
}

const char* mode_name(DbMode mode) {
  return mode == DbMode::kPlaintext ? "plaintext" : "encrypted";
}

Manifest load_checked_manifest(const fs::path& dir, DbMode expected,
                               std::string* payload) {
  Manifest m = read_manifest(dir);
  if (m.mode != expected) {
    throw ValidationError(dir.string() + " is a " + mode_name(m.mode) +
                          " database, expected " + mode_name(expected));
  }
  *payload = read_all(dir / m.payload_file);
  if (payload->size() != m.payload_bytes || sha256_hex(*payload) != m.payload_sha256) {
    throw IntegrityError(dir.string() + ": payload " + m.payload_file +
                         " does not match manifest digest (truncated or modified)");
  }
  return m;
}

void write_db(const fs::path& dir, Manifest manifest, const std::string& payload) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  manifest.payload_bytes = payload.size();
  manifest.payload_sha256 = sha256_hex(payload);
  write_all(dir / manifest.payload_file, payload);
  write_all(dir / kManifestFile, to_json(manifest).dump(2) + "\n");
}

}  // namespace

// ---- ingestion -------------------------------------------------------------

EmbeddingSet ingest_jsonl(std::istream& in, const BlockSchema& schema) {
  EmbeddingSet set{schema, {}};
  std::set<std::string> ids;
  for_each_line(in, [&](const json& j, std::size_t) {
    EmbeddingVector v = parse_embedding(j, schema.total_dim());
    if (!ids.insert(v.id).second) throw ValidationError("duplicate id '" + v.id + "'");
    set.vectors.push_back(std::move(v));
  });
  return set;
}

EmbeddingSet ingest_jsonl(const fs::path& path, const BlockSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return ingest_jsonl(in, schema);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kValidation) throw;
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const EmbeddingVector& v) {
  json j{{"id", v.id}};
  if (v.creator) j["creator"] = *v.creator;
  j["values"] = v.values;
  return j;
}

std::string to_jsonl(const std::vector<EmbeddingVector>& vectors) {
  std::string out;
  for (const EmbeddingVector& v : vectors) {
    out += to_json(v).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<EmbeddingVector>& vectors) {
  write_all(path, to_jsonl(vectors));
}

// ---- synthetic corpora -----------------------------------------------------

std::string creator_name(std::size_t artist) {
  return "artist_" + std::to_string(artist);
}

std::vector<double> pattern_vector(std::uint64_t pattern_seed, std::size_t length) {
  Draw draw(pattern_seed ^ 0x9E3779B97F4A7C15ULL);
  return unit_gaussian(draw, length);
}

SynthCorpus synth_corpus(std::uint64_t seed, std::size_t count,
                         const BlockSchema& schema, const Profile& profile,
                         double max_abs) {
  const std::size_t d = schema.total_dim();
  if (d == 0) throw ValidationError("schema has no dimensions");
  Draw draw(seed);
  SynthCorpus out;
  out.set.schema = schema;
  out.set.vectors.reserve(count);

  auto uniform_vector = [&](std::size_t i) {
    EmbeddingVector v{vector_id(i), std::nullopt, std::vector<double>(d)};
    for (double& x : v.values) x = draw.symmetric();
    return v;
  };

  if (std::holds_alternative<UniformProfile>(profile)) {
    for (std::size_t i = 0; i < count; ++i) out.set.vectors.push_back(uniform_vector(i));
  } else if (const auto* planted = std::get_if<PlantedPatternProfile>(&profile)) {
    const std::size_t block = schema.index_of(planted->block_label);
    const Block& b = schema.block(block);
    std::size_t planted_count =
        planted->planted_count == 0 ? count / 5 : planted->planted_count;
    if (planted_count > count) {
      throw ValidationError("planted_count exceeds corpus size");
    }
    for (std::size_t i = 0; i < count; ++i) out.set.vectors.push_back(uniform_vector(i));

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < planted_count; ++i) {
      std::swap(order[i], order[i + draw.below(count - i)]);
    }
    std::sort(order.begin(), order.begin() + static_cast<long>(planted_count));

    out.pattern = pattern_vector(planted->pattern_seed, b.length);
    const double amplitude = planted->strength * kUniformNoiseSigma;
    for (std::size_t k = 0; k < planted_count; ++k) {
      EmbeddingVector& v = out.set.vectors[order[k]];
      for (std::size_t j = 0; j < b.length; ++j) {
        v.values[b.offset + j] += amplitude * out.pattern[j];
      }
      out.planted_ids.push_back(v.id);
    }
  } else {
    const auto& clusters = std::get<ArtistClustersProfile>(profile);
    if (clusters.num_artists == 0) throw ValidationError("num_artists must be >= 1");
    if (count < clusters.num_artists) {
      throw ValidationError("count " + std::to_string(count) +
                            " is smaller than num_artists " +
                            std::to_string(clusters.num_artists));
    }
    for (std::size_t a = 0; a < clusters.num_artists; ++a) {
      out.centroids.push_back(unit_gaussian(draw, d));
    }
    const double sigma = clusters.spread / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t artist = i % clusters.num_artists;
      EmbeddingVector v{vector_id(i), creator_name(artist), out.centroids[artist]};
      for (double& x : v.values) x += sigma * draw.gaussian();
      out.set.vectors.push_back(std::move(v));
    }
  }
  for (EmbeddingVector& v : out.set.vectors) clamp_all(v.values, max_abs);
  return out;
}

// ---- encryption ------------------------------------------------------------

void require_budget(const codec::ScaleConfig& cfg, std::size_t dimension,
                    const ahe::PublicKey& pk) {
  codec::BudgetCheck check = codec::overflow_budget(cfg, dimension, pk.n());
  if (!check.holds) {
    throw BudgetError("overflow budget violated: dimension " +
                      std::to_string(dimension) + " exceeds max safe dimension " +
                      check.max_dimension.get_str() + " for a " +
                      std::to_string(pk.bits()) + "-bit modulus");
  }
}

EncryptedVector encrypt_vector(const EmbeddingVector& v, const ahe::PublicKey& pk,
                               const codec::ScaleConfig& cfg, RandomSource& rng) {
  EncryptedVector out{v.id, v.creator, {}, pk.key_id()};
  out.cells.reserve(v.values.size());
  for (double x : v.values) {
    out.cells.push_back(ahe::encrypt(pk, mpz_class(codec::encode(x, cfg)), rng));
  }
  return out;
}

EncryptedSet encrypt_collection(const EmbeddingSet& set, const ahe::PublicKey& pk,
                                const codec::ScaleConfig& cfg, RandomSource& rng) {
  require_budget(cfg, set.schema.total_dim(), pk);
  EncryptedSet out{set.schema, cfg, pk.key_id(), {}};
  out.vectors.reserve(set.vectors.size());
  for (const EmbeddingVector& v : set.vectors) {
    if (v.values.size() != set.schema.total_dim()) {
      throw ValidationError("vector '" + v.id + "' does not match schema dimension");
    }
    out.vectors.push_back(encrypt_vector(v, pk, cfg, rng));
  }
  return out;
}

EmbeddingVector decrypt_vector(const EncryptedVector& v, const ahe::KeyPair& keys,
                               const codec::ScaleConfig& cfg) {
  EmbeddingVector out{v.id, v.creator, {}};
  out.values.reserve(v.cells.size());
  for (const ahe::Ciphertext& c : v.cells) {
    const mpz_class m = ahe::decrypt(keys.priv, keys.pub, c);
    out.values.push_back(codec::decode(m.get_si(), cfg));
  }
  return out;
}

std::size_t ciphertext_bytes(const EncryptedSet& set, const ahe::PublicKey& pk) {
  std::size_t cells = 0;
  for (const EncryptedVector& v : set.vectors) cells += v.cells.size();
  return cells * pk.ciphertext_bytes();
}

// ---- persistence -----------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kDigits[digest[i] >> 4]);
    out.push_back(kDigits[digest[i] & 0xF]);
  }
  return out;
}

json to_json(const BlockSchema& schema) {
  json blocks = json::array();
  for (const Block& b : schema.blocks()) {
    blocks.push_back({{"label", b.label}, {"offset", b.offset}, {"length", b.length}});
  }
  return json{{"total_dim", schema.total_dim()}, {"blocks", blocks}};
}

BlockSchema schema_from_json(const json& j) {
  std::vector<Block> blocks;
  for (const json& b : j.at("blocks")) {
    blocks.push_back(Block{b.at("label").get<std::string>(),
                           b.at("offset").get<std::size_t>(),
                           b.at("length").get<std::size_t>()});
  }
  BlockSchema s = BlockSchema::from_blocks(std::move(blocks));
  if (s.total_dim() != j.at("total_dim").get<std::size_t>()) {
    throw ValidationError("schema blocks do not cover total_dim");
  }
  return s;
}

json to_json(const codec::ScaleConfig& cfg) {
  return json{{"frac_bits", cfg.frac_bits},
              {"weight_frac_bits", cfg.weight_frac_bits},
              {"max_abs", cfg.max_abs}};
}

codec::ScaleConfig scale_from_json(const json& j) {
  codec::ScaleConfig cfg;
  cfg.frac_bits = j.at("frac_bits").get<int>();
  cfg.weight_frac_bits = j.at("weight_frac_bits").get<int>();
  cfg.max_abs = j.at("max_abs").get<double>();
  cfg.validate();
  return cfg;
}

json to_json(const Manifest& m) {
  json j{{"format", "ahems-db"},
         {"version", 1},
         {"mode", mode_name(m.mode)},
         {"schema", to_json(m.schema)},
         {"scale", to_json(m.scale)},
         {"count", m.count},
         {"payload",
          {{"file", m.payload_file},
           {"bytes", m.payload_bytes},
           {"sha256", m.payload_sha256}}}};
  if (m.key_id) j["key_id"] = m.key_id->hex();
  return j;
}

Manifest manifest_from_json(const json& j) {
  try {
    if (j.at("format") != "ahems-db" || j.at("version") != 1) {
      throw ValidationError("unsupported manifest format");
    }
    Manifest m;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "plaintext") {
      m.mode = DbMode::kPlaintext;
    } else if (mode == "encrypted") {
      m.mode = DbMode::kEncrypted;
    } else {
      throw ValidationError("unknown database mode '" + mode + "'");
    }
    m.schema = schema_from_json(j.at("schema"));
    m.scale = scale_from_json(j.at("scale"));
    m.count = j.at("count").get<std::size_t>();
    const json& p = j.at("payload");
    m.payload_file = p.at("file").get<std::string>();
    m.payload_bytes = p.at("bytes").get<std::uint64_t>();
    m.payload_sha256 = p.at("sha256").get<std::string>();
    const std::string expected_file =
        m.mode == DbMode::kPlaintext ? kPlainPayload : kEncryptedPayload;
    if (m.payload_file != expected_file) {
      throw ValidationError("payload file must be " + expected_file);
    }
    if (m.mode == DbMode::kEncrypted) {
      m.key_id = ahe::KeyId::from_hex(j.at("key_id").get<std::string>());
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

Manifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestFile;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

void save_db(const fs::path& dir, const EmbeddingSet& set,
             const codec::ScaleConfig& cfg) {
  for (const EmbeddingVector& v : set.vectors) {
    if (v.values.size() != set.schema.total_dim()) {
      throw ValidationError("vector '" + v.id + "' does not match schema dimension");
    }
  }
  Manifest m;
  m.mode = DbMode::kPlaintext;
  m.schema = set.schema;
  m.scale = cfg;
  m.count = set.vectors.size();
  m.payload_file = kPlainPayload;
  write_db(dir, std::move(m), to_jsonl(set.vectors));
}

void save_db(const fs::path& dir, const EncryptedSet& set) {
  std::string payload;
  for (const EncryptedVector& v : set.vectors) {
    if (v.key_id != set.key_id) {
      throw KeyMismatchError("vector '" + v.id + "' has a foreign key_id");
    }
    json cells = json::array();
    for (const ahe::Ciphertext& c : v.cells) cells.push_back(ahe::to_hex(c.value()));
    json j{{"id", v.id}};
    if (v.creator) j["creator"] = *v.creator;
    j["cells"] = std::move(cells);
    payload += j.dump();
    payload += '\n';
  }
  Manifest m;
  m.mode = DbMode::kEncrypted;
  m.schema = set.schema;
  m.scale = set.scale;
  m.key_id = set.key_id;
  m.count = set.vectors.size();
  m.payload_file = kEncryptedPayload;
  write_db(dir, std::move(m), payload);
}

EmbeddingSet load_plain_db(const fs::path& dir, codec::ScaleConfig* scale_out) {
  std::string payload;
  Manifest m = load_checked_manifest(dir, DbMode::kPlaintext, &payload);
  std::istringstream in(payload);
  EmbeddingSet set = ingest_jsonl(in, m.schema);
  if (set.vectors.size() != m.count) {
    throw ValidationError("manifest declares " + std::to_string(m.count) +
                          " vectors, payload has " + std::to_string(set.vectors.size()));
  }
  for (const EmbeddingVector& v : set.vectors) {
    for (double x : v.values) {
      if (std::fabs(x) > m.scale.max_abs) {
        throw ValidationError("vector '" + v.id + "' exceeds max_abs");
      }
    }
  }
  if (scale_out) *scale_out = m.scale;
  return set;
}

EncryptedSet load_encrypted_db(const fs::path& dir,
                               const std::optional<ahe::KeyId>& expected_key) {
  std::string payload;
  Manifest m = load_checked_manifest(dir, DbMode::kEncrypted, &payload);
  if (expected_key && *expected_key != *m.key_id) {
    throw KeyMismatchError("database key_id " + m.key_id->hex() +
                           " does not match key " + expected_key->hex());
  }
  EncryptedSet set{m.schema, m.scale, *m.key_id, {}};
  std::set<std::string> ids;
  std::istringstream in(payload);
  for_each_line(in, [&](const json& j, std::size_t) {
    EncryptedVector v{parse_id(j), parse_creator(j), {}, set.key_id};
    if (!ids.insert(v.id).second) throw ValidationError("duplicate id '" + v.id + "'");
    const json& cells = j.at("cells");
    if (!cells.is_array() || cells.size() != m.schema.total_dim()) {
      throw ValidationError("vector '" + v.id + "' has " +
                            std::to_string(cells.is_array() ? cells.size() : 0) +
                            " cells, manifest dimension is " +
                            std::to_string(m.schema.total_dim()));
    }
    v.cells.reserve(cells.size());
    for (const json& c : cells) {
      if (!c.is_string()) throw ValidationError("cell must be a hex string");
      v.cells.emplace_back(ahe::from_hex(c.get<std::string>()), set.key_id);
    }
    set.vectors.push_back(std::move(v));
  });
  if (set.vectors.size() != m.count) {
    throw ValidationError("manifest declares " + std::to_string(m.count) +
                          " vectors, payload has " + std::to_string(set.vectors.size()));
  }
  return set;
}

}  // namespace ahems::store
