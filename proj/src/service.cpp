// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/service.h"

#include <charconv>

#include "ahems/error.h"
#include "ahems/key_io.h"
#include "ahems/random.h"
#include "ahems/store.h"
#include "httplib.h"

namespace ahems::service {

namespace {

using nlohmann::json;

// Raised for malformed request bodies; mapped to 400.
struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

HttpReply error_reply(int status, const std::string& kind, const std::string& message) {
  return {status, json{{"error", kind}, {"message", message}}};
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw BadRequest(std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kBudget: return "budget";
    case ErrorKind::kKeyMismatch: return "key_mismatch";
    case ErrorKind::kMissingKey: return "missing_key";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kIntegrity: return "integrity";
  }
  return "error";
}

ahe::Ciphertext parse_cell(const json& cell, const ahe::PublicKey& pk) {
  if (!cell.is_string()) throw BadRequest("ciphertext cells must be hex strings");
  mpz_class v;
  try {
    v = ahe::from_hex(cell.get<std::string>());
  } catch (const std::exception&) {
    throw BadRequest("ciphertext cell is not valid hex");
  }
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), v.get_mpz_t(), pk.n().get_mpz_t());
  if (v <= 0 || v >= pk.n_squared() || g != 1) {
    throw BadRequest("ciphertext cell is not a unit modulo n^2");
  }
  return ahe::Ciphertext(std::move(v), pk.key_id());
}

}  // namespace

SearchService::SearchService(EmbeddingSet db, codec::ScaleConfig cfg, ServiceOptions options)
    : db_(std::move(db)), cfg_(cfg), options_(options) {
  cfg_.validate();
}

json SearchService::manifest() const {
  return {{"schema", store::to_json(db_.schema)},
          {"dimension", db_.schema.total_dim()},
          {"scale", store::to_json(cfg_)},
          {"count", db_.vectors.size()},
          {"min_key_bits", options_.allow_insecure_keys ? ahe::kTestKeyBits
                                                        : ahe::kDefaultKeyBits},
          {"rerandomize", options_.rerandomize}};
}

HttpReply SearchService::search(const std::string& body) const {
  ahe::PublicKey pk;
  EncryptedVector query;
  engine::ScoreKind kind = engine::ScoreKind::kPlain;
  std::optional<WeightVector> weights;
  try {
    const json req = json::parse(body);
    try {
      pk = ahe::public_key_from_json(field(req, "public_key"));
    } catch (const Error& e) {
      throw BadRequest(std::string("invalid public key: ") + e.what());
    } catch (const json::exception& e) {
      throw BadRequest("invalid public key");
    }
    const json& q = field(req, "query");
    const json& cells = field(q, "cells");
    if (!cells.is_array()) throw BadRequest("query cells must be an array");
    query.id = q.contains("id") && q["id"].is_string() ? q["id"].get<std::string>() : "query";
    query.key_id = pk.key_id();
    query.cells.reserve(cells.size());
    for (const auto& c : cells) query.cells.push_back(parse_cell(c, pk));
    if (req.contains("kind")) {
      if (!req["kind"].is_string()) throw BadRequest("kind must be a string");
      try {
        kind = engine::parse_kind(req["kind"].get<std::string>());
      } catch (const Error& e) {
        throw BadRequest(e.what());
      }
    }
    if (req.contains("weights") && !req["weights"].is_null()) {
      if (!req["weights"].is_array()) throw BadRequest("weights must be an array");
      weights.emplace();
      for (const auto& w : req["weights"]) {
        if (!w.is_number()) throw BadRequest("weights must be numbers");
        weights->weights.push_back(w.get<double>());
      }
    }
  } catch (const BadRequest& e) {
    return error_reply(400, "bad_request", e.what());
  } catch (const json::exception& e) {
    return error_reply(400, "bad_request", std::string("malformed JSON body: ") + e.what());
  }

  try {
    if (!ahe::is_allowed_key_size(pk.bits()) ||
        (pk.bits() < ahe::kDefaultKeyBits && !options_.allow_insecure_keys)) {
      return error_reply(422, "key_size",
                         "client key of " + std::to_string(pk.bits()) +
                             " bits is not accepted by this server");
    }
    const std::size_t d = db_.schema.total_dim();
    if (query.cells.size() != d) {
      return error_reply(422, "validation",
                         "query has " + std::to_string(query.cells.size()) +
                             " cells, expected d=" + std::to_string(d));
    }
    if (kind == engine::ScoreKind::kWeighted) {
      if (!weights) return error_reply(422, "validation", "weighted search needs weights");
      if (weights->weights.size() != db_.schema.size()) {
        return error_reply(422, "validation",
                           "expected " + std::to_string(db_.schema.size()) + " weights, got " +
                               std::to_string(weights->weights.size()));
      }
      for (double w : weights->weights) (void)codec::encode_weight(w, cfg_);
    }
    engine::Evaluator evaluator(pk, cfg_);
    evaluator.require_budget(d);

    SystemRandom rng;
    json scores = json::array();
    for (const auto& y : db_.vectors) {
      ahe::Ciphertext c = evaluator.score(query, y, db_.schema, kind,
                                         weights ? &*weights : nullptr);
      if (options_.rerandomize) c = ahe::rerandomize(pk, c, rng);
      json row{{"id", y.id}, {"value", ahe::to_hex(c.value())}};
      if (y.creator) row["creator"] = *y.creator;
      scores.push_back(std::move(row));
    }
    return {200, json{{"key_id", pk.key_id().hex()},
                      {"kind", engine::to_string(kind)},
                      {"count", db_.vectors.size()},
                      {"scores", std::move(scores)}}};
  } catch (const Error& e) {
    const int status = e.kind() == ErrorKind::kIo ? 500 : 422;
    return error_reply(status, kind_name(e.kind()), e.what());
  }
}

BindAddress parse_bind(const std::string& text) {
  BindAddress out;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw UsageError("bind address must be host:port");
  if (colon > 0) out.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  int value = -1;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value < 0 || value > 65535) {
    throw UsageError("invalid port in bind address '" + text + "'");
  }
  out.port = value;
  return out;
}

Server::Server(const SearchService& service)
    : service_(service), http_(std::make_unique<httplib::Server>()) {
  http_->set_payload_max_length(256u << 20);
  http_->Get("/v1/manifest", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_.manifest().dump(), "application/json");
  });
  http_->Post("/v1/search", [this](const httplib::Request& req, httplib::Response& res) {
    HttpReply reply = service_.search(req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
}

Server::~Server() { stop(); }

void Server::bind(const BindAddress& addr) {
  if (addr.port == 0) {
    port_ = http_->bind_to_any_port(addr.host);
    if (port_ < 0) throw IoError("cannot bind " + addr.host);
  } else {
    if (!http_->bind_to_port(addr.host, addr.port)) {
      throw IoError("cannot bind " + addr.host + ":" + std::to_string(addr.port));
    }
    port_ = addr.port;
  }
}

int Server::start(const BindAddress& addr) {
  bind(addr);
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port_;
}

void Server::run(const BindAddress& addr) {
  bind(addr);
  http_->listen_after_bind();
}

void Server::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

// ---- client ----------------------------------------------------------------

json make_search_request(const ahe::PublicKey& pk, const EncryptedVector& query,
                         engine::ScoreKind kind, const WeightVector* weights) {
  json cells = json::array();
  for (const auto& c : query.cells) cells.push_back(ahe::to_hex(c.value()));
  json req{{"public_key", ahe::to_json(pk)},
           {"query", {{"id", query.id}, {"cells", std::move(cells)}}},
           {"kind", engine::to_string(kind)}};
  if (weights) req["weights"] = weights->weights;
  return req;
}

SearchResponse parse_search_response(const json& j, const ahe::PublicKey& pk) {
  try {
    if (j.at("key_id").get<std::string>() != pk.key_id().hex()) {
      throw KeyMismatchError("response was computed under a different public key");
    }
    SearchResponse out;
    out.kind = engine::parse_kind(j.at("kind").get<std::string>());
    for (const auto& row : j.at("scores")) {
      EncryptedScore s;
      s.id = row.at("id").get<std::string>();
      if (row.contains("creator")) s.creator = row["creator"].get<std::string>();
      s.value = ahe::Ciphertext(ahe::from_hex(row.at("value").get<std::string>()), pk.key_id());
      out.scores.push_back(std::move(s));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed search response: ") + e.what());
  }
}

engine::RetrievalResult open_and_rank(const SearchResponse& response,
                                      const engine::Opener& opener, std::size_t k_top,
                                      const std::string& query_id) {
  std::vector<engine::SimilarityScore> scores;
  scores.reserve(response.scores.size());
  for (const auto& s : response.scores) {
    scores.push_back(opener.open(s.value, response.kind, engine::Setting::kEncryptedQuery,
                                 query_id, s.id));
  }
  return engine::rank(std::move(scores), k_top);
}

Client::Client(std::string url) : url_(std::move(url)) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
}

json Client::call(const std::string& method, const std::string& path,
                  const std::string& body) const {
  httplib::Client cli(url_);
  cli.set_read_timeout(600, 0);
  cli.set_write_timeout(600, 0);
  httplib::Result res = method == "GET" ? cli.Get(path)
                                        : cli.Post(path, body, "application/json");
  if (!res) {
    throw IoError("request to " + url_ + path + " failed: " + httplib::to_string(res.error()));
  }
  json j;
  try {
    j = json::parse(res->body);
  } catch (const json::exception&) {
    throw IoError("non-JSON reply from " + url_ + path);
  }
  if (res->status != 200) {
    const std::string kind = j.value("error", "error");
    const std::string msg = "server returned " + std::to_string(res->status) + " (" + kind +
                            "): " + j.value("message", "");
    if (kind == "budget") throw BudgetError(msg);
    if (res->status == 400 || res->status == 422) throw ValidationError(msg);
    throw IoError(msg);
  }
  return j;
}

json Client::manifest() const { return call("GET", "/v1/manifest", ""); }

SearchResponse Client::search(const ahe::PublicKey& pk, const EncryptedVector& query,
                              engine::ScoreKind kind, const WeightVector* weights) const {
  const json req = make_search_request(pk, query, kind, weights);
  return parse_search_response(call("POST", "/v1/search", req.dump()), pk);
}

}  // namespace ahems::service
