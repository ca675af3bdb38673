// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP service for the encrypted-query setting.
//
// The service holds a plaintext database and never a private key. Clients
// send their public key and an encrypted query; the service returns one
// encrypted score per database vector. Decryption and ranking happen on the
// client.
//
//   POST /v1/search
//     {"public_key": {...}, "query": {"id": str, "cells": [hex...]},
//      "kind": "plain"|"blocked"|"weighted", "weights": [w...]?}
//     -> {"key_id", "kind", "count", "scores": [{"id", "creator"?, "value": hex}]}
//   GET /v1/manifest
//     -> {"schema", "dimension", "scale", "count", "min_key_bits", "rerandomize"}
//
// Errors are {"error": kind, "message": str}; malformed bodies are 400,
// dimension, budget and key-size problems 422.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ahems/embedding.h"
#include "ahems/fixed_point.h"
#include "ahems/paillier.h"
#include "ahems/similarity.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace ahems::service {

struct ServiceOptions {
  bool allow_insecure_keys = false;  // accept client keys below 2048 bits
  bool rerandomize = true;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class SearchService {
 public:
  SearchService(EmbeddingSet db, codec::ScaleConfig cfg, ServiceOptions options = {});

  HttpReply search(const std::string& body) const;
  nlohmann::json manifest() const;

  const EmbeddingSet& database() const { return db_; }

 private:
  EmbeddingSet db_;
  codec::ScaleConfig cfg_;
  ServiceOptions options_;
};

// Parses "host:port" (or ":port"); port 0 picks a free port.
struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};
BindAddress parse_bind(const std::string& text);

class Server {
 public:
  explicit Server(const SearchService& service);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start(const BindAddress& bind);
  // Binds and serves on the calling thread until stop().
  void run(const BindAddress& bind);
  void stop();

 private:
  void bind(const BindAddress& bind);

  const SearchService& service_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = 0;
};

// ---- client side -----------------------------------------------------------

nlohmann::json make_search_request(const ahe::PublicKey& pk, const EncryptedVector& query,
                                   engine::ScoreKind kind, const WeightVector* weights);

struct EncryptedScore {
  std::string id;
  std::optional<std::string> creator;
  ahe::Ciphertext value;
};

struct SearchResponse {
  engine::ScoreKind kind = engine::ScoreKind::kPlain;
  std::vector<EncryptedScore> scores;
};

SearchResponse parse_search_response(const nlohmann::json& j, const ahe::PublicKey& pk);

// Decrypts every score and ranks them.
engine::RetrievalResult open_and_rank(const SearchResponse& response,
                                      const engine::Opener& opener, std::size_t k_top,
                                      const std::string& query_id);

class Client {
 public:
  // `url` like "http://127.0.0.1:8080".
  explicit Client(std::string url);

  nlohmann::json manifest() const;
  SearchResponse search(const ahe::PublicKey& pk, const EncryptedVector& query,
                        engine::ScoreKind kind, const WeightVector* weights) const;

 private:
  nlohmann::json call(const std::string& method, const std::string& path,
                      const std::string& body) const;
  std::string url_;
};

}  // namespace ahems::service
