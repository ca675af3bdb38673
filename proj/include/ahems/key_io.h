// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// JSON forms for key material and ciphertexts. Big integers are lowercase
// hex without prefix.
//
//   public:     {"n", "g", "key_id", "bits"}
//   private:    {"lambda", "mu", "key_id", "bits"}
//   ciphertext: {"value", "key_id"}

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ahems/paillier.h"
#include "json.hpp"

namespace ahems::ahe {

std::string to_hex(const mpz_class& v);
mpz_class from_hex(std::string_view hex);

nlohmann::json to_json(const PublicKey& pk);
PublicKey public_key_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PrivateKey& sk, unsigned bits);
// Verifies the private key matches `pk` before returning it.
PrivateKey private_key_from_json(const nlohmann::json& j, const PublicKey& pk);

nlohmann::json to_json(const Ciphertext& c);
Ciphertext ciphertext_from_json(const nlohmann::json& j);

// Key directory layout: <dir>/public.json, <dir>/private.json.
inline constexpr const char* kPublicKeyFile = "public.json";
inline constexpr const char* kPrivateKeyFile = "private.json";

void save_keypair(const std::filesystem::path& dir, const KeyPair& kp,
                  bool force);
PublicKey load_public_key(const std::filesystem::path& dir);
KeyPair load_keypair(const std::filesystem::path& dir);

}  // namespace ahems::ahe
