// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/key_io.h"

#include <fstream>

#include "ahems/error.h"

namespace ahems::ahe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string required_string(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field) || !j.at(field).is_string()) {
    throw ValidationError(std::string("missing string field '") + field + "'");
  }
  return j.at(field).get<std::string>();
}

json read_json_file(const fs::path& path, ErrorKind missing_kind) {
  std::ifstream in(path);
  if (!in) {
    throw Error(missing_kind, "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& body, bool force) {
  if (!force && fs::exists(path)) {
    throw IoError(path.string() + " exists; pass --force to overwrite");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string to_hex(const mpz_class& v) { return v.get_str(16); }

mpz_class from_hex(std::string_view hex) {
  if (hex.empty()) throw ValidationError("empty hex integer");
  for (char c : hex) {
    bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
              (c >= 'A' && c <= 'F');
    if (!ok) throw ValidationError("malformed hex integer");
  }
  return mpz_class(std::string(hex), 16);
}

json to_json(const PublicKey& pk) {
  return json{{"n", to_hex(pk.n())},
              {"g", to_hex(pk.g())},
              {"key_id", pk.key_id().hex()},
              {"bits", pk.bits()}};
}

PublicKey public_key_from_json(const json& j) {
  PublicKey pk = PublicKey::from_modulus(from_hex(required_string(j, "n")));
  if (j.contains("g") && from_hex(required_string(j, "g")) != pk.g()) {
    throw ValidationError("public key g must equal n + 1");
  }
  if (j.contains("key_id") &&
      KeyId::from_hex(required_string(j, "key_id")) != pk.key_id()) {
    throw KeyMismatchError("public key key_id does not match its modulus");
  }
  if (j.contains("bits") &&
      (!j.at("bits").is_number_unsigned() ||
       j.at("bits").get<unsigned>() != pk.bits())) {
    throw ValidationError("public key bit length does not match its modulus");
  }
  return pk;
}

json to_json(const PrivateKey& sk, unsigned bits) {
  return json{{"lambda", to_hex(sk.lambda())},
              {"mu", to_hex(sk.mu())},
              {"key_id", sk.key_id().hex()},
              {"bits", bits}};
}

PrivateKey private_key_from_json(const json& j, const PublicKey& pk) {
  PrivateKey sk(from_hex(required_string(j, "lambda")),
                from_hex(required_string(j, "mu")),
                KeyId::from_hex(required_string(j, "key_id")));
  if (sk.key_id() != pk.key_id()) {
    throw KeyMismatchError("private key " + sk.key_id().hex() +
                           " does not belong to public key " +
                           pk.key_id().hex());
  }
  if (!is_valid_pair(pk, sk)) {
    throw ValidationError("private key fails mu * L(g^lambda) == 1 (mod n)");
  }
  return sk;
}

json to_json(const Ciphertext& c) {
  return json{{"value", to_hex(c.value())}, {"key_id", c.key_id().hex()}};
}

Ciphertext ciphertext_from_json(const json& j) {
  return Ciphertext(from_hex(required_string(j, "value")),
                    KeyId::from_hex(required_string(j, "key_id")));
}

void save_keypair(const fs::path& dir, const KeyPair& kp, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path pub = dir / kPublicKeyFile, priv = dir / kPrivateKeyFile;
  if (!force && (fs::exists(pub) || fs::exists(priv))) {
    throw IoError("key files exist in " + dir.string() +
                  "; pass --force to overwrite");
  }
  write_file(pub, to_json(kp.pub).dump(2), true);
  write_file(priv, to_json(kp.priv, kp.pub.bits()).dump(2), true);
  fs::permissions(priv, fs::perms::owner_read | fs::perms::owner_write,
                  fs::perm_options::replace, ec);
}

PublicKey load_public_key(const fs::path& dir) {
  return public_key_from_json(
      read_json_file(dir / kPublicKeyFile, ErrorKind::kMissingKey));
}

KeyPair load_keypair(const fs::path& dir) {
  PublicKey pk = load_public_key(dir);
  PrivateKey sk = private_key_from_json(
      read_json_file(dir / kPrivateKeyFile, ErrorKind::kMissingKey), pk);
  return KeyPair{std::move(pk), std::move(sk)};
}

}  // namespace ahems::ahe
