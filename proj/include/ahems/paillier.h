// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Paillier additively homomorphic encryption with g = n + 1.
//
//   Enc(m; r)  = (1 + m*n) * r^n            mod n^2
//   Dec(c)     = L(c^lambda mod n^2) * mu   mod n,  L(u) = (u - 1) / n
//   Enc(a) (+) Enc(b) = Enc(a) * Enc(b)     mod n^2
//   s (x) Enc(a)      = Enc(a)^s            mod n^2
//
// Plaintexts are signed integers in (-n/2, n/2), carried as residues mod n.

#pragma once

#include <gmpxx.h>

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "ahems/random.h"

namespace ahems::ahe {

// Truncated SHA-256 of the big-endian bytes of n.
struct KeyId {
  std::array<std::uint8_t, 16> bytes{};

  std::string hex() const;
  static KeyId from_hex(std::string_view hex);

  friend auto operator<=>(const KeyId&, const KeyId&) = default;
};

KeyId fingerprint(const mpz_class& n);

class PublicKey {
 public:
  PublicKey() = default;

  // Validates that n is odd and derives n^2, g, the key id and bit length.
  static PublicKey from_modulus(const mpz_class& n);

  const mpz_class& n() const { return n_; }
  const mpz_class& n_squared() const { return n_squared_; }
  const mpz_class& g() const { return g_; }
  // floor(n / 2): largest magnitude representable as a signed plaintext.
  const mpz_class& max_plain() const { return max_plain_; }
  unsigned bits() const { return bits_; }
  const KeyId& key_id() const { return key_id_; }

  // Fixed-width binary size of one ciphertext (a residue mod n^2).
  std::size_t ciphertext_bytes() const { return 2 * ((bits_ + 7) / 8); }

 private:
  mpz_class n_, n_squared_, g_, max_plain_;
  unsigned bits_ = 0;
  KeyId key_id_;
};

class PrivateKey {
 public:
  PrivateKey() = default;
  PrivateKey(mpz_class lambda, mpz_class mu, KeyId key_id)
      : lambda_(std::move(lambda)), mu_(std::move(mu)), key_id_(key_id) {}

  const mpz_class& lambda() const { return lambda_; }
  const mpz_class& mu() const { return mu_; }
  const KeyId& key_id() const { return key_id_; }

 private:
  mpz_class lambda_, mu_;
  KeyId key_id_;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

class Ciphertext {
 public:
  Ciphertext() = default;
  Ciphertext(mpz_class value, KeyId key_id)
      : value_(std::move(value)), key_id_(key_id) {}

  const mpz_class& value() const { return value_; }
  const KeyId& key_id() const { return key_id_; }

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) {
    return a.key_id_ == b.key_id_ && a.value_ == b.value_;
  }

 private:
  mpz_class value_;
  KeyId key_id_;
};

// Key sizes accepted by keygen. 512 is test-only.
bool is_allowed_key_size(unsigned bits);
inline constexpr unsigned kDefaultKeyBits = 2048;
inline constexpr unsigned kTestKeyBits = 512;

KeyPair keygen(unsigned bits, RandomSource& rng);

// Checks mu * L(g^lambda mod n^2) == 1 (mod n) and matching key ids.
bool is_valid_pair(const PublicKey& pk, const PrivateKey& sk);

// Signed plaintext <-> canonical residue in [0, n).
mpz_class to_residue(const PublicKey& pk, const mpz_class& m);
mpz_class from_residue(const PublicKey& pk, const mpz_class& residue);

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng);
mpz_class decrypt(const PrivateKey& sk, const PublicKey& pk,
                  const Ciphertext& c);

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c,
                      const mpz_class& s);
Ciphertext rerandomize(const PublicKey& pk, const Ciphertext& c,
                       RandomSource& rng);

// Trivial encryption of zero (residue 1); the identity for add().
Ciphertext zero(const PublicKey& pk);

// (+)_i scalars[i] (x) cells[i]. Decrypts identically to folding add() over
// scalar_mul() but inverts at most once: positive and negative terms are
// accumulated separately.
Ciphertext linear_combination(const PublicKey& pk,
                              std::span<const Ciphertext> cells,
                              std::span<const std::int64_t> scalars);

void check_key(const PublicKey& pk, const Ciphertext& c);

}  // namespace ahems::ahe
