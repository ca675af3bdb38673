// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/paillier.h"

#include <openssl/evp.h>

#include <climits>
#include <stdexcept>
#include <vector>

#include "ahems/error.h"

namespace ahems::ahe {

namespace {

// GMP's test has error <= 4^-reps; 40 rounds gives < 2^-80.
constexpr int kPrimalityReps = 40;

mpz_class random_prime(unsigned bits, RandomSource& rng) {
  for (;;) {
    mpz_class candidate = rng.exact_bits(bits);
    // Top two bits set so the product of two such primes has 2*bits bits.
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    if (mpz_probab_prime_p(candidate.get_mpz_t(), kPrimalityReps) > 0) {
      return candidate;
    }
  }
}

// L(u) = (u - 1) / n
mpz_class ell(const mpz_class& u, const mpz_class& n) {
  mpz_class out = u - 1;
  mpz_divexact(out.get_mpz_t(), out.get_mpz_t(), n.get_mpz_t());
  return out;
}

mpz_class random_unit(const PublicKey& pk, RandomSource& rng) {
  for (;;) {
    mpz_class r = rng.below(pk.n());
    if (r == 0) continue;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n().get_mpz_t());
    if (g == 1) return r;
  }
}

// r^n mod n^2. n is public but r is secret, so use the side-channel silent
// exponentiation.
mpz_class blinding_factor(const PublicKey& pk, RandomSource& rng) {
  mpz_class r = random_unit(pk, rng);
  mpz_class out;
  mpz_powm_sec(out.get_mpz_t(), r.get_mpz_t(), pk.n().get_mpz_t(),
               pk.n_squared().get_mpz_t());
  return out;
}

void mulmod(mpz_class& acc, const mpz_class& x, const mpz_class& mod) {
  acc *= x;
  mpz_mod(acc.get_mpz_t(), acc.get_mpz_t(), mod.get_mpz_t());
}

}  // namespace

std::string KeyId::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

KeyId KeyId::from_hex(std::string_view hex) {
  if (hex.size() != 32) throw ValidationError("key_id must be 32 hex digits");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ValidationError("key_id is not hex");
  };
  KeyId id;
  for (std::size_t i = 0; i < id.bytes.size(); ++i) {
    id.bytes[i] =
        static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return id;
}

KeyId fingerprint(const mpz_class& n) {
  std::vector<std::uint8_t> raw((mpz_sizeinbase(n.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(raw.data(), &written, 1, 1, 1, 0, n.get_mpz_t());
  raw.resize(written);

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(raw.data(), raw.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  KeyId id;
  std::copy_n(digest, id.bytes.size(), id.bytes.begin());
  return id;
}

PublicKey PublicKey::from_modulus(const mpz_class& n) {
  if (n < 3 || mpz_even_p(n.get_mpz_t())) {
    throw ValidationError("public modulus must be an odd integer > 2");
  }
  PublicKey pk;
  pk.n_ = n;
  pk.n_squared_ = n * n;
  pk.g_ = n + 1;
  pk.max_plain_ = n / 2;
  pk.bits_ = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
  pk.key_id_ = fingerprint(n);
  return pk;
}

bool is_allowed_key_size(unsigned bits) {
  return bits == 512 || bits == 1024 || bits == 2048 || bits == 3072;
}

KeyPair keygen(unsigned bits, RandomSource& rng) {
  if (!is_allowed_key_size(bits)) {
    throw UsageError("key size must be one of 512, 1024, 2048, 3072; got " +
                     std::to_string(bits));
  }
  for (;;) {
    mpz_class p = random_prime(bits / 2, rng);
    mpz_class q = random_prime(bits / 2, rng);
    if (p == q) continue;
    mpz_class n = p * q;
    mpz_class pm1 = p - 1, qm1 = q - 1, phi = pm1 * qm1, g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1) continue;

    PublicKey pk = PublicKey::from_modulus(n);
    if (pk.bits() != bits) continue;

    mpz_class lambda;
    mpz_lcm(lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
    mpz_class u;
    mpz_powm(u.get_mpz_t(), pk.g().get_mpz_t(), lambda.get_mpz_t(),
             pk.n_squared().get_mpz_t());
    mpz_class mu;
    mpz_class l = ell(u, n);
    if (mpz_invert(mu.get_mpz_t(), l.get_mpz_t(), n.get_mpz_t()) == 0) continue;
    return KeyPair{pk, PrivateKey(lambda, mu, pk.key_id())};
  }
}

bool is_valid_pair(const PublicKey& pk, const PrivateKey& sk) {
  if (pk.key_id() != sk.key_id()) return false;
  if (sk.lambda() <= 0 || sk.mu() <= 0 || sk.mu() >= pk.n()) return false;
  mpz_class u;
  mpz_powm(u.get_mpz_t(), pk.g().get_mpz_t(), sk.lambda().get_mpz_t(),
           pk.n_squared().get_mpz_t());
  mpz_class check = ell(u, pk.n()) * sk.mu();
  mpz_mod(check.get_mpz_t(), check.get_mpz_t(), pk.n().get_mpz_t());
  return check == 1;
}

mpz_class to_residue(const PublicKey& pk, const mpz_class& m) {
  if (abs(m) > pk.max_plain()) {
    throw std::invalid_argument("plaintext outside (-n/2, n/2)");
  }
  mpz_class r;
  mpz_mod(r.get_mpz_t(), m.get_mpz_t(), pk.n().get_mpz_t());
  return r;
}

mpz_class from_residue(const PublicKey& pk, const mpz_class& residue) {
  if (residue > pk.max_plain()) return residue - pk.n();
  return residue;
}

void check_key(const PublicKey& pk, const Ciphertext& c) {
  if (c.key_id() != pk.key_id()) {
    throw KeyMismatchError("ciphertext key_id " + c.key_id().hex() +
                           " does not match key " + pk.key_id().hex());
  }
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng) {
  // g^m = (1 + n)^m = 1 + m*n (mod n^2)
  mpz_class c = to_residue(pk, m) * pk.n() + 1;
  mulmod(c, blinding_factor(pk, rng), pk.n_squared());
  return Ciphertext(std::move(c), pk.key_id());
}

mpz_class decrypt(const PrivateKey& sk, const PublicKey& pk,
                  const Ciphertext& c) {
  check_key(pk, c);
  if (sk.key_id() != pk.key_id()) {
    throw KeyMismatchError("private key does not belong to public key " +
                           pk.key_id().hex());
  }
  mpz_class u;
  mpz_powm_sec(u.get_mpz_t(), c.value().get_mpz_t(), sk.lambda().get_mpz_t(),
               pk.n_squared().get_mpz_t());
  mpz_class m = ell(u, pk.n()) * sk.mu();
  mpz_mod(m.get_mpz_t(), m.get_mpz_t(), pk.n().get_mpz_t());
  return from_residue(pk, m);
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  check_key(pk, a);
  check_key(pk, b);
  mpz_class c = a.value();
  mulmod(c, b.value(), pk.n_squared());
  return Ciphertext(std::move(c), pk.key_id());
}

Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c,
                      const mpz_class& s) {
  check_key(pk, c);
  mpz_class base = c.value();
  if (s < 0) {
    if (mpz_invert(base.get_mpz_t(), base.get_mpz_t(),
                   pk.n_squared().get_mpz_t()) == 0) {
      throw std::invalid_argument(
          "ciphertext not invertible mod n^2; re-encrypt with fresh randomness");
    }
  }
  // The scalar is a plaintext operand of the evaluator, not key material.
  mpz_class e = abs(s), out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(),
           pk.n_squared().get_mpz_t());
  return Ciphertext(std::move(out), pk.key_id());
}

Ciphertext rerandomize(const PublicKey& pk, const Ciphertext& c,
                       RandomSource& rng) {
  check_key(pk, c);
  mpz_class out = c.value();
  mulmod(out, blinding_factor(pk, rng), pk.n_squared());
  return Ciphertext(std::move(out), pk.key_id());
}

Ciphertext zero(const PublicKey& pk) { return Ciphertext(1, pk.key_id()); }

Ciphertext linear_combination(const PublicKey& pk,
                              std::span<const Ciphertext> cells,
                              std::span<const std::int64_t> scalars) {
  if (cells.size() != scalars.size()) {
    throw std::invalid_argument("cells and scalars differ in length");
  }
  const mpz_class& mod = pk.n_squared();
  mpz_class pos = 1, neg = 1, term;
  bool any_neg = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    check_key(pk, cells[i]);
    const std::int64_t s = scalars[i];
    if (s == 0) continue;
    const unsigned long e =
        s > 0 ? static_cast<unsigned long>(s)
              : static_cast<unsigned long>(-(s + 1)) + 1UL;
    mpz_powm_ui(term.get_mpz_t(), cells[i].value().get_mpz_t(), e,
                mod.get_mpz_t());
    if (s > 0) {
      mulmod(pos, term, mod);
    } else {
      mulmod(neg, term, mod);
      any_neg = true;
    }
  }
  if (any_neg) {
    if (mpz_invert(neg.get_mpz_t(), neg.get_mpz_t(), mod.get_mpz_t()) == 0) {
      throw std::invalid_argument(
          "ciphertext not invertible mod n^2; re-encrypt with fresh randomness");
    }
    mulmod(pos, neg, mod);
  }
  return Ciphertext(std::move(pos), pk.key_id());
}

}  // namespace ahems::ahe
