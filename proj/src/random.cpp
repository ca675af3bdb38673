// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/random.h"

#include <sys/random.h>

#include <cerrno>
#include <stdexcept>
#include <vector>

namespace ahems {

namespace {

mpz_class from_bytes(const std::vector<std::uint8_t>& bytes) {
  mpz_class out;
  mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return out;
}

}  // namespace

mpz_class RandomSource::below(const mpz_class& bound) {
  if (bound <= 0) throw std::invalid_argument("random bound must be positive");
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t nbytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  std::vector<std::uint8_t> buf(nbytes);
  for (;;) {
    fill(buf);
    buf[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
    mpz_class candidate = from_bytes(buf);
    if (candidate < bound) return candidate;
  }
}

mpz_class RandomSource::exact_bits(unsigned bits) {
  if (bits == 0) throw std::invalid_argument("bit count must be positive");
  const std::size_t nbytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  std::vector<std::uint8_t> buf(nbytes);
  fill(buf);
  buf[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
  mpz_class out = from_bytes(buf);
  mpz_setbit(out.get_mpz_t(), bits - 1);
  return out;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    ssize_t got = getrandom(out.data() + done, out.size() - done, 0);
    if (got < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("getrandom failed");
    }
    done += static_cast<std::size_t>(got);
  }
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = engine_();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
}

}  // namespace ahems
