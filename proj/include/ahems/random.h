// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <span>

namespace ahems {

// Source of uniformly random bytes. Instances are stateful and must stay
// confined to one thread.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  virtual void fill(std::span<std::uint8_t> out) = 0;

  // Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
  mpz_class below(const mpz_class& bound);

  // Uniform integer with exactly `bits` bits (top bit set).
  mpz_class exact_bits(unsigned bits);
};

// Operating-system entropy (getrandom). Required for production keys and
// encryption.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Deterministic test-mode stream. Output is reproducible across platforms
// for a given seed (std::mt19937_64 is fully specified by the standard).
// Never use for real key material.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}

  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mt19937_64 engine_;
};

}  // namespace ahems
