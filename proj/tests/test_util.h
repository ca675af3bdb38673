// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ahems/embedding.h"
#include "ahems/paillier.h"
#include "ahems/random.h"

namespace ahems::testing {

// 512-bit test key pair, generated once per process from a fixed seed.
inline const ahe::KeyPair& test_keys() {
  static const ahe::KeyPair keys = [] {
    SeededRandom rng(0x5EED);
    return ahe::keygen(ahe::kTestKeyBits, rng);
  }();
  return keys;
}

inline std::vector<double> random_values(std::mt19937_64& gen, std::size_t d,
                                         double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(d);
  for (double& x : out) x = dist(gen);
  return out;
}

inline EmbeddingVector random_vector(std::mt19937_64& gen, std::size_t d,
                                     std::string id = "v") {
  return EmbeddingVector{std::move(id), std::nullopt, random_values(gen, d)};
}

}  // namespace ahems::testing
