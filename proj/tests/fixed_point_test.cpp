// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/fixed_point.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ahems/error.h"

namespace ahems::codec {
namespace {

ScaleConfig with_bits(int f) {
  ScaleConfig cfg;
  cfg.frac_bits = f;
  return cfg;
}

// Exact integer dot product of encodes, then decoded; independent of the
// encrypted path.
double quantized_dot(const std::vector<double>& x, const std::vector<double>& y,
                     const ScaleConfig& cfg) {
  mpz_class acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += mpz_class(encode(x[i], cfg)) * mpz_class(encode(y[i], cfg));
  }
  return decode_product(acc, cfg, false);
}

long double exact_dot(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += static_cast<long double>(x[i]) * static_cast<long double>(y[i]);
  }
  return s;
}

TEST(EncodeTest, Examples) {
  EXPECT_EQ(encode(1.5, with_bits(16)), 98304);
  EXPECT_EQ(encode(0.0, with_bits(16)), 0);
  EXPECT_EQ(encode(-0.25, with_bits(4)), -4);
}

TEST(EncodeTest, RoundsHalfToEven) {
  ScaleConfig cfg = with_bits(4);
  const double ulp = 1.0 / 16;
  EXPECT_EQ(encode(0.5 * ulp, cfg), 0);
  EXPECT_EQ(encode(1.5 * ulp, cfg), 2);
  EXPECT_EQ(encode(2.5 * ulp, cfg), 2);
  EXPECT_EQ(encode(-2.5 * ulp, cfg), -2);
  EXPECT_EQ(encode(3.5 * ulp, cfg), 4);
}

TEST(EncodeTest, RejectsOutOfRange) {
  ScaleConfig cfg;
  EXPECT_THROW(encode(4.0001, cfg), Error);
  EXPECT_THROW(encode(-5.0, cfg), Error);
  EXPECT_THROW(encode(std::nan(""), cfg), Error);
  EXPECT_THROW(encode(INFINITY, cfg), Error);
  EXPECT_EQ(encode(4.0, cfg), 4 * 65536);
  EXPECT_THROW(encode_weight(5.0, cfg), Error);
  EXPECT_EQ(encode_weight(1.0, cfg), 256);
}

TEST(EncodeTest, ConfigValidation) {
  ScaleConfig cfg;
  cfg.frac_bits = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ScaleConfig{};
  cfg.max_abs = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ScaleConfig{};
  cfg.frac_bits = 60;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(EncodeTest, OddAndMonotone) {
  ScaleConfig cfg;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (int i = 0; i < 10000; ++i) {
    double a = dist(gen), b = dist(gen);
    EXPECT_EQ(encode(-a, cfg), -encode(a, cfg));
    if (a <= b) EXPECT_LE(encode(a, cfg), encode(b, cfg));
    // Exact half-way points keep the symmetry too.
    double half = (std::floor(a * 65536) + 0.5) / 65536;
    if (std::fabs(half) <= 4.0) EXPECT_EQ(encode(-half, cfg), -encode(half, cfg));
  }
}

TEST(DecodeProductTest, Examples) {
  ScaleConfig cfg;
  const mpz_class delta2 = mpz_class(65536) * 65536;
  EXPECT_DOUBLE_EQ(decode_product(mpz_class(98304) * 98304, cfg, false), 2.25);
  EXPECT_DOUBLE_EQ(decode_product(delta2 * 9 / 4, cfg, false), 2.25);
  EXPECT_EQ(decode_product(0, cfg, false), 0.0);
  EXPECT_DOUBLE_EQ(decode_product(delta2 * 256 * 19, cfg, true), 19.0);
  EXPECT_DOUBLE_EQ(decode_product(-delta2 * 3, cfg, false), -3.0);
}

TEST(DecodeProductTest, Dimension8ErrorBound) {
  ScaleConfig cfg;
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> dist(-cfg.max_abs, cfg.max_abs);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(8), y(8);
    for (double& v : x) v = dist(gen);
    for (double& v : y) v = dist(gen);
    EXPECT_LE(std::fabs(quantized_dot(x, y, cfg) - static_cast<double>(exact_dot(x, y))),
              product_error_bound(cfg, 8));
  }
}

TEST(DecodeProductTest, ErrorBoundAcrossPaperDimensions) {
  ScaleConfig cfg;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-cfg.max_abs, cfg.max_abs);
  for (std::size_t d : {128u, 256u, 512u, 1024u}) {
    const double bound = product_error_bound(cfg, d);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(d), y(d);
      for (double& v : x) v = dist(gen);
      for (double& v : y) v = dist(gen);
      ASSERT_LE(std::fabs(quantized_dot(x, y, cfg) -
                          static_cast<double>(exact_dot(x, y))),
                bound)
          << "d=" << d << " trial=" << trial;
    }
  }
}

TEST(DecodeProductTest, ExactOnGridValues) {
  ScaleConfig cfg;
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> dist(-4 * 65536, 4 * 65536);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(64), y(64);
    for (double& v : x) v = std::ldexp(dist(gen), -16);
    for (double& v : y) v = std::ldexp(dist(gen), -16);
    // Grid products are exact in long double (34-bit integers times 2^-32,
    // sums below 2^64).
    EXPECT_EQ(quantized_dot(x, y, cfg), static_cast<double>(exact_dot(x, y)));
  }
}

TEST(OverflowBudgetTest, Examples) {
  ScaleConfig cfg;  // f = 16, f_w = 8, max_abs = 4
  mpz_class n2048 = (mpz_class(1) << 2047) + 1;
  EXPECT_TRUE(overflow_budget(cfg, 1024, n2048).holds);
  EXPECT_TRUE(overflow_budget(cfg, 0, mpz_class(3)).holds);

  // Per-dimension worst case (4*2^16)^2 * (4*2^8) = 2^46; with n = 2^64 the
  // inequality d * 2^46 < 2^63 holds for d < 2^17.
  mpz_class toy = mpz_class(1) << 64;
  EXPECT_TRUE(overflow_budget(cfg, 1024, toy).holds);
  EXPECT_EQ(overflow_budget(cfg, 1024, toy).max_dimension, 131071);
  EXPECT_TRUE(overflow_budget(cfg, 131071, toy).holds);
  EXPECT_FALSE(overflow_budget(cfg, 131072, toy).holds);

  // Doubling max_abs multiplies the per-dimension cost by 8.
  ScaleConfig wide = cfg;
  wide.max_abs = 8.0;
  EXPECT_EQ(overflow_budget(wide, 0, toy).max_dimension, 16383);
  EXPECT_FALSE(overflow_budget(wide, 16384, toy).holds);
}

TEST(OverflowBudgetTest, MaxDimensionIsTight) {
  ScaleConfig cfg;
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    mpz_class n = (mpz_class(1) << (60 + trial % 40)) + static_cast<unsigned long>(gen() >> 8);
    BudgetCheck b = overflow_budget(cfg, 0, n);
    const mpz_class per_dim = mpz_class(1) << 46;
    // Brute-force inequality at the boundary.
    EXPECT_TRUE(b.max_dimension * per_dim * 2 < n);
    EXPECT_FALSE((b.max_dimension + 1) * per_dim * 2 < n);
  }
}

}  // namespace
}  // namespace ahems::codec
