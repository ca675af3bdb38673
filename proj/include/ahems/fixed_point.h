// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

// Fixed-point mapping between real embedding coordinates and plaintext
// integers. Coordinates carry scale 2^frac_bits, weights 2^weight_frac_bits;
// an inner product of encodes carries the square of the coordinate scale,
// and a weighted one additionally the weight scale.

#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>

namespace ahems::codec {

struct ScaleConfig {
  int frac_bits = 16;
  int weight_frac_bits = 8;
  double max_abs = 4.0;

  // Throws ValidationError unless frac_bits >= 1, weight_frac_bits >= 0 and
  // every encode fits exactly in a double mantissa.
  void validate() const;

  friend bool operator==(const ScaleConfig&, const ScaleConfig&) = default;
};

// round-half-to-even(v * 2^frac_bits). Throws on |v| > max_abs or non-finite v.
std::int64_t encode(double v, const ScaleConfig& cfg);
std::int64_t encode_weight(double w, const ScaleConfig& cfg);

double decode(std::int64_t m, const ScaleConfig& cfg);

// m / 2^(2f) unweighted, m / 2^(2f + f_w) weighted.
double decode_product(const mpz_class& m, const ScaleConfig& cfg, bool weighted);

struct BudgetCheck {
  bool holds = false;
  // Largest dimension d with d * M^2 * M_w < n/2 (M, M_w = encoded max_abs).
  mpz_class max_dimension;
};

BudgetCheck overflow_budget(const ScaleConfig& cfg, std::size_t dimension,
                            const mpz_class& modulus);

// Worst-case |decode_product(sum encode(x_i) encode(y_i)) - x.y| over
// coordinates bounded by max_abs.
double product_error_bound(const ScaleConfig& cfg, std::size_t dimension);

}  // namespace ahems::codec
