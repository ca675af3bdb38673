// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/fixed_point.h"

#include <cfenv>
#include <cmath>
#include <string>

#include "ahems/error.h"

namespace ahems::codec {

namespace {

std::int64_t quantize(double v, int bits, double max_abs, const char* what) {
  if (!std::isfinite(v)) {
    throw ValidationError(std::string("non-finite ") + what);
  }
  if (std::fabs(v) > max_abs) {
    throw ValidationError(std::string(what) + " " + std::to_string(v) +
                          " exceeds max_abs " + std::to_string(max_abs));
  }
  // ldexp is exact; nearbyint under FE_TONEAREST rounds half to even.
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(std::ldexp(v, bits));
  std::fesetround(saved);
  return static_cast<std::int64_t>(r);
}

double scaled_to_double(const mpz_class& m, long shift) {
  if (m == 0) return 0.0;
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, m.get_mpz_t());
  return std::ldexp(mant, static_cast<int>(exp - shift));
}

}  // namespace

void ScaleConfig::validate() const {
  if (frac_bits < 1) throw ValidationError("frac_bits must be >= 1");
  if (weight_frac_bits < 0) throw ValidationError("weight_frac_bits must be >= 0");
  if (!(max_abs > 0) || !std::isfinite(max_abs)) {
    throw ValidationError("max_abs must be a positive finite number");
  }
  const int widest = frac_bits > weight_frac_bits ? frac_bits : weight_frac_bits;
  if (std::ldexp(max_abs, widest) > std::ldexp(1.0, 52)) {
    throw ValidationError("max_abs * 2^frac_bits must stay below 2^52");
  }
}

std::int64_t encode(double v, const ScaleConfig& cfg) {
  return quantize(v, cfg.frac_bits, cfg.max_abs, "coordinate");
}

std::int64_t encode_weight(double w, const ScaleConfig& cfg) {
  return quantize(w, cfg.weight_frac_bits, cfg.max_abs, "weight");
}

double decode(std::int64_t m, const ScaleConfig& cfg) {
  return std::ldexp(static_cast<double>(m), -cfg.frac_bits);
}

double decode_product(const mpz_class& m, const ScaleConfig& cfg,
                      bool weighted) {
  long shift = 2L * cfg.frac_bits;
  if (weighted) shift += cfg.weight_frac_bits;
  return scaled_to_double(m, shift);
}

BudgetCheck overflow_budget(const ScaleConfig& cfg, std::size_t dimension,
                            const mpz_class& modulus) {
  cfg.validate();
  const mpz_class m = encode(cfg.max_abs, cfg);
  const mpz_class mw = encode_weight(cfg.max_abs, cfg);
  // Per-coordinate worst case; at least 1 so an all-zero config stays finite.
  mpz_class per_dim = m * m * mw;
  if (per_dim == 0) per_dim = 1;

  BudgetCheck out;
  // d * per_dim < n/2  <=>  2 * d * per_dim < n
  const mpz_class twice = 2 * per_dim;
  out.max_dimension = (modulus - 1) / twice;
  out.holds = mpz_class(static_cast<unsigned long>(dimension)) <= out.max_dimension;
  return out;
}

double product_error_bound(const ScaleConfig& cfg, std::size_t dimension) {
  const double d = static_cast<double>(dimension);
  return d * (2.0 * cfg.max_abs + 1.0) * std::ldexp(1.0, -cfg.frac_bits - 1) +
         d * std::ldexp(1.0, -2 * cfg.frac_bits - 2);
}

}  // namespace ahems::codec
