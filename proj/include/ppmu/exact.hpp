// Exact-rational evaluation of the PPM measures, independent of the
// incremental float path. Intended for tests and the selftest suite only:
// cost grows quickly with n (n <= 256 is the supported regime).
#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "ppmu/core.hpp"
#include "ppmu/ppm.hpp"

namespace ppmu::exact {

using BigRat = boost::multiprecision::cpp_rational;
using BigFloat = boost::multiprecision::cpp_bin_float_100;

/// Exact overlapping substring count; own scan, shares nothing with
/// ppmu::ngram_count.
std::uint64_t count_occurrences(std::span<const Symbol> x, std::span<const Symbol> w);

/// Exact PPM_k(x_1^m) for every prefix m = 0..n, straight from the defining
/// product with fresh substring counts.
std::vector<BigRat> ppm_k_prefix_joints(const SymbolSeq& x, std::uint32_t k, Rational alpha);

/// Exact total-measure joints PPM(x_1^m) for m = 0..n. Full mode sums the
/// adaptive orders and folds the tail sum_{k>=m-1} w_k = 1/m analytically;
/// capped mode reassigns the tail weight to order K. Exact rational output,
/// so keep n small (sums over orders share denominators).
std::vector<BigRat> ppm_prefix_joints(const SymbolSeq& x, const PpmConfig& config);

/// Exact conditional PPM(a | x) as a rational.
BigRat ppm_conditional(const SymbolSeq& x, Symbol a, const PpmConfig& config);

/// -log2 PPM(x_1^n) with exact per-order rationals combined in 100-digit
/// floats; error is ~1e-90 bits, far below any tolerance used in tests.
double ppm_neg_log2_highprec(const SymbolSeq& x, const PpmConfig& config);

/// Exact empirical-entropy power: returns the rational
///   Z = PPM_k(x) * D^k * prod_w (N(w_1^k | x_1^{n-1}) / N(w_1^{k+1} | x_1^n))^N(w_1^{k+1} | x_1^n)
/// so that -log2 Z equals the sandwich middle term exactly. Requires alpha=1.
BigRat sandwich_middle_pow(const SymbolSeq& x, std::uint32_t k);

/// -log2 of a positive rational via 100-digit floats.
double neg_log2(const BigRat& r);

}  // namespace ppmu::exact
