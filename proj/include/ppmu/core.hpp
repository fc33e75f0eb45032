// Alphabets, symbol sequences, probability distributions, log-domain
// arithmetic and seeded randomness shared by every other component.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppmu {

using Symbol = std::uint32_t;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Invalid arguments, configurations or experiment specs.
struct SpecError : Error {
  using Error::Error;
};
// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};
// Malformed binary or textual inputs.
struct FormatError : Error {
  using Error::Error;
};
// Resource caps hit (context-table memory, full-mode length, burst search).
struct LimitError : Error {
  using Error::Error;
};

/// Finite alphabet {0, 1, ..., size-1} with the natural total order.
struct Alphabet {
  std::uint32_t size = 0;

  Alphabet() = default;
  explicit Alphabet(std::uint32_t d) : size(d) {
    if (d < 2) throw SpecError("alphabet size must be at least 2");
  }
  bool operator==(const Alphabet&) const = default;
};

/// A finite string of symbol indices over a fixed alphabet.
struct SymbolSeq {
  Alphabet alphabet;
  std::vector<Symbol> data;

  SymbolSeq() = default;
  SymbolSeq(Alphabet a, std::vector<Symbol> d);

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  Symbol operator[](std::size_t i) const { return data[i]; }
  std::span<const Symbol> span() const { return {data.data(), data.size()}; }
  std::span<const Symbol> prefix(std::size_t n) const { return {data.data(), n}; }
  void push_back(Symbol s);
};

/// Probability vector over an alphabet. Entries sum to 1 within 1e-12.
struct Dist {
  Alphabet alphabet;
  std::vector<double> probs;

  double operator[](Symbol a) const { return probs[a]; }
  std::uint32_t size() const { return alphabet.size; }
};

/// Normalizes nonnegative weights into a Dist. Rejects negative, non-finite
/// or all-zero weights.
Dist make_dist(Alphabet alphabet, std::span<const double> weights);
Dist uniform_dist(Alphabet alphabet);
/// Wraps already-normalized probabilities; validates the sum within 1e-12.
Dist dist_from_normalized(Alphabet alphabet, std::vector<double> probs);

/// Total variation style distance sum_x |p(x)-q(x)|, in [0, 2].
double tv_distance(const Dist& p, const Dist& q);

/// Binary entropy -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
double eta(double p);

/// Nonnegative code length in bits, i.e. -log2 of a probability.
struct LogProb {
  double neg_log2 = 0.0;
};

struct Seed {
  std::uint64_t value = 0;
};

/// log2(sum_i 2^{t_i}) via the max-shift technique with compensated
/// summation; relative error per accumulation stays well under 1e-12.
double log2_sum_exp(std::span<const double> log2_terms);

/// Exact small rational, used for smoothing constants and spec files.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  bool operator==(const Rational&) const = default;

  static Rational parse(const std::string& text);
};

/// Deterministic RNG; mt19937_64 keeps streams identical across platforms.
class Rng {
 public:
  explicit Rng(Seed seed) : gen_(seed.value) {}

  std::uint64_t next_u64() { return gen_(); }
  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit();
  Symbol sample(const Dist& d);
  /// Samples an index proportional to the given nonnegative weights.
  std::size_t sample_weights(std::span<const double> weights);

 private:
  std::mt19937_64 gen_;
};

/// Formats a double with 9 significant digits ("%.9g"); used everywhere a
/// byte-identical text output is promised.
std::string format_g9(double v);

}  // namespace ppmu
