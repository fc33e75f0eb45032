// Stationary ergodic source simulators with exact entropy rate, per-order
// conditional entropies and unpredictability rate, plus the source zoo file.
#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "ppmu/core.hpp"
#include "ppmu/seq_model.hpp"

namespace ppmu {

/// Order-k Markov chain on context states (k-grams) with an exact stationary
/// law. Construction solves pi P = pi directly (residual <= 1e-10), rejects
/// chains whose context graph is not strongly connected, and records the
/// period; irreducible periodic chains are stationary ergodic and accepted.
class MarkovSource {
 public:
  MarkovSource(Alphabet alphabet, std::uint32_t order, std::vector<Dist> rows);

  const Alphabet& alphabet() const { return alphabet_; }
  std::uint32_t order() const { return order_; }
  std::size_t context_count() const { return rows_.size(); }
  const Dist& row(std::size_t packed_context) const { return rows_[packed_context]; }
  const std::vector<double>& stationary() const { return stationary_; }
  std::uint32_t period() const { return period_; }
  double stationary_residual() const { return residual_; }

  std::size_t pack_context(std::span<const Symbol> ctx) const;

  /// Stationary-start sample of length n; deterministic in the seed.
  SymbolSeq sample(std::uint64_t n, Seed seed) const;

  /// h_P = sum_w pi(w) H(row(w)), bits per symbol.
  double entropy_rate() const;
  /// h_{k,P} = E[-log2 P(X_{k+1} | X_1^k)]; equals entropy_rate for k >= order.
  double order_entropy(std::uint32_t k) const;
  /// u_P = sum_w pi(w) (1 - max_a row(w)(a)).
  double unpredictability_rate() const;
  /// Exact conditional distribution of the next symbol after the prefix;
  /// prefixes shorter than the order marginalize the stationary law.
  Dist true_conditional(std::span<const Symbol> prefix) const;
  /// Stationary probability of any block (length <= order marginalizes,
  /// longer blocks extend with transition rows).
  double block_prob(std::span<const Symbol> block) const;

 private:
  Alphabet alphabet_;
  std::uint32_t order_;
  std::vector<Dist> rows_;
  std::vector<double> stationary_;
  std::uint32_t period_ = 1;
  double residual_ = 0.0;
};

/// SeqModel view of a Markov source: conditionals are the exact source
/// conditionals along the ingested stream.
class SourceModel final : public SeqModel {
 public:
  explicit SourceModel(const MarkovSource& src) : src_(&src) {}

  const Alphabet& alphabet() const override { return src_->alphabet(); }
  std::uint64_t length() const override { return n_; }
  Dist conditional() const override;
  void step(Symbol a) override;

 private:
  const MarkovSource* src_;
  std::vector<Symbol> context_;  // last min(order, n) symbols
  std::uint64_t n_ = 0;
};

/// Hidden-Markov observation process: a hidden Markov chain plus a
/// per-hidden-symbol emission distribution over the observed alphabet.
/// Stationary and ergodic, generally not Markov of any finite order.
class HmmSource {
 public:
  HmmSource(MarkovSource hidden, std::vector<Dist> emission);

  const MarkovSource& hidden() const { return hidden_; }
  const Alphabet& observed_alphabet() const { return obs_alphabet_; }
  SymbolSeq sample(std::uint64_t n, Seed seed) const;

 private:
  MarkovSource hidden_;
  std::vector<Dist> emission_;
  Alphabet obs_alphabet_;

  friend class HmmFilterModel;
};

/// Exact forward filter over the hidden context; conditional() is the exact
/// predictive distribution of the next observation.
class HmmFilterModel final : public SeqModel {
 public:
  explicit HmmFilterModel(const HmmSource& src);

  const Alphabet& alphabet() const override { return src_->observed_alphabet(); }
  std::uint64_t length() const override { return n_; }
  Dist conditional() const override;
  void step(Symbol a) override;

 private:
  const HmmSource* src_;
  std::vector<double> belief_;  // over hidden contexts
  std::uint64_t n_ = 0;
};

struct MonteCarloInterval {
  double mean = 0.0;
  double lo = 0.0;  // mean - 3 se
  double hi = 0.0;  // mean + 3 se
};

/// HMM rates have no closed form; these report seeded Monte Carlo intervals
/// from the exact filter, never point claims.
MonteCarloInterval hmm_entropy_rate_mc(const HmmSource& src, std::uint64_t n,
                                       std::span<const Seed> seeds);
MonteCarloInterval hmm_unpredictability_mc(const HmmSource& src, std::uint64_t n,
                                           std::span<const Seed> seeds);

/// Source zoo: named Markov sources loaded from a structured text file
/// ([source NAME] sections; rows as decimals or rationals "p/q").
struct Zoo {
  std::map<std::string, MarkovSource> sources;

  const MarkovSource& get(const std::string& id) const;
};

Zoo parse_zoo(std::istream& in);
Zoo load_zoo(const std::string& path);

}  // namespace ppmu
