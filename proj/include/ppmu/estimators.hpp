// Forward-estimator evaluation: Cesaro total-variation convergence,
// martingale-drift diagnostics, and the adversarial spoilt-estimator
// construction.
#pragma once

#include <functional>
#include <memory>

#include "ppmu/core.hpp"
#include "ppmu/predict.hpp"
#include "ppmu/seq_model.hpp"
#include "ppmu/sources.hpp"

namespace ppmu {

/// Checkpointed series, serializable as CSV rows (checkpoint, value).
struct Series {
  std::vector<std::pair<std::uint64_t, double>> points;

  double final_value() const { return points.back().second; }
  std::string to_csv() const;
};

/// Emits the same conditional at every step (uniform i.i.d. and friends).
class ConstantModel final : public SeqModel {
 public:
  explicit ConstantModel(Dist d) : dist_(std::move(d)) {}
  const Alphabet& alphabet() const override { return dist_.alphabet; }
  std::uint64_t length() const override { return n_; }
  Dist conditional() const override { return dist_; }
  void step(Symbol) override { ++n_; }

 private:
  Dist dist_;
  std::uint64_t n_ = 0;
};

/// Cesaro average of sum_x |R(x|X_1^i) - P(x|X_1^i)| along one trajectory
/// sampled from the source, reported at each checkpoint.
Series cesaro_tv(SeqModel& model, const MarkovSource& source, std::uint64_t n, Seed seed,
                 std::span<const std::uint64_t> checkpoints);

/// Running average of Z_i - E[Z_i | X_1^i] with Z_i = -log2 R(X_{i+1}|X_1^i),
/// the expectation under the source; converges to zero for honest models.
Series martingale_drift(SeqModel& model, const MarkovSource& source, std::uint64_t n, Seed seed,
                        std::span<const std::uint64_t> checkpoints);

using PrefixPredicate = std::function<bool(std::span<const Symbol>)>;

struct SpoilOptions {
  /// Burst lengths are found by incremental search; exceeding this cap is an
  /// error (the construction guarantees finiteness, the cap guards runaways).
  std::uint64_t max_burst = 10'000'000;
};

/// The spoilt estimator: passes through the base model Q while the counter U
/// keeps up with the trigger count K(x_1^n) = #{i <= n : g(x_1^i) = 1}; once
/// behind, it emits a burst of reverted-Bernoulli conditionals
/// p(x) = theta^{1-x} (1-theta)^x whose minimal length N satisfies
///   (1/(n+N)) [ sum_{i<n} P0(X_{i+1} != f_R(x_1^i) | x_1^i) + N theta ] >= 1/2,
/// then sets U to the trigger count observed at burst start. The error
/// probabilities accumulate under P0 = Bernoulli(theta) against the induced
/// predictor of the spoilt model itself. Binary alphabets only.
class SpoiltModel final : public SeqModel {
 public:
  SpoiltModel(std::unique_ptr<SeqModel> base, PrefixPredicate g, Rational theta,
              SpoilOptions options = {});

  const Alphabet& alphabet() const override;
  std::uint64_t length() const override { return prefix_.size(); }
  Dist conditional() const override;
  void step(Symbol a) override;

  bool in_burst() const { return burst_remaining_ > 0; }
  std::uint64_t counter_u() const { return u_; }
  std::uint64_t trigger_count() const { return k_; }

 private:
  void maybe_start_burst();

  std::unique_ptr<SeqModel> base_;
  PrefixPredicate g_;
  Rational theta_;
  SpoilOptions options_;

  std::vector<Symbol> prefix_;
  std::uint64_t u_ = 0;              // counter U
  std::uint64_t k_ = 0;              // trigger count K(x_1^n)
  std::uint64_t burst_remaining_ = 0;
  std::uint64_t burst_start_k_ = 0;
  // exact accumulator: sum of error probabilities in units of 1/theta.den
  std::uint64_t err_num_ = 0;
};

/// Wraps a base model in the spoilt-estimator construction. Requires a
/// rational theta with 1/2 < theta < 1.
std::unique_ptr<SpoiltModel> spoil(std::unique_ptr<SeqModel> base, PrefixPredicate g,
                                   Rational theta, SpoilOptions options = {});

/// Trigger that never fires (K stays 0; the model equals its base).
PrefixPredicate trigger_never();
/// Trigger that fires on every prefix of the given target string.
PrefixPredicate trigger_prefixes_of(SymbolSeq target);

}  // namespace ppmu
