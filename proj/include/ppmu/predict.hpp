// Induced predictors, running error-rate traces and the inequality oracles
// (prediction inequality, Pinsker, Fano sandwich).
#pragma once

#include <functional>
#include <optional>

#include "ppmu/core.hpp"
#include "ppmu/seq_model.hpp"

namespace ppmu {

/// Least symbol attaining the maximum probability; values within 1e-12 of
/// the maximum count as tied and the tie breaks to the least index.
Symbol argmax_predict(const Dist& p);

/// KL divergence sum_x p log2(p/q), in bits; +inf when q vanishes on the
/// support of p.
double kl_divergence_bits(const Dist& p, const Dist& q);

/// Sequential predictor: guesses the next symbol from the prefix ingested
/// so far. Prediction depends only on the prefix.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Symbol predict() const = 0;
  virtual void step(Symbol a) = 0;
};

/// Predictor induced by a sequential model: argmax of its conditional.
class InducedPredictor final : public Predictor {
 public:
  explicit InducedPredictor(SeqModel& model) : model_(&model) {}
  Symbol predict() const override { return argmax_predict(model_->conditional()); }
  void step(Symbol a) override { model_->step(a); }

 private:
  SeqModel* model_;
};

/// Always predicts the same symbol.
class ConstantPredictor final : public Predictor {
 public:
  explicit ConstantPredictor(Symbol s) : s_(s) {}
  Symbol predict() const override { return s_; }
  void step(Symbol) override {}

 private:
  Symbol s_;
};

struct ErrorTrace {
  struct Checkpoint {
    std::uint64_t n = 0;
    std::uint64_t errors = 0;
    double rate = 0.0;
  };
  std::uint64_t n = 0;
  std::uint64_t cum_errors = 0;
  std::vector<Checkpoint> checkpoints;

  double final_rate() const { return n ? static_cast<double>(cum_errors) / n : 0.0; }
  /// CSV rows "n,errors,rate" with a header line.
  std::string to_csv() const;
};

/// Runs the predictor along x, recording the cumulative 0-1 error rate at
/// each checkpoint. Checkpoints must be sorted and within |x|.
ErrorTrace run_prediction(Predictor& predictor, const SymbolSeq& x,
                          std::span<const std::uint64_t> checkpoints);

struct PredictionGap {
  double gap = 0.0;  // p(argmax p) - p(argmax q)
  double tv = 0.0;   // sum |p - q|
};

/// Both sides of the prediction inequality 0 <= p(x_p) - p(x_q) <= sum|p-q|.
PredictionGap prediction_gap(const Dist& p, const Dist& q);

struct PinskerReport {
  double tv_sq = 0.0;
  double rhs = 0.0;  // (2 ln 2) * KL in bits; +inf off support
  bool pass = true;
};

/// Pinsker inequality [sum |p-q|]^2 <= (2 ln 2) sum p log2(p/q).
PinskerReport pinsker_check(const Dist& p, const Dist& q);

struct FanoBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Fano-type sandwich: (D/(D-1)) eta(1/D) u <= h <= eta(u) + u log2(D-1),
/// for u in [0, 1 - 1/D].
FanoBounds fano_sandwich(double u, std::uint32_t D);

}  // namespace ppmu
