#include "ppmu/estimators.hpp"

#include <cmath>
#include <sstream>

namespace ppmu {

std::string Series::to_csv() const {
  std::ostringstream out;
  out << "checkpoint,value\n";
  for (const auto& [n, v] : points) out << n << "," << format_g9(v) << "\n";
  return out.str();
}

namespace {

void validate_checkpoints(std::span<const std::uint64_t> checkpoints, std::uint64_t n) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] == 0 || checkpoints[i] > n) {
      throw SpecError("checkpoints must lie in [1, n]");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw SpecError("checkpoints must be strictly increasing");
    }
  }
}

}  // namespace

Series cesaro_tv(SeqModel& model, const MarkovSource& source, std::uint64_t n, Seed seed,
                 std::span<const std::uint64_t> checkpoints) {
  if (!(model.alphabet() == source.alphabet())) throw SpecError("cesaro_tv: alphabet mismatch");
  validate_checkpoints(checkpoints, n);
  SymbolSeq x = source.sample(n, seed);
  SourceModel truth(source);
  Series series;
  double cum = 0.0;
  std::size_t cp = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    cum += tv_distance(model.conditional(), truth.conditional());
    model.step(x[i]);
    truth.step(x[i]);
    if (cp < checkpoints.size() && i + 1 == checkpoints[cp]) {
      series.points.emplace_back(i + 1, cum / static_cast<double>(i + 1));
      ++cp;
    }
  }
  return series;
}

Series martingale_drift(SeqModel& model, const MarkovSource& source, std::uint64_t n, Seed seed,
                        std::span<const std::uint64_t> checkpoints) {
  if (!(model.alphabet() == source.alphabet())) throw SpecError("martingale_drift: alphabet mismatch");
  validate_checkpoints(checkpoints, n);
  SymbolSeq x = source.sample(n, seed);
  SourceModel truth(source);
  Series series;
  double cum = 0.0;
  std::size_t cp = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    Dist rcond = model.conditional();
    Dist pcond = truth.conditional();
    double expected = 0.0;
    for (Symbol a = 0; a < rcond.size(); ++a) {
      if (pcond[a] == 0.0) continue;
      if (rcond[a] <= 0.0) throw SpecError("martingale_drift: model conditional not strictly positive");
      expected -= pcond[a] * std::log2(rcond[a]);
    }
    cum += -std::log2(rcond[x[i]]) - expected;
    model.step(x[i]);
    truth.step(x[i]);
    if (cp < checkpoints.size() && i + 1 == checkpoints[cp]) {
      series.points.emplace_back(i + 1, cum / static_cast<double>(i + 1));
      ++cp;
    }
  }
  return series;
}

// ---------------------------------------------------------------------------
// Spoilt estimator

SpoiltModel::SpoiltModel(std::unique_ptr<SeqModel> base, PrefixPredicate g, Rational theta,
                         SpoilOptions options)
    : base_(std::move(base)), g_(std::move(g)), theta_(theta), options_(options) {
  if (!base_) throw SpecError("spoil: null base model");
  if (base_->alphabet().size != 2) throw SpecError("spoil: construction is binary-alphabet only");
  if (base_->length() != 0) throw SpecError("spoil: base model must be fresh");
  if (!(2 * theta_.num > theta_.den && theta_.num < theta_.den)) {
    throw SpecError("spoil: need rational theta with 1/2 < theta < 1");
  }
}

const Alphabet& SpoiltModel::alphabet() const { return base_->alphabet(); }

Dist SpoiltModel::conditional() const {
  if (burst_remaining_ > 0) {
    double th = theta_.value();
    return dist_from_normalized(base_->alphabet(), {th, 1.0 - th});  // reverted Bernoulli
  }
  return base_->conditional();
}

void SpoiltModel::maybe_start_burst() {
  if (burst_remaining_ > 0 || u_ >= k_) return;
  // minimal N with (err + N theta) / (n + N) >= 1/2, exactly in integers
  const std::uint64_t n = prefix_.size();
  const std::uint64_t tn = static_cast<std::uint64_t>(theta_.num);
  const std::uint64_t td = static_cast<std::uint64_t>(theta_.den);
  std::uint64_t N = 1;
  for (;; ++N) {
    if (N > options_.max_burst) throw LimitError("spoil: burst search exceeded the cap");
    if (2 * (err_num_ + N * tn) >= td * (n + N)) break;
  }
  burst_remaining_ = N;
  burst_start_k_ = k_;
}

void SpoiltModel::step(Symbol a) {
  if (a >= 2) throw SpecError("spoil: symbol out of alphabet");
  // accumulate P0(X != f_R | prefix) for the induced predictor so far;
  // P0 puts theta on symbol 1
  Symbol f = argmax_predict(conditional());
  err_num_ += (f == 1) ? static_cast<std::uint64_t>(theta_.den - theta_.num)
                       : static_cast<std::uint64_t>(theta_.num);

  if (burst_remaining_ > 0) {
    --burst_remaining_;
    if (burst_remaining_ == 0) u_ = burst_start_k_;
  }
  prefix_.push_back(a);
  if (g_({prefix_.data(), prefix_.size()})) ++k_;
  base_->step(a);
  maybe_start_burst();
}

std::unique_ptr<SpoiltModel> spoil(std::unique_ptr<SeqModel> base, PrefixPredicate g,
                                   Rational theta, SpoilOptions options) {
  return std::make_unique<SpoiltModel>(std::move(base), std::move(g), theta, options);
}

PrefixPredicate trigger_never() {
  return [](std::span<const Symbol>) { return false; };
}

PrefixPredicate trigger_prefixes_of(SymbolSeq target) {
  return [target = std::move(target)](std::span<const Symbol> prefix) {
    if (prefix.size() > target.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (prefix[i] != target[i]) return false;
    }
    return true;
  };
}

}  // namespace ppmu
