#include "ppmu/predict.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ppmu {

Symbol argmax_predict(const Dist& p) {
  double best = p.probs[0];
  for (double v : p.probs) best = std::max(best, v);
  for (Symbol a = 0; a < p.size(); ++a) {
    if (p.probs[a] >= best - 1e-12) return a;
  }
  return 0;  // unreachable
}

double kl_divergence_bits(const Dist& p, const Dist& q) {
  if (!(p.alphabet == q.alphabet)) throw SpecError("kl_divergence: alphabet mismatch");
  double kl = 0.0;
  for (Symbol a = 0; a < p.size(); ++a) {
    if (p.probs[a] == 0.0) continue;
    if (q.probs[a] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p.probs[a] * std::log2(p.probs[a] / q.probs[a]);
  }
  return kl;
}

std::string ErrorTrace::to_csv() const {
  std::ostringstream out;
  out << "n,errors,rate\n";
  for (const auto& c : checkpoints) {
    out << c.n << "," << c.errors << "," << format_g9(c.rate) << "\n";
  }
  return out.str();
}

ErrorTrace run_prediction(Predictor& predictor, const SymbolSeq& x,
                          std::span<const std::uint64_t> checkpoints) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] > x.size()) throw SpecError("run_prediction: checkpoint beyond sequence");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw SpecError("run_prediction: checkpoints must be strictly increasing");
    }
  }
  ErrorTrace trace;
  std::size_t next_cp = 0;
  for (std::uint64_t i = 0; i < x.size(); ++i) {
    if (predictor.predict() != x[i]) ++trace.cum_errors;
    predictor.step(x[i]);
    ++trace.n;
    if (next_cp < checkpoints.size() && trace.n == checkpoints[next_cp]) {
      trace.checkpoints.push_back(
          {trace.n, trace.cum_errors, static_cast<double>(trace.cum_errors) / trace.n});
      ++next_cp;
    }
  }
  return trace;
}

PredictionGap prediction_gap(const Dist& p, const Dist& q) {
  if (!(p.alphabet == q.alphabet)) throw SpecError("prediction_gap: alphabet mismatch");
  PredictionGap g;
  Symbol xp = argmax_predict(p);
  Symbol xq = argmax_predict(q);
  g.gap = p.probs[xp] - p.probs[xq];
  g.tv = tv_distance(p, q);
  return g;
}

PinskerReport pinsker_check(const Dist& p, const Dist& q) {
  PinskerReport rep;
  double tv = tv_distance(p, q);
  rep.tv_sq = tv * tv;
  rep.rhs = 2.0 * std::log(2.0) * kl_divergence_bits(p, q);
  rep.pass = rep.tv_sq <= rep.rhs + 1e-12;
  return rep;
}

FanoBounds fano_sandwich(double u, std::uint32_t D) {
  if (D < 2) throw SpecError("fano_sandwich: alphabet size must be at least 2");
  double umax = 1.0 - 1.0 / D;
  if (!(u >= 0.0 && u <= umax + 1e-12)) {
    throw SpecError("fano_sandwich: u outside [0, 1 - 1/D]");
  }
  u = std::min(u, umax);
  FanoBounds b;
  b.lower = (static_cast<double>(D) / (D - 1)) * eta(1.0 / D) * u;
  b.upper = eta(u) + u * std::log2(static_cast<double>(D - 1));
  return b;
}

}  // namespace ppmu
