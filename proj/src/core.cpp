#include "ppmu/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace ppmu {

SymbolSeq::SymbolSeq(Alphabet a, std::vector<Symbol> d) : alphabet(a), data(std::move(d)) {
  for (Symbol s : data) {
    if (s >= alphabet.size) throw SpecError("symbol out of alphabet range");
  }
}

void SymbolSeq::push_back(Symbol s) {
  if (s >= alphabet.size) throw SpecError("symbol out of alphabet range");
  data.push_back(s);
}

Dist make_dist(Alphabet alphabet, std::span<const double> weights) {
  if (weights.size() != alphabet.size) throw SpecError("weight count must equal alphabet size");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw SpecError("weights must be finite");
    if (w < 0.0) throw SpecError("weights must be nonnegative");
    sum += w;
  }
  if (sum <= 0.0) throw SpecError("weights must not be all zero");
  Dist d;
  d.alphabet = alphabet;
  d.probs.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) d.probs[i] = weights[i] / sum;
  return d;
}

Dist uniform_dist(Alphabet alphabet) {
  Dist d;
  d.alphabet = alphabet;
  d.probs.assign(alphabet.size, 1.0 / alphabet.size);
  return d;
}

Dist dist_from_normalized(Alphabet alphabet, std::vector<double> probs) {
  if (probs.size() != alphabet.size) throw SpecError("probability count must equal alphabet size");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw SpecError("probabilities must lie in [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw SpecError("probabilities must sum to 1 within 1e-12");
  Dist d;
  d.alphabet = alphabet;
  d.probs = std::move(probs);
  return d;
}

double tv_distance(const Dist& p, const Dist& q) {
  if (!(p.alphabet == q.alphabet)) throw SpecError("tv_distance: alphabet mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) s += std::abs(p.probs[i] - q.probs[i]);
  return s;
}

double eta(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw SpecError("eta: argument outside [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double log2_sum_exp(std::span<const double> log2_terms) {
  if (log2_terms.empty()) return -std::numeric_limits<double>::infinity();
  double mx = *std::max_element(log2_terms.begin(), log2_terms.end());
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0, comp = 0.0;  // Kahan
  for (double t : log2_terms) {
    double term = std::exp2(t - mx);
    double y = term - comp;
    double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  }
  return mx + std::log2(sum);
}

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) throw SpecError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::parse(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Rational(std::stoll(text), 1);
    }
    return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  } catch (const std::exception&) {
    throw SpecError("cannot parse rational: " + text);
  }
}

double Rng::next_unit() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

Symbol Rng::sample(const Dist& d) {
  double u = next_unit();
  double cum = 0.0;
  for (std::uint32_t a = 0; a + 1 < d.size(); ++a) {
    cum += d.probs[a];
    if (u < cum) return a;
  }
  return d.size() - 1;
}

std::size_t Rng::sample_weights(std::span<const double> weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = next_unit() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return i;
  }
  return weights.size() - 1;
}

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace ppmu
