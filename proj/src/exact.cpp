#include "ppmu/exact.hpp"

#include <map>

namespace ppmu::exact {

namespace {

using boost::multiprecision::cpp_int;

using Gram = std::vector<Symbol>;

BigRat weight(std::uint32_t k) {
  return BigRat(1, static_cast<std::uint64_t>(k + 1) * (k + 2));
}

// Incremental per-order joint evaluator. Keeps its own gram tables
// (std::map keyed by the literal symbols); queries at position i see
// exactly the grams that end inside x_1^{i-1}.
class OrderJoints {
 public:
  OrderJoints(const SymbolSeq& x, std::uint32_t max_k, Rational alpha)
      : x_(x), D_(x.alphabet.size), alpha_(alpha.num, alpha.den), tables_(max_k + 1) {
    joints_.assign(max_k + 1, BigRat(1));
  }

  // advances from prefix i-1 to prefix i (1-based position i)
  void advance(std::uint64_t i) {
    const BigRat inv_d(1, D_);
    for (std::uint32_t k = 0; k < joints_.size(); ++k) {
      if (i >= static_cast<std::uint64_t>(k) + 2) {
        joints_[k] *= factor(k, i);
      } else {
        joints_[k] *= inv_d;
      }
    }
    for (std::uint32_t k = 0; k < tables_.size(); ++k) {
      if (static_cast<std::uint64_t>(k) + 1 <= i) {
        Gram gram(x_.data.begin() + (i - k - 1), x_.data.begin() + i);
        ++tables_[k][gram];
      }
    }
  }

  const BigRat& joint(std::uint32_t k) const { return joints_[k]; }

 private:
  BigRat factor(std::uint32_t k, std::uint64_t i) {
    Gram gram(x_.data.begin() + (i - k - 1), x_.data.begin() + i);
    auto it = tables_[k].find(gram);
    std::uint64_t num = it == tables_[k].end() ? 0 : it->second;
    std::uint64_t den = 0;
    Gram probe(x_.data.begin() + (i - k - 1), x_.data.begin() + (i - 1));
    probe.push_back(0);
    for (Symbol a = 0; a < D_; ++a) {
      probe.back() = a;
      auto jt = tables_[k].find(probe);
      if (jt != tables_[k].end()) den += jt->second;
    }
    return (BigRat(num) + alpha_) / (BigRat(den) + BigRat(D_) * alpha_);
  }

  const SymbolSeq& x_;
  std::uint32_t D_;
  BigRat alpha_;
  std::vector<std::map<Gram, std::uint64_t>> tables_;
  std::vector<BigRat> joints_;
};

BigRat pow_rat(const BigRat& base, std::uint64_t e) {
  BigRat r(1);
  BigRat b = base;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

}  // namespace

std::uint64_t count_occurrences(std::span<const Symbol> x, std::span<const Symbol> w) {
  if (w.empty()) return x.size() + 1;
  if (w.size() > x.size()) return 0;
  std::uint64_t c = 0;
  for (std::size_t i = 0; i + w.size() <= x.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (x[i + j] != w[j]) {
        match = false;
        break;
      }
    }
    if (match) ++c;
  }
  return c;
}

std::vector<BigRat> ppm_k_prefix_joints(const SymbolSeq& x, std::uint32_t k, Rational alpha) {
  OrderJoints oj(x, k, alpha);
  std::vector<BigRat> out;
  out.reserve(x.size() + 1);
  out.push_back(BigRat(1));
  for (std::uint64_t i = 1; i <= x.size(); ++i) {
    oj.advance(i);
    out.push_back(oj.joint(k));
  }
  return out;
}

std::vector<BigRat> ppm_prefix_joints(const SymbolSeq& x, const PpmConfig& config) {
  config.validate();
  const std::uint64_t n = x.size();
  if (n > 64) throw SpecError("exact ppm joints: exact rational mixtures are limited to n <= 64");
  const std::uint32_t D = config.alphabet.size;
  std::vector<BigRat> out;
  out.reserve(n + 1);
  out.push_back(BigRat(1));
  if (n == 0) return out;

  if (config.mode == PpmMode::full) {
    std::uint32_t max_k = n >= 2 ? static_cast<std::uint32_t>(n - 2) : 0;
    OrderJoints oj(x, max_k, config.alpha);
    BigRat dpow(1);
    const BigRat inv_d(1, D);
    for (std::uint64_t m = 1; m <= n; ++m) {
      oj.advance(m);
      dpow *= inv_d;  // D^{-m}
      BigRat total = dpow / m;  // tail sum_{k >= m-1} w_k PPM_k = D^{-m}/m
      if (m >= 2) {
        std::uint64_t top = std::min<std::uint64_t>(max_k, m - 2);
        for (std::uint32_t k = 0; k <= top; ++k) total += weight(k) * oj.joint(k);
      }
      out.push_back(total);
    }
    return out;
  }

  const std::uint32_t K = config.max_order;
  OrderJoints oj(x, K, config.alpha);
  for (std::uint64_t m = 1; m <= n; ++m) {
    oj.advance(m);
    BigRat total(0);
    for (std::uint32_t k = 0; k <= K; ++k) {
      BigRat w = (k < K) ? weight(k) : BigRat(1, K + 1);
      total += w * oj.joint(k);
    }
    out.push_back(total);
  }
  return out;
}

BigRat ppm_conditional(const SymbolSeq& x, Symbol a, const PpmConfig& config) {
  SymbolSeq ext = x;
  ext.push_back(a);
  auto joints = ppm_prefix_joints(ext, config);
  return joints[ext.size()] / joints[x.size()];
}

double ppm_neg_log2_highprec(const SymbolSeq& x, const PpmConfig& config) {
  config.validate();
  const std::uint64_t n = x.size();
  if (n == 0) return 0.0;
  const std::uint32_t D = config.alphabet.size;
  const BigFloat lg2 = boost::multiprecision::log(BigFloat(2));
  auto to_bf = [](const BigRat& r) {
    return BigFloat(boost::multiprecision::numerator(r)) /
           BigFloat(boost::multiprecision::denominator(r));
  };

  BigFloat total(0);
  if (config.mode == PpmMode::full) {
    std::uint32_t max_k = n >= 2 ? static_cast<std::uint32_t>(n - 2) : 0;
    OrderJoints oj(x, max_k, config.alpha);
    for (std::uint64_t m = 1; m <= n; ++m) oj.advance(m);
    if (n >= 2) {
      for (std::uint32_t k = 0; k <= max_k; ++k) total += to_bf(weight(k) * oj.joint(k));
    }
    total += to_bf(pow_rat(BigRat(1, D), n) / n);
  } else {
    const std::uint32_t K = config.max_order;
    OrderJoints oj(x, K, config.alpha);
    for (std::uint64_t m = 1; m <= n; ++m) oj.advance(m);
    for (std::uint32_t k = 0; k <= K; ++k) {
      BigRat w = (k < K) ? weight(k) : BigRat(1, K + 1);
      total += to_bf(w * oj.joint(k));
    }
  }
  BigFloat nll = -boost::multiprecision::log(total) / lg2;
  return nll.convert_to<double>();
}

BigRat sandwich_middle_pow(const SymbolSeq& x, std::uint32_t k) {
  const std::uint64_t n = x.size();
  if (n < static_cast<std::uint64_t>(k) + 2) throw SpecError("sandwich: need n >= k+2");
  const std::uint32_t D = x.alphabet.size;

  BigRat z = ppm_k_prefix_joints(x, k, Rational(1, 1)).back();
  z *= pow_rat(BigRat(D), k);

  // collect (k+1)-gram counts over x and context counts over x_1^{n-1}
  std::map<Gram, std::uint64_t> gram_counts;
  for (std::uint64_t i = 0; i + k < n; ++i) {
    Gram g(x.data.begin() + i, x.data.begin() + i + k + 1);
    ++gram_counts[g];
  }
  std::span<const Symbol> head(x.data.data(), n - 1);
  for (const auto& [gram, c] : gram_counts) {
    std::span<const Symbol> ctx(gram.data(), k);
    std::uint64_t ctx_count = count_occurrences(head, ctx);
    z *= pow_rat(BigRat(ctx_count, c), c);
  }
  return z;
}

double neg_log2(const BigRat& r) {
  if (r <= 0) throw SpecError("neg_log2: nonpositive rational");
  BigFloat v = BigFloat(boost::multiprecision::numerator(r)) /
               BigFloat(boost::multiprecision::denominator(r));
  BigFloat nll = -boost::multiprecision::log(v) / boost::multiprecision::log(BigFloat(2));
  return nll.convert_to<double>();
}

}  // namespace ppmu::exact
