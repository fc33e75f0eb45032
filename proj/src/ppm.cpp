#include "ppmu/ppm.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <map>

#include "ppmu/detail/binary_io.hpp"

namespace ppmu {

namespace {

double mix_weight_log2(std::uint32_t k) {
  // w_k = 1/(k+1) - 1/(k+2) = 1/((k+1)(k+2))
  return -std::log2(static_cast<double>(k + 1) * static_cast<double>(k + 2));
}

GramKey pack_gram(std::span<const Symbol> syms, std::optional<Symbol> extra, std::uint32_t bits) {
  GramKey key;
  unsigned pos = 0;
  auto put = [&](Symbol s) {
    if (pos < 64) {
      key.lo |= static_cast<std::uint64_t>(s) << pos;
      if (pos + bits > 64) key.hi |= static_cast<std::uint64_t>(s) >> (64 - pos);
    } else {
      key.hi |= static_cast<std::uint64_t>(s) << (pos - 64);
    }
    pos += bits;
  };
  for (Symbol s : syms) put(s);
  if (extra) put(*extra);
  return key;
}

}  // namespace

std::uint64_t ngram_count(std::span<const Symbol> x, std::span<const Symbol> w) {
  if (w.size() > x.size() + 1) return 0;
  if (w.empty()) return x.size() + 1;
  std::uint64_t count = 0;
  for (std::size_t i = 0; i + w.size() <= x.size(); ++i) {
    if (std::equal(w.begin(), w.end(), x.begin() + i)) ++count;
  }
  return count;
}

std::uint64_t ngram_count(const SymbolSeq& x, const SymbolSeq& w) {
  return ngram_count(x.span(), w.span());
}

void PpmConfig::validate() const {
  if (alphabet.size < 2) throw SpecError("ppm: alphabet size must be at least 2");
  if (alpha.num <= 0) throw SpecError("ppm: smoothing alpha must be positive");
  if (mode == PpmMode::capped) {
    std::uint32_t bits = std::bit_width(alphabet.size - 1);
    if ((static_cast<std::uint64_t>(max_order) + 1) * bits > 128) {
      throw SpecError("ppm: (max_order+1)-grams do not fit the 128-bit key encoding");
    }
  }
}

std::string PpmConfig::describe() const {
  std::string s = mode == PpmMode::full ? "ppm-full" : ("ppm-capped(" + std::to_string(max_order) + ")");
  s += " alpha=" + alpha.str();
  return s;
}

// ---------------------------------------------------------------------------
// ContextCounts

ContextCounts::ContextCounts(Alphabet alphabet, std::uint32_t max_order, std::uint64_t entry_cap)
    : alphabet_(alphabet),
      max_order_(max_order),
      sym_bits_(std::bit_width(alphabet.size - 1)),
      entry_cap_(entry_cap),
      grams_(max_order + 1),
      totals_(max_order + 1) {
  if ((static_cast<std::uint64_t>(max_order) + 1) * sym_bits_ > 128) {
    throw SpecError("context counts: gram encoding exceeds 128 bits");
  }
}

GramKey ContextCounts::pack(std::span<const Symbol> syms, std::optional<Symbol> extra) const {
  return pack_gram(syms, extra, sym_bits_);
}

void ContextCounts::add(std::span<const Symbol> context_tail, Symbol next) {
  if (next >= alphabet_.size) throw SpecError("context counts: symbol out of alphabet");
  std::uint32_t kmax = static_cast<std::uint32_t>(std::min<std::size_t>(context_tail.size(), max_order_));
  for (std::uint32_t k = 0; k <= kmax; ++k) {
    std::span<const Symbol> ctx = context_tail.subspan(context_tail.size() - k, k);
    auto [git, gnew] = grams_[k].try_emplace(pack(ctx, next), 0);
    ++git->second;
    auto [tit, tnew] = totals_[k].try_emplace(pack(ctx, std::nullopt), 0);
    ++tit->second;
    entries_ += (gnew ? 1 : 0) + (tnew ? 1 : 0);
  }
  if (entries_ > entry_cap_) throw LimitError("context counts: table entry cap exceeded");
  ++stream_len_;
}

std::uint64_t ContextCounts::gram_count(std::uint32_t k, std::span<const Symbol> context, Symbol next) const {
  auto it = grams_[k].find(pack(context, next));
  return it == grams_[k].end() ? 0 : it->second;
}

std::uint64_t ContextCounts::context_total(std::uint32_t k, std::span<const Symbol> context) const {
  auto it = totals_[k].find(pack(context, std::nullopt));
  return it == totals_[k].end() ? 0 : it->second;
}

std::uint64_t ContextCounts::digest() const {
  // order-independent fold so map iteration order never matters
  std::uint64_t h = 0x243F6A8885A308D3ull ^ stream_len_;
  GramKeyHash kh;
  for (std::uint32_t k = 0; k <= max_order_; ++k) {
    for (const auto& [key, cnt] : grams_[k]) {
      h += (kh(key) ^ (cnt * 0x100000001B3ull)) + k;
    }
  }
  return h;
}

void ContextCounts::save(std::ostream& out) const {
  detail::write_u32(out, max_order_);
  detail::write_u64(out, stream_len_);
  auto dump = [&](const std::unordered_map<GramKey, std::uint64_t, GramKeyHash>& m) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> sorted;
    for (const auto& [key, cnt] : m) sorted[{key.hi, key.lo}] = cnt;
    detail::write_u64(out, sorted.size());
    for (const auto& [key, cnt] : sorted) {
      detail::write_u64(out, key.second);
      detail::write_u64(out, key.first);
      detail::write_u64(out, cnt);
    }
  };
  for (std::uint32_t k = 0; k <= max_order_; ++k) {
    dump(grams_[k]);
    dump(totals_[k]);
  }
}

ContextCounts ContextCounts::load(std::istream& in, Alphabet alphabet, std::uint64_t entry_cap) {
  std::uint32_t max_order = detail::read_u32(in);
  ContextCounts cc(alphabet, max_order, entry_cap);
  cc.stream_len_ = detail::read_u64(in);
  auto slurp = [&](std::unordered_map<GramKey, std::uint64_t, GramKeyHash>& m) {
    std::uint64_t count = detail::read_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
      GramKey key;
      key.lo = detail::read_u64(in);
      key.hi = detail::read_u64(in);
      m[key] = detail::read_u64(in);
      ++cc.entries_;
    }
  };
  for (std::uint32_t k = 0; k <= max_order; ++k) {
    slurp(cc.grams_[k]);
    slurp(cc.totals_[k]);
  }
  if (cc.entries_ > entry_cap) throw LimitError("context counts: table entry cap exceeded");
  return cc;
}

// ---------------------------------------------------------------------------
// PpmModel

struct PpmModel::Mixture {
  // suffix-sum occurrence counts (full mode)
  std::vector<double> den_counts;  // den_counts[k], k in [0, horizon]
  std::vector<double> num_counts;  // num_counts[a*(horizon+1) + k]
  std::uint32_t horizon = 0;       // counts are zero beyond this order

  std::vector<double> weight;  // shifted v_k 2^{-L_k} per tracked order
  double boundary_weight = 0;  // full: order n-1 at joint D^{-n}
  double tail_den = 0;         // full: shifted D^{-n}/n
  double tail_num = 0;         // full: shifted D^{-(n+1)}/(n+1)
  double joint = 0;            // shifted PPM(x_1^n)
};

PpmModel::PpmModel(PpmConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.mode == PpmMode::capped) {
    counts_ = std::make_unique<ContextCounts>(config_.alphabet, config_.max_order, config_.table_entry_cap);
    order_nll_.assign(config_.max_order + 1, 0.0);
  }
}

void PpmModel::compute_mixture(Mixture& m) const {
  const std::uint32_t D = config_.alphabet.size;
  const double lgD = std::log2(static_cast<double>(D));
  const std::uint64_t n = n_;

  if (config_.mode == PpmMode::full) {
    // occurrence counts of every suffix order via the match-length vector
    std::uint32_t mmax = 0;
    for (std::uint32_t v : mlen_) mmax = std::max(mmax, v);
    m.horizon = mmax;
    m.den_counts.assign(mmax + 2, 0.0);
    m.num_counts.assign(static_cast<std::size_t>(D) * (mmax + 2), 0.0);
    for (std::uint64_t j = 0; j < n; ++j) {
      std::uint32_t t = mlen_[j];
      Symbol s = hist_[j];
      m.den_counts[t] += 1.0;
      m.num_counts[static_cast<std::size_t>(s) * (mmax + 2) + t] += 1.0;
    }
    for (std::uint32_t k = mmax + 1; k-- > 0;) {
      m.den_counts[k] += m.den_counts[k + 1];
      for (std::uint32_t a = 0; a < D; ++a) {
        std::size_t base = static_cast<std::size_t>(a) * (mmax + 2);
        m.num_counts[base + k] += m.num_counts[base + k + 1];
      }
    }

    if (n == 0) {
      m.weight.clear();
      m.boundary_weight = 0.0;
      m.tail_den = 1.0;
      m.tail_num = 1.0 / (2.0 * D);  // v-sum 1/2... unused; conditional is uniform
      m.joint = 1.0;
      return;
    }

    // shifted mixture terms: adaptive orders 0..n-2, boundary order n-1,
    // closed-form tails for the joint at n and at n+1
    const std::size_t active = order_nll_.size();  // == n-1
    double mx = -std::log2(static_cast<double>(n)) - static_cast<double>(n) * lgD;
    const double boundary_term = mix_weight_log2(static_cast<std::uint32_t>(n - 1)) - static_cast<double>(n) * lgD;
    mx = std::max(mx, boundary_term);
    for (std::size_t k = 0; k < active; ++k) {
      mx = std::max(mx, mix_weight_log2(static_cast<std::uint32_t>(k)) - order_nll_[k]);
    }
    m.weight.resize(active);
    double joint = 0.0;
    for (std::size_t k = 0; k < active; ++k) {
      m.weight[k] = std::exp2(mix_weight_log2(static_cast<std::uint32_t>(k)) - order_nll_[k] - mx);
      joint += m.weight[k];
    }
    m.tail_den = std::exp2(-std::log2(static_cast<double>(n)) - static_cast<double>(n) * lgD - mx);
    m.boundary_weight = std::exp2(boundary_term - mx);
    m.tail_num =
        std::exp2(-std::log2(static_cast<double>(n + 1)) - static_cast<double>(n + 1) * lgD - mx);
    m.joint = joint + m.tail_den;
    return;
  }

  // capped mode: orders 0..K, tail weight reassigned to K
  const std::uint32_t K = config_.max_order;
  m.horizon = K;
  m.weight.resize(K + 1);
  double mx = -1e300;
  for (std::uint32_t k = 0; k <= K; ++k) {
    double w = (k < K) ? mix_weight_log2(k) : -std::log2(static_cast<double>(K + 1));
    mx = std::max(mx, w - order_nll_[k]);
  }
  double joint = 0.0;
  for (std::uint32_t k = 0; k <= K; ++k) {
    double w = (k < K) ? mix_weight_log2(k) : -std::log2(static_cast<double>(K + 1));
    m.weight[k] = std::exp2(w - order_nll_[k] - mx);
    joint += m.weight[k];
  }
  m.boundary_weight = 0.0;
  m.tail_den = 0.0;
  m.tail_num = 0.0;
  m.joint = joint;
}

Dist PpmModel::conditional() const {
  const std::uint32_t D = config_.alphabet.size;
  const double alpha = config_.alpha.value();
  const double dalpha = D * alpha;
  const std::uint64_t n = n_;
  std::vector<double> mass(D, 0.0);

  if (n == 0) return uniform_dist(config_.alphabet);

  Mixture m;
  compute_mixture(m);

  if (config_.mode == PpmMode::full) {
    const std::size_t active = m.weight.size();
    const std::size_t stride = m.horizon + 2;
    // orders beyond the suffix horizon all emit 1/D
    double virgin = 0.0;
    std::size_t adaptive = std::min<std::size_t>(active, static_cast<std::size_t>(m.horizon) + 1);
    for (std::size_t k = adaptive; k < active; ++k) virgin += m.weight[k];
    double boundary_p_uniform = (n - 1 > m.horizon) ? 1.0 : 0.0;
    if (boundary_p_uniform > 0.0) virgin += m.boundary_weight;
    for (std::uint32_t a = 0; a < D; ++a) {
      double num = 0.0;
      const double* counts = m.num_counts.data() + static_cast<std::size_t>(a) * stride;
      for (std::size_t k = 0; k < adaptive; ++k) {
        num += m.weight[k] * ((counts[k] + alpha) / (m.den_counts[k] + dalpha));
      }
      if (n - 1 <= m.horizon) {
        std::size_t k = static_cast<std::size_t>(n - 1);
        num += m.boundary_weight * ((counts[k] + alpha) / (m.den_counts[k] + dalpha));
      }
      num += virgin / D;
      num += m.tail_num;
      mass[a] = num;
    }
  } else {
    const std::uint32_t K = config_.max_order;
    std::span<const Symbol> tail(context_.data(), context_.size());
    for (std::uint32_t a = 0; a < D; ++a) {
      double num = 0.0;
      for (std::uint32_t k = 0; k <= K; ++k) {
        double p;
        if (k + 1 <= n && k <= tail.size()) {
          std::span<const Symbol> ctx = tail.subspan(tail.size() - k, k);
          double cnum = static_cast<double>(counts_->gram_count(k, ctx, a));
          double cden = static_cast<double>(counts_->context_total(k, ctx));
          p = (cnum + alpha) / (cden + dalpha);
        } else {
          p = 1.0 / D;
        }
        num += m.weight[k] * p;
      }
      mass[a] = num;
    }
  }
  return make_dist(config_.alphabet, mass);
}

Dist PpmModel::advance(Symbol a) {
  if (a >= config_.alphabet.size) throw SpecError("ppm: symbol out of alphabet");
  if (config_.mode == PpmMode::full && n_ >= config_.full_length_limit) {
    throw LimitError("ppm: full mode restricted to " + std::to_string(config_.full_length_limit) +
                     " symbols (use capped mode for long runs)");
  }
  const std::uint32_t D = config_.alphabet.size;
  const double alpha = config_.alpha.value();
  const double dalpha = D * alpha;
  const double lgD = std::log2(static_cast<double>(D));
  const std::uint64_t n = n_;

  Dist out = conditional();

  if (config_.mode == PpmMode::full) {
    if (n > 0) {
      Mixture m;
      compute_mixture(m);
      const std::size_t stride = m.horizon + 2;
      const double* counts = m.num_counts.data() + static_cast<std::size_t>(a) * stride;
      auto cond_of_order = [&](std::size_t k) {
        if (k <= m.horizon) return (counts[k] + alpha) / (m.den_counts[k] + dalpha);
        return 1.0 / D;
      };
      for (std::size_t k = 0; k < order_nll_.size(); ++k) {
        order_nll_[k] -= std::log2(cond_of_order(k));
      }
      order_nll_.push_back(static_cast<double>(n) * lgD - std::log2(cond_of_order(n - 1)));
    }
    // extend the match-length vector for the new state
    mlen_.push_back(0);
    for (std::uint64_t j = n; j >= 1; --j) {
      mlen_[j] = (hist_[j - 1] == a) ? mlen_[j - 1] + 1 : 0;
    }
    if (!mlen_.empty()) mlen_[0] = 0;
    hist_.push_back(a);
  } else {
    const std::uint32_t K = config_.max_order;
    std::span<const Symbol> tail(context_.data(), context_.size());
    for (std::uint32_t k = 0; k <= K; ++k) {
      double p;
      if (k + 1 <= n && k <= tail.size()) {
        std::span<const Symbol> ctx = tail.subspan(tail.size() - k, k);
        double cnum = static_cast<double>(counts_->gram_count(k, ctx, a));
        double cden = static_cast<double>(counts_->context_total(k, ctx));
        p = (cnum + alpha) / (cden + dalpha);
      } else {
        p = 1.0 / D;
      }
      assert(p >= alpha / (static_cast<double>(n) + dalpha) - 1e-12);
      order_nll_[k] -= std::log2(p);
    }
    counts_->add(tail, a);
    context_.push_back(a);
    if (context_.size() > K) context_.erase(context_.begin());
  }
  ++n_;
  return out;
}

LogProb PpmModel::total_neg_log2() const {
  const double lgD = std::log2(static_cast<double>(config_.alphabet.size));
  std::vector<double> terms;
  if (config_.mode == PpmMode::full) {
    if (n_ == 0) return LogProb{0.0};
    terms.reserve(order_nll_.size() + 1);
    for (std::size_t k = 0; k < order_nll_.size(); ++k) {
      terms.push_back(mix_weight_log2(static_cast<std::uint32_t>(k)) - order_nll_[k]);
    }
    terms.push_back(-std::log2(static_cast<double>(n_)) - static_cast<double>(n_) * lgD);
  } else {
    const std::uint32_t K = config_.max_order;
    terms.reserve(K + 1);
    for (std::uint32_t k = 0; k <= K; ++k) {
      double w = (k < K) ? mix_weight_log2(k) : -std::log2(static_cast<double>(K + 1));
      terms.push_back(w - order_nll_[k]);
    }
  }
  double nll = -log2_sum_exp(terms);
  return LogProb{std::max(nll, 0.0)};
}

double PpmModel::order_joint_neg_log2(std::uint32_t k) const {
  const double lgD = std::log2(static_cast<double>(config_.alphabet.size));
  if (config_.mode == PpmMode::capped) {
    if (k > config_.max_order) throw SpecError("ppm: order not tracked in capped mode");
    return order_nll_[k];
  }
  if (k < order_nll_.size()) return order_nll_[k];
  return static_cast<double>(n_) * lgD;  // k >= n-1
}

std::uint64_t PpmModel::state_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(n_);
  mix(config_.mode == PpmMode::full ? 1 : 2);
  for (double v : order_nll_) mix(std::bit_cast<std::uint64_t>(v));
  if (config_.mode == PpmMode::full) {
    for (Symbol s : hist_) mix(s);
    for (std::uint32_t v : mlen_) mix(v);
  } else {
    for (Symbol s : context_) mix(s);
    h ^= counts_->digest();
  }
  return h;
}

void PpmModel::save_snapshot(std::ostream& out) const {
  out.write("PPMS", 4);
  detail::write_u8(out, 1);  // version
  detail::write_u8(out, config_.mode == PpmMode::full ? 0 : 1);
  detail::write_u32(out, config_.alphabet.size);
  detail::write_u32(out, config_.max_order);
  detail::write_i64(out, config_.alpha.num);
  detail::write_i64(out, config_.alpha.den);
  detail::write_u64(out, config_.full_length_limit);
  detail::write_u64(out, config_.table_entry_cap);
  detail::write_u64(out, n_);
  detail::write_u64(out, order_nll_.size());
  for (double v : order_nll_) detail::write_f64(out, v);
  if (config_.mode == PpmMode::full) {
    for (Symbol s : hist_) detail::write_u32(out, s);
    for (std::uint32_t v : mlen_) detail::write_u32(out, v);
  } else {
    detail::write_u64(out, context_.size());
    for (Symbol s : context_) detail::write_u32(out, s);
    counts_->save(out);
  }
  if (!out) throw IoError("failed to write ppm snapshot");
}

PpmModel PpmModel::load_snapshot(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "PPMS", 4) != 0) {
    throw FormatError("ppm snapshot: bad magic");
  }
  std::uint8_t version = detail::read_u8(in);
  if (version != 1) throw FormatError("ppm snapshot: unsupported version");
  PpmConfig cfg;
  std::uint8_t mode = detail::read_u8(in);
  if (mode > 1) throw FormatError("ppm snapshot: bad mode byte");
  cfg.mode = mode == 0 ? PpmMode::full : PpmMode::capped;
  cfg.alphabet = Alphabet(detail::read_u32(in));
  cfg.max_order = detail::read_u32(in);
  std::int64_t anum = detail::read_i64(in);
  std::int64_t aden = detail::read_i64(in);
  cfg.alpha = Rational(anum, aden);
  cfg.full_length_limit = detail::read_u64(in);
  cfg.table_entry_cap = detail::read_u64(in);

  PpmModel model(cfg);
  model.n_ = detail::read_u64(in);
  std::uint64_t nll_count = detail::read_u64(in);
  model.order_nll_.resize(nll_count);
  for (auto& v : model.order_nll_) v = detail::read_f64(in);
  if (cfg.mode == PpmMode::full) {
    if (nll_count != (model.n_ == 0 ? 0 : model.n_ - 1)) {
      throw FormatError("ppm snapshot: inconsistent accumulator count");
    }
    model.hist_.resize(model.n_);
    for (auto& s : model.hist_) s = detail::read_u32(in);
    model.mlen_.resize(model.n_);
    for (auto& v : model.mlen_) v = detail::read_u32(in);
  } else {
    if (nll_count != static_cast<std::uint64_t>(cfg.max_order) + 1) {
      throw FormatError("ppm snapshot: inconsistent accumulator count");
    }
    std::uint64_t ctx_len = detail::read_u64(in);
    model.context_.resize(ctx_len);
    for (auto& s : model.context_) s = detail::read_u32(in);
    *model.counts_ = ContextCounts::load(in, cfg.alphabet, cfg.table_entry_cap);
  }
  return model;
}

// ---------------------------------------------------------------------------
// PpmKModel

PpmKModel::PpmKModel(Alphabet alphabet, std::uint32_t k, Rational alpha, std::uint64_t entry_cap)
    : alphabet_(alphabet), k_(k), alpha_(alpha.value()), counts_(alphabet, k, entry_cap) {
  if (alpha.num <= 0) throw SpecError("ppm_k: smoothing alpha must be positive");
}

Dist PpmKModel::conditional() const {
  const std::uint32_t D = alphabet_.size;
  const std::uint64_t n = counts_.stream_len();
  std::vector<double> mass(D, 0.0);
  if (n == 0 || k_ > n - 1) {
    return uniform_dist(alphabet_);
  }
  std::span<const Symbol> tail(context_.data(), context_.size());
  std::span<const Symbol> ctx = tail.subspan(tail.size() - k_, k_);
  double den = static_cast<double>(counts_.context_total(k_, ctx)) + D * alpha_;
  for (std::uint32_t a = 0; a < D; ++a) {
    mass[a] = (static_cast<double>(counts_.gram_count(k_, ctx, a)) + alpha_) / den;
  }
  return make_dist(alphabet_, mass);
}

void PpmKModel::step(Symbol a) {
  Dist d = conditional();
  nll_ -= std::log2(d[a]);
  counts_.add({context_.data(), context_.size()}, a);
  context_.push_back(a);
  if (context_.size() > k_) context_.erase(context_.begin());
}

// ---------------------------------------------------------------------------
// Direct (non-incremental) evaluations

LogProb ppm_k_neg_log(const SymbolSeq& x, std::uint32_t k, Rational alpha) {
  if (alpha.num <= 0) throw SpecError("ppm_k: smoothing alpha must be positive");
  const std::uint32_t D = x.alphabet.size;
  const double lgD = std::log2(static_cast<double>(D));
  const std::uint64_t n = x.size();
  if (static_cast<std::uint64_t>(k) + 1 >= n) {
    return LogProb{static_cast<double>(n) * lgD};
  }
  const double a = alpha.value();
  double bits = static_cast<double>(k + 1) * lgD;
  for (std::uint64_t i = k + 2; i <= n; ++i) {
    // factor (N(x_{i-k}^i | x_1^{i-1}) + a) / (N(x_{i-k}^{i-1} | x_1^{i-2}) + D a)
    std::span<const Symbol> gram(x.data.data() + (i - k - 1), k + 1);
    std::span<const Symbol> ctx(x.data.data() + (i - k - 1), k);
    double num = static_cast<double>(ngram_count(x.prefix(i - 1), gram)) + a;
    double den = static_cast<double>(ngram_count(x.prefix(i - 2), ctx)) + D * a;
    bits += std::log2(den) - std::log2(num);
  }
  return LogProb{bits};
}

LogProb ppm_neg_log(const SymbolSeq& x, const PpmConfig& config) {
  if (!(x.alphabet == config.alphabet)) throw SpecError("ppm: sequence/config alphabet mismatch");
  PpmModel model(config);
  for (Symbol s : x.data) model.step(s);
  return model.total_neg_log2();
}

BoundsReport check_ppm_bounds(const SymbolSeq& x, const PpmConfig& config) {
  if (!(x.alphabet == config.alphabet)) throw SpecError("ppm: sequence/config alphabet mismatch");
  const std::uint32_t D = config.alphabet.size;
  const double lgD = std::log2(static_cast<double>(D));
  BoundsReport report;
  PpmModel model(config);
  for (std::uint64_t m = 0; m < x.size(); ++m) {
    Dist cond = model.advance(x[m]);
    BoundCheckRow row;
    row.n = m + 1;
    row.cond_lhs = -std::log2(cond[x[m]]);
    row.cond_rhs = 3.0 * std::log2(static_cast<double>(m) + D);
    row.joint_lhs = model.total_neg_log2().neg_log2;
    row.joint_rhs = 2.0 * std::log2(static_cast<double>(m + 1) + 1.0) + static_cast<double>(m + 1) * lgD;
    bool cond_ok = row.cond_lhs <= row.cond_rhs + 1e-9;
    bool joint_ok = config.mode != PpmMode::full || row.joint_lhs <= row.joint_rhs + 1e-9;
    row.pass = cond_ok && joint_ok;
    report.all_pass = report.all_pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

double empirical_entropy(const SymbolSeq& x, std::uint32_t k) {
  const std::uint64_t n = x.size();
  if (n <= k) throw SpecError("empirical_entropy: need n >= k+1");
  const std::uint32_t D = x.alphabet.size;
  std::uint32_t bits = std::bit_width(D - 1);
  if (static_cast<std::uint64_t>(k) * bits > 128) {
    throw SpecError("empirical_entropy: context too long for the gram encoding");
  }
  // context -> successor counts over the whole string
  std::unordered_map<GramKey, std::vector<std::uint64_t>, GramKeyHash> table;
  for (std::uint64_t i = 0; i + k < n; ++i) {
    std::span<const Symbol> ctx(x.data.data() + i, k);
    GramKey key = pack_gram(ctx, std::nullopt, bits);
    auto [it, fresh] = table.try_emplace(key);
    if (fresh) it->second.assign(D, 0);
    ++it->second[x[i + k]];
  }
  const double total = static_cast<double>(n - k);
  double h = 0.0;
  for (const auto& [key, succ] : table) {
    std::uint64_t ctx_total = 0;
    for (std::uint64_t c : succ) ctx_total += c;
    for (std::uint64_t c : succ) {
      if (c == 0) continue;
      h += (static_cast<double>(c) / total) *
           std::log2(static_cast<double>(ctx_total) / static_cast<double>(c));
    }
  }
  return h;
}

SandwichReport check_entropy_sandwich(const SymbolSeq& x, std::uint32_t k) {
  const std::uint64_t n = x.size();
  if (n < static_cast<std::uint64_t>(k) + 2) throw SpecError("entropy sandwich: need n >= k+2");
  const std::uint32_t D = x.alphabet.size;
  const double lgD = std::log2(static_cast<double>(D));
  SandwichReport rep;
  double hk = empirical_entropy(x, k);
  rep.middle = ppm_k_neg_log(x, k).neg_log2 - static_cast<double>(k) * lgD -
               static_cast<double>(n - k) * hk;
  rep.upper = std::pow(static_cast<double>(D), static_cast<double>(k) + 1.0) *
              (2.0 / std::log(2.0) + std::log2(static_cast<double>(n)));
  rep.lower_pass = rep.middle >= -1e-9;
  rep.upper_pass = rep.middle <= rep.upper + 1e-9;
  return rep;
}

GrowthReport check_growth_condition(std::span<const double> cond_neg_log2, std::uint32_t D) {
  GrowthReport rep;
  if (cond_neg_log2.size() < 2) {
    throw SpecError("growth condition: need a trace of at least 2 steps");
  }
  std::size_t count = cond_neg_log2.size() - 1;
  rep.eps.resize(count);
  rep.envelope.resize(count);
  rep.eps_tail_max.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t n = i + 1;
    double scale = std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
    rep.eps[i] = cond_neg_log2[n] * scale;
    rep.envelope[i] = 3.0 * std::log2(static_cast<double>(n) + D) * scale;
    if (rep.eps[i] > rep.envelope[i] + 1e-12) rep.pass = false;
  }
  double running = 0.0;
  for (std::size_t i = count; i-- > 0;) {
    running = std::max(running, rep.eps[i]);
    rep.eps_tail_max[i] = running;
  }
  return rep;
}

double GrowthReport::max_eps_in(std::uint64_t lo, std::uint64_t hi) const {
  double mx = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::uint64_t n = i + 1;
    if (n >= lo && n <= hi) mx = std::max(mx, eps[i]);
  }
  return mx;
}

}  // namespace ppmu
