// PPM measures: adaptive Markov approximations of every order, the total
// mixture over orders, incremental conditionals, empirical entropy and the
// code-length bounds attached to them.
#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <unordered_map>

#include "ppmu/core.hpp"
#include "ppmu/seq_model.hpp"

namespace ppmu {

/// Overlapping occurrence count of w inside x; the empty string counts
/// |x|+1 times. Out-of-range w yields 0.
std::uint64_t ngram_count(const SymbolSeq& x, const SymbolSeq& w);
std::uint64_t ngram_count(std::span<const Symbol> x, std::span<const Symbol> w);

enum class PpmMode { full, capped };

struct PpmConfig {
  Alphabet alphabet;
  PpmMode mode = PpmMode::full;
  /// Highest adaptive order K in capped mode; ignored in full mode.
  std::uint32_t max_order = 0;
  /// Additive smoothing: 1 is the Laplace rule, 1/2 the Krichevsky-Trofimov
  /// variant. Bound checks are only meaningful at alpha = 1.
  Rational alpha{1, 1};
  /// Full mode does O(n) work per symbol; refuse to run past this length.
  std::uint64_t full_length_limit = 4096;
  /// Cap on total context-table entries (capped mode). Exceeding it is an
  /// error; entries are never evicted, eviction would change the measure.
  std::uint64_t table_entry_cap = 1ull << 26;

  void validate() const;
  std::string describe() const;
};

/// 128-bit fixed-width gram encoding; symbols are packed LSB-first with
/// bit_width(D-1) bits each. Gram length is implicit in the per-order table.
struct GramKey {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  bool operator==(const GramKey&) const = default;
};

struct GramKeyHash {
  std::size_t operator()(const GramKey& k) const {
    std::uint64_t h = k.lo * 0x9E3779B97F4A7C15ull;
    h ^= (k.hi + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
    return static_cast<std::size_t>(h * 0xC2B2AE3D27D4EB4Full);
  }
};

/// Per-order n-gram frequency tables for the capped mixture: for each order
/// k <= K a map from (k+1)-grams to counts plus k-gram context totals.
/// Invariant: sum_a count(w a) == context_total(w) for every seen context.
class ContextCounts {
 public:
  ContextCounts(Alphabet alphabet, std::uint32_t max_order, std::uint64_t entry_cap);

  Alphabet alphabet() const { return alphabet_; }
  std::uint32_t max_order() const { return max_order_; }
  std::uint64_t stream_len() const { return stream_len_; }
  std::uint64_t entries() const { return entries_; }

  /// Ingests the next symbol with its (up to) max_order preceding symbols.
  void add(std::span<const Symbol> context_tail, Symbol next);

  std::uint64_t gram_count(std::uint32_t k, std::span<const Symbol> context, Symbol next) const;
  std::uint64_t context_total(std::uint32_t k, std::span<const Symbol> context) const;

  std::uint64_t digest() const;
  void save(std::ostream& out) const;
  static ContextCounts load(std::istream& in, Alphabet alphabet, std::uint64_t entry_cap);

 private:
  GramKey pack(std::span<const Symbol> syms, std::optional<Symbol> extra) const;

  Alphabet alphabet_;
  std::uint32_t max_order_;
  std::uint32_t sym_bits_;
  std::uint64_t entry_cap_;
  std::uint64_t stream_len_ = 0;
  std::uint64_t entries_ = 0;
  std::vector<std::unordered_map<GramKey, std::uint64_t, GramKeyHash>> grams_;
  std::vector<std::unordered_map<GramKey, std::uint64_t, GramKeyHash>> totals_;

  friend class PpmModel;
};

/// The total PPM measure as an incremental sequential model.
///
/// Full mode is the untruncated mixture over all orders: orders 0..n-2 are
/// tracked adaptively and the infinite tail collapses to D^-n / n in closed
/// form. Instead of gram tables it keeps, for every proper prefix, the
/// length of its longest suffix match against the whole string; order-k
/// numerators and denominators are suffix-sum counts of those lengths, which
/// reproduces the defining n-gram counts exactly with O(n) memory.
///
/// Capped mode reassigns all tail weight beyond order K to order K, giving a
/// valid measure with O(K) work per symbol, and stores counts in
/// ContextCounts tables. For n <= K+1 the two modes agree exactly.
class PpmModel final : public SeqModel {
 public:
  explicit PpmModel(PpmConfig config);

  const PpmConfig& config() const { return config_; }
  const Alphabet& alphabet() const override { return config_.alphabet; }
  std::uint64_t length() const override { return n_; }

  Dist conditional() const override;
  void step(Symbol a) override { advance(a); }
  /// Returns the conditional distribution before ingesting a, then updates
  /// counts and accumulators with a.
  Dist advance(Symbol a);

  /// -log2 PPM(x_1^n) evaluated fresh from the per-order accumulators and
  /// the closed-form tail (not the running sum of conditionals).
  LogProb total_neg_log2() const;
  /// -log2 PPM_k(x_1^n) for a tracked order (capped: k <= K; full: k <= n-2).
  double order_joint_neg_log2(std::uint32_t k) const;

  std::uint64_t state_digest() const;

  /// Versioned binary snapshot (magic "PPMS"); see docs/FORMAT.md.
  void save_snapshot(std::ostream& out) const;
  static PpmModel load_snapshot(std::istream& in);

 private:
  struct Mixture;
  void compute_mixture(Mixture& m) const;

  PpmConfig config_;
  std::uint64_t n_ = 0;

  // capped mode
  std::unique_ptr<ContextCounts> counts_;
  std::vector<Symbol> context_;  // last max_order symbols

  // full mode
  std::vector<Symbol> hist_;
  std::vector<std::uint32_t> mlen_;  // longest suffix match per proper prefix

  // -log2 PPM_k(x_1^n) for tracked orders (bits)
  std::vector<double> order_nll_;
};

/// Single fixed-order adaptive model PPM_k; used as the fixed-order Markov
/// baseline in experiments.
class PpmKModel final : public SeqModel {
 public:
  PpmKModel(Alphabet alphabet, std::uint32_t k, Rational alpha, std::uint64_t entry_cap = 1ull << 26);

  const Alphabet& alphabet() const override { return alphabet_; }
  std::uint64_t length() const override { return counts_.stream_len(); }
  Dist conditional() const override;
  void step(Symbol a) override;
  double joint_neg_log2() const { return nll_; }

 private:
  Alphabet alphabet_;
  std::uint32_t k_;
  double alpha_;
  ContextCounts counts_;
  std::vector<Symbol> context_;
  double nll_ = 0.0;
};

/// -log2 PPM_k(x_1^n), computed directly from the defining product with
/// fresh substring counts (independent of the incremental path).
LogProb ppm_k_neg_log(const SymbolSeq& x, std::uint32_t k, Rational alpha = Rational(1, 1));

/// -log2 PPM(x_1^n) under the given configuration.
LogProb ppm_neg_log(const SymbolSeq& x, const PpmConfig& config);

struct BoundCheckRow {
  std::uint64_t n = 0;          // prefix length after ingesting position n
  double joint_lhs = 0.0;       // -log2 PPM(x_1^n)
  double joint_rhs = 0.0;       // 2 log2(n+1) + n log2 D (full mode only)
  double cond_lhs = 0.0;        // -log2 PPM(x_n | x_1^{n-1})
  double cond_rhs = 0.0;        // 3 log2(n-1+D)
  bool pass = true;
};

struct BoundsReport {
  std::vector<BoundCheckRow> rows;
  bool all_pass = true;
};

/// Checks -log2 PPM(x_1^n) <= 2 log2(n+1) + n log2 D (full mode) and
/// -log2 PPM(x_{n+1}|x_1^n) <= 3 log2(n+D) (either mode) at every prefix.
BoundsReport check_ppm_bounds(const SymbolSeq& x, const PpmConfig& config);

/// Empirical conditional entropy h_k of the string, in bits per symbol.
double empirical_entropy(const SymbolSeq& x, std::uint32_t k);

struct SandwichReport {
  double middle = 0.0;  // -log2 PPM_k - k log2 D - (n-k) h_k
  double upper = 0.0;   // D^{k+1} log2(e^2 n)
  bool lower_pass = true;
  bool upper_pass = true;
  bool pass() const { return lower_pass && upper_pass; }
};

/// Checks 0 <= -log2 PPM_k(x) - k log2 D - (n-k) h_k(x) <= D^{k+1} log2(e^2 n).
/// Requires n >= k+2 and alpha = 1.
SandwichReport check_entropy_sandwich(const SymbolSeq& x, std::uint32_t k);

struct GrowthReport {
  // indexed by position n >= 1; entry i corresponds to the conditional at
  // state n = i+1 (trace[0], the first symbol, has no ln n factor)
  std::vector<double> eps;           // (-log2 cond) * sqrt(ln n / n)
  std::vector<double> envelope;      // 3 log2(n+D) * sqrt(ln n / n)
  std::vector<double> eps_tail_max;  // running max of eps over tails
  bool pass = true;

  double max_eps_in(std::uint64_t lo, std::uint64_t hi) const;
};

/// Evaluates the uniform growth condition on a trace of per-step conditional
/// code lengths trace[i] = -log2 R(x_{i+1} | x_1^i).
GrowthReport check_growth_condition(std::span<const double> cond_neg_log2, std::uint32_t D);

}  // namespace ppmu
