#include "ppmu/sources.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ppmu {

namespace {

std::size_t ipow(std::size_t base, std::uint32_t exp) {
  std::size_t r = 1;
  while (exp--) r *= base;
  return r;
}

double entropy_bits(const Dist& d) {
  double h = 0.0;
  for (double p : d.probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

// pi A = pi with sum(pi) = 1, solved as a dense linear system with partial
// pivoting; context spaces stay tiny so no sparse machinery is warranted.
std::vector<double> solve_stationary(const std::vector<std::vector<double>>& trans) {
  const std::size_t s = trans.size();
  // unknowns pi_j: rows are (A^T - I) pi = 0 for j < s-1, last row sum = 1
  std::vector<std::vector<double>> m(s, std::vector<double>(s + 1, 0.0));
  for (std::size_t j = 0; j + 1 < s; ++j) {
    for (std::size_t i = 0; i < s; ++i) m[j][i] = trans[i][j];
    m[j][j] -= 1.0;
    m[j][s] = 0.0;
  }
  for (std::size_t i = 0; i < s; ++i) m[s - 1][i] = 1.0;
  m[s - 1][s] = 1.0;

  for (std::size_t col = 0; col < s; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < s; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-14) throw SpecError("markov source: singular stationary system");
    std::swap(m[col], m[pivot]);
    for (std::size_t r = 0; r < s; ++r) {
      if (r == col) continue;
      double f = m[r][col] / m[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= s; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::vector<double> pi(s);
  for (std::size_t i = 0; i < s; ++i) pi[i] = m[i][s] / m[i][i];
  return pi;
}

}  // namespace

MarkovSource::MarkovSource(Alphabet alphabet, std::uint32_t order, std::vector<Dist> rows)
    : alphabet_(alphabet), order_(order), rows_(std::move(rows)) {
  const std::size_t D = alphabet_.size;
  const std::size_t S = ipow(D, order_);
  if (S > 65536) throw SpecError("markov source: context space too large");
  if (rows_.size() != S) throw SpecError("markov source: need one transition row per context");
  for (const Dist& r : rows_) {
    if (!(r.alphabet == alphabet_)) throw SpecError("markov source: row alphabet mismatch");
  }

  // context graph: w -> shift(w, a) whenever row(w)(a) > 0
  const std::size_t shift_mod = order_ > 0 ? ipow(D, order_ - 1) : 1;
  auto next_state = [&](std::size_t s, Symbol a) {
    return order_ == 0 ? 0 : (s % shift_mod) * D + a;
  };

  if (order_ == 0) {
    for (double p : rows_[0].probs) {
      if (p <= 0.0) {
        throw SpecError("markov source: degenerate chain (a symbol never occurs)");
      }
    }
    stationary_ = {1.0};
    period_ = 1;
    residual_ = 0.0;
    return;
  }

  // strong connectivity via forward and backward reachability
  auto reach = [&](bool forward) {
    std::vector<char> seen(S, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::vector<std::vector<std::size_t>> radj;
    if (!forward) {
      radj.assign(S, {});
      for (std::size_t s = 0; s < S; ++s) {
        for (Symbol a = 0; a < D; ++a) {
          if (rows_[s].probs[a] > 0.0) radj[next_state(s, a)].push_back(s);
        }
      }
    }
    while (!stack.empty()) {
      std::size_t s = stack.back();
      stack.pop_back();
      if (forward) {
        for (Symbol a = 0; a < D; ++a) {
          if (rows_[s].probs[a] > 0.0) {
            std::size_t t = next_state(s, a);
            if (!seen[t]) {
              seen[t] = 1;
              stack.push_back(t);
            }
          }
        }
      } else {
        for (std::size_t t : radj[s]) {
          if (!seen[t]) {
            seen[t] = 1;
            stack.push_back(t);
          }
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  if (!reach(true) || !reach(false)) {
    throw SpecError("markov source: degenerate chain (context graph not strongly connected)");
  }

  // period = gcd of level offsets over edges (BFS from state 0)
  {
    std::vector<std::int64_t> level(S, -1);
    std::vector<std::size_t> queue{0};
    level[0] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      std::size_t s = queue[qi];
      for (Symbol a = 0; a < D; ++a) {
        if (rows_[s].probs[a] <= 0.0) continue;
        std::size_t t = next_state(s, a);
        if (level[t] < 0) {
          level[t] = level[s] + 1;
          queue.push_back(t);
        }
      }
    }
    std::uint64_t g = 0;
    for (std::size_t s = 0; s < S; ++s) {
      for (Symbol a = 0; a < D; ++a) {
        if (rows_[s].probs[a] <= 0.0) continue;
        std::size_t t = next_state(s, a);
        std::int64_t diff = level[s] + 1 - level[t];
        g = std::gcd(g, static_cast<std::uint64_t>(diff < 0 ? -diff : diff));
      }
    }
    period_ = g == 0 ? 1 : static_cast<std::uint32_t>(g);
  }

  std::vector<std::vector<double>> trans(S, std::vector<double>(S, 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    for (Symbol a = 0; a < D; ++a) trans[s][next_state(s, a)] += rows_[s].probs[a];
  }
  stationary_ = solve_stationary(trans);
  residual_ = 0.0;
  for (std::size_t t = 0; t < S; ++t) {
    double v = -stationary_[t];
    for (std::size_t s = 0; s < S; ++s) v += stationary_[s] * trans[s][t];
    residual_ = std::max(residual_, std::abs(v));
  }
  if (residual_ > 1e-10) throw SpecError("markov source: stationary residual above 1e-10");
  for (double& p : stationary_) p = std::max(p, 0.0);
}

std::size_t MarkovSource::pack_context(std::span<const Symbol> ctx) const {
  std::size_t s = 0;
  for (Symbol c : ctx) s = s * alphabet_.size + c;
  return s;
}

SymbolSeq MarkovSource::sample(std::uint64_t n, Seed seed) const {
  Rng rng(seed);
  const std::size_t D = alphabet_.size;
  const std::size_t shift_mod = order_ > 0 ? ipow(D, order_ - 1) : 1;
  std::size_t ctx = order_ > 0 ? rng.sample_weights(stationary_) : 0;
  SymbolSeq out(alphabet_, {});
  out.data.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Symbol a = rng.sample(rows_[ctx]);
    out.data.push_back(a);
    if (order_ > 0) ctx = (ctx % shift_mod) * D + a;
  }
  return out;
}

double MarkovSource::entropy_rate() const {
  double h = 0.0;
  for (std::size_t s = 0; s < rows_.size(); ++s) h += stationary_[s] * entropy_bits(rows_[s]);
  return h;
}

double MarkovSource::block_prob(std::span<const Symbol> block) const {
  const std::size_t D = alphabet_.size;
  if (block.empty()) return 1.0;
  if (block.size() <= order_) {
    // stationary marginal of the trailing coordinates of the context
    double p = 0.0;
    const std::size_t m = block.size();
    const std::size_t mod = ipow(D, m);
    const std::size_t want = pack_context(block);
    for (std::size_t s = 0; s < stationary_.size(); ++s) {
      if (s % mod == want) p += stationary_[s];
    }
    return p;
  }
  double p = block_prob(block.subspan(0, order_));
  std::size_t ctx = pack_context(block.subspan(0, order_));
  const std::size_t shift_mod = order_ > 0 ? ipow(D, order_ - 1) : 1;
  for (std::size_t i = order_; i < block.size(); ++i) {
    p *= rows_[ctx].probs[block[i]];
    if (order_ > 0) ctx = (ctx % shift_mod) * D + block[i];
  }
  return p;
}

double MarkovSource::order_entropy(std::uint32_t k) const {
  if (k >= order_) return entropy_rate();
  const std::size_t D = alphabet_.size;
  if (ipow(D, k + 1) > 1u << 22) throw SpecError("order_entropy: block space too large");
  double h = 0.0;
  std::vector<Symbol> block(k + 1, 0);
  const std::size_t blocks = ipow(D, k);
  for (std::size_t u = 0; u < blocks; ++u) {
    std::size_t rest = u;
    for (std::uint32_t i = 0; i < k; ++i) {
      block[k - 1 - i] = static_cast<Symbol>(rest % D);
      rest /= D;
    }
    double pu = block_prob({block.data(), k});
    if (pu <= 0.0) continue;
    for (Symbol a = 0; a < D; ++a) {
      block[k] = a;
      double pua = block_prob({block.data(), k + 1});
      if (pua <= 0.0) continue;
      h -= pua * std::log2(pua / pu);
    }
  }
  return h;
}

double MarkovSource::unpredictability_rate() const {
  double u = 0.0;
  for (std::size_t s = 0; s < rows_.size(); ++s) {
    double mx = *std::max_element(rows_[s].probs.begin(), rows_[s].probs.end());
    u += stationary_[s] * (1.0 - mx);
  }
  return u;
}

Dist MarkovSource::true_conditional(std::span<const Symbol> prefix) const {
  if (prefix.size() >= order_) {
    return rows_[pack_context(prefix.subspan(prefix.size() - order_, order_))];
  }
  double pp = block_prob(prefix);
  if (pp <= 0.0) throw SpecError("true_conditional: prefix has zero probability");
  std::vector<Symbol> ext(prefix.begin(), prefix.end());
  ext.push_back(0);
  std::vector<double> mass(alphabet_.size, 0.0);
  for (Symbol a = 0; a < alphabet_.size; ++a) {
    ext.back() = a;
    mass[a] = block_prob(ext) / pp;
  }
  return make_dist(alphabet_, mass);
}

Dist SourceModel::conditional() const {
  return src_->true_conditional({context_.data(), context_.size()});
}

void SourceModel::step(Symbol a) {
  if (a >= src_->alphabet().size) throw SpecError("source model: symbol out of alphabet");
  context_.push_back(a);
  if (context_.size() > src_->order()) context_.erase(context_.begin());
  ++n_;
}

// ---------------------------------------------------------------------------
// HMM

HmmSource::HmmSource(MarkovSource hidden, std::vector<Dist> emission)
    : hidden_(std::move(hidden)), emission_(std::move(emission)) {
  if (emission_.size() != hidden_.alphabet().size) {
    throw SpecError("hmm: need one emission row per hidden symbol");
  }
  obs_alphabet_ = emission_[0].alphabet;
  for (const Dist& e : emission_) {
    if (!(e.alphabet == obs_alphabet_)) throw SpecError("hmm: emission alphabet mismatch");
  }
}

SymbolSeq HmmSource::sample(std::uint64_t n, Seed seed) const {
  Rng rng(seed);
  const std::size_t D = hidden_.alphabet().size;
  const std::uint32_t order = hidden_.order();
  const std::size_t shift_mod = order > 0 ? ipow(D, order - 1) : 1;
  std::size_t ctx = order > 0 ? rng.sample_weights(hidden_.stationary()) : 0;
  SymbolSeq out(obs_alphabet_, {});
  out.data.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Symbol h = rng.sample(hidden_.row(ctx));
    out.data.push_back(rng.sample(emission_[h]));
    if (order > 0) ctx = (ctx % shift_mod) * D + h;
  }
  return out;
}

HmmFilterModel::HmmFilterModel(const HmmSource& src) : src_(&src) {
  belief_ = src.hidden().stationary();
}

Dist HmmFilterModel::conditional() const {
  const MarkovSource& hid = src_->hidden();
  const std::uint32_t Dh = hid.alphabet().size;
  const std::uint32_t Do = src_->observed_alphabet().size;
  std::vector<double> mass(Do, 0.0);
  for (std::size_t s = 0; s < belief_.size(); ++s) {
    if (belief_[s] == 0.0) continue;
    for (Symbol h = 0; h < Dh; ++h) {
      double w = belief_[s] * hid.row(s).probs[h];
      if (w == 0.0) continue;
      for (Symbol a = 0; a < Do; ++a) mass[a] += w * src_->emission_[h].probs[a];
    }
  }
  return make_dist(src_->observed_alphabet(), mass);
}

void HmmFilterModel::step(Symbol a) {
  const MarkovSource& hid = src_->hidden();
  const std::size_t D = hid.alphabet().size;
  const std::uint32_t order = hid.order();
  const std::size_t shift_mod = order > 0 ? ipow(D, order - 1) : 1;
  std::vector<double> next(belief_.size(), 0.0);
  for (std::size_t s = 0; s < belief_.size(); ++s) {
    if (belief_[s] == 0.0) continue;
    for (Symbol h = 0; h < D; ++h) {
      double w = belief_[s] * hid.row(s).probs[h] * src_->emission_[h].probs[a];
      if (w == 0.0) continue;
      std::size_t t = order > 0 ? (s % shift_mod) * D + h : 0;
      next[t] += w;
    }
  }
  double total = std::accumulate(next.begin(), next.end(), 0.0);
  if (total <= 0.0) throw SpecError("hmm filter: observation has zero probability");
  for (double& v : next) v /= total;
  belief_ = std::move(next);
  ++n_;
}

namespace {

MonteCarloInterval pooled_interval(const std::vector<double>& per_seed_means) {
  MonteCarloInterval iv;
  const std::size_t s = per_seed_means.size();
  double mean = std::accumulate(per_seed_means.begin(), per_seed_means.end(), 0.0) / s;
  double var = 0.0;
  for (double v : per_seed_means) var += (v - mean) * (v - mean);
  var = s > 1 ? var / (s - 1) : 0.0;
  double se = std::sqrt(var / s);
  iv.mean = mean;
  iv.lo = mean - 3.0 * se;
  iv.hi = mean + 3.0 * se;
  return iv;
}

}  // namespace

MonteCarloInterval hmm_entropy_rate_mc(const HmmSource& src, std::uint64_t n,
                                       std::span<const Seed> seeds) {
  std::vector<double> means;
  for (Seed seed : seeds) {
    SymbolSeq x = src.sample(n, seed);
    HmmFilterModel filter(src);
    double bits = 0.0;
    for (Symbol a : x.data) {
      bits -= std::log2(filter.conditional()[a]);
      filter.step(a);
    }
    means.push_back(bits / n);
  }
  return pooled_interval(means);
}

MonteCarloInterval hmm_unpredictability_mc(const HmmSource& src, std::uint64_t n,
                                           std::span<const Seed> seeds) {
  std::vector<double> means;
  for (Seed seed : seeds) {
    SymbolSeq x = src.sample(n, seed);
    HmmFilterModel filter(src);
    double sum = 0.0;
    for (Symbol a : x.data) {
      Dist d = filter.conditional();
      sum += 1.0 - *std::max_element(d.probs.begin(), d.probs.end());
      filter.step(a);
    }
    means.push_back(sum / n);
  }
  return pooled_interval(means);
}

// ---------------------------------------------------------------------------
// Zoo file

const MarkovSource& Zoo::get(const std::string& id) const {
  auto it = sources.find(id);
  if (it == sources.end()) throw SpecError("unknown source id: " + id);
  return it->second;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok) {
  if (tok.find('/') != std::string::npos) {
    Rational r = Rational::parse(tok);
    return r.value();
  }
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw SpecError("bad number: " + tok);
    return v;
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception&) {
    throw SpecError("bad number: " + tok);
  }
}

struct PendingSource {
  std::string name;
  std::uint32_t alphabet = 0;
  bool has_order = false;
  std::uint32_t order = 0;
  std::map<std::size_t, std::vector<double>> rows;  // packed context -> weights
};

MarkovSource finish_source(const PendingSource& p) {
  if (p.alphabet < 2) throw SpecError("zoo source " + p.name + ": missing or bad alphabet");
  if (!p.has_order) throw SpecError("zoo source " + p.name + ": missing order");
  Alphabet A(p.alphabet);
  std::size_t contexts = 1;
  for (std::uint32_t i = 0; i < p.order; ++i) contexts *= p.alphabet;
  std::vector<Dist> rows;
  rows.reserve(contexts);
  for (std::size_t c = 0; c < contexts; ++c) {
    auto it = p.rows.find(c);
    if (it == p.rows.end()) {
      throw SpecError("zoo source " + p.name + ": missing a transition row");
    }
    double sum = std::accumulate(it->second.begin(), it->second.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) {
      throw SpecError("zoo source " + p.name + ": transition row does not sum to 1");
    }
    rows.push_back(make_dist(A, it->second));
  }
  if (p.rows.size() != contexts) {
    throw SpecError("zoo source " + p.name + ": unexpected transition row");
  }
  try {
    return MarkovSource(A, p.order, std::move(rows));
  } catch (const SpecError& e) {
    throw SpecError("zoo source " + p.name + ": " + e.what());
  }
}

}  // namespace

Zoo parse_zoo(std::istream& in) {
  Zoo zoo;
  PendingSource cur;
  bool open = false;
  auto flush = [&]() {
    if (!open) return;
    zoo.sources.emplace(cur.name, finish_source(cur));
    cur = PendingSource{};
    open = false;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw SpecError("zoo: malformed section at line " + std::to_string(lineno));
      std::istringstream head(line.substr(1, line.size() - 2));
      std::string kind, name;
      head >> kind >> name;
      if (kind != "source" || name.empty()) {
        throw SpecError("zoo: expected [source NAME] at line " + std::to_string(lineno));
      }
      flush();
      cur.name = name;
      open = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos || !open) {
      throw SpecError("zoo: expected key = value at line " + std::to_string(lineno));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "alphabet") {
      cur.alphabet = static_cast<std::uint32_t>(parse_number(value));
    } else if (key == "order") {
      cur.order = static_cast<std::uint32_t>(parse_number(value));
      cur.has_order = true;
    } else if (key == "row" || key.rfind("row ", 0) == 0) {
      if (cur.alphabet < 2 || !cur.has_order) {
        throw SpecError("zoo: alphabet and order must precede rows (line " + std::to_string(lineno) + ")");
      }
      std::size_t packed = 0;
      std::vector<Symbol> syms;
      if (key.size() > 3) {
        std::string ctx = trim(key.substr(4));
        std::istringstream cs(ctx);
        std::string tok;
        while (std::getline(cs, tok, ',')) {
          tok = trim(tok);
          if (!tok.empty()) syms.push_back(static_cast<Symbol>(std::stoul(tok)));
        }
        for (Symbol sym : syms) {
          if (sym >= cur.alphabet) {
            throw SpecError("zoo: context symbol out of range at line " + std::to_string(lineno));
          }
          packed = packed * cur.alphabet + sym;
        }
      }
      if (syms.size() != cur.order) {
        throw SpecError("zoo: context length != order at line " + std::to_string(lineno));
      }
      std::istringstream vs(value);
      std::string tok;
      std::vector<double> weights;
      while (vs >> tok) weights.push_back(parse_number(tok));
      if (weights.size() != cur.alphabet) {
        throw SpecError("zoo: row width != alphabet at line " + std::to_string(lineno));
      }
      if (!cur.rows.emplace(packed, std::move(weights)).second) {
        throw SpecError("zoo: duplicate row at line " + std::to_string(lineno));
      }
    } else {
      throw SpecError("zoo: unknown key '" + key + "' at line " + std::to_string(lineno));
    }
  }
  flush();
  if (zoo.sources.empty()) throw SpecError("zoo: no sources defined");
  return zoo;
}

Zoo load_zoo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open zoo file: " + path);
  return parse_zoo(in);
}

}  // namespace ppmu
