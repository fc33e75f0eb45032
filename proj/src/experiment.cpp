#include "ppmu/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ppmu/estimators.hpp"
#include "ppmu/predict.hpp"

namespace ppmu {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::rate: return "rate";
    case Metric::error: return "error";
    case Metric::cesaro_tv: return "cesaro_tv";
    case Metric::drift: return "drift";
    case Metric::bounds: return "bounds";
  }
  return "?";
}

static std::optional<Metric> metric_from_name(const std::string& s) {
  if (s == "rate") return Metric::rate;
  if (s == "error") return Metric::error;
  if (s == "cesaro_tv") return Metric::cesaro_tv;
  if (s == "drift") return Metric::drift;
  if (s == "bounds") return Metric::bounds;
  return std::nullopt;
}

PpmConfig ExperimentSpec::model_config(const Alphabet& alphabet) const {
  PpmConfig cfg;
  cfg.alphabet = alphabet;
  cfg.mode = mode;
  cfg.max_order = max_order;
  cfg.alpha = alpha;
  cfg.full_length_limit = std::max<std::uint64_t>(n, 4096);
  return cfg;
}

std::vector<std::uint64_t> default_checkpoints(std::uint64_t n) {
  std::vector<std::uint64_t> cps;
  for (std::uint64_t c = 100; c < n; c *= 10) cps.push_back(c);
  if (n > 0 && (cps.empty() || cps.back() != n)) cps.push_back(n);
  return cps;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::vector<ExperimentSpec> parse_experiment_file(std::istream& in) {
  std::vector<ExperimentSpec> specs;
  std::vector<std::string> problems;
  ExperimentSpec cur;
  bool open = false;
  auto flush = [&]() {
    if (open) specs.push_back(cur);
    cur = ExperimentSpec{};
    open = false;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto where = [&]() { return " (line " + std::to_string(lineno) + ")"; };
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back("malformed section header" + where());
        continue;
      }
      std::istringstream head(line.substr(1, line.size() - 2));
      std::string kind, name;
      head >> kind >> name;
      if (kind != "experiment" || name.empty()) {
        problems.push_back("expected [experiment NAME]" + where());
        continue;
      }
      flush();
      cur.id = name;
      open = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos || !open) {
      problems.push_back("expected key = value inside an experiment section" + where());
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "source") {
        cur.source_id = value;
      } else if (key == "mode") {
        if (value == "full") cur.mode = PpmMode::full;
        else if (value == "capped") cur.mode = PpmMode::capped;
        else problems.push_back("mode must be full or capped" + where());
      } else if (key == "max_order") {
        cur.max_order = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "alpha") {
        cur.alpha = Rational::parse(value);
      } else if (key == "n") {
        cur.n = std::stoull(value);
      } else if (key == "seeds") {
        for (const auto& tok : split_ws(value)) cur.seeds.push_back(std::stoull(tok));
      } else if (key == "checkpoints") {
        for (const auto& tok : split_ws(value)) cur.checkpoints.push_back(std::stoull(tok));
      } else if (key == "metrics") {
        for (const auto& tok : split_ws(value)) {
          auto m = metric_from_name(tok);
          if (!m) problems.push_back("unknown metric '" + tok + "'" + where());
          else cur.metrics.push_back(*m);
        }
      } else if (key == "tolerance") {
        cur.tolerance = std::stod(value);
      } else {
        problems.push_back("unknown key '" + key + "'" + where());
      }
    } catch (const std::exception&) {
      problems.push_back("bad value for '" + key + "'" + where());
    }
  }
  flush();
  if (specs.empty()) problems.push_back("no [experiment ...] sections found");
  if (!problems.empty()) {
    std::string all = "experiment spec invalid:";
    for (const auto& p : problems) all += "\n  - " + p;
    throw SpecError(all);
  }
  return specs;
}

std::vector<std::string> validate_experiments(std::span<const ExperimentSpec> specs, const Zoo& zoo) {
  std::vector<std::string> problems;
  for (const auto& spec : specs) {
    auto ctx = [&](const std::string& msg) { return "experiment " + spec.id + ": " + msg; };
    if (spec.source_id.empty()) problems.push_back(ctx("missing source"));
    else if (!zoo.sources.count(spec.source_id)) {
      problems.push_back(ctx("unknown source id '" + spec.source_id + "'"));
    }
    if (spec.n == 0) problems.push_back(ctx("n must be positive"));
    if (spec.seeds.empty()) problems.push_back(ctx("needs at least one seed"));
    if (spec.metrics.empty()) problems.push_back(ctx("needs at least one metric"));
    if (spec.alpha.num <= 0) problems.push_back(ctx("alpha must be positive"));
    auto cps = spec.checkpoints;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (cps[i] == 0 || cps[i] > spec.n) {
        problems.push_back(ctx("checkpoint " + std::to_string(cps[i]) + " outside [1, n]"));
      }
      if (i > 0 && cps[i] <= cps[i - 1]) {
        problems.push_back(ctx("checkpoints must be strictly increasing"));
      }
    }
    for (Metric m : spec.metrics) {
      if (m == Metric::bounds && spec.mode != PpmMode::full) {
        problems.push_back(ctx("metric 'bounds' checks the joint-measure bound, full mode only"));
      }
    }
    if (spec.mode == PpmMode::full && spec.n > 4096) {
      problems.push_back(ctx("full mode is restricted to n <= 4096"));
    }
  }
  return problems;
}

namespace {

std::vector<ResultRow> run_trial(const ExperimentSpec& spec, const MarkovSource& source,
                                 std::uint64_t seed) {
  std::vector<ResultRow> rows;
  std::vector<std::uint64_t> cps =
      spec.checkpoints.empty() ? default_checkpoints(spec.n) : spec.checkpoints;
  PpmConfig cfg = spec.model_config(source.alphabet());
  SymbolSeq x = source.sample(spec.n, Seed{seed});
  double h = source.entropy_rate();
  double u = source.unpredictability_rate();

  auto emit = [&](Metric m, std::uint64_t cp, double value, std::optional<double> ref,
                  std::optional<bool> pass) {
    rows.push_back({spec.id, seed, cp, metric_name(m), value, ref, pass});
  };

  for (Metric metric : spec.metrics) {
    switch (metric) {
      case Metric::rate: {
        PpmModel model(cfg);
        std::size_t cp = 0;
        for (std::uint64_t i = 0; i < spec.n && cp < cps.size(); ++i) {
          model.step(x[i]);
          if (i + 1 == cps[cp]) {
            double rate = model.total_neg_log2().neg_log2 / static_cast<double>(i + 1);
            std::optional<bool> pass;
            if (spec.tolerance) pass = std::abs(rate - h) <= *spec.tolerance;
            emit(metric, i + 1, rate, h, pass);
            ++cp;
          }
        }
        break;
      }
      case Metric::error: {
        PpmModel model(cfg);
        InducedPredictor predictor(model);
        ErrorTrace trace = run_prediction(predictor, x, cps);
        for (const auto& c : trace.checkpoints) {
          std::optional<bool> pass;
          if (spec.tolerance) pass = std::abs(c.rate - u) <= *spec.tolerance;
          emit(metric, c.n, c.rate, u, pass);
        }
        break;
      }
      case Metric::cesaro_tv: {
        PpmModel model(cfg);
        Series s = cesaro_tv(model, source, spec.n, Seed{seed}, cps);
        for (const auto& [cp, v] : s.points) emit(metric, cp, v, 0.0, std::nullopt);
        break;
      }
      case Metric::drift: {
        PpmModel model(cfg);
        Series s = martingale_drift(model, source, spec.n, Seed{seed}, cps);
        for (const auto& [cp, v] : s.points) emit(metric, cp, v, 0.0, std::nullopt);
        break;
      }
      case Metric::bounds: {
        BoundsReport rep = check_ppm_bounds(x, cfg);
        std::size_t cp = 0;
        double worst = -1e300;
        bool ok = true;
        for (std::uint64_t i = 0; i < rep.rows.size() && cp < cps.size(); ++i) {
          const auto& row = rep.rows[i];
          worst = std::max(worst, row.cond_lhs - row.cond_rhs);
          worst = std::max(worst, row.joint_lhs - row.joint_rhs);
          ok = ok && row.pass;
          if (row.n == cps[cp]) {
            emit(metric, row.n, worst, 0.0, ok);
            ++cp;
          }
        }
        break;
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiments(std::span<const ExperimentSpec> specs, const Zoo& zoo,
                                       unsigned threads) {
  auto problems = validate_experiments(specs, zoo);
  if (!problems.empty()) {
    std::string all = "experiment spec invalid:";
    for (const auto& p : problems) all += "\n  - " + p;
    throw SpecError(all);
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  struct Trial {
    const ExperimentSpec* spec;
    std::uint64_t seed;
  };
  std::vector<Trial> trials;
  for (const auto& spec : specs) {
    for (std::uint64_t seed : spec.seeds) trials.push_back({&spec, seed});
  }

  std::vector<std::vector<ResultRow>> results(trials.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= trials.size()) return;
      const Trial& t = trials[idx];
      results[idx] = run_trial(*t.spec, zoo.get(t.spec->source_id), t.seed);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads && i < trials.size(); ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<ResultRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment, a.seed, a.metric, a.checkpoint) <
           std::tie(b.experiment, b.seed, b.metric, b.checkpoint);
  });
  return rows;
}

std::string rows_to_csv(std::span<const ResultRow> rows) {
  std::ostringstream out;
  out << "experiment,seed,checkpoint,metric,value,reference,pass\n";
  for (const auto& r : rows) {
    out << r.experiment << "," << r.seed << "," << r.checkpoint << "," << r.metric << ","
        << format_g9(r.value) << ",";
    if (r.reference) out << format_g9(*r.reference);
    out << ",";
    if (r.pass) out << (*r.pass ? "true" : "false");
    out << "\n";
  }
  return out.str();
}

std::string rows_to_json(std::span<const ResultRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json obj;
    obj["experiment"] = r.experiment;
    obj["seed"] = r.seed;
    obj["checkpoint"] = r.checkpoint;
    obj["metric"] = r.metric;
    obj["value"] = r.value;
    if (r.reference) obj["reference"] = *r.reference;
    if (r.pass) obj["pass"] = *r.pass;
    arr.push_back(obj);
  }
  return arr.dump(2) + "\n";
}

}  // namespace ppmu
