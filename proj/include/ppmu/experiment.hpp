// Experiment harness: structured-text experiment specs, seeded trials over
// zoo sources, machine-readable result rows (CSV or JSON).
#pragma once

#include <iosfwd>
#include <optional>

#include "ppmu/core.hpp"
#include "ppmu/ppm.hpp"
#include "ppmu/sources.hpp"

namespace ppmu {

enum class Metric { rate, error, cesaro_tv, drift, bounds };

std::string metric_name(Metric m);

struct ExperimentSpec {
  std::string id;
  std::string source_id;
  PpmMode mode = PpmMode::capped;
  std::uint32_t max_order = 8;
  Rational alpha{1, 1};
  std::uint64_t n = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> checkpoints;  // default: decades from 100 to n
  std::vector<Metric> metrics;
  std::optional<double> tolerance;  // pass flags for rate/error when present

  PpmConfig model_config(const Alphabet& alphabet) const;
};

/// Parses experiment sections ([experiment NAME] with key = value lines).
/// Collects every violation before failing.
std::vector<ExperimentSpec> parse_experiment_file(std::istream& in);

/// Validates specs against a zoo; returns every violation (empty = valid).
std::vector<std::string> validate_experiments(std::span<const ExperimentSpec> specs, const Zoo& zoo);

struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint = 0;
  std::string metric;
  double value = 0.0;
  std::optional<double> reference;  // h_P, u_P or 0; absent when n/a
  std::optional<bool> pass;         // only where applicable
};

/// Runs all trials (source, seed) concurrently; rows come back in a fixed
/// sort order so reruns are byte-identical.
std::vector<ResultRow> run_experiments(std::span<const ExperimentSpec> specs, const Zoo& zoo,
                                       unsigned threads = 0);

std::string rows_to_csv(std::span<const ResultRow> rows);
std::string rows_to_json(std::span<const ResultRow> rows);

std::vector<std::uint64_t> default_checkpoints(std::uint64_t n);

}  // namespace ppmu
