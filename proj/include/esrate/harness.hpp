#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "esrate/engine.hpp"
#include "esrate/objectives.hpp"
#include "esrate/rates.hpp"

#include "json.hpp"

namespace esrate {

enum class Aggregation { Mean, Pooled };

struct ExperimentConfig {
  std::vector<std::string> objectives{"h1"};  // h1 | h2 | h3 | perturbed
  std::vector<std::size_t> dims{10};
  std::vector<int> kappas{0};
  std::vector<AlphaRule> alpha_rules{AlphaRule::Const};
  double c = 1.0;
  int trials = 10;
  std::uint64_t base_seed = 1;
  std::optional<std::int64_t> budget;  // unset: 10000 + 1000 d
  double f_floor = kDefaultFFloor;
  double window_frac = 0.1;
  RateSeries series = RateSeries::LogDist;
  Aggregation aggregation = Aggregation::Mean;
  // perturbed kind: base family and the wave term
  HessianFamily perturb_family = HessianFamily::H1;
  double perturb_M = 0.5;
  double perturb_omega = 1.0;
  std::string csv = "results.csv";
  std::string plot = "rates.svg";
  bool plot_scaled = true;  // y = scaled_rate, else cr_hat

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Cell {
  std::string objective;
  std::size_t dim;
  int kappa;
  AlphaRule rule;
};

//! Objectives outermost, then dims, kappas and alpha rules.
std::vector<Cell> expand_grid(const ExperimentConfig& cfg);

ObjectiveSpec make_cell_objective(const ExperimentConfig& cfg, const Cell& cell);

struct ResultRow {
  std::string objective;
  std::size_t dim = 0;
  int kappa = 0;
  std::string alpha_rule;
  std::string seed;  // decimal trial seed, or "aggregate"
  double cr_hat = 0.0;
  double std_error = 0.0;
  double scaled_rate = 0.0;
  std::string stop_reason;  // budget | f_floor | aggregate | error: ...
  double wall_ms = 0.0;

  bool is_aggregate() const { return seed == "aggregate"; }
};

struct ResultTable {
  std::vector<ResultRow> rows;

  std::vector<ResultRow> aggregates() const;
  std::vector<ResultRow> trials() const;
};

//! Per cell: every trial row in trial order, then one aggregate row.
ResultTable run_experiment(const ExperimentConfig& cfg);

inline constexpr const char* kCsvHeader =
    "objective,d,kappa,alpha_rule,seed,cr_hat,stderr,scaled_rate,stop_reason,wall_ms";

void write_csv(std::ostream& out, const ResultTable& table);
void emit_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_csv(std::istream& in);

//! Log-log SVG, one panel per (objective, alpha rule), one series per kappa.
void write_plot(std::ostream& out, const ResultTable& table, bool scaled);
void emit_plot(const ResultTable& table, const std::filesystem::path& path, bool scaled);

}  // namespace esrate
