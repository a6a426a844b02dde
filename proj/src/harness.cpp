#include "esrate/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "esrate/error.hpp"
#include "esrate/format.hpp"
#include "esrate/parallel.hpp"
#include "esrate/rng.hpp"

namespace esrate {

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (objectives.empty() || dims.empty() || kappas.empty() || alpha_rules.empty()) {
    throw InvalidInput("experiment grid is empty");
  }
  for (const auto& o : objectives) {
    if (o != "h1" && o != "h2" && o != "h3" && o != "perturbed") {
      throw InvalidInput("unknown objective kind '" + o + "' (h1|h2|h3|perturbed)");
    }
  }
  for (auto d : dims) {
    if (d < 1) throw InvalidInput("dimensions must be >= 1");
  }
  for (int k : kappas) {
    if (k < 0) throw InvalidInput("kappa must be >= 0");
  }
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  if (budget && *budget < 1) throw InvalidInput("budget must be >= 1");
  if (!(f_floor > 0.0)) throw InvalidInput("f_floor must be > 0");
  if (!(window_frac > 0.0 && window_frac < 1.0)) throw InvalidInput("window_frac must lie in (0, 1)");
  for (auto rule : alpha_rules) {
    for (auto d : dims) alpha_preset(rule, c, d);
  }
  if (std::find(objectives.begin(), objectives.end(), "perturbed") != objectives.end()) {
    if (!(perturb_M >= 0.0) || !(perturb_M < 1.0)) {
      throw InvalidInput("perturb.M must lie in [0, 1) so that L = 1 - M stays positive");
    }
    if (!(perturb_omega > 0.0)) throw InvalidInput("perturb.omega must be > 0");
  }
}

namespace {

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "objectives", "dims",      "kappas",  "alpha_rules", "c",    "trials",
      "base_seed",  "budget",    "f_floor", "window_frac", "series", "aggregation",
      "perturb",    "csv",       "plot",    "plot_y"};
  if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InvalidInput("unknown config field '" + key + "'");
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("objectives")) cfg.objectives = scalar_or_list<std::string>(j.at("objectives"));
    if (j.contains("dims")) cfg.dims = scalar_or_list<std::size_t>(j.at("dims"));
    if (j.contains("kappas")) cfg.kappas = scalar_or_list<int>(j.at("kappas"));
    if (j.contains("alpha_rules")) {
      cfg.alpha_rules.clear();
      for (const auto& r : scalar_or_list<std::string>(j.at("alpha_rules"))) {
        cfg.alpha_rules.push_back(parse_alpha_rule(r));
      }
    }
    cfg.c = j.value("c", cfg.c);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    if (j.contains("budget") && !j.at("budget").is_null()) {
      cfg.budget = j.at("budget").get<std::int64_t>();
    }
    cfg.f_floor = j.value("f_floor", cfg.f_floor);
    cfg.window_frac = j.value("window_frac", cfg.window_frac);
    if (j.contains("series")) cfg.series = parse_series(j.at("series").get<std::string>());
    if (j.contains("aggregation")) {
      const auto a = j.at("aggregation").get<std::string>();
      if (a == "mean") {
        cfg.aggregation = Aggregation::Mean;
      } else if (a == "pooled") {
        cfg.aggregation = Aggregation::Pooled;
      } else {
        throw InvalidInput("aggregation must be 'mean' or 'pooled'");
      }
    }
    if (j.contains("perturb")) {
      const auto& p = j.at("perturb");
      cfg.perturb_family = parse_family(p.value("family", std::string("h1")));
      cfg.perturb_M = p.value("M", cfg.perturb_M);
      cfg.perturb_omega = p.value("omega", cfg.perturb_omega);
    }
    cfg.csv = j.value("csv", cfg.csv);
    cfg.plot = j.value("plot", cfg.plot);
    if (j.contains("plot_y")) {
      const auto y = j.at("plot_y").get<std::string>();
      if (y != "scaled_rate" && y != "cr_hat") throw InvalidInput("plot_y must be scaled_rate or cr_hat");
      cfg.plot_scaled = y == "scaled_rate";
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> rules;
  for (auto r : cfg.alpha_rules) rules.emplace_back(alpha_rule_name(r));
  nlohmann::json j{{"objectives", cfg.objectives},
                   {"dims", cfg.dims},
                   {"kappas", cfg.kappas},
                   {"alpha_rules", rules},
                   {"c", cfg.c},
                   {"trials", cfg.trials},
                   {"base_seed", cfg.base_seed},
                   {"f_floor", cfg.f_floor},
                   {"window_frac", cfg.window_frac},
                   {"series", series_name(cfg.series)},
                   {"aggregation", cfg.aggregation == Aggregation::Pooled ? "pooled" : "mean"},
                   {"perturb",
                    {{"family", family_name(cfg.perturb_family)},
                     {"M", cfg.perturb_M},
                     {"omega", cfg.perturb_omega}}},
                   {"csv", cfg.csv},
                   {"plot", cfg.plot},
                   {"plot_y", cfg.plot_scaled ? "scaled_rate" : "cr_hat"}};
  j["budget"] = cfg.budget ? nlohmann::json(*cfg.budget) : nlohmann::json(nullptr);
  return j;
}

std::vector<Cell> expand_grid(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (const auto& o : cfg.objectives) {
    for (auto d : cfg.dims) {
      for (int k : cfg.kappas) {
        for (auto r : cfg.alpha_rules) cells.push_back({o, d, k, r});
      }
    }
  }
  return cells;
}

ObjectiveSpec make_cell_objective(const ExperimentConfig& cfg, const Cell& cell) {
  if (cell.objective == "perturbed") {
    return perturbed_family(cfg.perturb_family, cell.dim, cell.kappa, cfg.perturb_M,
                            cfg.perturb_omega);
  }
  return hessian_family(parse_family(cell.objective), cell.dim, cell.kappa);
}

// ---------------------------------------------------------------------------
// Running

std::vector<ResultRow> ResultTable::aggregates() const {
  std::vector<ResultRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [](const ResultRow& r) { return r.is_aggregate(); });
  return out;
}

std::vector<ResultRow> ResultTable::trials() const {
  std::vector<ResultRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [](const ResultRow& r) { return !r.is_aggregate(); });
  return out;
}

namespace {

double normalize(double cr, const ObjectiveSpec& spec) {
  RateEstimate e;
  e.cr_hat = cr;
  return spec.is_quadratic() ? scaled_rate(e, spec) : scaled_rate_class(e, spec);
}

std::string sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

struct TrialOutput {
  ResultRow row;
  bool ok = false;
  RateEstimate estimate;
  Trajectory traj;  // kept only for pooled aggregation
};

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto cells = expand_grid(cfg);
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialOutput> outputs(cells.size() * trials);

  parallel_for(outputs.size(), [&](std::size_t job) {
    const std::size_t ci = job / trials;
    const std::size_t ti = job % trials;
    const Cell& cell = cells[ci];
    TrialOutput& out = outputs[job];
    const std::uint64_t seed = derive_seed(cfg.base_seed, ci, ti);
    out.row = ResultRow{cell.objective, cell.dim, cell.kappa, std::string(alpha_rule_name(cell.rule)),
                        std::to_string(seed), std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN(), "", 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ObjectiveSpec spec = make_cell_objective(cfg, cell);
      const EsParams params = alpha_preset(cell.rule, cfg.c, cell.dim);
      const std::int64_t budget = cfg.budget.value_or(default_budget(cell.dim));
      Trajectory traj = run(spec, params, init_default(spec, seed), budget, cfg.f_floor, seed);
      out.row.stop_reason = std::string(stop_reason_name(traj.stop_reason));
      out.estimate = estimate_cr(traj, cfg.window_frac, cfg.series);
      out.row.cr_hat = out.estimate.cr_hat;
      out.row.std_error = out.estimate.std_error;
      out.row.scaled_rate = normalize(out.estimate.cr_hat, spec);
      out.ok = true;
      if (cfg.aggregation == Aggregation::Pooled) out.traj = std::move(traj);
    } catch (const std::exception& e) {
      out.row.stop_reason = sanitize(std::string("error: ") + e.what());
    }
    out.row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });

  ResultTable table;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    std::vector<RateEstimate> ok;
    std::vector<Trajectory> trajs;
    double wall = 0.0;
    for (std::size_t ti = 0; ti < trials; ++ti) {
      auto& out = outputs[ci * trials + ti];
      table.rows.push_back(out.row);
      wall += out.row.wall_ms;
      if (!out.ok) continue;
      ok.push_back(out.estimate);
      if (cfg.aggregation == Aggregation::Pooled) trajs.push_back(std::move(out.traj));
    }
    const Cell& cell = cells[ci];
    ResultRow agg{cell.objective, cell.dim, cell.kappa, std::string(alpha_rule_name(cell.rule)),
                  "aggregate", std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN(), "aggregate", wall};
    if (!ok.empty()) {
      const RateEstimate r = cfg.aggregation == Aggregation::Pooled
                                 ? aggregate_pooled(trajs, cfg.window_frac, cfg.series)
                                 : aggregate_mean(ok);
      agg.cr_hat = r.cr_hat;
      agg.std_error = r.std_error;
      agg.scaled_rate = normalize(r.cr_hat, make_cell_objective(cfg, cell));
    }
    table.rows.push_back(agg);
  }
  return table;
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(std::ostream& out, const ResultTable& table) {
  out << kCsvHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.objective << ',' << r.dim << ',' << r.kappa << ',' << r.alpha_rule << ',' << r.seed
        << ',' << format_double(r.cr_hat) << ',' << format_double(r.std_error) << ','
        << format_double(r.scaled_rate) << ',' << r.stop_reason << ',' << format_double(r.wall_ms)
        << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_csv(out, table);
  if (!out) throw InvalidInput("failed while writing " + path.string());
}

namespace {

double parse_number(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput("bad number in CSV: '" + text + "'");
  }
  return v;
}

}  // namespace

ResultTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidInput("unexpected CSV header");
  ResultTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw InvalidInput("CSV row with " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.objective = f[0];
    r.dim = static_cast<std::size_t>(std::stoull(f[1]));
    r.kappa = std::stoi(f[2]);
    r.alpha_rule = f[3];
    r.seed = f[4];
    r.cr_hat = parse_number(f[5]);
    r.std_error = parse_number(f[6]);
    r.scaled_rate = parse_number(f[7]);
    r.stop_reason = f[8];
    r.wall_ms = parse_number(f[9]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string fixed(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, ptr);
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void write_plot(std::ostream& out, const ResultTable& table, bool scaled) {
  const auto aggs = table.aggregates();
  // panel key -> kappa -> (d, y)
  std::map<std::pair<std::string, std::string>, std::map<int, std::vector<std::pair<double, double>>>>
      panels;
  std::set<int> kappas;
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = 0.0;
  for (const auto& r : aggs) {
    const double y = scaled ? r.scaled_rate : r.cr_hat;
    auto& series = panels[{r.objective, r.alpha_rule}][r.kappa];
    kappas.insert(r.kappa);
    if (!(y > 0.0) || !std::isfinite(y)) continue;
    const double d = static_cast<double>(r.dim);
    series.emplace_back(d, y);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  if (scaled) {
    ymin = std::min(ymin, 0.1);
    ymax = std::max(ymax, 0.1);
  }
  if (!(dmax > 0.0)) {
    dmin = 1.0;
    dmax = 10.0;
    ymin = 0.1;
    ymax = 1.0;
  }
  const double lx0 = std::floor(std::log10(dmin));
  const double lx1 = std::max(std::ceil(std::log10(dmax)), lx0 + 1.0);
  const double ly0 = std::floor(std::log10(ymin));
  const double ly1 = std::max(std::ceil(std::log10(ymax)), ly0 + 1.0);

  constexpr double pw = 360.0, ph = 260.0, ml = 60.0, mr = 20.0, mt = 36.0, mb = 44.0;
  constexpr int per_row = 3;
  const int n = std::max<int>(1, static_cast<int>(panels.size()));
  const int cols = std::min(n, per_row);
  const int rows = (n + per_row - 1) / per_row;
  const double width = cols * pw;
  const double height = rows * ph + 30.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width) << "\" height=\""
      << fixed(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // legend
  {
    double x = 10.0;
    int idx = 0;
    for (int k : kappas) {
      const char* color = kPalette[idx++ % 8];
      out << "<circle cx=\"" << fixed(x + 5) << "\" cy=\"15.00\" r=\"4\" fill=\"" << color << "\"/>"
          << "<text x=\"" << fixed(x + 13) << "\" y=\"19.00\">kappa=" << k << "</text>\n";
      x += 80.0;
    }
  }

  int p = 0;
  for (const auto& [key, series] : panels) {
    const double ox = (p % per_row) * pw;
    const double oy = 30.0 + (p / per_row) * ph;
    ++p;
    const double x0 = ox + ml, x1 = ox + pw - mr, y0 = oy + mt, y1 = oy + ph - mb;
    auto px = [&](double d) { return x0 + (std::log10(d) - lx0) / (lx1 - lx0) * (x1 - x0); };
    auto py = [&](double y) { return y1 - (std::log10(y) - ly0) / (ly1 - ly0) * (y1 - y0); };

    out << "<g>\n<text x=\"" << fixed((x0 + x1) / 2) << "\" y=\"" << fixed(oy + 20)
        << "\" text-anchor=\"middle\">" << key.first << ", alpha " << key.second << "</text>\n";
    out << "<rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y0) << "\" width=\"" << fixed(x1 - x0)
        << "\" height=\"" << fixed(y1 - y0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double e = lx0; e <= lx1 + 1e-9; e += 1.0) {
      out << "<text x=\"" << fixed(px(std::pow(10.0, e))) << "\" y=\"" << fixed(y1 + 14)
          << "\" text-anchor=\"middle\">1e" << static_cast<int>(e) << "</text>\n";
    }
    for (double e = ly0; e <= ly1 + 1e-9; e += 1.0) {
      out << "<text x=\"" << fixed(x0 - 4) << "\" y=\"" << fixed(py(std::pow(10.0, e)) + 4)
          << "\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
    }
    out << "<text x=\"" << fixed((x0 + x1) / 2) << "\" y=\"" << fixed(y1 + 32)
        << "\" text-anchor=\"middle\">d</text>\n";
    out << "<text x=\"" << fixed(ox + 14) << "\" y=\"" << fixed((y0 + y1) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << fixed(ox + 14) << ' '
        << fixed((y0 + y1) / 2) << ")\">" << (scaled ? "CR x Tr(H)/L" : "CR") << "</text>\n";
    if (scaled) {
      out << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(py(0.1)) << "\" x2=\"" << fixed(x1)
          << "\" y2=\"" << fixed(py(0.1)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (const auto& [kappa, pts] : series) {
      const auto idx = std::distance(kappas.begin(), kappas.find(kappa));
      const char* color = kPalette[idx % 8];
      auto sorted = pts;
      std::sort(sorted.begin(), sorted.end());
      std::set<double> distinct;
      for (const auto& pt : sorted) distinct.insert(pt.first);
      if (distinct.size() >= 2) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (std::size_t i = 0; i < sorted.size(); ++i) {
          out << (i ? " " : "") << fixed(px(sorted[i].first)) << ',' << fixed(py(sorted[i].second));
        }
        out << "\"/>\n";
      }
      for (const auto& [d, y] : sorted) {
        out << "<circle cx=\"" << fixed(px(d)) << "\" cy=\"" << fixed(py(y)) << "\" r=\"3\" fill=\""
            << color << "\"/>\n";
      }
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

void emit_plot(const ResultTable& table, const std::filesystem::path& path, bool scaled) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_plot(out, table, scaled);
}

}  // namespace esrate
