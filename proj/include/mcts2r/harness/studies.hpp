#ifndef MCTS2R_HARNESS_STUDIES_HPP
#define MCTS2R_HARNESS_STUDIES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "mcts2r/errors.hpp"
#include "mcts2r/harness/config.hpp"
#include "mcts2r/harness/experiment.hpp"

namespace mcts2r::harness {

// ---- grids -----------------------------------------------------------------

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// "key=v1,v2,v3"
inline GridAxis parse_grid_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("grid axis must look like key=v1,v2; got '" + spec + "'");
  GridAxis axis{detail::trim(spec.substr(0, eq)), detail::split_list(spec.substr(eq + 1), ',')};
  for (const auto& v : axis.values) {
    if (v.empty()) throw ConfigError("empty value in grid axis '" + spec + "'");
  }
  return axis;
}

using Assignment = std::vector<std::pair<std::string, std::string>>;

// Cartesian product; the last axis varies fastest.
inline std::vector<Assignment> expand_grid(const std::vector<GridAxis>& axes) {
  std::vector<Assignment> out{{}};
  for (const auto& axis : axes) {
    std::vector<Assignment> next;
    for (const auto& partial : out) {
      for (const auto& v : axis.values) {
        Assignment a = partial;
        a.emplace_back(axis.key, v);
        next.push_back(std::move(a));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline std::string assignment_name(const Assignment& a) {
  if (a.empty()) return "base";
  std::string s;
  for (const auto& [k, v] : a) {
    if (!s.empty()) s += '_';
    s += k + '=' + v;
  }
  for (char& ch : s) {
    if (ch == '/' || ch == ' ') ch = '-';
  }
  return s;
}

inline ExperimentConfig with_assignment(ExperimentConfig c, const Assignment& a) {
  for (const auto& [k, v] : a) set(c, k, v);
  return c;
}

struct SweepPoint {
  Assignment assignment;
  RunOutcome outcome;
};

using Runner = std::function<RunOutcome(const ExperimentConfig&)>;

// Default runner: load data and run one experiment.
inline Runner default_runner(RunOptions opt = {}) {
  return [opt](const ExperimentConfig& c) {
    validate(c);
    const LoadedData d = load_data(c);
    return run_experiment(c, d, opt);
  };
}

// Every grid point is validated before the first run starts.
inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const std::vector<GridAxis>& axes,
                                         const Runner& runner) {
  const auto points = expand_grid(axes);
  std::vector<ExperimentConfig> configs;
  for (const auto& a : points) {
    ExperimentConfig c = with_assignment(base, a);
    c.output_dir = base.output_dir / assignment_name(a);
    validate(c);
    configs.push_back(std::move(c));
  }
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) out.push_back({points[i], runner(configs[i])});
  return out;
}

inline std::string sweep_csv(const std::vector<GridAxis>& axes, const std::vector<SweepPoint>& points) {
  std::string s;
  for (const auto& a : axes) s += a.key + ',';
  s += "final_accuracy,small_clean_fraction,relabel_precision,relabel_recall,n_relabeled\n";
  for (const auto& p : points) {
    for (const auto& kv : p.assignment) s += kv.second + ',';
    const auto& r = p.outcome.relabel;
    if (r) {
      s += fmt::format("{},{},{},{},{}\n", p.outcome.final_accuracy(), r->small_clean_fraction, r->precision,
                       r->recall, r->n_relabeled);
    } else {
      s += fmt::format("{},,,,\n", p.outcome.final_accuracy());
    }
  }
  return s;
}

// ---- baseline comparison --------------------------------------------------

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

inline SummaryStats summarize(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("cannot summarize an empty sample");
  SummaryStats s;
  for (const double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (const double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

// A labelled set of overrides, "label:key=val;key=val". A bare variant name
// ("coteaching") is shorthand for "coteaching:variant=coteaching".
struct RowSpec {
  std::string label;
  Assignment overrides;
};

inline RowSpec parse_row_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  RowSpec row;
  if (colon == std::string::npos) {
    row.label = detail::trim(spec);
    if (row.label.empty()) throw ConfigError("empty comparison row");
    pipeline::parse_variant(row.label);  // rejects unknown names
    row.overrides.emplace_back("variant", row.label);
    return row;
  }
  row.label = detail::trim(spec.substr(0, colon));
  if (row.label.empty()) throw ConfigError("comparison row '" + spec + "' has no label");
  for (const auto& part : detail::split_list(spec.substr(colon + 1), ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("comparison row '" + spec + "': expected key=value, got '" + part + "'");
    row.overrides.emplace_back(detail::trim(part.substr(0, eq)), detail::trim(part.substr(eq + 1)));
  }
  return row;
}

struct ComparisonRow {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<double> finals;
  SummaryStats stats;
};

inline std::vector<ComparisonRow> compare_baselines(const ExperimentConfig& base, const std::vector<RowSpec>& rows,
                                                    const std::vector<std::uint64_t>& seeds, const Runner& runner) {
  if (rows.empty()) throw ConfigError("comparison needs at least one row");
  if (seeds.empty()) throw ConfigError("comparison needs at least one seed");
  std::vector<std::vector<ExperimentConfig>> configs;
  for (const auto& row : rows) {
    configs.emplace_back();
    for (const std::uint64_t seed : seeds) {
      ExperimentConfig c = with_assignment(base, row.overrides);
      c.seed = seed;
      c.output_dir = base.output_dir / row.label / ("seed-" + std::to_string(seed));
      validate(c);
      configs.back().push_back(std::move(c));
    }
  }
  std::vector<ComparisonRow> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ComparisonRow cr{rows[r].label, seeds, {}, {}};
    for (const auto& c : configs[r]) cr.finals.push_back(runner(c).final_accuracy());
    cr.stats = summarize(cr.finals);
    out.push_back(std::move(cr));
  }
  return out;
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string s = "label,n_seeds,mean,std\n";
  for (const auto& r : rows) s += fmt::format("{},{},{},{}\n", r.label, r.finals.size(), r.stats.mean, r.stats.std);
  return s;
}

inline std::string comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string s = fmt::format("{:<24} {:>6} {:>10} {:>10}\n", "row", "seeds", "mean(%)", "std(%)");
  for (const auto& r : rows) {
    s += fmt::format("{:<24} {:>6} {:>10.2f} {:>10.2f}\n", r.label, r.finals.size(), 100.0 * r.stats.mean,
                     100.0 * r.stats.std);
  }
  return s;
}

}  // namespace mcts2r::harness

#endif  // MCTS2R_HARNESS_STUDIES_HPP
