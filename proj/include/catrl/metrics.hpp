#pragma once

// Per-iteration metrics CSV and the post-hoc export of evaluation results.
//
// Every numeric cell goes through "%.12g", and no column depends on wallclock
// or host state, so two runs with the same config and seed produce
// byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "catrl/ppo.hpp"

namespace catrl {

inline std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// linear interpolation between closest ranks; p in [0, 100]
inline double percentile_of(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 *
                      static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

inline double median_of(std::vector<double> v) {
  return percentile_of(std::move(v), 50.0);
}

// One CSV row per training iteration.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path,
                const std::vector<std::string>& constraint_names)
      : os_(path, std::ios::trunc), names_(constraint_names) {
    if (!os_) throw std::runtime_error("cannot open metrics file '" + path + "'");
    os_ << "iteration,mean_reward,reward_task,reward_power";
    for (const auto& n : names_) os_ << ",prob_" << n;
    for (const auto& n : names_) os_ << ",viol_" << n;
    os_ << ",pos_error,rot_error,delta_mean,policy_loss,value_loss,entropy,"
           "clip_fraction,approx_kl,grad_norm,learning_rate\n";
  }

  void write(const IterationLog& log) {
    if (log.probabilities.size() != names_.size() ||
        log.rollout.violation_percent.size() != names_.size())
      throw std::runtime_error("metrics row does not match the constraint table");
    os_ << log.iteration << ',' << format_metric(log.rollout.mean_raw_reward)
        << ',' << format_metric(log.rollout.mean_task_reward) << ','
        << format_metric(log.rollout.mean_power_reward);
    for (double p : log.probabilities) os_ << ',' << format_metric(p);
    for (double v : log.rollout.violation_percent) os_ << ',' << format_metric(v);
    os_ << ',' << format_metric(log.rollout.mean_pos_error) << ','
        << format_metric(log.rollout.mean_rot_error) << ','
        << format_metric(log.rollout.mean_delta) << ','
        << format_metric(log.update.policy_loss) << ','
        << format_metric(log.update.value_loss) << ','
        << format_metric(log.update.entropy) << ','
        << format_metric(log.update.clip_fraction) << ','
        << format_metric(log.update.approx_kl) << ','
        << format_metric(log.update.grad_norm) << ','
        << format_metric(log.update.learning_rate) << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
  std::vector<std::string> names_;
};

namespace detail {

// minimal CSV-with-header reader (no quoting; none of our files need it)
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }

  std::vector<double> column_values(const std::string& name) const {
    const int c = column(name);
    if (c < 0)
      throw std::runtime_error("csv column '" + name + "' not found");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is)
    throw std::runtime_error("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("'" + path.string() + "' is empty");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.header.size())
      throw std::runtime_error("'" + path.string() + "' has a ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_histogram(const std::filesystem::path& path,
                            const std::vector<double>& values, int bins) {
  double max_v = 0.0;
  for (double v : values) max_v = std::max(max_v, v);
  const double width = max_v > 0.0 ? max_v / bins : 1.0;
  std::vector<int> counts(bins, 0);
  for (double v : values) {
    int b = static_cast<int>(v / width);
    counts[std::clamp(b, 0, bins - 1)] += 1;
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "'");
  os << "bin_lower,bin_upper,count\n";
  for (int b = 0; b < bins; ++b)
    os << format_metric(b * width) << ',' << format_metric((b + 1) * width)
       << ',' << counts[b] << '\n';
}

}  // namespace detail

// Summarizes a run directory's evaluation errors into summary.txt plus
// per-metric histogram CSVs.  Throws (naming the offending file) when the
// input is missing or has no data rows.
inline void export_run(const std::filesystem::path& run_dir) {
  const std::filesystem::path errors_csv = run_dir / "eval_errors.csv";
  if (!std::filesystem::exists(errors_csv))
    throw std::runtime_error("'" + errors_csv.string() + "' does not exist");
  const detail::CsvTable t = detail::read_csv(errors_csv);
  if (t.rows.empty())
    throw std::runtime_error("'" + errors_csv.string() + "' has no data rows");

  const std::vector<double> pos = t.column_values("pos_error");
  const std::vector<double> rot = t.column_values("rot_error");
  detail::write_histogram(run_dir / "pos_error_hist.csv", pos, 20);
  detail::write_histogram(run_dir / "rot_error_hist.csv", rot, 20);

  std::ofstream os(run_dir / "summary.txt", std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot open '" + (run_dir / "summary.txt").string() + "'");
  os << "episodes: " << t.rows.size() << "\n";
  os << "pos_error_mean: " << format_metric(mean_of(pos)) << "\n";
  os << "pos_error_median: " << format_metric(median_of(pos)) << "\n";
  os << "pos_error_p95: " << format_metric(percentile_of(pos, 95.0)) << "\n";
  os << "rot_error_mean: " << format_metric(mean_of(rot)) << "\n";
  os << "rot_error_median: " << format_metric(median_of(rot)) << "\n";
  os << "rot_error_p95: " << format_metric(percentile_of(rot, 95.0)) << "\n";
  if (t.column("hard_violation") >= 0) {
    const std::vector<double> hard = t.column_values("hard_violation");
    double pct = 0.0;
    for (double h : hard) pct += h > 0.0 ? 1.0 : 0.0;
    pct *= 100.0 / static_cast<double>(hard.size());
    os << "hard_violation_percent: " << format_metric(pct) << "\n";
  }
}

}  // namespace catrl
