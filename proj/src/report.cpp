#include "covtail/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "covtail/errors.hpp"

namespace covtail {

std::pair<double, double> wilson_interval(int hits, int n) {
  if (n <= 0) throw InputError("wilson_interval: n must be positive");
  if (hits < 0 || hits > n)
    throw InputError("wilson_interval: hits out of range");
  const double z = 1.959963984540054;  // 95%
  const double z2 = z * z;
  const double f = static_cast<double>(hits) / n;
  const double denom = 1.0 + z2 / n;
  const double center = (f + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(f * (1.0 - f) / n + z2 / (4.0 * n * n)) / denom;
  double lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = hits == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

void TrialReport::aggregate() {
  trials = static_cast<int>(rows.size());
  violations = 0;
  for (const auto& row : rows) violations += row.violated ? 1 : 0;
  frequency = trials > 0 ? static_cast<double>(violations) / trials : 0.0;
  if (trials > 0) {
    auto [lo, hi] = wilson_interval(violations, trials);
    wilson_low = lo;
    wilson_high = hi;
  }
}

json report_to_json(const TrialReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"trial", row.trial},
                    {"statistic", row.statistic},
                    {"bound", row.bound},
                    {"violated", row.violated}});
  }
  return json{{"experiment", r.experiment},
              {"params", r.params},
              {"trials", r.trials},
              {"violations", r.violations},
              {"frequency", r.frequency},
              {"wilson_low", r.wilson_low},
              {"wilson_high", r.wilson_high},
              {"bound_value", r.bound_value},
              {"vacuous", r.vacuous},
              {"pass", r.pass},
              {"flagged", r.flagged},
              {"flag_reason", r.flag_reason},
              {"rows", rows},
              {"extra", r.extra},
              {"wall_seconds", r.wall_seconds},
              {"library_version", r.library_version}};
}

TrialReport report_from_json(const json& j) {
  TrialReport r;
  r.experiment = j.at("experiment").get<std::string>();
  r.params = j.at("params");
  r.trials = j.at("trials").get<int>();
  r.violations = j.at("violations").get<int>();
  r.frequency = j.at("frequency").get<double>();
  r.wilson_low = j.at("wilson_low").get<double>();
  r.wilson_high = j.at("wilson_high").get<double>();
  r.bound_value = j.at("bound_value").get<double>();
  r.vacuous = j.at("vacuous").get<bool>();
  r.pass = j.at("pass").get<bool>();
  r.flagged = j.at("flagged").get<bool>();
  r.flag_reason = j.at("flag_reason").get<std::string>();
  for (const auto& row : j.at("rows")) {
    r.rows.push_back({row.at("trial").get<int>(),
                      row.at("statistic").get<double>(),
                      row.at("bound").get<double>(),
                      row.at("violated").get<bool>()});
  }
  r.extra = j.at("extra");
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.library_version = j.at("library_version").get<std::string>();
  return r;
}

void write_report_json(const TrialReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_report_json: cannot open " + path);
  out << report_to_json(report).dump(2) << '\n';
}

void write_report_csv(const TrialReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_report_csv: cannot open " + path);
  out << "trial,statistic,bound,violated\n" << std::setprecision(17);
  for (const auto& row : report.rows) {
    out << row.trial << ',' << row.statistic << ',' << row.bound << ','
        << (row.violated ? 1 : 0) << '\n';
  }
}

}  // namespace covtail
