#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace covtail {

using json = nlohmann::json;

inline constexpr const char* kLibraryVersion = "covtail 0.1.0";

/// 95% Wilson score interval for hits successes out of n.
std::pair<double, double> wilson_interval(int hits, int n);

struct TrialRow {
  int trial;
  double statistic;
  double bound;
  bool violated;
};

/// Aggregate result of a Monte Carlo experiment run.
struct TrialReport {
  std::string experiment;
  json params = json::object();
  int trials = 0;
  int violations = 0;
  double frequency = 0;
  double wilson_low = 0;
  double wilson_high = 0;
  double bound_value = 0;
  bool vacuous = false;
  bool pass = false;
  bool flagged = false;
  std::string flag_reason;
  std::vector<TrialRow> rows;
  json extra = json::object();
  double wall_seconds = 0;
  std::string library_version = kLibraryVersion;

  /// Recompute violations / frequency / Wilson interval from rows.
  void aggregate();
};

json report_to_json(const TrialReport& report);
TrialReport report_from_json(const json& j);

void write_report_json(const TrialReport& report, const std::string& path);
/// CSV of per-trial rows with header trial,statistic,bound,violated.
void write_report_csv(const TrialReport& report, const std::string& path);

}  // namespace covtail
