#pragma once

#include <string>
#include <vector>

#include "covtail/ensembles.hpp"
#include "covtail/report.hpp"

namespace covtail {

/// Parses {"type": ...} distribution / ensemble / matrix descriptions used
/// in experiment config files.
ScalarDist dist_from_json(const json& j);
EnsembleSpec ensemble_from_json(const json& j);
/// Accepts a 2-D array, {"identity": p} or {"diagonal": [..]}.
SymMatrix matrix_from_json(const json& j);

/// Applies dotted-path overrides ("params.n=5000") onto a config object.
/// Values parse as JSON when possible, else as strings.
void apply_overrides(json& config, const std::vector<std::string>& overrides);

/// Validates and dispatches a config:
/// {"experiment": name, "master_seed": u64, "trials": int,
///  "workers": int|"auto", "output": prefix?, "params": {...}}.
/// Results are identical for identical configs regardless of workers.
TrialReport run(const json& config);

/// run() plus report emission to <prefix>.json and <prefix>.csv when the
/// config carries an output prefix.
TrialReport run_and_emit(const json& config);

}  // namespace covtail
