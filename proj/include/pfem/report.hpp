// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pfem/fabric.hpp"
#include "pfem/scenario.hpp"
#include "pfem/solver.hpp"

namespace pfem {

nlohmann::json to_json(const CounterReport& counters);
/// phase,rank,messages,bytes rows followed by one barriers row per phase.
std::string counters_csv(const CounterReport& counters);

nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const MeshStats& stats);
nlohmann::json to_json(const RunResult& result);

std::string probes_csv(const std::vector<ProbeSample>& probes);

/// Methods as rows, rank counts as columns, one table per quantity.
nlohmann::json to_json(const std::vector<ComparisonCell>& table);
std::string comparison_csv(const std::vector<ComparisonCell>& table);
/// Iterations laid out methods x ranks; failed cells print as "fail".
std::string comparison_table(const std::vector<ComparisonCell>& table);

}  // namespace pfem
