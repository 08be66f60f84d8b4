#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itsbft/simnet.hpp"

namespace itsbft {

struct BatchResult {
  std::string scenario;
  std::string topology;
  std::size_t f = 0;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> report;  // empty when the run threw
  std::string error;
};

/// Runs every config once per seed (or once with its own seed when seeds is
/// empty). Results come back in config-major, seed-minor order regardless of
/// jobs; a failing scenario is recorded and the batch continues.
std::vector<BatchResult> run_batch(const std::vector<ScenarioConfig>& configs, const std::vector<std::uint64_t>& seeds,
                                   unsigned jobs = 1);

/// Kb with two decimals (1 Kb = 1000 bits).
std::string format_kb(std::uint64_t bits);

/// Pipe-separated table, columns: topology, f, total Kb, consensus Kb,
/// delivery Kb, eavesdrop %, time s. Infeasible rows show "-" except for
/// eavesdrop (100.00%); failed runs show "error" in the eavesdrop column.
std::string summary_table(const std::vector<BatchResult>& results);

/// One JSON object per line, keys in a fixed order.
std::string json_record(const BatchResult& result);
std::string json_records(const std::vector<BatchResult>& results);

}  // namespace itsbft
