#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "itsbft/simnet.hpp"

namespace itsbft {

/// Schema or parse error. what() starts with "line L, column C: " when the
/// problem can be tied to a place in the document.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(int line, int column, const std::string& message);
  explicit ScenarioError(const std::string& message) : std::runtime_error(message) {}
  int line = 0;  // 1-based; 0 when unknown
  int column = 0;
};

/// Loads a YAML scenario. Overrides are "dotted.path=value" strings applied
/// to the document before validation; value is parsed as YAML, so
/// "security.omega=16" and "demands=[{src: 0, dst: 2, amount_bits: 10}]"
/// both work.
///
/// Schema (every key except topology is optional):
///   name: string
///   topology:
///     name: string
///     nodes: N
///     edges: [[a, b], ...]          # or
///     kind: ring | complete | path | circulant
///     jumps: [1, 2]                 # circulant only
///   capacity_bits, cap_bits, seed, view_limit, contention_bits: unsigned
///   delta_seconds: number
///   f: unsigned                     # defaults to |byzantine|
///   security: {epsilon, epsilon_k, omega, ts_key_len_bits}
///   demands: [{id, src, dst, amount_bits}, ...]   # id defaults to the index
///   adversary:
///     byzantine: [ids]
///     behaviors: {id: [name, ...]}
ScenarioConfig load_scenario(std::string_view text, const std::vector<std::string>& overrides = {});

/// load_scenario on a file; error messages are prefixed with the path.
ScenarioConfig load_scenario_file(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Canonical YAML for cfg (explicit edge list, every field written).
/// load_scenario(render_scenario(c)) == c.
std::string render_scenario(const ScenarioConfig& cfg);

}  // namespace itsbft
