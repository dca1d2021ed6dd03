// Copyright 2026 The l3mesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "json.hpp"
#include "l3mesh/controlplane.hpp"
#include "l3mesh/simnet.hpp"

namespace l3mesh {

// Canonical, diff-stable renderings used by the CLI and golden tests.

nlohmann::json compiled_to_json(const CompiledState& state);
// Inverse of compiled_to_json. Throws ScenarioError(Parse) on bad input.
CompiledState compiled_from_json(const nlohmann::json& dump);
std::string render_compiled_text(const CompiledState& state);

std::string render_matrix_text(const ReachabilityMatrix& matrix);
nlohmann::json matrix_to_json(const ReachabilityMatrix& matrix);

// Expected-matrix files list the delivered ordered pairs; every other pair is
// expected to be blocked:  {"delivered": [["S1", "S2"], ...]}
std::set<DirectedPair> load_expected_matrix(const std::filesystem::path& path);
std::set<DirectedPair> parse_expected_matrix(const std::string& text);

// Flow table, latency statistics per hop count and a latency histogram.
std::string render_run_summary(const RunResult& result);
nlohmann::json run_summary_json(const RunResult& result);

std::string render_verdict_text(const AttackVerdict& verdict);
nlohmann::json verdict_to_json(const AttackVerdict& verdict);

}  // namespace l3mesh
