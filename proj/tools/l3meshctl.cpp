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

// l3meshctl: compile, inspect and exercise overlay scenarios.
//
// Exit codes: 0 success or match, 1 mismatch (or an attack that reached the
// attacker), 2 usage, parse or validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "l3mesh/kernels.hpp"
#include "l3mesh/report.hpp"
#include "l3mesh/scenario.hpp"
#include "l3mesh/simnet.hpp"

namespace {

using namespace l3mesh;

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitUsage = 2;

enum class Format { Text, JsonLines };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string scenario;
  std::optional<uint64_t> seed;
  std::string expect;
  std::string trace_out;
  Format format = Format::Text;
  std::vector<std::string> probes;
  bool reply = false;
  bool lossless = false;
  bool serial = false;
  std::string attack;
  uint64_t iterations = 1'000'000;
  size_t inner_size = 512;
};

Scenario load(const Options& opt) {
  Scenario s = load_scenario(opt.scenario);
  if (opt.seed) s.seed = *opt.seed;
  return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

WorkloadItem parse_probe_flag(const std::string& text, bool reply) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty() || parts[1].empty()) {
    throw UsageError("--probe expects SRC:DST[:SIZE], got '" + text + "'");
  }
  WorkloadItem item;
  item.src = EntityId(parts[0]);
  item.dst_name = parts[1];
  item.reply = reply;
  if (parts.size() == 3) {
    try {
      size_t used = 0;
      item.inner_size = std::stoul(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("--probe size must be an integer, got '" + parts[2] + "'");
    }
  }
  if (item.inner_size < kMinInnerPacketSize || item.inner_size > kMaxInnerPacketSize) {
    throw UsageError("--probe size must be within [" + std::to_string(kMinInnerPacketSize) + ", " +
                     std::to_string(kMaxInnerPacketSize) + "]");
  }
  return item;
}

int cmd_compile(const Options& opt) {
  const Scenario s = load(opt);
  const Deployment d = deploy_validated(s);
  if (opt.format == Format::JsonLines) {
    std::cout << compiled_to_json(d.state).dump() << "\n";
  } else {
    std::cout << render_compiled_text(d.state);
  }
  return kExitOk;
}

int cmd_matrix(const Options& opt) {
  const Scenario s = load(opt);
  const ReachabilityMatrix m = opt.serial ? reachability_matrix(s) : reachability_matrix_parallel(s);
  if (opt.format == Format::JsonLines) {
    std::cout << matrix_to_json(m).dump() << "\n";
  } else {
    std::cout << render_matrix_text(m);
  }
  if (opt.expect.empty()) return kExitOk;

  const auto expected = load_expected_matrix(opt.expect);
  const std::set<EntityId> known(m.entities.begin(), m.entities.end());
  for (const auto& [a, b] : expected) {
    if (!known.count(a) || !known.count(b) || a == b) {
      throw ScenarioError(ScenarioError::Kind::Validation,
                          opt.expect + ": unknown pair " + a.str() + " -> " + b.str());
    }
  }
  int mismatches = 0;
  for (const auto& [pair, cell] : m.cells) {
    const bool want = expected.count(pair) > 0;
    if (want == cell.delivered) continue;
    ++mismatches;
    std::cerr << "mismatch: " << pair.first.str() << " -> " << pair.second.str() << " expected "
              << (want ? "delivered" : "blocked") << ", got "
              << (cell.delivered ? "delivered" : "blocked(" + cell.reason + ")") << "\n";
  }
  if (mismatches) {
    std::cerr << mismatches << " cell(s) differ from " << opt.expect << "\n";
    return kExitMismatch;
  }
  std::cerr << "matrix matches " << opt.expect << "\n";
  return kExitOk;
}

void write_trace(const Options& opt, const Scenario& s, const RunResult& r) {
  std::ofstream out(opt.trace_out);
  if (!out) throw UsageError("cannot write trace to " + opt.trace_out);
  if (opt.format == Format::JsonLines) {
    nlohmann::ordered_json meta;
    meta["meta"] = "l3mesh-trace";
    meta["scenario"] = s.name;
    meta["seed"] = r.seed;
    meta["records"] = r.trace.size();
    out << meta.dump() << "\n";
    for (const auto& rec : r.trace) out << to_json_line(rec) << "\n";
  } else {
    out << "# scenario " << s.name << " seed " << r.seed << "\n";
    for (const auto& rec : r.trace) out << to_text_line(rec) << "\n";
  }
}

int cmd_run(const Options& opt) {
  const Scenario s = load(opt);
  std::vector<WorkloadItem> workload;
  for (const auto& p : opt.probes) workload.push_back(parse_probe_flag(p, opt.reply));
  if (opt.probes.empty()) workload = s.workload;

  SimOptions so;
  so.lossless = opt.lossless;
  const RunResult r = run(s, workload, so);
  if (!opt.trace_out.empty()) write_trace(opt, s, r);
  if (opt.format == Format::JsonLines) {
    std::cout << run_summary_json(r).dump() << "\n";
  } else {
    std::cout << render_run_summary(r);
  }
  return kExitOk;
}

int cmd_attack(const Options& opt) {
  const Scenario s = load(opt);
  std::vector<const AttackSpec*> selected;
  for (const auto& a : s.attacks) {
    if (opt.attack.empty() || a.name == opt.attack) selected.push_back(&a);
  }
  if (selected.empty()) {
    throw UsageError(opt.attack.empty() ? "scenario defines no attacks"
                                        : "no attack named '" + opt.attack + "'");
  }
  bool breached = false;
  for (const AttackSpec* a : selected) {
    const AttackVerdict v = run_attack(s, *a);
    breached = breached || v.response_reached_attacker;
    if (opt.format == Format::JsonLines) {
      std::cout << verdict_to_json(v).dump() << "\n";
    } else {
      std::cout << render_verdict_text(v);
    }
  }
  return breached ? kExitMismatch : kExitOk;
}

int cmd_bench(const Options& opt) {
  if (opt.iterations == 0) throw UsageError("--iterations must be positive");
  BenchReport r;
  try {
    r = bench_packet_path(opt.iterations, opt.inner_size);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (opt.format == Format::JsonLines) {
    nlohmann::ordered_json j;
    j["iterations"] = r.iterations;
    j["inner_size"] = r.inner_size;
    j["threads"] = r.threads;
    j["median_ns"] = r.median_ns;
    j["p99_ns"] = r.p99_ns;
    j["serial_ns_per_packet"] = r.serial_ns_per_packet;
    j["parallel_ns_per_packet"] = r.parallel_ns_per_packet;
    j["permitted"] = r.permitted;
    std::cout << j.dump() << "\n";
    return kExitOk;
  }
  std::printf("encode+decode+acl, %llu packets of %zu bytes (batches of %zu)\n",
              static_cast<unsigned long long>(r.iterations), r.inner_size, r.batch);
  std::printf("  median   %10.1f ns/packet\n", r.median_ns);
  std::printf("  p99      %10.1f ns/packet\n", r.p99_ns);
  std::printf("  serial   %10.1f ns/packet\n", r.serial_ns_per_packet);
  std::printf("  parallel %10.1f ns/packet (%d threads)\n", r.parallel_ns_per_packet, r.threads);
  std::printf("  permitted %llu\n", static_cast<unsigned long long>(r.permitted));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Overlay network-policy toolkit"};
  app.require_subcommand(1);

  const std::map<std::string, Format> formats{{"text", Format::Text},
                                              {"json-lines", Format::JsonLines}};
  auto add_common = [&](CLI::App* sub, bool seed) {
    sub->add_option("--scenario", opt.scenario, "Scenario file")->required();
    sub->add_option("--format", opt.format, "Output format")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    if (seed) sub->add_option("--seed", opt.seed, "Override the scenario seed");
  };

  auto* compile = app.add_subcommand("compile", "Print compiled tables and ACLs");
  add_common(compile, false);

  auto* matrix = app.add_subcommand("matrix", "Probe every ordered pair");
  add_common(matrix, true);
  matrix->add_option("--expect", opt.expect, "Expected-matrix file");
  matrix->add_flag("--serial", opt.serial, "Use the serial reference");

  auto* runc = app.add_subcommand("run", "Run a workload and summarize");
  add_common(runc, true);
  runc->add_option("--trace-out", opt.trace_out, "Write the event trace here");
  runc->add_option("--probe", opt.probes, "SRC:DST[:SIZE], replaces the scenario workload");
  runc->add_flag("--reply", opt.reply, "Probes expect an echo");
  runc->add_flag("--lossless", opt.lossless, "Ignore link loss");

  auto* attack = app.add_subcommand("attack", "Run adversary scripts");
  add_common(attack, false);
  attack->add_option("--attack", opt.attack, "Only the named attack");

  auto* bench = app.add_subcommand("bench", "Packet-path microbenchmark");
  bench->add_option("--iterations", opt.iterations, "Packets to process");
  bench->add_option("--inner-size", opt.inner_size, "Inner packet size in bytes");
  bench->add_option("--format", opt.format, "Output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*compile) return cmd_compile(opt);
    if (*matrix) return cmd_matrix(opt);
    if (*runc) return cmd_run(opt);
    if (*attack) return cmd_attack(opt);
    return cmd_bench(opt);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const ScenarioError& e) {
    std::cerr << (e.kind() == ScenarioError::Kind::Parse ? "parse error: " : "validation error: ")
              << e.what() << "\n";
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
  }
  return kExitUsage;
}
