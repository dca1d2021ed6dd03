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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "l3mesh/kernels.hpp"
#include "l3mesh/scenario.hpp"
#include "l3mesh/simnet.hpp"
#include "l3mesh/wire.hpp"

using namespace l3mesh;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

std::string path_of(const std::string& name) { return std::string(L3MESH_SCENARIO_DIR) + "/" + name + ".json"; }

Scenario load(const std::string& name) { return load_scenario(path_of(name)); }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Each check returns an empty string on success, otherwise what went wrong.
void report(const char* id, const char* title, const std::function<std::string(std::string&)>& check) {
  std::string detail;
  std::string problem;
  try {
    problem = check(detail);
  } catch (const std::exception& e) {
    problem = std::string("exception: ") + e.what();
  }
  if (problem.empty()) {
    std::printf("PASS %s %s%s%s\n", id, title, detail.empty() ? "" : " :: ", detail.c_str());
  } else {
    ++failures;
    std::printf("FAIL %s %s :: %s\n", id, title, problem.c_str());
  }
  std::fflush(stdout);
}

DirectedPair dp(const char* a, const char* b) { return {EntityId(a), EntityId(b)}; }

WorkloadItem probe(const std::string& src, const std::string& dst, uint64_t at, size_t size, bool reply) {
  WorkloadItem w;
  w.src = EntityId(src);
  w.dst_name = dst;
  w.at_us = at;
  w.inner_size = size;
  w.reply = reply;
  return w;
}

std::string ac1(std::string& detail) {
  const Scenario s = load("table1");
  const auto t0 = Clock::now();
  const ReachabilityMatrix m = reachability_matrix_parallel(s);
  const double took = seconds_since(t0);
  const std::set<DirectedPair> want{dp("S1", "S2"), dp("S2", "S1"), dp("S1", "S3"),
                                    dp("S3", "S1"), dp("S1", "End-User"), dp("End-User", "S1")};
  if (m.cells.size() != 12) return "expected 12 ordered pairs, got " + std::to_string(m.cells.size());
  for (const auto& [pair, cell] : m.cells) {
    if (cell.delivered != want.contains(pair)) {
      return pair.first.str() + " -> " + pair.second.str() + (cell.delivered ? " delivered" : " blocked");
    }
  }
  if (took >= 1.0) return "took " + std::to_string(took) + " s";
  detail = std::to_string(want.size()) + " delivered, 6 blocked, " + std::to_string(took * 1000) + " ms";
  return "";
}

std::string ac2(std::string& detail) {
  const Scenario s = load("table1");
  std::mt19937 rng(36);
  std::uniform_int_distribution<size_t> size(kMinInnerPacketSize, kMaxInnerPacketSize);
  Simulation sim(s);
  std::map<uint32_t, size_t> sizes;
  for (int i = 0; i < 1000; ++i) {
    const size_t n = size(rng);
    const char* dst = i % 2 ? "s2.default.svc" : "s3.default.svc";
    sizes[sim.send(probe("S1", dst, static_cast<uint64_t>(i) * 10, n, false))] = n;
  }
  const RunResult r = sim.run();
  size_t checked = 0;
  for (const auto& t : r.trace) {
    if (t.event != TraceEvent::Send) continue;
    const size_t inner = sizes.at(t.flow);
    if (t.inner_size != inner) return "flow " + std::to_string(t.flow) + " inner size changed";
    if (t.size != inner + 36) {
      return "inner " + std::to_string(inner) + " gave " + std::to_string(t.size) + " on the wire";
    }
    ++checked;
  }
  if (checked < 1000) return "only " + std::to_string(checked) + " sends";
  detail = std::to_string(sizes.size()) + " sizes, " + std::to_string(checked) + " datagrams";
  return "";
}

std::string ac3(std::string& detail) {
  size_t checked = 0;
  for (const char* name : {"table1", "gateway", "two_sap", "empty", "full_mesh"}) {
    Scenario s = load(name);
    // Scenario workload plus a request from every party to every other.
    std::vector<WorkloadItem> load_items = s.workload;
    uint64_t at = 50'000;
    for (const auto& a : matrix_entities(s)) {
      for (const auto& b : matrix_entities(s)) {
        if (a != b) load_items.push_back(probe(a.str(), b.str(), at += 100, 64 + at % 900, true));
      }
    }
    const RunResult r = run(s, load_items);
    std::set<std::string> saps;
    for (const auto& e : s.entities) {
      if (e.role == Role::Sap) saps.insert(e.id.str());
    }
    const uint16_t port = s.config.overlay_udp_port;
    std::map<uint64_t, const TraceRecord*> received;
    for (const auto& t : r.trace) {
      if (t.event == TraceEvent::Deliver && saps.contains(t.hop_entity) && t.to.udp_port == port) {
        received[t.seq] = &t;
      }
    }
    for (const auto& t : r.trace) {
      if (t.event != TraceEvent::Send || !t.cause || t.from.udp_port != port) continue;
      auto it = received.find(*t.cause);
      if (it == received.end()) continue;
      if (t.payload != it->second->payload) {
        return std::string(name) + ": " + t.hop_entity + " changed bytes at seq " + std::to_string(t.seq);
      }
      ++checked;
    }
  }
  if (checked == 0) return "no SaP forwards observed";
  detail = std::to_string(checked) + " forwarded datagrams";
  return "";
}

std::string ac4(std::string& detail) {
  const Scenario s = load("table1");
  for (const auto& spec : s.attacks) {
    if (spec.kind != AttackKind::Spoof) continue;
    const AttackVerdict v = run_attack(s, spec);
    if (v.response_reached_attacker) return spec.name + ": response reached attacker";
    if (spec.rotate_target_at_us) {
      if (v.request_outcome != "key_mismatch") return spec.name + ": outcome " + v.request_outcome;
      continue;
    }
    if (v.request_outcome != "delivered") return spec.name + ": outcome " + v.request_outcome;
    if (v.response_receiver != spec.victim) {
      return spec.name + ": response went to " + (v.response_receiver ? v.response_receiver->str() : "nobody");
    }
  }
  detail = "spoof responses reach the owner, stale key is key_mismatch";
  return "";
}

// Random scenario as scenario-file text, so it also goes through the parser.
json random_scenario(std::mt19937& rng, int index) {
  const int saps = static_cast<int>(rng() % 3);
  const int parties = 2 + static_cast<int>(rng() % (7 - saps));
  json entities = json::array();
  std::vector<std::vector<std::string>> families;
  for (int i = 0; i < parties; ++i) {
    std::vector<std::string> f;
    const int pick = static_cast<int>(rng() % 3);
    if (pick != 1) f.push_back("v4");
    if (pick != 0) f.push_back("v6");
    families.push_back(f);
    entities.push_back({{"id", "E" + std::to_string(i)},
                        {"role", rng() % 4 ? "workload" : "external"},
                        {"infra", "10.9." + std::to_string(i) + ".1"},
                        {"overlays", f}});
  }
  for (int k = 0; k < saps; ++k) {
    entities.push_back({{"id", "P" + std::to_string(k)}, {"role", "sap"}, {"infra", "10.9.200." + std::to_string(k + 1)}});
  }
  json policy = json::array();
  for (int a = 0; a < parties; ++a) {
    for (int b = a + 1; b < parties; ++b) {
      bool common = false;
      for (const auto& f : families[a]) {
        for (const auto& g : families[b]) common |= f == g;
      }
      if (!common || rng() % 2) continue;
      json pair = {{"a", "E" + std::to_string(rng() % 2 ? a : b)}};
      pair["b"] = pair["a"] == "E" + std::to_string(a) ? "E" + std::to_string(b) : "E" + std::to_string(a);
      if (rng() % 3 == 0) pair["mode"] = "a_to_b";
      if (saps == 0 || rng() % 3 == 0) {
        pair["route"] = "direct";
      } else {
        json chain = json::array();
        const int len = 1 + static_cast<int>(rng() % saps);
        const int first = static_cast<int>(rng() % saps);
        for (int k = 0; k < len; ++k) chain.push_back("P" + std::to_string((first + k) % saps));
        pair["route"] = chain;
      }
      policy.push_back(pair);
    }
  }
  return {{"name", "random-" + std::to_string(index)},
          {"seed", index},
          {"config", {{"key_seed", 1000 + index}}},
          {"entities", entities},
          {"policy", policy},
          {"links", {{"default", {{"latency_us", 1 + rng() % 300}, {"drop_prob", 0.3}}}}}};
}

std::set<DirectedPair> policy_oracle(const json& doc) {
  std::set<DirectedPair> out;
  for (const auto& p : doc["policy"]) {
    const EntityId a(p["a"].get<std::string>());
    const EntityId b(p["b"].get<std::string>());
    out.insert({a, b});
    if (p.value("mode", "bidirectional") == "bidirectional") out.insert({b, a});
  }
  return out;
}

std::string ac5(std::string& detail) {
  std::mt19937 rng(5150);
  const auto t0 = Clock::now();
  int done = 0, retries = 0, pairs = 0;
  while (done < 200) {
    const json doc = random_scenario(rng, done);
    const Scenario s = parse_scenario(doc.dump(), doc["name"]);
    ReachabilityMatrix m;
    try {
      m = reachability_matrix_parallel(s);
    } catch (const ScenarioError& e) {
      // Two chains can demand different next hops at one SaP; draw again.
      if (std::string(e.what()).find("RouteConflict") == std::string::npos) throw;
      ++retries;
      continue;
    }
    const std::set<DirectedPair> want = policy_oracle(doc);
    if (m.delivered_pairs() != want) {
      std::ostringstream os;
      os << doc["name"].get<std::string>() << ": simulated " << m.delivered_pairs().size() << " pairs, oracle "
         << want.size();
      return os.str();
    }
    pairs += static_cast<int>(m.cells.size());
    ++done;
  }
  const double took = seconds_since(t0);
  if (took >= 60) return "took " + std::to_string(took) + " s";
  detail = "200 scenarios, " + std::to_string(pairs) + " pairs, " + std::to_string(retries) + " redrawn, " +
           std::to_string(took) + " s";
  return "";
}

std::string ac6(std::string& detail) {
  std::mt19937_64 rng(606);
  int runs = 0;
  for (int schedule = 0; schedule < 20; ++schedule) {
    Scenario s = load("table1");
    s.config.rotation_window_us = 1000 + rng() % 100'000;
    const uint64_t latency = 1 + rng() % 2000;
    s.links.set_default(LinkSpec{latency, 0, 0});
    const Deployment d = deploy_validated(s);
    AttackSpec spec = s.attacks.front();
    spec.rotate_target_at_us = std::nullopt;
    const AdversaryScript base = build_attack(s, d, spec);
    const uint64_t rotate_at = 10 + rng() % 1'000'000;
    const uint64_t closes = rotate_at + s.config.rotation_window_us;
    // Arrivals just inside, exactly at and just after the close, plus a random one.
    std::vector<uint64_t> arrivals{closes - 1, closes, closes + 1, rotate_at + rng() % (2 * s.config.rotation_window_us)};
    arrivals.push_back(rotate_at + 1);
    for (uint64_t arrive : arrivals) {
      if (arrive < latency || arrive <= rotate_at) continue;
      AdversaryScript script = base;
      script.steps.front().at_us = arrive - latency;
      script.rotations = {ScheduledRotation{rotate_at, spec.target}};
      const AttackVerdict v = run_spoof_attack(s, script);
      const bool inside = arrive < closes;
      const std::string want = inside ? "delivered" : "key_mismatch";
      if (v.request_outcome != want) {
        return "schedule " + std::to_string(schedule) + ": arrival " + std::to_string(arrive) + " window closes " +
               std::to_string(closes) + " gave " + v.request_outcome;
      }
      ++runs;
    }
  }
  detail = "20 schedules, " + std::to_string(runs) + " old-key packets";
  return "";
}

std::string ac7(std::string& detail) {
  // (a) structural hop cost
  Scenario s = load("table1");
  const Deployment d = deploy_validated(s);
  const EntityId s1("S1");
  Simulation sim(s, d);
  std::map<uint32_t, bool> via_sap;
  uint64_t at = 0;
  for (int i = 0; i < 50; ++i) {
    via_sap[sim.send(probe("S1", "s2.default.svc", at += 100, 64, false))] = false;
    via_sap[sim.send(probe("S1", "s3.default.svc", at += 100, 64, false))] = true;
    via_sap[sim.send(probe("S1", "end-user", at += 100, 64, false))] = true;
  }
  const RunResult r = sim.run();
  for (const auto& [id, sap] : via_sap) {
    const FlowResult* f = r.flow(id);
    if (!f || !f->delivered()) return "flow " + std::to_string(id) + " not delivered";
    if (f->hops != (sap ? 2u : 1u)) return "flow " + std::to_string(id) + " took " + std::to_string(f->hops) + " hops";
  }
  // (b) per-packet processing cost
  const BenchReport b = bench_packet_path(1'000'000, 512);
  if (b.median_ns >= 100'000) return "median " + std::to_string(b.median_ns) + " ns";
  std::ostringstream os;
  os << "direct 1 hop, SaP 2 hops; median " << b.median_ns << " ns, p99 " << b.p99_ns << " ns per packet";
  detail = os.str();
  return "";
}

std::string ac8(std::string& detail) {
  std::mt19937_64 rng(8);
  size_t valid = 0;
  std::vector<size_t> by_error(kWireErrorCount, 0);
  Bytes b;
  for (int i = 0; i < 1'000'000; ++i) {
    b.resize(rng() % 72);
    for (auto& x : b) x = static_cast<uint8_t>(rng());
    if (b.size() >= 4 && rng() % 4 == 0) {
      b[0] &= 0x01;
      b[1] = rng() % 2 ? 4 : 41;
      b[2] &= 0x80;
      b[3] = 0;
      if (b.size() > 8 && rng() % 2) b[8] = b[1] == 4 ? 0x45 : 0x60;
    }
    auto r = decode(b);
    if (r.ok()) {
      ++valid;
      if (r.value().inner.empty()) return "valid packet with no inner bytes";
    } else {
      const size_t code = static_cast<size_t>(r.error());
      if (code >= kWireErrorCount) return "untyped error " + std::to_string(code);
      ++by_error[code];
    }
  }
  std::ostringstream os;
  os << valid << " valid";
  for (size_t i = 0; i < by_error.size(); ++i) os << ", " << to_string(static_cast<WireError>(i)) << " " << by_error[i];
  detail = os.str();
  return "";
}

}  // namespace

int main() {
  report("AC1", "table1 reachability matrix", ac1);
  report("AC2", "encapsulation overhead is 36 bytes over IPv4", ac2);
  report("AC3", "SaP forwards bytes unchanged", ac3);
  report("AC4", "spoofed requests never return to the attacker", ac4);
  report("AC5", "default deny matches policy oracle", ac5);
  report("AC6", "previous key accepted only inside rotation window", ac6);
  report("AC7", "hop-count delta and per-packet cost", ac7);
  report("AC8", "decoder fuzz", ac8);
  return failures == 0 ? 0 : 1;
}
