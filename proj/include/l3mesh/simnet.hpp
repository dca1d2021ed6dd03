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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "l3mesh/controlplane.hpp"
#include "l3mesh/dataplane.hpp"
#include "l3mesh/scenario.hpp"

namespace l3mesh {

// Application-level probe carried as the inner packet's L4 payload:
//   byte 0      kind (0 one-way, 1 request expecting an echo, 2 response)
//   bytes 1..4  probe id, big-endian
// followed by zero padding up to the requested packet size.
enum class ProbeKind : uint8_t { OneWay = 0, Request = 1, Response = 2 };
inline constexpr size_t kProbeHeaderSize = 5;
inline constexpr uint32_t kResponseFlowBit = 0x80000000u;

struct Probe {
  ProbeKind kind = ProbeKind::OneWay;
  uint32_t id = 0;
};

Bytes build_probe_packet(const IpAddress& src, const IpAddress& dst, const Probe& probe,
                         size_t inner_size);
std::optional<Probe> parse_probe(std::span<const uint8_t> inner);

enum class TraceEvent : uint8_t {
  Send,
  Deliver,
  Drop,
  // Refused by the sender before anything reached the wire (egress no_route).
  Reject,
};

std::string_view to_string(TraceEvent event);

struct TraceRecord {
  uint64_t seq = 0;
  uint64_t time_us = 0;
  TraceEvent event = TraceEvent::Send;
  std::string reason;  // drop and reject only
  InfraEndpoint from;
  InfraEndpoint to;
  std::optional<OverlayAddress> overlay_src;
  std::optional<OverlayAddress> overlay_dst;
  size_t size = 0;        // bytes on the infrastructure wire
  size_t inner_size = 0;  // inner IP packet
  std::string hop_entity;
  uint32_t flow = 0;
  // For sends: the deliver record that triggered a SaP forward.
  // For deliver/drop: the matching send.
  std::optional<uint64_t> cause;
  Bytes payload;

  bool operator==(const TraceRecord&) const = default;
};

// One JSON object per record; payload bytes appear as an FNV-1a digest.
std::string to_json_line(const TraceRecord& record);
std::string to_text_line(const TraceRecord& record);
uint64_t fnv1a(std::span<const uint8_t> bytes);

struct FlowResult {
  uint32_t flow = 0;
  EntityId src;
  std::string dst_name;
  std::optional<EntityId> intended;
  uint64_t sent_at_us = 0;
  std::optional<uint64_t> delivered_at_us;
  std::optional<EntityId> receiver;
  // Empty when delivered; otherwise the first drop/reject reason, or "lost".
  std::string outcome;
  uint32_t hops = 0;
  size_t inner_size = 0;

  bool delivered() const { return delivered_at_us.has_value(); }
  std::optional<uint64_t> latency_us() const {
    if (!delivered_at_us) return std::nullopt;
    return *delivered_at_us - sent_at_us;
  }
};

struct RunResult {
  uint64_t seed = 0;
  std::vector<TraceRecord> trace;
  std::map<uint32_t, FlowResult> flows;
  std::map<EntityId, EntityCounters> counters;
  // Deliveries to adversary observe endpoints.
  std::vector<TraceRecord> observed;

  const FlowResult* flow(uint32_t id) const;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimOptions {
  std::optional<uint64_t> seed;
  // Ignore configured link loss; reachability probes use this.
  bool lossless = false;
  uint64_t max_events = 10'000'000;
};

struct AdversaryStep {
  uint64_t at_us = 0;
  Bytes inject;
  InfraEndpoint to;
  InfraEndpoint from;
  Transport transport = Transport::Udp;
  uint32_t flow = 0;
};

struct AdversaryScript {
  std::vector<AdversaryStep> steps;
  InfraEndpoint observe;
  std::vector<ScheduledRotation> rotations;
};

// Deterministic discrete-event network. Events run in (time, class, seq)
// order where control-plane events precede packet events at equal times.
class Simulation {
 public:
  Simulation(const Scenario& scenario, const Deployment& deployment, SimOptions options = {});
  Simulation(const Scenario& scenario, SimOptions options = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Returns the probe id. Throws SimulationError for unresolvable names.
  uint32_t send(const WorkloadItem& item, ProbeKind kind);
  uint32_t send(const WorkloadItem& item) {
    return send(item, item.reply ? ProbeKind::Request : ProbeKind::OneWay);
  }
  void inject(const AdversaryStep& step);
  void observe(const InfraEndpoint& endpoint);
  void schedule_rotation(const ScheduledRotation& rotation);

  RunResult run();

  const ControlPlane& control_plane() const;
  const CompiledState& state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

RunResult run(const Scenario& scenario, std::span<const WorkloadItem> workload,
              SimOptions options = {});
// Runs the scenario's own workload and rotations.
RunResult run(const Scenario& scenario, SimOptions options = {});

struct MatrixCell {
  bool delivered = false;
  std::string reason;

  bool operator==(const MatrixCell&) const = default;
};

struct ReachabilityMatrix {
  std::vector<EntityId> entities;
  std::map<DirectedPair, MatrixCell> cells;

  std::set<DirectedPair> delivered_pairs() const;
  bool operator==(const ReachabilityMatrix&) const = default;
};

// Overlay parties that take part in the matrix: everything except SaPs.
std::vector<EntityId> matrix_entities(const Scenario& scenario);
// One isolated lossless probe from src to dst.
MatrixCell probe_pair(const Scenario& scenario, const Deployment& deployment, const EntityId& src,
                      const EntityId& dst);
// Serial reference; see kernels.hpp for the parallel version.
ReachabilityMatrix reachability_matrix(const Scenario& scenario);

struct AttackVerdict {
  std::string name;
  // "delivered" or the drop reason at the target.
  std::string request_outcome;
  bool response_reached_attacker = false;
  std::optional<EntityId> response_receiver;
  uint64_t attacker_observed = 0;
};

// Forges the datagram described by `spec` from the deployment's tables.
AdversaryScript build_attack(const Scenario& scenario, const Deployment& deployment,
                             const AttackSpec& spec);
AttackVerdict run_spoof_attack(const Scenario& scenario, const AdversaryScript& attacker);
AttackVerdict run_attack(const Scenario& scenario, const AttackSpec& spec);

}  // namespace l3mesh
