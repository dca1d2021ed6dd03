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

#include "l3mesh/simnet.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <tuple>

#include "json.hpp"
#include "l3mesh/ip_packet.hpp"

namespace l3mesh {

// ---------------------------------------------------------------------------
// Probes and trace rendering

Bytes build_probe_packet(const IpAddress& src, const IpAddress& dst, const Probe& probe,
                         size_t inner_size) {
  const size_t header = src.family() == Family::V4 ? kIpv4HeaderSize : kIpv6HeaderSize;
  if (inner_size < header + kProbeHeaderSize || inner_size > kMaxInnerPacketSize) {
    throw SimulationError("inner packet size " + std::to_string(inner_size) +
                          " out of range for " + std::string(to_string(src.family())));
  }
  Bytes payload(inner_size - header, 0);
  payload[0] = static_cast<uint8_t>(probe.kind);
  payload[1] = static_cast<uint8_t>(probe.id >> 24);
  payload[2] = static_cast<uint8_t>(probe.id >> 16);
  payload[3] = static_cast<uint8_t>(probe.id >> 8);
  payload[4] = static_cast<uint8_t>(probe.id);
  return build_ip_packet(src, dst, payload);
}

std::optional<Probe> parse_probe(std::span<const uint8_t> inner) {
  auto payload = ip_payload(inner);
  if (!payload || payload->size() < kProbeHeaderSize || (*payload)[0] > 2) return std::nullopt;
  const auto& p = *payload;
  return Probe{static_cast<ProbeKind>(p[0]), (uint32_t{p[1]} << 24) | (uint32_t{p[2]} << 16) |
                                                 (uint32_t{p[3]} << 8) | uint32_t{p[4]}};
}

std::string_view to_string(TraceEvent event) {
  switch (event) {
    case TraceEvent::Send: return "send";
    case TraceEvent::Deliver: return "deliver";
    case TraceEvent::Drop: return "drop";
    case TraceEvent::Reject: return "reject";
  }
  return "unknown";
}

uint64_t fnv1a(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_json_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["seq"] = r.seq;
  j["t_us"] = r.time_us;
  j["event"] = to_string(r.event);
  j["reason"] = r.reason.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(r.reason);
  j["hop"] = r.hop_entity;
  j["from"] = r.from.to_string();
  j["to"] = r.to.to_string();
  j["overlay_src"] = r.overlay_src ? nlohmann::ordered_json(r.overlay_src->to_string())
                                   : nlohmann::ordered_json();
  j["overlay_dst"] = r.overlay_dst ? nlohmann::ordered_json(r.overlay_dst->to_string())
                                   : nlohmann::ordered_json();
  j["size"] = r.size;
  j["inner_size"] = r.inner_size;
  j["flow"] = r.flow;
  j["cause"] = r.cause ? nlohmann::ordered_json(*r.cause) : nlohmann::ordered_json();
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(fnv1a(r.payload)));
  j["digest"] = digest;
  return j.dump();
}

std::string to_text_line(const TraceRecord& r) {
  std::string line = std::to_string(r.seq) + " t=" + std::to_string(r.time_us) + "us " +
                     std::string(to_string(r.event));
  if (!r.reason.empty()) line += "(" + r.reason + ")";
  line += " @" + r.hop_entity + " " + r.from.to_string() + " -> " + r.to.to_string();
  if (r.overlay_src && r.overlay_dst) {
    line += " [" + r.overlay_src->to_string() + " -> " + r.overlay_dst->to_string() + "]";
  }
  line += " size=" + std::to_string(r.size) + " flow=" + std::to_string(r.flow);
  return line;
}

const FlowResult* RunResult::flow(uint32_t id) const {
  auto it = flows.find(id);
  return it == flows.end() ? nullptr : &it->second;
}

std::set<DirectedPair> ReachabilityMatrix::delivered_pairs() const {
  std::set<DirectedPair> out;
  for (const auto& [pair, cell] : cells) {
    if (cell.delivered) out.insert(pair);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

// A party without an L3 component. Accepts any raw IP packet addressed to it
// and originates plain packets through its gateway SaP.
struct PlainHost {
  EntityId id;
  InfraEndpoint self;
  InfraEndpoint gateway;
  EntityCounters counters;
};

struct Node {
  EntityId id;
  std::optional<L3Agent> agent;
  std::optional<SapEngine> sap;
  std::optional<PlainHost> plain;
};

struct InFlight {
  Datagram datagram;
  uint32_t flow = 0;
  uint64_t send_seq = 0;
  bool lost = false;
};

struct AppSend {
  WorkloadItem item;
  ProbeKind kind = ProbeKind::OneWay;
  uint32_t id = 0;
};

struct Inject {
  AdversaryStep step;
};

struct Rotate {
  EntityId id;
};

struct ExpireKey {
  EntityId id;
  uint64_t generation = 0;
};

using EventBody = std::variant<InFlight, AppSend, Inject, Rotate, ExpireKey>;

// Control-plane work sorts ahead of packets scheduled for the same instant.
constexpr int kControlClass = 0;
constexpr int kPacketClass = 1;

using EventKey = std::tuple<uint64_t, int, uint64_t>;

}  // namespace

struct Simulation::Impl {
  Impl(const Scenario& s, const Deployment& d, SimOptions o)
      : scenario(s), cp(d.control_plane), state(d.state), options(o), rng(o.seed.value_or(s.seed)) {
    for (const auto& e : cp.entities()) {
      Node node;
      node.id = e.id;
      if (e.is_sap()) {
        node.sap.emplace(e.id, e.infra, cp.config().gateway_port);
      } else if (e.runs_agent) {
        node.agent.emplace(e.id, e.infra, e.overlay_addrs);
      } else {
        const auto& gw = cp.entity(*e.gateway);
        node.plain = PlainHost{e.id, e.infra, InfraEndpoint{gw.infra.address, cp.config().gateway_port}, {}};
      }
      if (!nodes.emplace(e.infra.address, std::move(node)).second) {
        throw SimulationError("two entities share infra address " + e.infra.address.to_string());
      }
      location[e.id] = e.infra.address;
    }
    adopt_all();
  }

  void adopt_all() {
    for (auto& [addr, node] : nodes) {
      if (node.agent) node.agent->adopt_snapshot(table_snapshot(state, node.id));
      if (node.sap) node.sap->adopt_snapshot(sap_snapshot(state, node.id));
    }
  }

  std::optional<EntityId> owner_of(const OverlayAddress& address) const {
    for (const auto& [id, entry] : state.directory) {
      if (std::find(entry.overlay_addrs.begin(), entry.overlay_addrs.end(), address) !=
          entry.overlay_addrs.end()) {
        return id;
      }
    }
    return std::nullopt;
  }

  void schedule(uint64_t at, int cls, EventBody body) {
    queue.emplace(EventKey{at, cls, next_event_seq++}, std::move(body));
  }

  uint64_t later(uint64_t delta) const {
    if (delta > std::numeric_limits<uint64_t>::max() - now) {
      throw SimulationError("scheduling overflow");
    }
    return now + delta;
  }

  // Fills the overlay fields from whichever inner packet the datagram carries.
  void describe(TraceRecord& r, const Datagram& d) const {
    r.from = d.from;
    r.to = d.to;
    r.size = d.wire_size();
    r.payload = d.payload;
    std::span<const uint8_t> inner;
    uint8_t proto = 0;
    if (d.transport == Transport::Udp) {
      auto view = decode_view(d.payload);
      if (!view) return;
      inner = view->inner;
      proto = view->header.inner_proto;
    } else {
      inner = d.payload;
      auto v = ip_version(inner);
      proto = v == 4 ? kProtoIpv4 : v == 6 ? kProtoIpv6 : 0;
    }
    r.inner_size = inner.size();
    auto pair = extract_overlay_addresses(proto, inner);
    if (pair) {
      r.overlay_src = pair->src;
      r.overlay_dst = pair->dst;
    }
  }

  uint64_t record(TraceRecord r) {
    r.seq = trace.size();
    r.time_us = now;
    trace.push_back(std::move(r));
    return trace.back().seq;
  }

  void note_failure(uint32_t flow, const std::string& reason) {
    auto it = flows.find(flow);
    if (it != flows.end() && !it->second.delivered() && it->second.outcome.empty()) {
      it->second.outcome = reason;
    }
  }

  void transmit(Datagram d, uint32_t flow, const std::string& hop, std::optional<uint64_t> cause) {
    TraceRecord r;
    r.event = TraceEvent::Send;
    r.hop_entity = hop;
    r.flow = flow;
    r.cause = cause;
    describe(r, d);
    const uint64_t seq = record(std::move(r));
    if (auto it = flows.find(flow); it != flows.end()) ++it->second.hops;

    const LinkSpec& link = scenario.links.between(d.from.address, d.to.address);
    uint64_t latency = link.latency_us;
    if (link.jitter_us > 0) {
      latency += std::uniform_int_distribution<uint64_t>(0, link.jitter_us)(rng);
    }
    bool lost = false;
    if (!options.lossless && link.drop_prob > 0.0) {
      lost = std::bernoulli_distribution(link.drop_prob)(rng);
    }
    schedule(later(latency), kPacketClass, InFlight{std::move(d), flow, seq, lost});
  }

  void reject(const EntityId& at, const InfraEndpoint& self, uint32_t flow, DropReason reason,
              std::span<const uint8_t> inner) {
    TraceRecord r;
    r.event = TraceEvent::Reject;
    r.reason = std::string(to_string(reason));
    r.hop_entity = at.str();
    r.flow = flow;
    r.from = self;
    r.to = self;
    r.inner_size = inner.size();
    r.payload.assign(inner.begin(), inner.end());
    auto version = ip_version(inner);
    auto pair = extract_overlay_addresses(version == 6 ? kProtoIpv6 : kProtoIpv4, inner);
    if (pair) {
      r.overlay_src = pair->src;
      r.overlay_dst = pair->dst;
    }
    record(std::move(r));
    note_failure(flow, std::string(to_string(reason)));
  }

  void open_flow(uint32_t id, const EntityId& src, std::string dst_name,
                 std::optional<EntityId> intended, size_t inner_size) {
    FlowResult f;
    f.flow = id;
    f.src = src;
    f.dst_name = std::move(dst_name);
    f.intended = std::move(intended);
    f.sent_at_us = now;
    f.inner_size = inner_size;
    flows[id] = std::move(f);
  }

  // Inner packet handed up by a tunnel port (or a plain host's stack).
  void app_receive(Node& node, std::span<const uint8_t> inner, uint32_t flow) {
    auto it = flows.find(flow);
    if (it != flows.end() && !it->second.delivered()) {
      it->second.delivered_at_us = now;
      it->second.receiver = node.id;
    }
    auto probe = parse_probe(inner);
    if (!probe || probe->kind != ProbeKind::Request) return;
    auto pair = extract_overlay_addresses(ip_version(inner) == 6 ? kProtoIpv6 : kProtoIpv4, inner);
    if (!pair) return;

    const uint32_t reply_id = probe->id | kResponseFlowBit;
    open_flow(reply_id, node.id, pair->src.to_string(), owner_of(pair->src), inner.size());
    if (node.agent) {
      Bytes reply = build_probe_packet(pair->dst.ip(), pair->src.ip(),
                                       Probe{ProbeKind::Response, reply_id}, inner.size());
      egress_from_agent(node, std::move(reply), reply_id);
    } else if (node.plain) {
      Bytes reply = build_probe_packet(node.plain->self.address, pair->src.ip(),
                                       Probe{ProbeKind::Response, reply_id}, inner.size());
      egress_from_plain(node, std::move(reply), reply_id);
    }
  }

  void egress_from_agent(Node& node, Bytes inner, uint32_t flow) {
    auto out = node.agent->egress(inner);
    if (!out) {
      reject(node.id, node.agent->self(), flow, out.error(), inner);
      return;
    }
    transmit(std::move(out).value(), flow, node.id.str(), std::nullopt);
  }

  void egress_from_plain(Node& node, Bytes plain, uint32_t flow) {
    PlainHost& host = *node.plain;
    ++host.counters.inputs;
    ++host.counters.emitted;
    transmit(Datagram{host.self, host.gateway, Transport::RawIp, std::move(plain)}, flow,
             node.id.str(), std::nullopt);
  }

  void on_app_send(const AppSend& ev) {
    auto nit = location.find(ev.item.src);
    Node& node = nodes.at(nit->second);
    const auto& directory = state.directory.at(node.id);
    if (node.sap) throw SimulationError("SaP " + node.id.str() + " does not originate traffic");

    std::vector<Family> families;
    if (node.plain) {
      families.push_back(node.plain->self.address.family());
    } else {
      for (const auto& addr : directory.overlay_addrs) families.push_back(addr.family());
    }
    for (Family f : families) {
      auto dst = resolve(state.name_map, ev.item.dst_name, f);
      if (!dst) continue;
      IpAddress src;
      if (node.plain) {
        src = node.plain->self.address;
      } else {
        for (const auto& a : directory.overlay_addrs) {
          if (a.family() == f) {
            src = a.ip();
            break;
          }
        }
      }
      Bytes inner = build_probe_packet(src, dst->ip(), Probe{ev.kind, ev.id}, ev.item.inner_size);
      if (node.plain) {
        egress_from_plain(node, std::move(inner), ev.id);
      } else {
        egress_from_agent(node, std::move(inner), ev.id);
      }
      return;
    }
    // The name exists, but in no family this entity can source.
    TraceRecord r;
    r.event = TraceEvent::Reject;
    r.reason = std::string(to_string(DropReason::NoRoute));
    r.hop_entity = node.id.str();
    r.flow = ev.id;
    r.from = r.to = node.agent ? node.agent->self() : node.plain->self;
    record(std::move(r));
    note_failure(ev.id, std::string(to_string(DropReason::NoRoute)));
  }

  void on_arrival(InFlight& f) {
    TraceRecord r;
    r.flow = f.flow;
    r.cause = f.send_seq;
    describe(r, f.datagram);

    auto nit = nodes.find(f.datagram.to.address);
    r.hop_entity = nit == nodes.end() ? std::string() : nit->second.id.str();
    if (f.lost) {
      r.event = TraceEvent::Drop;
      r.reason = "link_loss";
      record(std::move(r));
      note_failure(f.flow, "link_loss");
      return;
    }
    if (observers.contains(f.datagram.to.address)) {
      r.event = TraceEvent::Deliver;
      r.hop_entity = "adversary";
      observed.push_back(r);
      observed.back().seq = trace.size();
      observed.back().time_us = now;
      record(std::move(r));
      return;
    }
    if (nit == nodes.end()) {
      r.event = TraceEvent::Drop;
      r.reason = "no_listener";
      record(std::move(r));
      note_failure(f.flow, "no_listener");
      return;
    }

    Node& node = nit->second;
    if (node.agent) {
      auto delivered = node.agent->ingress(f.datagram);
      if (!delivered) {
        r.event = TraceEvent::Drop;
        r.reason = std::string(to_string(delivered.error()));
        note_failure(f.flow, r.reason);
        record(std::move(r));
        return;
      }
      r.event = TraceEvent::Deliver;
      record(std::move(r));
      auto inner = node.agent->tunnel(*delivered).pop();
      if (inner) app_receive(node, *inner, f.flow);
      return;
    }
    if (node.sap) {
      auto forwarded = node.sap->receive(f.datagram);
      if (!forwarded) {
        r.event = TraceEvent::Drop;
        r.reason = std::string(to_string(forwarded.error()));
        note_failure(f.flow, r.reason);
        record(std::move(r));
        return;
      }
      r.event = TraceEvent::Deliver;
      const uint64_t seq = record(std::move(r));
      transmit(std::move(forwarded).value(), f.flow, node.id.str(), seq);
      return;
    }
    PlainHost& host = *node.plain;
    ++host.counters.inputs;
    if (f.datagram.transport != Transport::RawIp) {
      host.counters.drops.count(DropReason::NonOverlayIngress);
      r.event = TraceEvent::Drop;
      r.reason = "no_listener";
      note_failure(f.flow, r.reason);
      record(std::move(r));
      return;
    }
    ++host.counters.delivered;
    r.event = TraceEvent::Deliver;
    record(std::move(r));
    app_receive(node, f.datagram.payload, f.flow);
  }

  void on_rotate(const Rotate& ev) {
    RotationResult result = cp.rotate_key(ev.id);
    state = std::move(result.state);
    adopt_all();
    const uint64_t generation = ++rotation_generation[ev.id];
    schedule(later(cp.config().rotation_window_us), kControlClass, ExpireKey{ev.id, generation});
  }

  void on_expire(const ExpireKey& ev) {
    if (rotation_generation[ev.id] != ev.generation) return;
    if (cp.expire_previous_key(ev.id)) {
      state = cp.compile();
      adopt_all();
    }
  }

  RunResult finish() {
    RunResult out;
    out.seed = options.seed.value_or(scenario.seed);
    for (auto& [id, f] : flows) {
      if (!f.delivered() && f.outcome.empty()) f.outcome = "lost";
    }
    for (const auto& [addr, node] : nodes) {
      if (node.agent) out.counters[node.id] = node.agent->counters();
      if (node.sap) out.counters[node.id] = node.sap->counters();
      if (node.plain) out.counters[node.id] = node.plain->counters;
    }
    out.trace = std::move(trace);
    out.flows = std::move(flows);
    out.observed = std::move(observed);
    return out;
  }

  const Scenario& scenario;
  ControlPlane cp;
  CompiledState state;
  SimOptions options;
  std::mt19937_64 rng;

  std::map<IpAddress, Node> nodes;
  std::map<EntityId, IpAddress> location;
  std::set<IpAddress> observers;
  std::map<EntityId, uint64_t> rotation_generation;

  std::map<EventKey, EventBody> queue;
  uint64_t next_event_seq = 0;
  uint64_t now = 0;
  uint32_t next_probe_id = 1;
  bool ran = false;

  std::vector<TraceRecord> trace;
  std::map<uint32_t, FlowResult> flows;
  std::vector<TraceRecord> observed;
};

Simulation::Simulation(const Scenario& scenario, const Deployment& deployment, SimOptions options)
    : impl_(std::make_unique<Impl>(scenario, deployment, options)) {}

Simulation::Simulation(const Scenario& scenario, SimOptions options) {
  Deployment d = deploy_validated(scenario);
  impl_ = std::make_unique<Impl>(scenario, d, options);
}

Simulation::~Simulation() = default;

const ControlPlane& Simulation::control_plane() const { return impl_->cp; }
const CompiledState& Simulation::state() const { return impl_->state; }

uint32_t Simulation::send(const WorkloadItem& item, ProbeKind kind) {
  Impl& s = *impl_;
  if (!s.location.contains(item.src)) throw SimulationError("unknown source entity " + item.src.str());
  if (!s.state.name_map.contains(item.dst_name)) {
    throw SimulationError("UnresolvableName: " + item.dst_name);
  }
  const uint32_t id = s.next_probe_id++;
  if (id >= kResponseFlowBit / 2) throw SimulationError("scheduling overflow: probe ids exhausted");
  std::optional<EntityId> intended = s.owner_of(resolve(s.state.name_map, item.dst_name));
  const uint64_t saved = s.now;
  s.now = item.at_us;
  s.open_flow(id, item.src, item.dst_name, intended, item.inner_size);
  s.now = saved;
  s.schedule(item.at_us, kPacketClass, AppSend{item, kind, id});
  return id;
}

void Simulation::inject(const AdversaryStep& step) {
  Impl& s = *impl_;
  FlowResult f;
  f.flow = step.flow;
  f.src = EntityId("adversary");
  f.dst_name = step.to.to_string();
  f.sent_at_us = step.at_us;
  f.inner_size = step.inject.size();
  s.flows[step.flow] = std::move(f);
  s.schedule(step.at_us, kPacketClass, Inject{step});
}

void Simulation::observe(const InfraEndpoint& endpoint) { impl_->observers.insert(endpoint.address); }

void Simulation::schedule_rotation(const ScheduledRotation& rotation) {
  if (!impl_->location.contains(rotation.entity)) {
    throw SimulationError("unknown entity " + rotation.entity.str());
  }
  impl_->schedule(rotation.at_us, kControlClass, Rotate{rotation.entity});
}

RunResult Simulation::run() {
  Impl& s = *impl_;
  if (s.ran) throw SimulationError("a simulation runs once");
  s.ran = true;
  uint64_t processed = 0;
  while (!s.queue.empty()) {
    auto node = s.queue.extract(s.queue.begin());
    s.now = std::get<0>(node.key());
    if (++processed > s.options.max_events) throw SimulationError("scheduling overflow: event budget");
    std::visit(
        [&](auto& ev) {
          using T = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<T, InFlight>) {
            s.on_arrival(ev);
          } else if constexpr (std::is_same_v<T, AppSend>) {
            s.on_app_send(ev);
          } else if constexpr (std::is_same_v<T, Inject>) {
            s.transmit(Datagram{ev.step.from, ev.step.to, ev.step.transport, ev.step.inject},
                       ev.step.flow, "adversary", std::nullopt);
          } else if constexpr (std::is_same_v<T, Rotate>) {
            s.on_rotate(ev);
          } else {
            s.on_expire(ev);
          }
        },
        node.mapped());
  }
  return s.finish();
}

RunResult run(const Scenario& scenario, std::span<const WorkloadItem> workload, SimOptions options) {
  Simulation sim(scenario, options);
  for (const auto& item : workload) sim.send(item);
  for (const auto& rot : scenario.rotations) sim.schedule_rotation(rot);
  return sim.run();
}

RunResult run(const Scenario& scenario, SimOptions options) {
  return run(scenario, scenario.workload, options);
}

// ---------------------------------------------------------------------------
// Reachability

std::vector<EntityId> matrix_entities(const Scenario& scenario) {
  std::vector<EntityId> out;
  for (const auto& e : scenario.entities) {
    if (e.role != Role::Sap) out.push_back(e.id);
  }
  return out;
}

MatrixCell probe_pair(const Scenario& scenario, const Deployment& deployment, const EntityId& src,
                      const EntityId& dst) {
  SimOptions options;
  options.lossless = true;
  Simulation sim(scenario, deployment, options);
  WorkloadItem item;
  item.src = src;
  item.dst_name = dst.str();
  item.inner_size = 64;
  const uint32_t id = sim.send(item, ProbeKind::OneWay);
  RunResult result = sim.run();
  const FlowResult* f = result.flow(id);
  if (f && f->delivered() && f->receiver == dst) return MatrixCell{true, ""};
  if (f && f->delivered()) return MatrixCell{false, "misdelivered"};
  return MatrixCell{false, f ? f->outcome : "lost"};
}

ReachabilityMatrix reachability_matrix(const Scenario& scenario) {
  const Deployment deployment = deploy_validated(scenario);
  ReachabilityMatrix m;
  m.entities = matrix_entities(scenario);
  for (const auto& src : m.entities) {
    for (const auto& dst : m.entities) {
      if (src == dst) continue;
      m.cells[{src, dst}] = probe_pair(scenario, deployment, src, dst);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Adversary

namespace {

constexpr uint32_t kAttackFlowBase = 0x40000000u;

}  // namespace

AdversaryScript build_attack(const Scenario& scenario, const Deployment& deployment,
                             const AttackSpec& spec) {
  (void)scenario;
  const ControlPlane& cp = deployment.control_plane;
  const EntityRecord& target = cp.entity(spec.target);
  AdversaryScript script;
  script.observe = spec.attacker;
  if (spec.rotate_target_at_us) {
    script.rotations.push_back(ScheduledRotation{*spec.rotate_target_at_us, spec.target});
  }
  AdversaryStep step;
  step.at_us = spec.at_us;
  step.from = spec.attacker;
  step.flow = kAttackFlowBase + 1;

  if (spec.kind == AttackKind::RawServicePort) {
    const IpAddress src = spec.attacker.address;
    const IpAddress dst = target.infra.address;
    if (src.family() != dst.family()) {
      throw SimulationError("attack " + spec.name + ": attacker and target families differ");
    }
    step.inject = build_probe_packet(src, dst, Probe{ProbeKind::Request, step.flow}, spec.inner_size);
    step.to = InfraEndpoint{dst, spec.service_port};
    step.transport = Transport::RawIp;
    script.steps.push_back(std::move(step));
    return script;
  }

  const EntityRecord& victim = cp.entity(spec.victim);
  for (Family f : {Family::V4, Family::V6}) {
    auto src = victim.address_for(f);
    auto dst = target.address_for(f);
    if (!src || !dst) continue;
    Bytes inner = build_probe_packet(src->ip(), dst->ip(), Probe{ProbeKind::Request, step.flow},
                                     spec.inner_size);
    // The attacker holds the target's key as issued at deployment time.
    auto encoded = encode(GueHeader::keyed(f, target.current_key), inner);
    if (!encoded) throw SimulationError("attack " + spec.name + ": cannot encode forged packet");
    step.inject = std::move(encoded).value();
    step.to = target.infra;
    step.transport = Transport::Udp;
    script.steps.push_back(std::move(step));
    return script;
  }
  throw SimulationError("attack " + spec.name + ": victim and target share no overlay");
}

AttackVerdict run_spoof_attack(const Scenario& scenario, const AdversaryScript& attacker) {
  if (attacker.steps.empty()) throw SimulationError("adversary script has no steps");
  Simulation sim(scenario);
  sim.observe(attacker.observe);
  for (const auto& rot : attacker.rotations) sim.schedule_rotation(rot);
  for (const auto& step : attacker.steps) sim.inject(step);
  RunResult result = sim.run();

  AttackVerdict v;
  const uint32_t request = attacker.steps.front().flow;
  const FlowResult* req = result.flow(request);
  v.request_outcome = req && req->delivered() ? "delivered" : (req ? req->outcome : "lost");
  if (const FlowResult* resp = result.flow(request | kResponseFlowBit); resp && resp->delivered()) {
    v.response_receiver = resp->receiver;
  }
  v.attacker_observed = result.observed.size();
  v.response_reached_attacker = !result.observed.empty();
  return v;
}

AttackVerdict run_attack(const Scenario& scenario, const AttackSpec& spec) {
  const Deployment deployment = deploy_validated(scenario);
  AttackVerdict v = run_spoof_attack(scenario, build_attack(scenario, deployment, spec));
  v.name = spec.name;
  return v;
}

}  // namespace l3mesh
