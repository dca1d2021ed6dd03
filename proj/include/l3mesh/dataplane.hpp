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
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "l3mesh/controlplane.hpp"
#include "l3mesh/ip.hpp"
#include "l3mesh/policy.hpp"
#include "l3mesh/result.hpp"
#include "l3mesh/wire.hpp"

namespace l3mesh {

// How a datagram arrived at an entity. Only traffic on the overlay UDP port
// is Overlay; everything else, including raw packets aimed at service ports,
// is NonOverlay.
enum class Channel : uint8_t { Overlay, NonOverlay };

enum class Transport : uint8_t {
  Udp,    // payload is a UDP payload sent to `to.udp_port`
  RawIp,  // payload is a bare IP packet aimed at `to.udp_port`
};

struct Datagram {
  InfraEndpoint from;
  InfraEndpoint to;
  Transport transport = Transport::Udp;
  Bytes payload;

  size_t wire_size() const {
    return transport == Transport::Udp ? udp_wire_size(payload.size(), to.address.family())
                                       : payload.size();
  }
  bool operator==(const Datagram&) const = default;
};

enum class DropReason : uint8_t {
  NoRoute,
  KeyMismatch,
  AclDenied,
  Malformed,
  NonOverlayIngress,
  NoMapping,
};

std::string_view to_string(DropReason reason);
std::optional<DropReason> parse_drop_reason(std::string_view text);

struct DropCounters {
  uint64_t no_route = 0;
  uint64_t key_mismatch = 0;
  uint64_t acl_denied = 0;
  uint64_t malformed = 0;
  uint64_t non_overlay_ingress = 0;
  uint64_t no_mapping = 0;

  void count(DropReason reason);
  uint64_t of(DropReason reason) const;
  uint64_t total() const;
  bool operator==(const DropCounters&) const = default;
};

// inputs == delivered + emitted + drops.total() after every call.
struct EntityCounters {
  uint64_t inputs = 0;
  uint64_t delivered = 0;
  uint64_t emitted = 0;
  DropCounters drops;

  bool balanced() const { return inputs == delivered + emitted + drops.total(); }
  bool operator==(const EntityCounters&) const = default;
};

class IngressFilter {
 public:
  explicit IngressFilter(uint16_t overlay_port) : overlay_port_(overlay_port) {}

  Channel classify(const Datagram& datagram) const {
    return datagram.transport == Transport::Udp && datagram.to.udp_port == overlay_port_
               ? Channel::Overlay
               : Channel::NonOverlay;
  }
  bool admits(Channel channel) const { return channel == Channel::Overlay; }
  uint16_t overlay_port() const { return overlay_port_; }

 private:
  uint16_t overlay_port_;
};

// The local end of a tunnel device: inner packets queued toward the
// application bound to one overlay address.
class TunnelPort {
 public:
  explicit TunnelPort(OverlayAddress address) : address_(address) {}

  const OverlayAddress& address() const { return address_; }
  void push(Bytes inner) { inbound_.push_back(std::move(inner)); }
  std::optional<Bytes> pop();
  size_t pending() const { return inbound_.size(); }

 private:
  OverlayAddress address_;
  std::deque<Bytes> inbound_;
};

// L3 component of a workload, gateway or external entity.
class L3Agent {
 public:
  L3Agent(EntityId id, InfraEndpoint self, std::span<const OverlayAddress> addresses);

  const EntityId& id() const { return id_; }
  const InfraEndpoint& self() const { return self_; }

  // Atomic replacement; later packets see only the new table.
  void adopt_snapshot(std::shared_ptr<const ForwardingTable> table);
  const ForwardingTable& table() const { return *table_; }

  // Encapsulates a locally generated inner packet toward its next hop.
  Result<Datagram, DropReason> egress(std::span<const uint8_t> inner);
  // On delivery returns the overlay address of the receiving tunnel port.
  Result<OverlayAddress, DropReason> ingress(std::span<const uint8_t> payload, Channel channel);
  Result<OverlayAddress, DropReason> ingress(const Datagram& datagram) {
    return ingress(datagram.payload, filter_.classify(datagram));
  }

  TunnelPort& tunnel(const OverlayAddress& address) { return tunnels_.at(address); }
  const std::map<OverlayAddress, TunnelPort>& tunnels() const { return tunnels_; }
  const EntityCounters& counters() const { return counters_; }
  void set_overlay_port(uint16_t port) { filter_ = IngressFilter(port); }

 private:
  DropReason drop(DropReason reason);

  EntityId id_;
  InfraEndpoint self_;
  IngressFilter filter_;
  std::shared_ptr<const ForwardingTable> table_;
  std::map<OverlayAddress, TunnelPort> tunnels_;
  EntityCounters counters_;
};

struct SapSnapshot {
  ForwardingTable table;
  AclSet acl;
  std::vector<GatewayMapping> gateways;

  bool operator==(const SapSnapshot&) const = default;
};

// Stand-alone proxy: ACL check, then forwarding of the unmodified datagram.
// With gateway mappings it also bridges parties that have no L3 component.
class SapEngine {
 public:
  SapEngine(EntityId id, InfraEndpoint self, uint16_t gateway_port);

  const EntityId& id() const { return id_; }
  const InfraEndpoint& self() const { return self_; }

  void adopt_snapshot(std::shared_ptr<const SapSnapshot> snapshot);
  const SapSnapshot& snapshot() const { return *snapshot_; }

  // Dispatches on arrival channel: overlay traffic to process(), plain
  // traffic on the gateway port to gateway_ingress(), the rest is dropped.
  Result<Datagram, DropReason> receive(const Datagram& datagram);

  Result<Datagram, DropReason> process(std::span<const uint8_t> payload);
  Result<Datagram, DropReason> gateway_ingress(std::span<const uint8_t> plain,
                                               const InfraEndpoint& from);

  const EntityCounters& counters() const { return counters_; }
  void set_overlay_port(uint16_t port) { filter_ = IngressFilter(port); }

 private:
  DropReason drop(DropReason reason);
  const GatewayMapping* mapping_for_overlay(const OverlayAddress& address) const;
  const GatewayMapping* mapping_for_plain(const IpAddress& address) const;

  EntityId id_;
  InfraEndpoint self_;
  uint16_t gateway_port_;
  IngressFilter filter_;
  std::shared_ptr<const SapSnapshot> snapshot_;
  EntityCounters counters_;
};

// Snapshot extraction from a compiled state. Missing entities get empty
// (deny-all) snapshots.
std::shared_ptr<const ForwardingTable> table_snapshot(const CompiledState& state,
                                                      const EntityId& id);
std::shared_ptr<const SapSnapshot> sap_snapshot(const CompiledState& state, const EntityId& id);

}  // namespace l3mesh
