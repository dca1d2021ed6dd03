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

#include "l3mesh/dataplane.hpp"

#include "l3mesh/ip_packet.hpp"

namespace l3mesh {

namespace {

constexpr DropReason kAllReasons[] = {DropReason::NoRoute,   DropReason::KeyMismatch,
                                      DropReason::AclDenied, DropReason::Malformed,
                                      DropReason::NonOverlayIngress, DropReason::NoMapping};

std::optional<uint8_t> proto_of(std::span<const uint8_t> inner) {
  auto version = ip_version(inner);
  if (version == 4) return kProtoIpv4;
  if (version == 6) return kProtoIpv6;
  return std::nullopt;
}

Result<OverlayPair, WireError> addresses_of(std::span<const uint8_t> inner) {
  auto proto = proto_of(inner);
  if (!proto) return WireError::MalformedInner;
  return extract_overlay_addresses(*proto, inner);
}

}  // namespace

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::NoRoute: return "no_route";
    case DropReason::KeyMismatch: return "key_mismatch";
    case DropReason::AclDenied: return "acl_denied";
    case DropReason::Malformed: return "malformed";
    case DropReason::NonOverlayIngress: return "non_overlay_ingress";
    case DropReason::NoMapping: return "no_mapping";
  }
  return "unknown";
}

std::optional<DropReason> parse_drop_reason(std::string_view text) {
  for (DropReason r : kAllReasons) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

void DropCounters::count(DropReason reason) {
  switch (reason) {
    case DropReason::NoRoute: ++no_route; break;
    case DropReason::KeyMismatch: ++key_mismatch; break;
    case DropReason::AclDenied: ++acl_denied; break;
    case DropReason::Malformed: ++malformed; break;
    case DropReason::NonOverlayIngress: ++non_overlay_ingress; break;
    case DropReason::NoMapping: ++no_mapping; break;
  }
}

uint64_t DropCounters::of(DropReason reason) const {
  switch (reason) {
    case DropReason::NoRoute: return no_route;
    case DropReason::KeyMismatch: return key_mismatch;
    case DropReason::AclDenied: return acl_denied;
    case DropReason::Malformed: return malformed;
    case DropReason::NonOverlayIngress: return non_overlay_ingress;
    case DropReason::NoMapping: return no_mapping;
  }
  return 0;
}

uint64_t DropCounters::total() const {
  return no_route + key_mismatch + acl_denied + malformed + non_overlay_ingress + no_mapping;
}

std::optional<Bytes> TunnelPort::pop() {
  if (inbound_.empty()) return std::nullopt;
  Bytes front = std::move(inbound_.front());
  inbound_.pop_front();
  return front;
}

// ---------------------------------------------------------------------------
// L3Agent

L3Agent::L3Agent(EntityId id, InfraEndpoint self, std::span<const OverlayAddress> addresses)
    : id_(std::move(id)),
      self_(self),
      filter_(self.udp_port),
      table_(std::make_shared<const ForwardingTable>()) {
  for (const auto& addr : addresses) tunnels_.emplace(addr, TunnelPort(addr));
}

void L3Agent::adopt_snapshot(std::shared_ptr<const ForwardingTable> table) {
  table_ = table ? std::move(table) : std::make_shared<const ForwardingTable>();
}

DropReason L3Agent::drop(DropReason reason) {
  counters_.drops.count(reason);
  return reason;
}

Result<Datagram, DropReason> L3Agent::egress(std::span<const uint8_t> inner) {
  ++counters_.inputs;
  auto pair = addresses_of(inner);
  if (!pair || !tunnels_.contains(pair->src)) return drop(DropReason::Malformed);
  auto entry = lookup(*table_, pair->dst);
  if (!entry) return drop(DropReason::NoRoute);

  Datagram out{self_, entry->next_hop, Transport::Udp, {}};
  if (encode_into(GueHeader::keyed(pair->dst.family(), entry->dst_key), inner, out.payload)) {
    return drop(DropReason::Malformed);
  }
  ++counters_.emitted;
  return out;
}

Result<OverlayAddress, DropReason> L3Agent::ingress(std::span<const uint8_t> payload,
                                                    Channel channel) {
  ++counters_.inputs;
  if (!filter_.admits(channel)) return drop(DropReason::NonOverlayIngress);
  auto view = decode_view(payload);
  if (!view) return drop(DropReason::Malformed);
  const auto& key = view->header.auth_key;
  if (!key || !table_->own_keys.contains(*key)) return drop(DropReason::KeyMismatch);
  auto pair = extract_overlay_addresses(view->header.inner_proto, view->inner);
  if (!pair) return drop(DropReason::Malformed);
  auto port = tunnels_.find(pair->dst);
  if (port == tunnels_.end()) return drop(DropReason::Malformed);
  port->second.push(Bytes(view->inner.begin(), view->inner.end()));
  ++counters_.delivered;
  return pair->dst;
}

// ---------------------------------------------------------------------------
// SapEngine

SapEngine::SapEngine(EntityId id, InfraEndpoint self, uint16_t gateway_port)
    : id_(std::move(id)),
      self_(self),
      gateway_port_(gateway_port),
      filter_(self.udp_port),
      snapshot_(std::make_shared<const SapSnapshot>()) {}

void SapEngine::adopt_snapshot(std::shared_ptr<const SapSnapshot> snapshot) {
  snapshot_ = snapshot ? std::move(snapshot) : std::make_shared<const SapSnapshot>();
}

DropReason SapEngine::drop(DropReason reason) {
  counters_.drops.count(reason);
  return reason;
}

const GatewayMapping* SapEngine::mapping_for_overlay(const OverlayAddress& address) const {
  for (const auto& m : snapshot_->gateways) {
    if (m.overlay_addr == address) return &m;
  }
  return nullptr;
}

const GatewayMapping* SapEngine::mapping_for_plain(const IpAddress& address) const {
  for (const auto& m : snapshot_->gateways) {
    if (m.plain_endpoint.address == address) return &m;
  }
  return nullptr;
}

Result<Datagram, DropReason> SapEngine::receive(const Datagram& datagram) {
  if (filter_.classify(datagram) == Channel::Overlay) return process(datagram.payload);
  if (datagram.transport == Transport::RawIp && datagram.to.udp_port == gateway_port_) {
    return gateway_ingress(datagram.payload, datagram.from);
  }
  ++counters_.inputs;
  return drop(DropReason::NonOverlayIngress);
}

Result<Datagram, DropReason> SapEngine::process(std::span<const uint8_t> payload) {
  ++counters_.inputs;
  auto view = decode_view(payload);
  if (!view) return drop(DropReason::Malformed);
  auto pair = extract_overlay_addresses(view->header.inner_proto, view->inner);
  if (!pair) return drop(DropReason::Malformed);
  if (!acl_permits(snapshot_->acl, pair->src, pair->dst)) return drop(DropReason::AclDenied);

  if (const GatewayMapping* m = mapping_for_overlay(pair->dst)) {
    // Egress gateway: this SaP terminates the overlay on behalf of a party
    // without an L3 component, so it is also the key-checking endpoint.
    const auto& key = view->header.auth_key;
    if (!key || !m->keys.contains(*key)) return drop(DropReason::KeyMismatch);
    Bytes plain(view->inner.begin(), view->inner.end());
    if (!rewrite_destination(plain, m->plain_endpoint.address)) return drop(DropReason::Malformed);
    ++counters_.emitted;
    return Datagram{InfraEndpoint{self_.address, gateway_port_}, m->plain_endpoint,
                    Transport::RawIp, std::move(plain)};
  }

  auto entry = lookup(snapshot_->table, pair->dst);
  if (!entry) return drop(DropReason::NoRoute);
  ++counters_.emitted;
  return Datagram{self_, entry->next_hop, Transport::Udp, Bytes(payload.begin(), payload.end())};
}

Result<Datagram, DropReason> SapEngine::gateway_ingress(std::span<const uint8_t> plain,
                                                        const InfraEndpoint& from) {
  ++counters_.inputs;
  const GatewayMapping* m = mapping_for_plain(from.address);
  if (!m) return drop(DropReason::NoMapping);
  auto pair = addresses_of(plain);
  if (!pair || pair->dst.family() != m->overlay_addr.family()) return drop(DropReason::Malformed);
  if (!acl_permits(snapshot_->acl, m->overlay_addr, pair->dst)) return drop(DropReason::AclDenied);
  auto entry = lookup(snapshot_->table, pair->dst);
  if (!entry) return drop(DropReason::NoRoute);

  Bytes inner(plain.begin(), plain.end());
  if (!rewrite_source(inner, m->overlay_addr.ip())) return drop(DropReason::Malformed);
  Datagram out{self_, entry->next_hop, Transport::Udp, {}};
  if (encode_into(GueHeader::keyed(pair->dst.family(), entry->dst_key), inner, out.payload)) {
    return drop(DropReason::Malformed);
  }
  ++counters_.emitted;
  return out;
}

std::shared_ptr<const ForwardingTable> table_snapshot(const CompiledState& state,
                                                      const EntityId& id) {
  auto it = state.tables.find(id);
  if (it == state.tables.end()) return std::make_shared<const ForwardingTable>();
  return std::make_shared<const ForwardingTable>(it->second);
}

std::shared_ptr<const SapSnapshot> sap_snapshot(const CompiledState& state, const EntityId& id) {
  auto snapshot = std::make_shared<SapSnapshot>();
  if (auto it = state.tables.find(id); it != state.tables.end()) snapshot->table = it->second;
  if (auto it = state.acls.find(id); it != state.acls.end()) snapshot->acl = it->second;
  if (auto it = state.gateways.find(id); it != state.gateways.end()) snapshot->gateways = it->second;
  return snapshot;
}

}  // namespace l3mesh
