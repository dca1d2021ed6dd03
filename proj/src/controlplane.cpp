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

#include "l3mesh/controlplane.hpp"

#include <algorithm>

namespace l3mesh {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Workload: return "workload";
    case Role::Sap: return "sap";
    case Role::Gateway: return "gateway";
    case Role::External: return "external";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view text) {
  for (Role r : {Role::Workload, Role::Sap, Role::Gateway, Role::External}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::string_view to_string(ControlPlaneErrc code) {
  switch (code) {
    case ControlPlaneErrc::RangeExhausted: return "RangeExhausted";
    case ControlPlaneErrc::DuplicateId: return "DuplicateId";
    case ControlPlaneErrc::InfraConflict: return "InfraConflict";
    case ControlPlaneErrc::InfraOutOfRange: return "InfraOutOfRange";
    case ControlPlaneErrc::UnknownEntity: return "UnknownEntity";
    case ControlPlaneErrc::NotASap: return "NotASap";
    case ControlPlaneErrc::FamilyMismatch: return "FamilyMismatch";
    case ControlPlaneErrc::RouteConflict: return "RouteConflict";
    case ControlPlaneErrc::NotPermitted: return "NotPermitted";
    case ControlPlaneErrc::UnknownName: return "UnknownName";
    case ControlPlaneErrc::InvalidConfig: return "InvalidConfig";
    case ControlPlaneErrc::InvalidPolicy: return "InvalidPolicy";
  }
  return "Unknown";
}

bool OverlayConfig::in_overlay_range(const IpAddress& address) const {
  return v4_range.contains(address) || v6_range.contains(address);
}

void OverlayConfig::validate() const {
  if (v4_range.family() != Family::V4 || v6_range.family() != Family::V6) {
    throw ControlPlaneError(ControlPlaneErrc::InvalidConfig, "overlay ranges have the wrong family");
  }
  for (const Cidr& infra : infra_ranges) {
    if (infra.overlaps(v4_range) || infra.overlaps(v6_range)) {
      throw ControlPlaneError(ControlPlaneErrc::InvalidConfig,
                              "infra range " + infra.to_string() + " overlaps an overlay range");
    }
  }
  if (overlay_udp_port == gateway_port) {
    throw ControlPlaneError(ControlPlaneErrc::InvalidConfig,
                            "overlay and gateway ports must differ");
  }
}

std::optional<OverlayAddress> EntityRecord::address_for(Family family) const {
  for (const auto& addr : overlay_addrs) {
    if (addr.family() == family) return addr;
  }
  return std::nullopt;
}

std::set<AuthKey> EntityRecord::accepted_keys() const {
  std::set<AuthKey> keys{current_key};
  if (previous_key) keys.insert(*previous_key);
  return keys;
}

// ---------------------------------------------------------------------------
// Allocation

AddressAllocator::AddressAllocator(Cidr range) : range_(range) {
  const uint64_t last = range_.last_offset();
  if (range_.family() == Family::V4) {
    max_offset_ = range_.host_bits() >= 2 ? last - 1 : 0;
  } else {
    max_offset_ = last;
  }
}

IpAddress AddressAllocator::allocate() {
  uint64_t offset = 0;
  if (!free_.empty()) {
    offset = *free_.begin();
    free_.erase(free_.begin());
  } else if (max_offset_ != 0 && next_offset_ <= max_offset_) {
    offset = next_offset_++;
  } else {
    throw ControlPlaneError(ControlPlaneErrc::RangeExhausted, range_.to_string());
  }
  IpAddress address = range_.at_offset(offset);
  live_.emplace(address, offset);
  return address;
}

void AddressAllocator::release(const IpAddress& address) {
  auto it = live_.find(address);
  if (it == live_.end()) return;
  free_.insert(it->second);
  live_.erase(it);
}

AuthKey KeySource::next(std::optional<AuthKey> avoid) {
  for (;;) {
    AuthKey key{static_cast<uint32_t>(rng_())};
    if (key.assigned() && (!avoid || key != *avoid)) return key;
  }
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

class Compiler {
 public:
  Compiler(const OverlayConfig& config, std::span<const EntityRecord> entities)
      : config_(config) {
    for (const auto& e : entities) {
      if (!by_id_.emplace(e.id, &e).second) {
        throw ControlPlaneError(ControlPlaneErrc::DuplicateId, e.id.str());
      }
      if (e.is_sap()) saps_.push_back(&e);
    }
  }

  CompiledState run(std::span<const EntityRecord> entities, const PolicySpec& policy) {
    config_.validate();
    for (const auto& e : entities) {
      state_.directory[e.id] = DirectoryEntry{e.role, e.infra, e.overlay_addrs, e.runs_agent};
      if (e.runs_agent || e.is_sap()) {
        ForwardingTable& t = state_.tables[e.id];
        t.own_addresses.insert(e.overlay_addrs.begin(), e.overlay_addrs.end());
        t.own_keys = e.accepted_keys();
      }
      if (e.is_sap()) state_.acls[e.id];
      if (e.overlay_addrs.empty()) continue;
      auto register_name = [&](const std::string& name) {
        auto& addrs = state_.name_map[name];
        addrs.insert(addrs.end(), e.overlay_addrs.begin(), e.overlay_addrs.end());
      };
      register_name(e.id.str());
      for (const auto& name : e.names) {
        if (name != e.id.str()) register_name(name);
      }
    }
    for (const auto& e : entities) {
      if (e.bridged()) bind_gateway(e);
    }
    for (const auto& pair : policy.pairs) {
      const EntityRecord& a = endpoint(pair.a);
      const EntityRecord& b = endpoint(pair.b);
      if (a.id == b.id) {
        throw ControlPlaneError(ControlPlaneErrc::InvalidPolicy, "self pair " + a.id.str());
      }
      std::vector<const EntityRecord*> chain = resolve_chain(pair.route);
      add_direction(a, b, pair.route.direct, chain);
      if (pair.mode == PolicyMode::Bidirectional) {
        std::reverse(chain.begin(), chain.end());
        add_direction(b, a, pair.route.direct, chain);
      }
    }
    return std::move(state_);
  }

 private:
  const EntityRecord& find(const EntityId& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw ControlPlaneError(ControlPlaneErrc::UnknownEntity, id.str());
    return *it->second;
  }

  const EntityRecord& endpoint(const EntityId& id) const {
    const EntityRecord& e = find(id);
    if (e.is_sap()) {
      throw ControlPlaneError(ControlPlaneErrc::InvalidPolicy,
                              "SaP " + id.str() + " cannot be a policy endpoint");
    }
    return e;
  }

  const EntityRecord& sap(const EntityId& id) const {
    const EntityRecord& e = find(id);
    if (!e.is_sap()) throw ControlPlaneError(ControlPlaneErrc::NotASap, id.str());
    return e;
  }

  std::vector<const EntityRecord*> resolve_chain(const Route& route) const {
    std::vector<const EntityRecord*> chain;
    if (route.direct) return chain;
    if (route.via_sap.empty()) {
      if (saps_.size() != 1) {
        throw ControlPlaneError(ControlPlaneErrc::InvalidPolicy,
                                "route needs an explicit SaP chain: no single default SaP");
      }
      chain.push_back(saps_.front());
      return chain;
    }
    for (const auto& id : route.via_sap) chain.push_back(&sap(id));
    return chain;
  }

  void bind_gateway(const EntityRecord& e) {
    if (!e.gateway) {
      throw ControlPlaneError(ControlPlaneErrc::InvalidPolicy,
                              e.id.str() + " has no L3 component and no gateway");
    }
    const EntityRecord& gw = sap(*e.gateway);
    auto addr = e.address_for(e.infra.address.family());
    if (e.overlay_addrs.size() != 1 || !addr) {
      throw ControlPlaneError(ControlPlaneErrc::FamilyMismatch,
                              e.id.str() + " needs exactly one overlay address of its infra family");
    }
    state_.gateways[gw.id].push_back(GatewayMapping{e.id, e.infra, *addr, e.accepted_keys()});
  }

  void put(ForwardingTable& table, const EntityId& owner, const ForwardingEntry& entry) {
    auto [it, inserted] = table.entries.emplace(entry.overlay_dst, entry);
    if (!inserted && it->second != entry) {
      throw ControlPlaneError(ControlPlaneErrc::RouteConflict,
                              owner.str() + " has two next hops for " + entry.overlay_dst.to_string());
    }
  }

  void add_direction(const EntityRecord& src, const EntityRecord& dst, bool direct,
                     std::vector<const EntityRecord*> chain) {
    if (direct && (src.bridged() || dst.bridged())) {
      throw ControlPlaneError(ControlPlaneErrc::InvalidPolicy,
                              "direct route " + src.id.str() + " -> " + dst.id.str() +
                                  " involves a party without an L3 component");
    }
    if (src.bridged() && (chain.empty() || chain.front()->id != *src.gateway)) {
      chain.insert(chain.begin(), &find(*src.gateway));
    }
    if (dst.bridged() && (chain.empty() || chain.back()->id != *dst.gateway)) {
      chain.push_back(&find(*dst.gateway));
    }

    std::vector<Family> families;
    for (Family f : {Family::V4, Family::V6}) {
      if (src.address_for(f) && dst.address_for(f)) families.push_back(f);
    }
    if (families.empty()) {
      throw ControlPlaneError(ControlPlaneErrc::FamilyMismatch,
                              src.id.str() + " and " + dst.id.str() + " share no overlay");
    }

    std::vector<EntityId> hops;
    for (const auto* p : chain) hops.push_back(p->id);
    auto [route_it, inserted] = state_.routes.emplace(DirectedPair{src.id, dst.id}, hops);
    if (!inserted && route_it->second != hops) {
      throw ControlPlaneError(ControlPlaneErrc::RouteConflict,
                              "conflicting routes for " + src.id.str() + " -> " + dst.id.str());
    }

    for (Family f : families) {
      const OverlayAddress sa = *src.address_for(f);
      const OverlayAddress da = *dst.address_for(f);
      if (!src.bridged()) {
        const InfraEndpoint& first = chain.empty() ? dst.infra : chain.front()->infra;
        put(state_.tables[src.id], src.id, ForwardingEntry{da, first, dst.current_key});
      }
      for (size_t i = 0; i < chain.size(); ++i) {
        const EntityRecord& hop = *chain[i];
        state_.acls[hop.id].insert(AclRule{sa, da});
        const bool last = i + 1 == chain.size();
        if (last && dst.bridged()) continue;  // the gateway mapping delivers
        const InfraEndpoint& next = last ? dst.infra : chain[i + 1]->infra;
        put(state_.tables[hop.id], hop.id, ForwardingEntry{da, next, dst.current_key});
      }
    }
  }

  const OverlayConfig& config_;
  std::map<EntityId, const EntityRecord*> by_id_;
  std::vector<const EntityRecord*> saps_;
  CompiledState state_;
};

}  // namespace

CompiledState compile(const OverlayConfig& config, std::span<const EntityRecord> entities,
                      const PolicySpec& policy) {
  return Compiler(config, entities).run(entities, policy);
}

CompiledState set_direct_path(CompiledState state, const EntityId& a, const EntityId& b) {
  auto route = state.routes.find(DirectedPair{a, b});
  if (route == state.routes.end()) {
    throw ControlPlaneError(ControlPlaneErrc::NotPermitted, a.str() + " -> " + b.str());
  }
  const DirectoryEntry& src = state.directory.at(a);
  const DirectoryEntry& dst = state.directory.at(b);
  if (!src.runs_agent || !dst.runs_agent) {
    throw ControlPlaneError(ControlPlaneErrc::NotPermitted,
                            a.str() + " -> " + b.str() + " involves a party without an L3 component");
  }
  ForwardingTable& table = state.tables.at(a);
  for (const auto& addr : dst.overlay_addrs) {
    auto entry = table.entries.find(addr);
    if (entry != table.entries.end()) entry->second.next_hop = dst.infra;
  }
  route->second.clear();
  return state;
}

OverlayAddress resolve(const NameMap& names, const std::string& service_name) {
  auto it = names.find(service_name);
  if (it == names.end() || it->second.empty()) {
    throw ControlPlaneError(ControlPlaneErrc::UnknownName, service_name);
  }
  return it->second.front();
}

std::optional<OverlayAddress> resolve(const NameMap& names, const std::string& service_name,
                                      Family family) {
  auto it = names.find(service_name);
  if (it == names.end()) return std::nullopt;
  for (const auto& addr : it->second) {
    if (addr.family() == family) return addr;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ControlPlane

ControlPlane::ControlPlane(OverlayConfig config)
    : config_(std::move(config)), v4_(config_.v4_range), v6_(config_.v6_range), keys_(config_.key_seed) {
  config_.validate();
}

const EntityRecord& ControlPlane::allocate_entity(const EntityId& id, Role role,
                                                  const InfraEndpoint& infra,
                                                  std::span<const Family> overlays,
                                                  EntityOptions options) {
  if (id.empty()) throw ControlPlaneError(ControlPlaneErrc::InvalidConfig, "empty entity id");
  for (const auto& e : entities_) {
    if (e.id == id) throw ControlPlaneError(ControlPlaneErrc::DuplicateId, id.str());
  }
  if (config_.in_overlay_range(infra.address)) {
    throw ControlPlaneError(ControlPlaneErrc::InfraConflict,
                            id.str() + " infra " + infra.address.to_string() +
                                " lies inside an overlay range");
  }
  if (!config_.infra_ranges.empty() &&
      std::none_of(config_.infra_ranges.begin(), config_.infra_ranges.end(),
                   [&](const Cidr& r) { return r.contains(infra.address); })) {
    throw ControlPlaneError(ControlPlaneErrc::InfraOutOfRange,
                            id.str() + " infra " + infra.address.to_string());
  }
  for (size_t i = 0; i < overlays.size(); ++i) {
    for (size_t j = i + 1; j < overlays.size(); ++j) {
      if (overlays[i] == overlays[j]) {
        throw ControlPlaneError(ControlPlaneErrc::InvalidConfig,
                                id.str() + " requests the same overlay twice");
      }
    }
  }

  EntityRecord record;
  record.id = id;
  record.role = role;
  record.infra = infra;
  record.runs_agent = role == Role::Sap ? false : options.runs_agent;
  record.gateway = options.gateway;
  record.names = std::move(options.names);
  try {
    for (Family f : overlays) {
      auto& allocator = f == Family::V4 ? v4_ : v6_;
      record.overlay_addrs.emplace_back(allocator.allocate());
    }
  } catch (const ControlPlaneError&) {
    for (const auto& addr : record.overlay_addrs) {
      (addr.family() == Family::V4 ? v4_ : v6_).release(addr.ip());
    }
    throw;
  }
  record.current_key = keys_.next();
  entities_.push_back(std::move(record));
  return entities_.back();
}

void ControlPlane::release_entity(const EntityId& id) {
  auto it = std::find_if(entities_.begin(), entities_.end(),
                         [&](const EntityRecord& e) { return e.id == id; });
  if (it == entities_.end()) throw ControlPlaneError(ControlPlaneErrc::UnknownEntity, id.str());
  for (const auto& addr : it->overlay_addrs) {
    (addr.family() == Family::V4 ? v4_ : v6_).release(addr.ip());
  }
  entities_.erase(it);
}

void ControlPlane::set_direct_path(const EntityId& a, const EntityId& b) {
  // Validates against a fresh compile so that policy errors surface here.
  (void)l3mesh::set_direct_path(l3mesh::compile(config_, entities_, policy_), a, b);
  direct_paths_.insert(DirectedPair{a, b});
}

CompiledState ControlPlane::compile() const {
  CompiledState state = l3mesh::compile(config_, entities_, policy_);
  for (const auto& [a, b] : direct_paths_) {
    if (state.routes.contains(DirectedPair{a, b})) state = l3mesh::set_direct_path(std::move(state), a, b);
  }
  return state;
}

RotationResult ControlPlane::rotate_key(const EntityId& id) {
  EntityRecord& e = mutable_entity(id);
  e.previous_key = e.current_key;
  e.current_key = keys_.next(e.previous_key);
  return RotationResult{e, compile()};
}

bool ControlPlane::expire_previous_key(const EntityId& id) {
  EntityRecord& e = mutable_entity(id);
  const bool had = e.previous_key.has_value();
  e.previous_key.reset();
  return had;
}

const EntityRecord& ControlPlane::entity(const EntityId& id) const {
  for (const auto& e : entities_) {
    if (e.id == id) return e;
  }
  throw ControlPlaneError(ControlPlaneErrc::UnknownEntity, id.str());
}

EntityRecord& ControlPlane::mutable_entity(const EntityId& id) {
  return const_cast<EntityRecord&>(std::as_const(*this).entity(id));
}

}  // namespace l3mesh
