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
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "l3mesh/ip.hpp"
#include "l3mesh/policy.hpp"
#include "l3mesh/wire.hpp"

namespace l3mesh {

enum class Role : uint8_t { Workload, Sap, Gateway, External };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

inline constexpr uint16_t kDefaultGatewayPort = 8443;
inline constexpr uint64_t kDefaultRotationWindowUs = 5'000'000;

struct OverlayConfig {
  Cidr v4_range = *Cidr::parse("100.64.0.0/10");
  Cidr v6_range = *Cidr::parse("fd00::/48");
  std::vector<Cidr> infra_ranges;
  uint16_t overlay_udp_port = kDefaultOverlayPort;
  // Port on which gateway SaPs accept plain traffic from non-overlay parties.
  uint16_t gateway_port = kDefaultGatewayPort;
  // Virtual time during which a rotated-out key is still accepted.
  uint64_t rotation_window_us = kDefaultRotationWindowUs;
  uint64_t key_seed = 1;

  const Cidr& range_for(Family family) const { return family == Family::V4 ? v4_range : v6_range; }
  bool in_overlay_range(const IpAddress& address) const;
  // Throws ControlPlaneError(InvalidConfig) when an infra range overlaps an
  // overlay range.
  void validate() const;

  bool operator==(const OverlayConfig&) const = default;
};

enum class ControlPlaneErrc : uint8_t {
  RangeExhausted,
  DuplicateId,
  InfraConflict,
  InfraOutOfRange,
  UnknownEntity,
  NotASap,
  FamilyMismatch,
  RouteConflict,
  NotPermitted,
  UnknownName,
  InvalidConfig,
  InvalidPolicy,
};

std::string_view to_string(ControlPlaneErrc code);

class ControlPlaneError : public std::runtime_error {
 public:
  ControlPlaneError(ControlPlaneErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ControlPlaneErrc code() const { return code_; }

 private:
  ControlPlaneErrc code_;
};

struct EntityOptions {
  // False for parties without an L3 component; they reach the overlay only
  // through `gateway`, which must name a SaP.
  bool runs_agent = true;
  std::optional<EntityId> gateway;
  std::vector<std::string> names;
};

struct EntityRecord {
  EntityId id;
  Role role = Role::Workload;
  InfraEndpoint infra;
  std::vector<OverlayAddress> overlay_addrs;
  AuthKey current_key;
  std::optional<AuthKey> previous_key;
  bool runs_agent = true;
  std::optional<EntityId> gateway;
  std::vector<std::string> names;

  std::optional<OverlayAddress> address_for(Family family) const;
  std::set<AuthKey> accepted_keys() const;
  bool is_sap() const { return role == Role::Sap; }
  // Overlay party bridged by a gateway SaP.
  bool bridged() const { return !runs_agent && !is_sap(); }

  bool operator==(const EntityRecord&) const = default;
};

// Static external <-> overlay binding held by a gateway SaP.
struct GatewayMapping {
  EntityId external;
  InfraEndpoint plain_endpoint;
  OverlayAddress overlay_addr;
  std::set<AuthKey> keys;

  bool operator==(const GatewayMapping&) const = default;
};

struct DirectoryEntry {
  Role role = Role::Workload;
  InfraEndpoint infra;
  std::vector<OverlayAddress> overlay_addrs;
  bool runs_agent = true;

  bool operator==(const DirectoryEntry&) const = default;
};

using NameMap = std::map<std::string, std::vector<OverlayAddress>>;
using DirectedPair = std::pair<EntityId, EntityId>;

struct CompiledState {
  // Forwarding tables for every agent and every SaP.
  std::map<EntityId, ForwardingTable> tables;
  std::map<EntityId, AclSet> acls;
  std::map<EntityId, std::vector<GatewayMapping>> gateways;
  NameMap name_map;
  std::map<EntityId, DirectoryEntry> directory;
  // SaPs traversed for each permitted direction, in order. Empty means direct.
  std::map<DirectedPair, std::vector<EntityId>> routes;

  bool operator==(const CompiledState&) const = default;
};

// Pure recomputation from scratch; identical inputs give identical output.
CompiledState compile(const OverlayConfig& config, std::span<const EntityRecord> entities,
                      const PolicySpec& policy);

// Points a's entries for b straight at b's infrastructure endpoint. Keys are
// untouched and ACL rules stay in place.
CompiledState set_direct_path(CompiledState state, const EntityId& a, const EntityId& b);

// Throws ControlPlaneError(UnknownName).
OverlayAddress resolve(const NameMap& names, const std::string& service_name);
std::optional<OverlayAddress> resolve(const NameMap& names, const std::string& service_name,
                                      Family family);

// Sequential allocator over one CIDR. Offset 0 is never issued, nor the
// top address of IPv4 ranges. Released addresses are reused lowest first.
class AddressAllocator {
 public:
  explicit AddressAllocator(Cidr range);

  IpAddress allocate();
  void release(const IpAddress& address);
  bool is_live(const IpAddress& address) const { return live_.contains(address); }
  const Cidr& range() const { return range_; }

 private:
  Cidr range_;
  uint64_t next_offset_ = 1;
  uint64_t max_offset_ = 0;
  std::set<uint64_t> free_;
  std::map<IpAddress, uint64_t> live_;
};

// Seedable source of nonzero authorization keys.
class KeySource {
 public:
  explicit KeySource(uint64_t seed) : rng_(seed) {}

  AuthKey next(std::optional<AuthKey> avoid = std::nullopt);

 private:
  std::mt19937_64 rng_;
};

struct RotationResult {
  EntityRecord record;
  CompiledState state;
};

// Single logical writer owning entity records, the active policy and the
// explicit direct-path overrides.
class ControlPlane {
 public:
  explicit ControlPlane(OverlayConfig config);

  const EntityRecord& allocate_entity(const EntityId& id, Role role, const InfraEndpoint& infra,
                                      std::span<const Family> overlays, EntityOptions options = {});
  void release_entity(const EntityId& id);

  void set_policy(PolicySpec policy) { policy_ = std::move(policy); }
  const PolicySpec& policy() const { return policy_; }

  // Throws NotPermitted unless a -> b is authorized by the current policy.
  void set_direct_path(const EntityId& a, const EntityId& b);
  const std::set<DirectedPair>& direct_paths() const { return direct_paths_; }

  CompiledState compile() const;

  RotationResult rotate_key(const EntityId& id);
  // Closes the rotation window for `id`; returns false if none was open.
  bool expire_previous_key(const EntityId& id);

  const OverlayConfig& config() const { return config_; }
  const EntityRecord& entity(const EntityId& id) const;
  const std::vector<EntityRecord>& entities() const { return entities_; }

 private:
  EntityRecord& mutable_entity(const EntityId& id);

  OverlayConfig config_;
  AddressAllocator v4_;
  AddressAllocator v6_;
  KeySource keys_;
  // Allocation order is preserved so that compile output is stable.
  std::vector<EntityRecord> entities_;
  PolicySpec policy_;
  std::set<DirectedPair> direct_paths_;
};

}  // namespace l3mesh
