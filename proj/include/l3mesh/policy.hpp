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

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "l3mesh/ip.hpp"
#include "l3mesh/result.hpp"
#include "l3mesh/wire.hpp"

namespace l3mesh {

class EntityId {
 public:
  EntityId() = default;
  explicit EntityId(std::string name) : name_(std::move(name)) {}

  const std::string& str() const { return name_; }
  bool empty() const { return name_.empty(); }

  auto operator<=>(const EntityId&) const = default;

 private:
  std::string name_;
};

struct ForwardingEntry {
  OverlayAddress overlay_dst;
  InfraEndpoint next_hop;
  // Always the key of the final destination, never of a SaP on the path.
  AuthKey dst_key;

  bool operator==(const ForwardingEntry&) const = default;
};

// Per-entity forwarding state. A destination without an entry is unreachable:
// default deny is the absence of entries.
struct ForwardingTable {
  std::map<OverlayAddress, ForwardingEntry> entries;
  std::set<OverlayAddress> own_addresses;
  // Current key, plus the previous one while a rotation window is open.
  std::set<AuthKey> own_keys;

  bool operator==(const ForwardingTable&) const = default;
};

enum class LookupError : uint8_t { NoRoute };

Result<ForwardingEntry, LookupError> lookup(const ForwardingTable& table, const OverlayAddress& dst);

// Authorizes exactly the src -> dst direction.
struct AclRule {
  OverlayAddress src;
  OverlayAddress dst;

  auto operator<=>(const AclRule&) const = default;
};

using AclSet = std::set<AclRule>;

bool acl_permits(const AclSet& rules, const OverlayAddress& src, const OverlayAddress& dst);

enum class PolicyMode : uint8_t { Bidirectional, AToB };

// A route is either direct, an explicit SaP chain, or (neither set) the
// deployment's single default SaP.
struct Route {
  bool direct = false;
  std::vector<EntityId> via_sap;

  bool uses_default_sap() const { return !direct && via_sap.empty(); }
  bool operator==(const Route&) const = default;
};

struct PolicyPair {
  EntityId a;
  EntityId b;
  PolicyMode mode = PolicyMode::Bidirectional;
  Route route;

  bool operator==(const PolicyPair&) const = default;
};

struct PolicySpec {
  std::vector<PolicyPair> pairs;

  bool operator==(const PolicySpec&) const = default;
};

// True when some pair authorizes the src -> dst direction.
bool policy_permits(const PolicySpec& policy, const EntityId& src, const EntityId& dst);

}  // namespace l3mesh
