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
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "l3mesh/controlplane.hpp"
#include "l3mesh/ip.hpp"
#include "l3mesh/policy.hpp"

namespace l3mesh {

inline constexpr size_t kMaxInnerPacketSize = 1400;
// IPv4 header plus the 5-byte probe header.
inline constexpr size_t kMinInnerPacketSize = 25;

struct LinkSpec {
  uint64_t latency_us = 0;
  // Extra latency drawn uniformly from [0, jitter_us] per datagram.
  uint64_t jitter_us = 0;
  double drop_prob = 0.0;

  bool operator==(const LinkSpec&) const = default;
};

// Per ordered pair of infrastructure addresses.
class LinkModel {
 public:
  void set_default(LinkSpec spec) { default_ = spec; }
  void set(const IpAddress& from, const IpAddress& to, LinkSpec spec) { links_[{from, to}] = spec; }
  const LinkSpec& between(const IpAddress& from, const IpAddress& to) const;
  const LinkSpec& default_spec() const { return default_; }
  const std::map<std::pair<IpAddress, IpAddress>, LinkSpec>& overrides() const { return links_; }

  bool operator==(const LinkModel&) const = default;

 private:
  LinkSpec default_;
  std::map<std::pair<IpAddress, IpAddress>, LinkSpec> links_;
};

struct EntitySpec {
  EntityId id;
  Role role = Role::Workload;
  InfraEndpoint infra;
  std::vector<Family> overlays;
  EntityOptions options;
  std::vector<uint16_t> service_ports;
};

struct WorkloadItem {
  uint64_t at_us = 0;
  EntityId src;
  std::string dst_name;
  // Whole inner IP packet, header included.
  size_t inner_size = 64;
  bool reply = false;
};

struct ScheduledRotation {
  uint64_t at_us = 0;
  EntityId entity;
};

enum class AttackKind : uint8_t {
  // GUE datagram with a forged inner source sent straight at the target.
  Spoof,
  // Unencapsulated IP packet at one of the target's service ports.
  RawServicePort,
};

struct AttackSpec {
  std::string name;
  AttackKind kind = AttackKind::Spoof;
  InfraEndpoint attacker;
  EntityId victim;
  EntityId target;
  uint64_t at_us = 0;
  // Rotating the target first turns the attacker's copy of the key stale.
  std::optional<uint64_t> rotate_target_at_us;
  uint16_t service_port = 8080;
  size_t inner_size = 64;
};

struct Scenario {
  std::string name;
  uint64_t seed = 1;
  OverlayConfig config;
  std::vector<EntitySpec> entities;
  PolicySpec policy;
  std::vector<DirectedPair> direct_paths;
  LinkModel links;
  std::vector<WorkloadItem> workload;
  std::vector<ScheduledRotation> rotations;
  std::vector<AttackSpec> attacks;

  const EntitySpec& entity(const EntityId& id) const;
  const EntitySpec* find_entity(const EntityId& id) const;
};

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Parse, Validation };

  ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Strict: unknown keys, missing required fields and dangling references all
// raise ScenarioError. `source` names the input in diagnostics.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
// Also accepts a path without its ".json" suffix.
Scenario load_scenario(const std::filesystem::path& path);

// The control plane after allocating every entity in file order, installing
// the policy and the direct-path overrides.
struct Deployment {
  ControlPlane control_plane;
  CompiledState state;
};

Deployment deploy(const Scenario& scenario);
// Same, with ControlPlaneError rewrapped as ScenarioError(Validation).
Deployment deploy_validated(const Scenario& scenario);

}  // namespace l3mesh
