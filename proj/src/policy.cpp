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

#include "l3mesh/policy.hpp"

#include <algorithm>

namespace l3mesh {

Result<ForwardingEntry, LookupError> lookup(const ForwardingTable& table, const OverlayAddress& dst) {
  auto it = table.entries.find(dst);
  if (it == table.entries.end()) return LookupError::NoRoute;
  return it->second;
}

bool acl_permits(const AclSet& rules, const OverlayAddress& src, const OverlayAddress& dst) {
  return rules.contains(AclRule{src, dst});
}

bool policy_permits(const PolicySpec& policy, const EntityId& src, const EntityId& dst) {
  return std::any_of(policy.pairs.begin(), policy.pairs.end(), [&](const PolicyPair& p) {
    if (p.a == src && p.b == dst) return true;
    return p.mode == PolicyMode::Bidirectional && p.a == dst && p.b == src;
  });
}

}  // namespace l3mesh
