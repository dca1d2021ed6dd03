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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "l3mesh/scenario.hpp"
#include "test_util.hpp"

namespace l3mesh {
namespace {

using testing::ov;

class Table1Lookup : public ::testing::Test {
 protected:
  void SetUp() override { d_ = std::make_unique<Deployment>(deploy(testing::scenario("table1"))); }
  const EntityRecord& rec(const char* id) const { return d_->control_plane.entity(EntityId(id)); }
  const ForwardingTable& table(const char* id) const { return d_->state.tables.at(EntityId(id)); }

  std::unique_ptr<Deployment> d_;
};

TEST_F(Table1Lookup, SapRoutedEntryCarriesDestinationKey) {
  auto e = lookup(table("S1"), *rec("S3").address_for(Family::V4));
  ASSERT_TRUE(e.ok());
  EXPECT_EQ(e.value().next_hop, rec("SaP1").infra);
  EXPECT_EQ(e.value().dst_key, rec("S3").current_key);
  EXPECT_NE(e.value().dst_key, rec("SaP1").current_key);
}

TEST_F(Table1Lookup, UnpermittedDestinationHasNoRoute) {
  auto e = lookup(table("S2"), *rec("S3").address_for(Family::V4));
  ASSERT_FALSE(e.ok());
  EXPECT_EQ(e.error(), LookupError::NoRoute);
}

TEST(Lookup, EmptyTableHasNoRoute) {
  ForwardingTable t;
  EXPECT_FALSE(lookup(t, ov("100.64.0.1")).ok());
  EXPECT_FALSE(lookup(t, ov("fd00::1")).ok());
}

TEST(Acl, PermitsListedDirection) {
  const AclSet rules{{ov("100.64.0.1"), ov("100.64.0.3")}, {ov("100.64.0.3"), ov("100.64.0.1")}};
  EXPECT_TRUE(acl_permits(rules, ov("100.64.0.1"), ov("100.64.0.3")));
  EXPECT_TRUE(acl_permits(rules, ov("100.64.0.3"), ov("100.64.0.1")));
}

TEST(Acl, IsDirectional) {
  const AclSet rules{{ov("100.64.0.1"), ov("100.64.0.3")}};
  EXPECT_FALSE(acl_permits(rules, ov("100.64.0.3"), ov("100.64.0.1")));
}

TEST(Acl, EmptySetDeniesEverything) {
  EXPECT_FALSE(acl_permits({}, ov("100.64.0.1"), ov("100.64.0.3")));
}

TEST(Acl, MatchesLinearScanOracle) {
  std::mt19937 rng(5);
  std::vector<OverlayAddress> addrs;
  for (int i = 1; i <= 6; ++i) addrs.push_back(ov("100.64.0." + std::to_string(i)));
  for (int round = 0; round < 200; ++round) {
    std::vector<std::pair<size_t, size_t>> listed;
    AclSet rules;
    for (size_t s = 0; s < addrs.size(); ++s) {
      for (size_t d = 0; d < addrs.size(); ++d) {
        if (s != d && rng() % 3 == 0) {
          listed.emplace_back(s, d);
          rules.insert({addrs[s], addrs[d]});
        }
      }
    }
    for (size_t s = 0; s < addrs.size(); ++s) {
      for (size_t d = 0; d < addrs.size(); ++d) {
        const bool want = std::find(listed.begin(), listed.end(), std::make_pair(s, d)) != listed.end();
        ASSERT_EQ(acl_permits(rules, addrs[s], addrs[d]), want);
      }
    }
  }
}

TEST(PolicyPermits, HonoursMode) {
  PolicySpec p;
  p.pairs.push_back({EntityId("A"), EntityId("B"), PolicyMode::Bidirectional, {}});
  p.pairs.push_back({EntityId("C"), EntityId("A"), PolicyMode::AToB, {}});
  EXPECT_TRUE(policy_permits(p, EntityId("A"), EntityId("B")));
  EXPECT_TRUE(policy_permits(p, EntityId("B"), EntityId("A")));
  EXPECT_TRUE(policy_permits(p, EntityId("C"), EntityId("A")));
  EXPECT_FALSE(policy_permits(p, EntityId("A"), EntityId("C")));
  EXPECT_FALSE(policy_permits(p, EntityId("B"), EntityId("C")));
  EXPECT_FALSE(policy_permits({}, EntityId("A"), EntityId("B")));
}

}  // namespace
}  // namespace l3mesh
