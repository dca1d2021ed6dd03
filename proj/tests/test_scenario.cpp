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

#include "l3mesh/scenario.hpp"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace l3mesh {
namespace {

using ::testing::HasSubstr;

ScenarioError error_of(const std::string& text) {
  try {
    parse_scenario(text, "case.json");
  } catch (const ScenarioError& e) {
    return e;
  }
  ADD_FAILURE() << "accepted: " << text;
  return ScenarioError(ScenarioError::Kind::Parse, "");
}

const char* kTwo = R"("entities": [
  {"id": "A", "infra": "10.0.0.1", "overlays": ["v4"]},
  {"id": "B", "infra": "10.0.0.2", "overlays": ["v4"]},
  {"id": "P", "role": "sap", "infra": "10.0.0.9"}])";

std::string with(const std::string& rest) { return std::string("{") + kTwo + rest + "}"; }

TEST(Scenario, LoadsTable1) {
  const Scenario s = testing::scenario("table1");
  EXPECT_EQ(s.name, "table1");
  ASSERT_EQ(s.entities.size(), 5u);
  EXPECT_EQ(s.entities[0].overlays.size(), 2u);
  EXPECT_EQ(s.entity(EntityId("End-User")).role, Role::External);
  EXPECT_EQ(s.entity(EntityId("SaP1")).role, Role::Sap);
  EXPECT_FALSE(s.entity(EntityId("SaP1")).options.runs_agent);
  EXPECT_EQ(s.policy.pairs.size(), 3u);
  EXPECT_TRUE(s.policy.pairs[0].route.direct);
  EXPECT_EQ(s.links.default_spec().latency_us, 150u);
  EXPECT_EQ(s.attacks.size(), 4u);
  EXPECT_EQ(s.entities[0].infra.udp_port, 6080);
}

TEST(Scenario, LoadsWithoutSuffix) {
  EXPECT_EQ(load_scenario(std::string(L3MESH_SCENARIO_DIR) + "/table1").name, "table1");
  EXPECT_THROW(load_scenario("/nonexistent/scenario"), ScenarioError);
}

TEST(Scenario, MissingInfraNamesEntity) {
  const auto e = error_of(R"({"entities": [{"id": "A", "infra": "10.0.0.1", "overlays": ["v4"]}, {"id": "S2", "overlays": ["v4"]}]})");
  EXPECT_EQ(e.kind(), ScenarioError::Kind::Validation);
  EXPECT_THAT(e.what(), HasSubstr("S2"));
  EXPECT_THAT(e.what(), HasSubstr("infra"));
}

TEST(Scenario, SyntaxErrorReportsPosition) {
  const auto e = error_of("{\n  \"entities\": [\n    {\"id\": \"A\",,}\n  ]\n}");
  EXPECT_EQ(e.kind(), ScenarioError::Kind::Parse);
  EXPECT_THAT(e.what(), HasSubstr("case.json:3:"));
}

TEST(Scenario, RejectsUnknownFields) {
  auto e = error_of(with(R"(, "polcy": [])"));
  EXPECT_THAT(e.what(), HasSubstr("unknown field 'polcy'"));
  e = error_of(R"({"entities": [{"id": "A", "infra": "10.0.0.1", "overlay": ["v4"]}]})");
  EXPECT_THAT(e.what(), HasSubstr("entities[0]"));
}

TEST(Scenario, RejectsDanglingReferences) {
  EXPECT_THAT(error_of(with(R"(, "policy": [{"a": "A", "b": "C"}])")).what(), HasSubstr("'C'"));
  EXPECT_THAT(error_of(with(R"(, "policy": [{"a": "A", "b": "B", "route": ["B"]}])")).what(),
              HasSubstr("not a SaP"));
  EXPECT_THAT(error_of(with(R"(, "workload": [{"src": "Z", "dst": "B"}])")).what(), HasSubstr("'Z'"));
  EXPECT_THAT(error_of(with(R"(, "rotations": [{"entity": "Q"}])")).what(), HasSubstr("'Q'"));
  EXPECT_THAT(error_of(with(R"(, "direct_paths": [["A", "X"]])")).what(), HasSubstr("'X'"));
}

TEST(Scenario, RejectsBadValues) {
  EXPECT_THAT(error_of(with(R"(, "workload": [{"src": "A", "dst": "B", "size": 1401}])")).what(),
              HasSubstr("size"));
  EXPECT_THAT(error_of(with(R"(, "workload": [{"src": "A", "dst": "B", "size": 10}])")).what(),
              HasSubstr("size"));
  EXPECT_THAT(error_of(with(R"(, "links": {"default": {"drop_prob": 1.5}})")).what(), HasSubstr("drop_prob"));
  EXPECT_THAT(error_of(with(R"(, "policy": [{"a": "A", "b": "B", "mode": "sideways"}])")).what(),
              HasSubstr("mode"));
  EXPECT_THAT(error_of(R"({"entities": [{"id": "A", "infra": "10.0.0.1", "overlays": ["v4"]},
                             {"id": "B", "infra": "10.0.0.1", "overlays": ["v4"]}]})")
                  .what(),
              HasSubstr("10.0.0.1"));
  EXPECT_THAT(error_of(R"({"entities": [{"id": "A", "infra": "10.0.0.1", "overlays": ["v5"]}]})").what(),
              HasSubstr("v5"));
  EXPECT_THAT(error_of(R"({"config": {"infra_ranges": ["100.64.0.0/16"]}, "entities": []})").what(),
              HasSubstr("config"));
}

TEST(Scenario, AttackerMustBeOutsideMembership) {
  auto attack = [](const char* who) {
    return with(std::string(R"(, "attacks": [{"name": "x", "attacker": ")") + who +
                R"(", "victim": "A", "target": "B"}])");
  };
  EXPECT_NO_THROW(parse_scenario(attack("203.0.113.1:6080")));
  EXPECT_THAT(error_of(attack("10.0.0.1:6080")).what(), HasSubstr("outside"));
  EXPECT_THAT(error_of(attack("100.64.0.7:6080")).what(), HasSubstr("outside"));
}

TEST(Scenario, LinkPairsResolveEntityIds) {
  const Scenario s = parse_scenario(with(R"(, "links": {"default": {"latency_us": 5},
     "pairs": [{"from": "A", "to": "P", "latency_us": 70, "bidirectional": false}]})"));
  EXPECT_EQ(s.links.between(testing::ip("10.0.0.1"), testing::ip("10.0.0.9")).latency_us, 70u);
  EXPECT_EQ(s.links.between(testing::ip("10.0.0.9"), testing::ip("10.0.0.1")).latency_us, 5u);
}

TEST(Deploy, ValidatedRewrapsControlPlaneErrors) {
  Scenario s = parse_scenario(R"({"entities": [
    {"id": "A", "infra": "10.0.0.1", "overlays": ["v4"]},
    {"id": "B", "infra": "10.0.0.2", "overlays": ["v6"]}],
    "policy": [{"a": "A", "b": "B", "route": "direct"}]})");
  try {
    deploy_validated(s);
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.kind(), ScenarioError::Kind::Validation);
    EXPECT_THAT(e.what(), HasSubstr("FamilyMismatch"));
  }
}

TEST(Scenario, EveryShippedScenarioDeploys) {
  for (const char* name : {"table1", "gateway", "two_sap", "empty", "full_mesh"}) {
    EXPECT_NO_THROW(deploy_validated(testing::scenario(name))) << name;
  }
}

}  // namespace
}  // namespace l3mesh
