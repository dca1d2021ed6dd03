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

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace l3mesh {

using nlohmann::json;

const LinkSpec& LinkModel::between(const IpAddress& from, const IpAddress& to) const {
  auto it = links_.find({from, to});
  return it == links_.end() ? default_ : it->second;
}

const EntitySpec* Scenario::find_entity(const EntityId& id) const {
  for (const auto& e : entities) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const EntitySpec& Scenario::entity(const EntityId& id) const {
  if (const EntitySpec* e = find_entity(id)) return *e;
  throw ScenarioError(ScenarioError::Kind::Validation, "unknown entity '" + id.str() + "'");
}

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::Validation, where + ": " + what);
}

// Strict object reader: every key must be consumed, and the path of the
// offending field is carried into every error.
class ObjectReader {
 public:
  ObjectReader(const json& value, std::string where) : value_(value), where_(std::move(where)) {
    if (!value_.is_object()) invalid(where_, "expected an object");
  }

  const std::string& where() const { return where_; }
  std::string at(const std::string& key) const { return where_ + "." + key; }

  const json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = value_.find(key);
    return it == value_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& required(const std::string& key) {
    const json* v = optional(key);
    if (!v) invalid(where_, "missing required field '" + key + "'");
    return *v;
  }

  std::string string(const std::string& key) {
    const json& v = required(key);
    if (!v.is_string()) invalid(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) {
    const json* v = optional(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) invalid(at(key), "expected a string");
    return v->get<std::string>();
  }

  uint64_t u64(const std::string& key, uint64_t fallback) {
    const json* v = optional(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) invalid(at(key), "expected a non-negative integer");
    return v->get<uint64_t>();
  }

  std::optional<uint64_t> optional_u64(const std::string& key) {
    if (!optional(key)) return std::nullopt;
    return u64(key, 0);
  }

  uint16_t port(const std::string& key, uint16_t fallback) {
    const uint64_t v = u64(key, fallback);
    if (v == 0 || v > 65535) invalid(at(key), "port out of range");
    return static_cast<uint16_t>(v);
  }

  double probability(const std::string& key) {
    const json* v = optional(key);
    if (!v) return 0.0;
    if (!v->is_number()) invalid(at(key), "expected a number");
    const double p = v->get<double>();
    if (!(p >= 0.0 && p <= 1.0)) invalid(at(key), "probability must lie in [0, 1]");
    return p;
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = optional(key);
    if (!v) return fallback;
    if (!v->is_boolean()) invalid(at(key), "expected true or false");
    return v->get<bool>();
  }

  const json& array(const std::string& key) {
    static const json kEmpty = json::array();
    const json* v = optional(key);
    if (!v) return kEmpty;
    if (!v->is_array()) invalid(at(key), "expected an array");
    return *v;
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    const json& arr = array(key);
    for (size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) invalid(at(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (!seen_.contains(it.key())) invalid(where_, "unknown field '" + it.key() + "'");
    }
  }

 private:
  const json& value_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string index_path(const std::string& base, size_t i) { return base + "[" + std::to_string(i) + "]"; }

Cidr parse_cidr(const std::string& text, const std::string& where) {
  auto cidr = Cidr::parse(text);
  if (!cidr) invalid(where, "invalid CIDR '" + text + "'");
  return *cidr;
}

OverlayConfig parse_config(const json* value) {
  OverlayConfig config;
  if (!value) return config;
  ObjectReader r(*value, "config");
  if (auto v = r.optional_string("v4_range")) config.v4_range = parse_cidr(*v, r.at("v4_range"));
  if (auto v = r.optional_string("v6_range")) config.v6_range = parse_cidr(*v, r.at("v6_range"));
  for (const auto& text : r.strings("infra_ranges")) {
    config.infra_ranges.push_back(parse_cidr(text, r.at("infra_ranges")));
  }
  config.overlay_udp_port = r.port("overlay_udp_port", kDefaultOverlayPort);
  config.gateway_port = r.port("gateway_port", kDefaultGatewayPort);
  config.rotation_window_us = r.u64("rotation_window_us", kDefaultRotationWindowUs);
  config.key_seed = r.u64("key_seed", 1);
  r.finish();
  if (config.v4_range.family() != Family::V4) invalid("config.v4_range", "must be an IPv4 range");
  if (config.v6_range.family() != Family::V6) invalid("config.v6_range", "must be an IPv6 range");
  try {
    config.validate();
  } catch (const ControlPlaneError& e) {
    invalid("config", e.what());
  }
  return config;
}

EntitySpec parse_entity(const json& value, const std::string& where, const OverlayConfig& config) {
  ObjectReader r(value, where);
  EntitySpec e;
  e.id = EntityId(r.string("id"));
  if (e.id.empty()) invalid(where, "empty entity id");
  const std::string named = where + " (" + e.id.str() + ")";
  const std::string role = r.optional_string("role").value_or("workload");
  auto parsed_role = parse_role(role);
  if (!parsed_role) invalid(named, "unknown role '" + role + "'");
  e.role = *parsed_role;

  if (!r.optional("infra")) invalid(named, "missing required field 'infra'");
  const std::string infra_text = r.string("infra");
  const uint16_t port = r.port("port", config.overlay_udp_port);
  auto infra = InfraEndpoint::parse(infra_text, port);
  if (!infra) invalid(named + ".infra", "invalid endpoint '" + infra_text + "'");
  e.infra = *infra;

  for (const auto& text : r.strings("overlays")) {
    auto family = parse_family(text);
    if (!family) invalid(named + ".overlays", "expected \"v4\" or \"v6\", got '" + text + "'");
    e.overlays.push_back(*family);
  }
  e.options.names = r.strings("names");
  e.options.runs_agent = r.boolean("l3_component", e.role != Role::Sap);
  if (auto gw = r.optional_string("gateway")) e.options.gateway = EntityId(*gw);
  const json& ports = r.array("service_ports");
  for (size_t i = 0; i < ports.size(); ++i) {
    if (!ports[i].is_number_unsigned() || ports[i].get<uint64_t>() == 0 ||
        ports[i].get<uint64_t>() > 65535) {
      invalid(index_path(named + ".service_ports", i), "port out of range");
    }
    e.service_ports.push_back(static_cast<uint16_t>(ports[i].get<uint64_t>()));
  }
  if (e.service_ports.empty() && e.role != Role::Sap) e.service_ports.push_back(8080);
  r.finish();

  if (e.role == Role::Sap && e.options.runs_agent) {
    invalid(named, "SaPs forward without an L3 component; drop 'l3_component'");
  }
  if (e.role != Role::Sap && e.overlays.empty()) invalid(named, "needs at least one overlay");
  if (!e.options.runs_agent && e.role != Role::Sap && !e.options.gateway) {
    invalid(named, "entities without an L3 component need a 'gateway'");
  }
  if (e.options.runs_agent && e.options.gateway) {
    invalid(named, "'gateway' only applies to entities without an L3 component");
  }
  return e;
}

PolicyPair parse_pair(const json& value, const std::string& where) {
  ObjectReader r(value, where);
  PolicyPair p;
  p.a = EntityId(r.string("a"));
  p.b = EntityId(r.string("b"));
  const std::string mode = r.optional_string("mode").value_or("bidirectional");
  if (mode == "bidirectional") {
    p.mode = PolicyMode::Bidirectional;
  } else if (mode == "a_to_b") {
    p.mode = PolicyMode::AToB;
  } else {
    invalid(r.at("mode"), "expected \"bidirectional\" or \"a_to_b\"");
  }
  if (const json* route = r.optional("route")) {
    if (route->is_string() && route->get<std::string>() == "direct") {
      p.route.direct = true;
    } else if (route->is_string() && route->get<std::string>() == "sap") {
      // default SaP
    } else if (route->is_array()) {
      for (size_t i = 0; i < route->size(); ++i) {
        if (!(*route)[i].is_string()) invalid(index_path(r.at("route"), i), "expected a SaP id");
        p.route.via_sap.emplace_back((*route)[i].get<std::string>());
      }
      if (p.route.via_sap.empty()) invalid(r.at("route"), "empty SaP chain");
    } else {
      invalid(r.at("route"), "expected \"direct\", \"sap\" or an array of SaP ids");
    }
  }
  r.finish();
  return p;
}

LinkSpec parse_link_spec(ObjectReader& r) {
  LinkSpec spec;
  spec.latency_us = r.u64("latency_us", 0);
  spec.jitter_us = r.u64("jitter_us", 0);
  spec.drop_prob = r.probability("drop_prob");
  return spec;
}

class Validator {
 public:
  explicit Validator(const Scenario& s) : s_(s) {}

  const EntitySpec& entity(const EntityId& id, const std::string& where) const {
    const EntitySpec* e = s_.find_entity(id);
    if (!e) invalid(where, "unknown entity '" + id.str() + "'");
    return *e;
  }

  const EntitySpec& sap(const EntityId& id, const std::string& where) const {
    const EntitySpec& e = entity(id, where);
    if (e.role != Role::Sap) invalid(where, "'" + id.str() + "' is not a SaP");
    return e;
  }

  const EntitySpec& endpoint(const EntityId& id, const std::string& where) const {
    const EntitySpec& e = entity(id, where);
    if (e.role == Role::Sap) invalid(where, "SaP '" + id.str() + "' cannot be a traffic endpoint");
    return e;
  }

  IpAddress address(const std::string& text, const std::string& where) const {
    if (const EntitySpec* e = s_.find_entity(EntityId(text))) return e->infra.address;
    auto ip = IpAddress::parse(text);
    if (!ip) invalid(where, "'" + text + "' is neither an entity id nor an address");
    return *ip;
  }

 private:
  const Scenario& s_;
};

void check_inner_size(size_t size, const std::string& where) {
  if (size < kMinInnerPacketSize || size > kMaxInnerPacketSize) {
    invalid(where, "inner packet size must lie in [" + std::to_string(kMinInnerPacketSize) + ", " +
                       std::to_string(kMaxInnerPacketSize) + "]");
  }
}

Scenario from_json(const json& root) {
  ObjectReader r(root, "scenario");
  Scenario s;
  s.name = r.optional_string("name").value_or("");
  s.seed = r.u64("seed", 1);
  s.config = parse_config(r.optional("config"));

  const json& entities = r.array("entities");
  std::set<EntityId> ids;
  std::set<IpAddress> infra_addresses;
  for (size_t i = 0; i < entities.size(); ++i) {
    const std::string where = index_path("entities", i);
    EntitySpec e = parse_entity(entities[i], where, s.config);
    if (!ids.insert(e.id).second) invalid(where, "duplicate entity id '" + e.id.str() + "'");
    if (!infra_addresses.insert(e.infra.address).second) {
      invalid(where + " (" + e.id.str() + ")", "infra address " + e.infra.address.to_string() +
                                                   " is already in use");
    }
    s.entities.push_back(std::move(e));
  }
  Validator v(s);
  for (const auto& e : s.entities) {
    if (e.options.gateway) v.sap(*e.options.gateway, "entities (" + e.id.str() + ").gateway");
  }

  const json& policy = r.array("policy");
  for (size_t i = 0; i < policy.size(); ++i) {
    const std::string where = index_path("policy", i);
    PolicyPair p = parse_pair(policy[i], where);
    v.endpoint(p.a, where + ".a");
    v.endpoint(p.b, where + ".b");
    if (p.a == p.b) invalid(where, "a pair needs two distinct entities");
    for (const auto& hop : p.route.via_sap) v.sap(hop, where + ".route");
    s.policy.pairs.push_back(std::move(p));
  }

  const json& direct = r.array("direct_paths");
  for (size_t i = 0; i < direct.size(); ++i) {
    const std::string where = index_path("direct_paths", i);
    if (!direct[i].is_array() || direct[i].size() != 2 || !direct[i][0].is_string() ||
        !direct[i][1].is_string()) {
      invalid(where, "expected [\"src\", \"dst\"]");
    }
    DirectedPair pair{EntityId(direct[i][0].get<std::string>()),
                      EntityId(direct[i][1].get<std::string>())};
    v.endpoint(pair.first, where);
    v.endpoint(pair.second, where);
    s.direct_paths.push_back(std::move(pair));
  }

  if (const json* links = r.optional("links")) {
    ObjectReader lr(*links, "links");
    if (const json* def = lr.optional("default")) {
      ObjectReader dr(*def, "links.default");
      s.links.set_default(parse_link_spec(dr));
      dr.finish();
    }
    const json& pairs = lr.array("pairs");
    for (size_t i = 0; i < pairs.size(); ++i) {
      ObjectReader pr(pairs[i], index_path("links.pairs", i));
      const IpAddress from = v.address(pr.string("from"), pr.at("from"));
      const IpAddress to = v.address(pr.string("to"), pr.at("to"));
      const bool both = pr.boolean("bidirectional", true);
      LinkSpec spec = parse_link_spec(pr);
      pr.finish();
      s.links.set(from, to, spec);
      if (both) s.links.set(to, from, spec);
    }
    lr.finish();
  }

  const json& workload = r.array("workload");
  for (size_t i = 0; i < workload.size(); ++i) {
    ObjectReader wr(workload[i], index_path("workload", i));
    WorkloadItem w;
    w.at_us = wr.u64("at_us", 0);
    w.src = EntityId(wr.string("src"));
    w.dst_name = wr.string("dst");
    w.inner_size = wr.u64("size", 64);
    w.reply = wr.boolean("reply", false);
    wr.finish();
    v.endpoint(w.src, wr.at("src"));
    check_inner_size(w.inner_size, wr.at("size"));
    s.workload.push_back(std::move(w));
  }

  const json& rotations = r.array("rotations");
  for (size_t i = 0; i < rotations.size(); ++i) {
    ObjectReader rr(rotations[i], index_path("rotations", i));
    ScheduledRotation rot{rr.u64("at_us", 0), EntityId(rr.string("entity"))};
    rr.finish();
    v.entity(rot.entity, rr.at("entity"));
    s.rotations.push_back(std::move(rot));
  }

  const json& attacks = r.array("attacks");
  for (size_t i = 0; i < attacks.size(); ++i) {
    ObjectReader ar(attacks[i], index_path("attacks", i));
    AttackSpec a;
    a.name = ar.string("name");
    const std::string kind = ar.optional_string("kind").value_or("spoof");
    if (kind == "spoof") {
      a.kind = AttackKind::Spoof;
    } else if (kind == "raw") {
      a.kind = AttackKind::RawServicePort;
    } else {
      invalid(ar.at("kind"), "expected \"spoof\" or \"raw\"");
    }
    const std::string attacker = ar.string("attacker");
    auto endpoint = InfraEndpoint::parse(attacker, s.config.overlay_udp_port);
    if (!endpoint) invalid(ar.at("attacker"), "invalid endpoint '" + attacker + "'");
    a.attacker = *endpoint;
    if (infra_addresses.contains(a.attacker.address) ||
        s.config.in_overlay_range(a.attacker.address)) {
      invalid(ar.at("attacker"), "adversary endpoints must lie outside the overlay membership");
    }
    a.target = EntityId(ar.string("target"));
    v.endpoint(a.target, ar.at("target"));
    if (a.kind == AttackKind::Spoof) {
      a.victim = EntityId(ar.string("victim"));
      v.endpoint(a.victim, ar.at("victim"));
    } else if (auto victim = ar.optional_string("victim")) {
      a.victim = EntityId(*victim);
      v.endpoint(a.victim, ar.at("victim"));
    }
    a.at_us = ar.u64("at_us", 0);
    a.rotate_target_at_us = ar.optional_u64("rotate_target_at_us");
    a.service_port = ar.port("service_port", 8080);
    a.inner_size = ar.u64("size", 64);
    ar.finish();
    check_inner_size(a.inner_size, ar.at("size"));
    s.attacks.push_back(std::move(a));
  }

  r.finish();
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    size_t column = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ScenarioError(ScenarioError::Kind::Parse, source + ":" + std::to_string(line) + ":" +
                                                        std::to_string(column) + ": " + e.what());
  }
  try {
    return from_json(root);
  } catch (const ScenarioError& e) {
    throw ScenarioError(e.kind(), source + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::filesystem::path actual = path;
  if (!std::filesystem::exists(actual)) {
    std::filesystem::path with_ext = path;
    with_ext += ".json";
    if (std::filesystem::exists(with_ext)) actual = with_ext;
  }
  std::ifstream in(actual);
  if (!in) {
    throw ScenarioError(ScenarioError::Kind::Parse, path.string() + ": cannot open file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), actual.string());
  if (s.name.empty()) s.name = actual.stem().string();
  return s;
}

Deployment deploy(const Scenario& scenario) {
  ControlPlane cp(scenario.config);
  for (const auto& e : scenario.entities) {
    cp.allocate_entity(e.id, e.role, e.infra, e.overlays, e.options);
  }
  cp.set_policy(scenario.policy);
  for (const auto& [a, b] : scenario.direct_paths) cp.set_direct_path(a, b);
  CompiledState state = cp.compile();
  return Deployment{std::move(cp), std::move(state)};
}

Deployment deploy_validated(const Scenario& scenario) {
  try {
    return deploy(scenario);
  } catch (const ControlPlaneError& e) {
    throw ScenarioError(ScenarioError::Kind::Validation,
                        (scenario.name.empty() ? std::string("scenario") : scenario.name) + ": " +
                            e.what());
  }
}

}  // namespace l3mesh
