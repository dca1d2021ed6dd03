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

#include "l3mesh/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "l3mesh/scenario.hpp"

namespace l3mesh {

using nlohmann::json;

namespace {

std::string hex_key(AuthKey key) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08x", key.value);
  return buf;
}

[[noreturn]] void bad_dump(const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::Parse, "compiled dump: " + what);
}

AuthKey key_from(const json& j) {
  const std::string text = j.get<std::string>();
  size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(text, &used, 16);
  } catch (const std::exception&) {
    bad_dump("invalid key '" + text + "'");
  }
  if (used != text.size() || value == 0 || value > 0xffffffffUL) bad_dump("invalid key '" + text + "'");
  return AuthKey{static_cast<uint32_t>(value)};
}

OverlayAddress overlay_from(const json& j) {
  auto a = OverlayAddress::parse(j.get<std::string>());
  if (!a) bad_dump("invalid overlay address " + j.dump());
  return *a;
}

InfraEndpoint endpoint_from(const json& j) {
  auto e = InfraEndpoint::parse(j.get<std::string>());
  if (!e) bad_dump("invalid endpoint " + j.dump());
  return *e;
}

json addresses_json(const auto& addrs) {
  json out = json::array();
  for (const auto& a : addrs) out.push_back(a.to_string());
  return out;
}

json keys_json(const std::set<AuthKey>& keys) {
  json out = json::array();
  for (const auto& k : keys) out.push_back(hex_key(k));
  return out;
}

std::set<AuthKey> keys_from(const json& j) {
  std::set<AuthKey> out;
  for (const auto& k : j) out.insert(key_from(k));
  return out;
}

}  // namespace

json compiled_to_json(const CompiledState& state) {
  json out;
  json tables = json::object();
  for (const auto& [id, t] : state.tables) {
    json entries = json::array();
    for (const auto& [dst, e] : t.entries) {
      entries.push_back({{"dst", dst.to_string()},
                         {"next_hop", e.next_hop.to_string()},
                         {"key", hex_key(e.dst_key)}});
    }
    tables[id.str()] = {{"own_addresses", addresses_json(t.own_addresses)},
                        {"own_keys", keys_json(t.own_keys)},
                        {"entries", entries}};
  }
  out["tables"] = tables;

  json acls = json::object();
  for (const auto& [id, rules] : state.acls) {
    json list = json::array();
    for (const auto& r : rules) list.push_back({r.src.to_string(), r.dst.to_string()});
    acls[id.str()] = list;
  }
  out["acls"] = acls;

  json gateways = json::object();
  for (const auto& [id, maps] : state.gateways) {
    json list = json::array();
    for (const auto& m : maps) {
      list.push_back({{"external", m.external.str()},
                      {"plain_endpoint", m.plain_endpoint.to_string()},
                      {"overlay_addr", m.overlay_addr.to_string()},
                      {"keys", keys_json(m.keys)}});
    }
    gateways[id.str()] = list;
  }
  out["gateways"] = gateways;

  json names = json::object();
  for (const auto& [name, addrs] : state.name_map) names[name] = addresses_json(addrs);
  out["names"] = names;

  json directory = json::object();
  for (const auto& [id, d] : state.directory) {
    directory[id.str()] = {{"role", std::string(to_string(d.role))},
                           {"infra", d.infra.to_string()},
                           {"overlay_addrs", addresses_json(d.overlay_addrs)},
                           {"l3_component", d.runs_agent}};
  }
  out["directory"] = directory;

  json routes = json::array();
  for (const auto& [pair, via] : state.routes) {
    json hops = json::array();
    for (const auto& h : via) hops.push_back(h.str());
    routes.push_back({{"src", pair.first.str()}, {"dst", pair.second.str()}, {"via", hops}});
  }
  out["routes"] = routes;
  return out;
}

CompiledState compiled_from_json(const json& dump) {
  CompiledState state;
  try {
    for (const auto& [id, t] : dump.at("tables").items()) {
      ForwardingTable table;
      for (const auto& a : t.at("own_addresses")) table.own_addresses.insert(overlay_from(a));
      table.own_keys = keys_from(t.at("own_keys"));
      for (const auto& e : t.at("entries")) {
        ForwardingEntry entry{overlay_from(e.at("dst")), endpoint_from(e.at("next_hop")),
                              key_from(e.at("key"))};
        table.entries.emplace(entry.overlay_dst, entry);
      }
      state.tables.emplace(EntityId(id), std::move(table));
    }
    for (const auto& [id, rules] : dump.at("acls").items()) {
      AclSet& acl = state.acls[EntityId(id)];
      for (const auto& r : rules) acl.insert(AclRule{overlay_from(r.at(0)), overlay_from(r.at(1))});
    }
    for (const auto& [id, maps] : dump.at("gateways").items()) {
      auto& list = state.gateways[EntityId(id)];
      for (const auto& m : maps) {
        list.push_back(GatewayMapping{EntityId(m.at("external").get<std::string>()),
                                      endpoint_from(m.at("plain_endpoint")),
                                      overlay_from(m.at("overlay_addr")), keys_from(m.at("keys"))});
      }
    }
    for (const auto& [name, addrs] : dump.at("names").items()) {
      auto& list = state.name_map[name];
      for (const auto& a : addrs) list.push_back(overlay_from(a));
    }
    for (const auto& [id, d] : dump.at("directory").items()) {
      auto role = parse_role(d.at("role").get<std::string>());
      if (!role) bad_dump("unknown role for " + id);
      DirectoryEntry entry{*role, endpoint_from(d.at("infra")), {}, d.at("l3_component").get<bool>()};
      for (const auto& a : d.at("overlay_addrs")) entry.overlay_addrs.push_back(overlay_from(a));
      state.directory.emplace(EntityId(id), std::move(entry));
    }
    for (const auto& r : dump.at("routes")) {
      std::vector<EntityId> via;
      for (const auto& h : r.at("via")) via.emplace_back(h.get<std::string>());
      state.routes.emplace(DirectedPair{EntityId(r.at("src").get<std::string>()),
                                        EntityId(r.at("dst").get<std::string>())},
                           std::move(via));
    }
  } catch (const json::exception& e) {
    bad_dump(e.what());
  }
  return state;
}

std::string render_compiled_text(const CompiledState& state) {
  std::ostringstream out;
  for (const auto& [id, d] : state.directory) {
    out << "entity " << id.str() << " role=" << to_string(d.role) << " infra=" << d.infra.to_string();
    for (const auto& a : d.overlay_addrs) out << " overlay=" << a.to_string();
    if (!d.runs_agent && d.role != Role::Sap) out << " l3_component=false";
    out << "\n";
    if (auto t = state.tables.find(id); t != state.tables.end()) {
      out << "  keys:";
      for (const auto& k : t->second.own_keys) out << " " << hex_key(k);
      out << "\n  forwarding (" << t->second.entries.size() << "):\n";
      for (const auto& [dst, e] : t->second.entries) {
        out << "    " << dst.to_string() << " -> " << e.next_hop.to_string() << " key "
            << hex_key(e.dst_key) << "\n";
      }
    }
    if (auto acl = state.acls.find(id); acl != state.acls.end()) {
      out << "  acl (" << acl->second.size() << "):\n";
      for (const auto& r : acl->second) {
        out << "    allow " << r.src.to_string() << " -> " << r.dst.to_string() << "\n";
      }
    }
    if (auto gw = state.gateways.find(id); gw != state.gateways.end()) {
      out << "  gateway mappings (" << gw->second.size() << "):\n";
      for (const auto& m : gw->second) {
        out << "    " << m.external.str() << " " << m.plain_endpoint.to_string() << " <-> "
            << m.overlay_addr.to_string() << "\n";
      }
    }
  }
  out << "routes:\n";
  for (const auto& [pair, via] : state.routes) {
    out << "  " << pair.first.str() << " -> " << pair.second.str() << " ";
    if (via.empty()) {
      out << "direct";
    } else {
      out << "via";
      for (const auto& h : via) out << " " << h.str();
    }
    out << "\n";
  }
  out << "names:\n";
  for (const auto& [name, addrs] : state.name_map) {
    out << "  " << name << " ->";
    for (const auto& a : addrs) out << " " << a.to_string();
    out << "\n";
  }
  return out.str();
}

std::string render_matrix_text(const ReachabilityMatrix& matrix) {
  size_t width = 7;
  for (const auto& e : matrix.entities) width = std::max(width, e.str().size());
  auto pad = [&](const std::string& s) { return s + std::string(width + 2 - std::min(width + 2, s.size()), ' '); };
  size_t cell_width = width;
  for (const auto& [pair, cell] : matrix.cells) {
    if (!cell.delivered) cell_width = std::max(cell_width, cell.reason.size());
  }
  auto pad_cell = [&](const std::string& s) {
    return s + std::string(cell_width + 2 - std::min(cell_width + 2, s.size()), ' ');
  };

  std::ostringstream out;
  out << pad("src\\dst");
  for (const auto& dst : matrix.entities) out << pad_cell(dst.str());
  out << "\n";
  for (const auto& src : matrix.entities) {
    out << pad(src.str());
    for (const auto& dst : matrix.entities) {
      if (src == dst) {
        out << pad_cell("-");
        continue;
      }
      const MatrixCell& cell = matrix.cells.at({src, dst});
      out << pad_cell(cell.delivered ? "ok" : cell.reason);
    }
    out << "\n";
  }
  return out.str();
}

json matrix_to_json(const ReachabilityMatrix& matrix) {
  json delivered = json::array();
  json blocked = json::array();
  for (const auto& [pair, cell] : matrix.cells) {
    if (cell.delivered) {
      delivered.push_back({pair.first.str(), pair.second.str()});
    } else {
      blocked.push_back({pair.first.str(), pair.second.str(), cell.reason});
    }
  }
  return {{"delivered", delivered}, {"blocked", blocked}};
}

std::set<DirectedPair> parse_expected_matrix(const std::string& text) {
  std::set<DirectedPair> out;
  try {
    json j = json::parse(text);
    for (const auto& p : j.at("delivered")) {
      if (!p.is_array() || p.size() != 2) bad_dump("expected [src, dst] pairs");
      out.emplace(EntityId(p.at(0).get<std::string>()), EntityId(p.at(1).get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, std::string("expected matrix: ") + e.what());
  }
  return out;
}

std::set<DirectedPair> load_expected_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Parse, path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_expected_matrix(buf.str());
}

namespace {

struct HopClass {
  uint32_t hops = 0;
  std::vector<uint64_t> latencies;
};

std::vector<HopClass> hop_classes(const RunResult& result) {
  std::map<uint32_t, std::vector<uint64_t>> by_hops;
  for (const auto& [id, f] : result.flows) {
    if (auto l = f.latency_us()) by_hops[f.hops].push_back(*l);
  }
  std::vector<HopClass> out;
  for (auto& [hops, lat] : by_hops) {
    std::sort(lat.begin(), lat.end());
    out.push_back(HopClass{hops, std::move(lat)});
  }
  return out;
}

uint64_t median_of(const std::vector<uint64_t>& sorted) { return sorted[(sorted.size() - 1) / 2]; }

// Power-of-two buckets; bucket 0 holds zero latency.
size_t bucket_of(uint64_t latency) {
  size_t b = 0;
  while (latency > 0) {
    latency >>= 1;
    ++b;
  }
  return b;
}

std::string bucket_label(size_t b) {
  if (b == 0) return "0";
  const uint64_t lo = uint64_t{1} << (b - 1);
  return std::to_string(lo) + "-" + std::to_string((lo << 1) - 1);
}

std::string flow_name(uint32_t flow) {
  char buf[16];
  if (flow & kResponseFlowBit) {
    std::snprintf(buf, sizeof(buf), "%u'", flow & ~kResponseFlowBit);
  } else {
    std::snprintf(buf, sizeof(buf), "%u", flow);
  }
  return buf;
}

}  // namespace

std::string render_run_summary(const RunResult& result) {
  std::ostringstream out;
  out << "seed " << result.seed << ", " << result.trace.size() << " trace records\n";
  out << "flows:\n";
  for (const auto& [id, f] : result.flows) {
    out << "  " << flow_name(id) << " " << f.src.str() << " -> " << f.dst_name << " ";
    if (f.delivered()) {
      out << "delivered to " << f.receiver->str() << " hops=" << f.hops
          << " latency=" << *f.latency_us() << "us";
    } else {
      out << "blocked(" << f.outcome << ") hops=" << f.hops;
    }
    out << "\n";
  }
  out << "latency by hop count:\n";
  const auto classes = hop_classes(result);
  for (const auto& c : classes) {
    out << "  hops=" << c.hops << " flows=" << c.latencies.size() << " min=" << c.latencies.front()
        << "us median=" << median_of(c.latencies) << "us max=" << c.latencies.back() << "us\n";
  }
  std::map<size_t, uint64_t> histogram;
  for (const auto& c : classes) {
    for (uint64_t l : c.latencies) ++histogram[bucket_of(l)];
  }
  if (!histogram.empty()) {
    out << "latency histogram (us):\n";
    for (const auto& [b, n] : histogram) {
      std::string label = bucket_label(b);
      label.resize(std::max<size_t>(label.size(), 12), ' ');
      out << "  " << label << " " << std::string(std::min<uint64_t>(n, 60), '#') << " " << n << "\n";
    }
  }
  out << "entities:\n";
  for (const auto& [id, c] : result.counters) {
    out << "  " << id.str() << " in=" << c.inputs << " delivered=" << c.delivered
        << " emitted=" << c.emitted << " dropped=" << c.drops.total() << "\n";
  }
  return out.str();
}

json run_summary_json(const RunResult& result) {
  json flows = json::array();
  for (const auto& [id, f] : result.flows) {
    flows.push_back({{"flow", id},
                     {"src", f.src.str()},
                     {"dst", f.dst_name},
                     {"delivered", f.delivered()},
                     {"receiver", f.receiver ? json(f.receiver->str()) : json()},
                     {"outcome", f.outcome.empty() ? json() : json(f.outcome)},
                     {"hops", f.hops},
                     {"latency_us", f.latency_us() ? json(*f.latency_us()) : json()}});
  }
  json classes = json::array();
  for (const auto& c : hop_classes(result)) {
    classes.push_back({{"hops", c.hops},
                       {"flows", c.latencies.size()},
                       {"min_us", c.latencies.front()},
                       {"median_us", median_of(c.latencies)},
                       {"max_us", c.latencies.back()}});
  }
  return {{"seed", result.seed}, {"flows", flows}, {"hop_classes", classes}};
}

std::string render_verdict_text(const AttackVerdict& v) {
  std::ostringstream out;
  out << "attack " << v.name << "\n"
      << "  request at target:         " << v.request_outcome << "\n"
      << "  response receiver:         "
      << (v.response_receiver ? v.response_receiver->str() : std::string("none")) << "\n"
      << "  response reached attacker: " << (v.response_reached_attacker ? "yes" : "no") << "\n"
      << "  datagrams seen by attacker: " << v.attacker_observed << "\n";
  return out.str();
}

json verdict_to_json(const AttackVerdict& v) {
  return {{"name", v.name},
          {"request_outcome", v.request_outcome},
          {"response_receiver", v.response_receiver ? json(v.response_receiver->str()) : json()},
          {"response_reached_attacker", v.response_reached_attacker},
          {"attacker_observed", v.attacker_observed}};
}

}  // namespace l3mesh
