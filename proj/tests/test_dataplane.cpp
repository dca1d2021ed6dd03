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

#include <gtest/gtest.h>

#include <random>

#include "l3mesh/ip_packet.hpp"
#include "l3mesh/scenario.hpp"
#include "test_util.hpp"

namespace l3mesh {
namespace {

using testing::ip;

Bytes packet(const OverlayAddress& src, const OverlayAddress& dst, size_t size = 64) {
  return testing::raw_ip(src.ip(), dst.ip(), size);
}

AuthKey key_of(const Bytes& datagram) {
  auto v = decode_view(datagram);
  return v && v->header.auth_key ? *v->header.auth_key : AuthKey{};
}

class DeployedScenario : public ::testing::Test {
 protected:
  void load(const char* name) { d_ = std::make_unique<Deployment>(deploy(testing::scenario(name))); }
  const EntityRecord& rec(const char* id) const { return d_->control_plane.entity(EntityId(id)); }
  OverlayAddress addr(const char* id, Family f = Family::V4) const { return *rec(id).address_for(f); }

  L3Agent agent(const char* id) const {
    const auto& r = rec(id);
    L3Agent a(r.id, r.infra, r.overlay_addrs);
    a.adopt_snapshot(table_snapshot(d_->state, r.id));
    return a;
  }
  SapEngine sap(const char* id) const {
    const auto& r = rec(id);
    SapEngine s(r.id, r.infra, d_->control_plane.config().gateway_port);
    s.adopt_snapshot(sap_snapshot(d_->state, r.id));
    return s;
  }

  std::unique_ptr<Deployment> d_;
};

class Table1Dataplane : public DeployedScenario {
 protected:
  void SetUp() override { load("table1"); }
};

TEST_F(Table1Dataplane, EgressViaSapCarriesDestinationKey) {
  L3Agent s1 = agent("S1");
  auto out = s1.egress(packet(addr("S1"), addr("S3")));
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.value().to, rec("SaP1").infra);
  EXPECT_EQ(out.value().from, rec("S1").infra);
  EXPECT_EQ(key_of(out.value().payload), rec("S3").current_key);
}

TEST_F(Table1Dataplane, EgressDirect) {
  L3Agent s1 = agent("S1");
  auto out = s1.egress(packet(addr("S1"), addr("S2")));
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.value().to, rec("S2").infra);
  EXPECT_EQ(key_of(out.value().payload), rec("S2").current_key);

  auto v6 = s1.egress(packet(addr("S1", Family::V6), addr("End-User", Family::V6)));
  ASSERT_TRUE(v6.ok());
  EXPECT_EQ(decode_view(v6.value().payload)->header.inner_proto, kProtoIpv6);
}

TEST_F(Table1Dataplane, EgressWithoutPolicyIsNoRoute) {
  L3Agent s2 = agent("S2");
  auto out = s2.egress(packet(addr("S2"), addr("S3")));
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.error(), DropReason::NoRoute);
  EXPECT_EQ(s2.counters().drops.no_route, 1u);
}

TEST_F(Table1Dataplane, EgressFromForeignSourceIsMalformed) {
  L3Agent s1 = agent("S1");
  EXPECT_EQ(s1.egress(packet(addr("S2"), addr("S3"))).error(), DropReason::Malformed);
  EXPECT_EQ(s1.egress(Bytes{0x45, 0}).error(), DropReason::Malformed);
}

TEST_F(Table1Dataplane, IngressDeliversToTunnel) {
  L3Agent s3 = agent("S3");
  const Bytes inner = packet(addr("S1"), addr("S3"));
  auto dgram = encode(GueHeader::keyed(Family::V4, rec("S3").current_key), inner);
  auto got = s3.ingress(dgram.value(), Channel::Overlay);
  ASSERT_TRUE(got.ok());
  EXPECT_EQ(got.value(), addr("S3"));
  EXPECT_EQ(s3.tunnel(addr("S3")).pop(), inner);
  EXPECT_EQ(s3.counters().delivered, 1u);
}

TEST(Ingress, WrongKeyIsKeyMismatch) {
  const OverlayAddress self = testing::ov("100.64.0.3");
  L3Agent a(EntityId("S3"), testing::ep("10.0.0.13:6080"), std::vector<OverlayAddress>{self});
  auto t = std::make_shared<ForwardingTable>();
  t->own_addresses.insert(self);
  t->own_keys = {AuthKey{0x5A5A5A5A}};
  a.adopt_snapshot(t);
  const Bytes inner = packet(testing::ov("100.64.0.1"), self);
  auto bad = encode(GueHeader::keyed(Family::V4, AuthKey{0x00000001}), inner);
  EXPECT_EQ(a.ingress(bad.value(), Channel::Overlay).error(), DropReason::KeyMismatch);
  auto unkeyed = encode(GueHeader::unkeyed(Family::V4), inner);
  EXPECT_EQ(a.ingress(unkeyed.value(), Channel::Overlay).error(), DropReason::KeyMismatch);
  auto good = encode(GueHeader::keyed(Family::V4, AuthKey{0x5A5A5A5A}), inner);
  EXPECT_TRUE(a.ingress(good.value(), Channel::Overlay).ok());
  EXPECT_EQ(a.counters().drops.key_mismatch, 2u);
}

TEST_F(Table1Dataplane, RawPacketToServicePortIsDropped) {
  L3Agent s1 = agent("S1");
  Datagram d;
  d.from = testing::ep("203.0.113.66:40000");
  d.to = InfraEndpoint{rec("S1").infra.address, 8080};
  d.transport = Transport::RawIp;
  d.payload = testing::raw_ip(ip("203.0.113.66"), rec("S1").infra.address, 64);
  EXPECT_EQ(s1.ingress(d).error(), DropReason::NonOverlayIngress);
  EXPECT_EQ(s1.counters().drops.non_overlay_ingress, 1u);
}

TEST_F(Table1Dataplane, ChannelGateHoldsEvenWithValidKey) {
  L3Agent s3 = agent("S3");
  auto dgram = encode(GueHeader::keyed(Family::V4, rec("S3").current_key), packet(addr("S1"), addr("S3")));
  EXPECT_EQ(s3.ingress(dgram.value(), Channel::NonOverlay).error(), DropReason::NonOverlayIngress);
  Datagram wrong_port{rec("S1").infra, InfraEndpoint{rec("S3").infra.address, 8080}, Transport::Udp,
                      dgram.value()};
  EXPECT_EQ(s3.ingress(wrong_port).error(), DropReason::NonOverlayIngress);
  EXPECT_EQ(s3.tunnel(addr("S3")).pending(), 0u);
}

TEST_F(Table1Dataplane, IngressForOtherDestinationIsMalformed) {
  L3Agent s3 = agent("S3");
  auto dgram = encode(GueHeader::keyed(Family::V4, rec("S3").current_key), packet(addr("S1"), addr("S2")));
  EXPECT_EQ(s3.ingress(dgram.value(), Channel::Overlay).error(), DropReason::Malformed);
  EXPECT_EQ(s3.ingress(Bytes{1, 2, 3}, Channel::Overlay).error(), DropReason::Malformed);
}

TEST_F(Table1Dataplane, SapForwardsBytesUnchanged) {
  L3Agent s1 = agent("S1");
  SapEngine sap1 = sap("SaP1");
  auto out = s1.egress(packet(addr("S1"), addr("S3"), 300));
  ASSERT_TRUE(out.ok());
  auto fwd = sap1.receive(out.value());
  ASSERT_TRUE(fwd.ok());
  EXPECT_EQ(fwd.value().payload, out.value().payload);
  EXPECT_EQ(fwd.value().to, rec("S3").infra);
  EXPECT_EQ(fwd.value().from, rec("SaP1").infra);
}

TEST_F(Table1Dataplane, SapDeniesUnlistedPair) {
  SapEngine sap1 = sap("SaP1");
  auto forged = encode(GueHeader::keyed(Family::V4, rec("S3").current_key), packet(addr("S2"), addr("S3")));
  EXPECT_EQ(sap1.process(forged.value()).error(), DropReason::AclDenied);
  EXPECT_EQ(sap1.process(Bytes{0, 0}).error(), DropReason::Malformed);
  EXPECT_EQ(sap1.counters().drops.acl_denied, 1u);
}

TEST_F(Table1Dataplane, AdoptSnapshot) {
  L3Agent s1 = agent("S1");
  s1.adopt_snapshot(std::make_shared<ForwardingTable>());
  EXPECT_EQ(s1.egress(packet(addr("S1"), addr("S2"))).error(), DropReason::NoRoute);
  auto snap = table_snapshot(d_->state, EntityId("S1"));
  s1.adopt_snapshot(snap);
  auto first = s1.egress(packet(addr("S1"), addr("S2")));
  s1.adopt_snapshot(snap);
  EXPECT_EQ(s1.table(), *snap);
  auto second = s1.egress(packet(addr("S1"), addr("S2")));
  ASSERT_TRUE(first.ok());
  EXPECT_EQ(first.value(), second.value());
  EXPECT_EQ(first.value().to, rec("S2").infra);
}

TEST_F(Table1Dataplane, CountersBalanceUnderRandomTraffic) {
  std::mt19937_64 rng(17);
  L3Agent s1 = agent("S1");
  L3Agent s3 = agent("S3");
  SapEngine sap1 = sap("SaP1");
  const std::vector<OverlayAddress> addrs{addr("S1"), addr("S2"), addr("S3"), addr("S1", Family::V6),
                                          addr("End-User", Family::V6)};
  for (int i = 0; i < 3000; ++i) {
    const auto& src = addrs[rng() % addrs.size()];
    const auto& dst = addrs[rng() % addrs.size()];
    Bytes inner = src.family() == dst.family() ? packet(src, dst, 40 + rng() % 200) : Bytes(rng() % 50, 0x45);
    switch (rng() % 3) {
      case 0:
        (void)s1.egress(inner);
        break;
      case 1: {
        const AuthKey k = rng() % 2 ? rec("S3").current_key : AuthKey{static_cast<uint32_t>(rng() | 1)};
        Bytes d = encode(GueHeader::keyed(src.family(), k), inner).ok()
                      ? encode(GueHeader::keyed(src.family(), k), inner).value()
                      : inner;
        (void)s3.ingress(d, rng() % 5 ? Channel::Overlay : Channel::NonOverlay);
        break;
      }
      default: {
        Datagram d{rec("S1").infra, rec("SaP1").infra, rng() % 6 ? Transport::Udp : Transport::RawIp,
                   encode(GueHeader::keyed(src.family(), AuthKey{9}), inner).ok()
                       ? encode(GueHeader::keyed(src.family(), AuthKey{9}), inner).value()
                       : inner};
        (void)sap1.receive(d);
      }
    }
  }
  EXPECT_TRUE(s1.counters().balanced());
  EXPECT_TRUE(s3.counters().balanced());
  EXPECT_TRUE(sap1.counters().balanced());
  EXPECT_GT(s1.counters().inputs + s3.counters().inputs + sap1.counters().inputs, 2900u);
}

class TwoSapDataplane : public DeployedScenario {
 protected:
  void SetUp() override { load("two_sap"); }
};

TEST_F(TwoSapDataplane, ChainForwardsSapToSap) {
  L3Agent s1 = agent("S1");
  SapEngine sap1 = sap("SaP1");
  SapEngine sap2 = sap("SaP2");
  auto out = s1.egress(packet(addr("S1"), addr("User")));
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.value().to, rec("SaP1").infra);
  auto hop1 = sap1.receive(out.value());
  ASSERT_TRUE(hop1.ok());
  EXPECT_EQ(hop1.value().to, rec("SaP2").infra);
  auto hop2 = sap2.receive(hop1.value());
  ASSERT_TRUE(hop2.ok());
  EXPECT_EQ(hop2.value().to, rec("User").infra);
  EXPECT_EQ(hop2.value().payload, out.value().payload);
}

class GatewayDataplane : public DeployedScenario {
 protected:
  void SetUp() override { load("gateway"); }
};

TEST_F(GatewayDataplane, PlainIngressIsEncapsulatedTowardDestination) {
  SapEngine gw = sap("GW");
  const auto& browser = rec("Browser");
  const Bytes plain = build_ip_packet(browser.infra.address, addr("S1").ip(), Bytes(30, 7));
  Datagram in{browser.infra, InfraEndpoint{rec("GW").infra.address, d_->control_plane.config().gateway_port},
              Transport::RawIp, plain};
  auto out = gw.receive(in);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.value().to, rec("S1").infra);
  EXPECT_EQ(out.value().transport, Transport::Udp);
  auto view = decode_view(out.value().payload);
  ASSERT_TRUE(view.ok());
  EXPECT_EQ(*view.value().header.auth_key, rec("S1").current_key);
  auto pair = extract_overlay_addresses(view.value().header.inner_proto, view.value().inner);
  EXPECT_EQ(pair.value().src, addr("Browser"));
  EXPECT_EQ(pair.value().dst, addr("S1"));

  // S1 accepts what the gateway produced.
  L3Agent s1 = agent("S1");
  EXPECT_TRUE(s1.ingress(out.value()).ok());
}

TEST_F(GatewayDataplane, UnmappedSourceIsNoMapping) {
  SapEngine gw = sap("GW");
  const Bytes plain = build_ip_packet(ip("198.51.100.99"), addr("S1").ip(), Bytes(30, 7));
  EXPECT_EQ(gw.gateway_ingress(plain, testing::ep("198.51.100.99:5000")).error(), DropReason::NoMapping);
  EXPECT_EQ(gw.counters().drops.no_mapping, 1u);
}

TEST_F(GatewayDataplane, ReversePathDecapsulates) {
  SapEngine gw = sap("GW");
  L3Agent s1 = agent("S1");
  const Bytes inner = packet(addr("S1"), addr("Browser"), 90);
  auto out = s1.egress(inner);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.value().to, rec("GW").infra);
  auto plain = gw.receive(out.value());
  ASSERT_TRUE(plain.ok());
  EXPECT_EQ(plain.value().transport, Transport::RawIp);
  EXPECT_EQ(plain.value().to, rec("Browser").infra);
  EXPECT_EQ(plain.value().payload.size(), inner.size());
  auto pair = extract_overlay_addresses(kProtoIpv4, plain.value().payload);
  EXPECT_EQ(pair.value().src, addr("S1"));
  EXPECT_EQ(pair.value().dst.ip(), rec("Browser").infra.address);

  // A stale or forged key toward the bridged party is refused at the gateway.
  auto forged = encode(GueHeader::keyed(Family::V4, AuthKey{rec("Browser").current_key.value ^ 1}), inner);
  EXPECT_EQ(gw.process(forged.value()).error(), DropReason::KeyMismatch);
}

TEST(DropReasons, RoundTripNames) {
  for (auto r : {DropReason::NoRoute, DropReason::KeyMismatch, DropReason::AclDenied, DropReason::Malformed,
                 DropReason::NonOverlayIngress, DropReason::NoMapping}) {
    EXPECT_EQ(parse_drop_reason(to_string(r)), r);
  }
  EXPECT_EQ(to_string(DropReason::KeyMismatch), "key_mismatch");
  EXPECT_FALSE(parse_drop_reason("whatever"));
}

}  // namespace
}  // namespace l3mesh
