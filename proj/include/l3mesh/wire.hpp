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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "l3mesh/ip.hpp"
#include "l3mesh/result.hpp"

namespace l3mesh {

using Bytes = std::vector<uint8_t>;

//  GUE data message with the authorization key extension:
//
//      0                   1                   2                   3
//      0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     |Ver|C|  Hlen   |  Proto/ctype  |K|           Flags             |
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     |                      Authorization key                        |
//     +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//     |                     Inner IPv4/IPv6 packet                    |
//
// K marks the key word as present. All other flag bits must be zero.

inline constexpr size_t kGueBaseHeaderSize = 4;
inline constexpr size_t kGueKeyExtensionSize = 4;
inline constexpr size_t kGueHeaderSize = kGueBaseHeaderSize + kGueKeyExtensionSize;
inline constexpr size_t kUdpHeaderSize = 8;
inline constexpr size_t kIpv4HeaderSize = 20;
inline constexpr size_t kIpv6HeaderSize = 40;
inline constexpr uint16_t kDefaultOverlayPort = 6080;

inline constexpr uint16_t kFlagKeyPresent = 0x8000;
inline constexpr uint8_t kProtoIpv4 = 4;
inline constexpr uint8_t kProtoIpv6 = 41;

// 0 is reserved as "unassigned" and is never allocated.
struct AuthKey {
  uint32_t value = 0;

  bool assigned() const { return value != 0; }
  auto operator<=>(const AuthKey&) const = default;
};

struct GueHeader {
  uint8_t version = 0;
  bool control = false;
  uint8_t hlen = 0;
  uint8_t inner_proto = kProtoIpv4;
  uint16_t flags = 0;
  std::optional<AuthKey> auth_key;

  static GueHeader keyed(Family inner, AuthKey key);
  static GueHeader unkeyed(Family inner);

  bool key_present() const { return (flags & kFlagKeyPresent) != 0; }
  size_t encoded_size() const { return kGueBaseHeaderSize + 4u * hlen; }

  bool operator==(const GueHeader&) const = default;
};

struct GuePacket {
  GueHeader header;
  Bytes inner;

  bool operator==(const GuePacket&) const = default;
};

// Zero-copy decode result; `inner` aliases the decoded buffer.
struct GueView {
  GueHeader header;
  std::span<const uint8_t> inner;
};

enum class WireError : uint8_t {
  Truncated,
  UnsupportedVersion,
  UnknownProto,
  MissingKey,
  UnknownFlags,
  InvalidHeader,
  MalformedInner,
};
inline constexpr size_t kWireErrorCount = 7;

std::string_view to_string(WireError error);

Result<Bytes, WireError> encode(const GueHeader& header, std::span<const uint8_t> inner);
// Appends to `out` instead of allocating; returns the first invalid condition.
std::optional<WireError> encode_into(const GueHeader& header, std::span<const uint8_t> inner,
                                     Bytes& out);

// Total over arbitrary input.
Result<GuePacket, WireError> decode(std::span<const uint8_t> payload);
Result<GueView, WireError> decode_view(std::span<const uint8_t> payload);

struct OverlayPair {
  OverlayAddress src;
  OverlayAddress dst;

  bool operator==(const OverlayPair&) const = default;
};

Result<OverlayPair, WireError> extract_overlay_addresses(const GuePacket& packet);
Result<OverlayPair, WireError> extract_overlay_addresses(uint8_t inner_proto,
                                                         std::span<const uint8_t> inner);

// Bytes on the infrastructure wire for one UDP datagram carrying `udp_payload`
// bytes over an outer IP header of `outer` family.
constexpr size_t udp_wire_size(size_t udp_payload, Family outer) {
  return udp_payload + kUdpHeaderSize + (outer == Family::V4 ? kIpv4HeaderSize : kIpv6HeaderSize);
}

// Encapsulation overhead per inner packet (GUE + UDP + outer IP): 36 for v4.
constexpr size_t encapsulation_overhead(Family outer) { return udp_wire_size(kGueHeaderSize, outer); }

}  // namespace l3mesh
