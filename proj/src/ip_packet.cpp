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

#include "l3mesh/ip_packet.hpp"

#include <algorithm>

namespace l3mesh {

namespace {

void put16(uint8_t* at, uint16_t v) {
  at[0] = static_cast<uint8_t>(v >> 8);
  at[1] = static_cast<uint8_t>(v);
}

void refresh_v4_checksum(Bytes& packet) {
  put16(&packet[10], 0);
  put16(&packet[10], ipv4_header_checksum({packet.data(), kIpv4HeaderSize}));
}

bool rewrite_address(Bytes& packet, const IpAddress& address, size_t v4_offset, size_t v6_offset) {
  auto version = ip_version(packet);
  if (!version) return false;
  if (*version == 4) {
    if (packet.size() < kIpv4HeaderSize || address.family() != Family::V4) return false;
    std::copy_n(address.bytes().begin(), 4, packet.begin() + static_cast<ptrdiff_t>(v4_offset));
    refresh_v4_checksum(packet);
    return true;
  }
  if (*version == 6) {
    if (packet.size() < kIpv6HeaderSize || address.family() != Family::V6) return false;
    std::copy_n(address.bytes().begin(), 16, packet.begin() + static_cast<ptrdiff_t>(v6_offset));
    return true;
  }
  return false;
}

}  // namespace

uint16_t ipv4_header_checksum(std::span<const uint8_t> header) {
  uint32_t sum = 0;
  for (size_t i = 0; i + 1 < header.size(); i += 2) {
    sum += (uint32_t{header[i]} << 8) | header[i + 1];
  }
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<uint16_t>(~sum);
}

Bytes build_ip_packet(const IpAddress& src, const IpAddress& dst,
                      std::span<const uint8_t> payload, uint8_t l4_proto) {
  Bytes out;
  if (src.family() == Family::V4) {
    out.resize(kIpv4HeaderSize + payload.size());
    out[0] = 0x45;
    put16(&out[2], static_cast<uint16_t>(out.size()));
    out[8] = 64;  // ttl
    out[9] = l4_proto;
    std::copy_n(src.bytes().begin(), 4, out.begin() + 12);
    std::copy_n(dst.bytes().begin(), 4, out.begin() + 16);
    std::copy(payload.begin(), payload.end(), out.begin() + kIpv4HeaderSize);
    refresh_v4_checksum(out);
  } else {
    out.resize(kIpv6HeaderSize + payload.size());
    out[0] = 0x60;
    put16(&out[4], static_cast<uint16_t>(payload.size()));
    out[6] = l4_proto;
    out[7] = 64;  // hop limit
    std::copy_n(src.bytes().begin(), 16, out.begin() + 8);
    std::copy_n(dst.bytes().begin(), 16, out.begin() + 24);
    std::copy(payload.begin(), payload.end(), out.begin() + kIpv6HeaderSize);
  }
  return out;
}

std::optional<uint8_t> ip_version(std::span<const uint8_t> packet) {
  if (packet.empty()) return std::nullopt;
  return static_cast<uint8_t>(packet[0] >> 4);
}

std::optional<std::span<const uint8_t>> ip_payload(std::span<const uint8_t> packet) {
  auto version = ip_version(packet);
  if (!version) return std::nullopt;
  if (*version == 4 && packet.size() >= kIpv4HeaderSize) return packet.subspan(kIpv4HeaderSize);
  if (*version == 6 && packet.size() >= kIpv6HeaderSize) return packet.subspan(kIpv6HeaderSize);
  return std::nullopt;
}

bool rewrite_source(Bytes& packet, const IpAddress& src) { return rewrite_address(packet, src, 12, 8); }

bool rewrite_destination(Bytes& packet, const IpAddress& dst) {
  return rewrite_address(packet, dst, 16, 24);
}

}  // namespace l3mesh
