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
#include <optional>
#include <span>

#include "l3mesh/ip.hpp"
#include "l3mesh/wire.hpp"

namespace l3mesh {

// Minimal IP packet construction and inspection for inner packets. No options,
// no extension headers; L4 content is treated as opaque payload.

inline constexpr uint8_t kIpProtoUdp = 17;

// src and dst must share a family.
Bytes build_ip_packet(const IpAddress& src, const IpAddress& dst,
                      std::span<const uint8_t> payload, uint8_t l4_proto = kIpProtoUdp);

// Version nibble of the first byte, or nullopt for empty input.
std::optional<uint8_t> ip_version(std::span<const uint8_t> packet);

// Payload past the fixed header, or nullopt if the packet is too short or its
// version is not 4 or 6.
std::optional<std::span<const uint8_t>> ip_payload(std::span<const uint8_t> packet);

// In-place address rewrites used by gateway proxies. The replacement must
// match the packet family; IPv4 header checksums are recomputed.
bool rewrite_source(Bytes& packet, const IpAddress& src);
bool rewrite_destination(Bytes& packet, const IpAddress& dst);

uint16_t ipv4_header_checksum(std::span<const uint8_t> header);

}  // namespace l3mesh
