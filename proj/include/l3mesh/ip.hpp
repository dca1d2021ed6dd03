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

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace l3mesh {

enum class Family : uint8_t { V4, V6 };

std::string_view to_string(Family family);
std::optional<Family> parse_family(std::string_view text);

// An IPv4 or IPv6 address value. Bytes are kept in network order so that
// comparison orders addresses numerically within a family.
class IpAddress {
 public:
  IpAddress() = default;

  static IpAddress v4(uint32_t host_order);
  static IpAddress v6(const std::array<uint8_t, 16>& bytes);
  // `bytes` must hold exactly 4 (V4) or 16 (V6) bytes.
  static IpAddress from_bytes(Family family, std::span<const uint8_t> bytes);
  static std::optional<IpAddress> parse(std::string_view text);

  Family family() const { return family_; }
  std::span<const uint8_t> bytes() const {
    return {bytes_.data(), family_ == Family::V4 ? 4u : 16u};
  }
  uint32_t v4_value() const;
  std::string to_string() const;

  auto operator<=>(const IpAddress&) const = default;

 private:
  Family family_ = Family::V4;
  std::array<uint8_t, 16> bytes_{};
};

class Cidr {
 public:
  Cidr() = default;
  Cidr(IpAddress base, int prefix_len);

  static std::optional<Cidr> parse(std::string_view text);

  const IpAddress& base() const { return base_; }
  int prefix_len() const { return prefix_len_; }
  Family family() const { return base_.family(); }
  int host_bits() const;

  bool contains(const IpAddress& address) const;
  bool overlaps(const Cidr& other) const;

  // Address at `offset` from the range base. Offsets beyond the range size are
  // the caller's problem; see last_offset().
  IpAddress at_offset(uint64_t offset) const;
  // Largest valid offset, saturated at UINT64_MAX for wide IPv6 ranges.
  uint64_t last_offset() const;

  std::string to_string() const;

  auto operator<=>(const Cidr&) const = default;

 private:
  IpAddress base_;
  int prefix_len_ = 0;
};

// Address on a tunnel interface. Lives only inside entities and in inner
// packet headers; the infrastructure never routes it.
class OverlayAddress {
 public:
  OverlayAddress() = default;
  explicit OverlayAddress(IpAddress ip) : ip_(ip) {}

  static std::optional<OverlayAddress> parse(std::string_view text);

  Family family() const { return ip_.family(); }
  const IpAddress& ip() const { return ip_; }
  std::string to_string() const { return ip_.to_string(); }

  auto operator<=>(const OverlayAddress&) const = default;

 private:
  IpAddress ip_;
};

// Routable outer address of an entity: infrastructure IP plus UDP port.
struct InfraEndpoint {
  IpAddress address;
  uint16_t udp_port = 0;

  // Accepts "a.b.c.d:port", "[v6]:port", or a bare address when
  // `default_port` is given.
  static std::optional<InfraEndpoint> parse(std::string_view text,
                                            std::optional<uint16_t> default_port = std::nullopt);
  std::string to_string() const;

  auto operator<=>(const InfraEndpoint&) const = default;
};

}  // namespace l3mesh
