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

#include "l3mesh/ip.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <cstring>

namespace l3mesh {

std::string_view to_string(Family family) { return family == Family::V4 ? "v4" : "v6"; }

std::optional<Family> parse_family(std::string_view text) {
  if (text == "v4") return Family::V4;
  if (text == "v6") return Family::V6;
  return std::nullopt;
}

IpAddress IpAddress::v4(uint32_t host_order) {
  IpAddress out;
  out.family_ = Family::V4;
  out.bytes_[0] = static_cast<uint8_t>(host_order >> 24);
  out.bytes_[1] = static_cast<uint8_t>(host_order >> 16);
  out.bytes_[2] = static_cast<uint8_t>(host_order >> 8);
  out.bytes_[3] = static_cast<uint8_t>(host_order);
  return out;
}

IpAddress IpAddress::v6(const std::array<uint8_t, 16>& bytes) {
  IpAddress out;
  out.family_ = Family::V6;
  out.bytes_ = bytes;
  return out;
}

IpAddress IpAddress::from_bytes(Family family, std::span<const uint8_t> bytes) {
  IpAddress out;
  out.family_ = family;
  const size_t n = family == Family::V4 ? 4 : 16;
  std::copy_n(bytes.begin(), std::min(n, bytes.size()), out.bytes_.begin());
  return out;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  std::string buf(text);
  std::array<uint8_t, 16> raw{};
  if (inet_pton(AF_INET, buf.c_str(), raw.data()) == 1) {
    return from_bytes(Family::V4, std::span<const uint8_t>(raw.data(), 4));
  }
  if (inet_pton(AF_INET6, buf.c_str(), raw.data()) == 1) return v6(raw);
  return std::nullopt;
}

uint32_t IpAddress::v4_value() const {
  return (uint32_t{bytes_[0]} << 24) | (uint32_t{bytes_[1]} << 16) | (uint32_t{bytes_[2]} << 8) |
         uint32_t{bytes_[3]};
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN] = {};
  inet_ntop(family_ == Family::V4 ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof(buf));
  return buf;
}

namespace {

// Zeroes every bit past `prefix_len`.
IpAddress mask(const IpAddress& address, int prefix_len) {
  std::array<uint8_t, 16> raw{};
  auto src = address.bytes();
  std::copy(src.begin(), src.end(), raw.begin());
  const int total = static_cast<int>(src.size()) * 8;
  for (int bit = prefix_len; bit < total; ++bit) {
    raw[bit / 8] &= static_cast<uint8_t>(~(0x80u >> (bit % 8)));
  }
  return IpAddress::from_bytes(address.family(), std::span<const uint8_t>(raw.data(), src.size()));
}

}  // namespace

Cidr::Cidr(IpAddress base, int prefix_len) : base_(mask(base, prefix_len)), prefix_len_(prefix_len) {}

std::optional<Cidr> Cidr::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto address = IpAddress::parse(text.substr(0, slash));
  if (!address) return std::nullopt;
  int len = -1;
  auto digits = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  const int max_len = address->family() == Family::V4 ? 32 : 128;
  if (len < 0 || len > max_len) return std::nullopt;
  return Cidr(*address, len);
}

int Cidr::host_bits() const { return (family() == Family::V4 ? 32 : 128) - prefix_len_; }

bool Cidr::contains(const IpAddress& address) const {
  if (address.family() != family()) return false;
  return mask(address, prefix_len_) == base_;
}

bool Cidr::overlaps(const Cidr& other) const {
  if (other.family() != family()) return false;
  const int shorter = std::min(prefix_len_, other.prefix_len_);
  return mask(base_, shorter) == mask(other.base_, shorter);
}

IpAddress Cidr::at_offset(uint64_t offset) const {
  auto src = base_.bytes();
  std::array<uint8_t, 16> raw{};
  std::copy(src.begin(), src.end(), raw.begin());
  // Big-endian add with carry.
  unsigned carry = 0;
  for (int i = static_cast<int>(src.size()) - 1; i >= 0; --i) {
    const unsigned sum = raw[i] + static_cast<unsigned>(offset & 0xff) + carry;
    raw[i] = static_cast<uint8_t>(sum);
    carry = sum >> 8;
    offset >>= 8;
    if (offset == 0 && carry == 0) break;
  }
  return IpAddress::from_bytes(family(), std::span<const uint8_t>(raw.data(), src.size()));
}

uint64_t Cidr::last_offset() const {
  const int bits = host_bits();
  if (bits >= 64) return UINT64_MAX;
  return (uint64_t{1} << bits) - 1;
}

std::string Cidr::to_string() const { return base_.to_string() + "/" + std::to_string(prefix_len_); }

std::optional<OverlayAddress> OverlayAddress::parse(std::string_view text) {
  auto ip = IpAddress::parse(text);
  if (!ip) return std::nullopt;
  return OverlayAddress(*ip);
}

std::optional<InfraEndpoint> InfraEndpoint::parse(std::string_view text,
                                                  std::optional<uint16_t> default_port) {
  std::string_view host = text;
  std::string_view port_text;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = text.substr(1, close - 1);
    auto rest = text.substr(close + 1);
    if (!rest.empty()) {
      if (rest.front() != ':') return std::nullopt;
      port_text = rest.substr(1);
    }
  } else if (std::count(text.begin(), text.end(), ':') == 1) {
    const auto colon = text.find(':');
    host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  auto address = IpAddress::parse(host);
  if (!address) return std::nullopt;
  InfraEndpoint out{*address, 0};
  if (port_text.empty()) {
    if (!default_port) return std::nullopt;
    out.udp_port = *default_port;
    return out;
  }
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535) {
    return std::nullopt;
  }
  out.udp_port = static_cast<uint16_t>(port);
  return out;
}

std::string InfraEndpoint::to_string() const {
  if (address.family() == Family::V6) {
    return "[" + address.to_string() + "]:" + std::to_string(udp_port);
  }
  return address.to_string() + ":" + std::to_string(udp_port);
}

}  // namespace l3mesh
