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

#include "l3mesh/wire.hpp"

namespace l3mesh {

namespace {

uint8_t proto_for(Family family) { return family == Family::V4 ? kProtoIpv4 : kProtoIpv6; }

uint8_t ip_version_for_proto(uint8_t proto) { return proto == kProtoIpv4 ? 4 : 6; }

bool known_proto(uint8_t proto) { return proto == kProtoIpv4 || proto == kProtoIpv6; }

bool inner_matches(uint8_t proto, std::span<const uint8_t> inner) {
  return !inner.empty() && (inner[0] >> 4) == ip_version_for_proto(proto);
}

std::optional<WireError> validate_header(const GueHeader& h) {
  if (h.version != 0 || h.control) return WireError::InvalidHeader;
  if (!known_proto(h.inner_proto)) return WireError::InvalidHeader;
  if ((h.flags & ~kFlagKeyPresent) != 0) return WireError::InvalidHeader;
  const uint8_t expected_hlen = h.key_present() ? 1 : 0;
  if (h.hlen != expected_hlen) return WireError::InvalidHeader;
  if (h.key_present() != h.auth_key.has_value()) return WireError::InvalidHeader;
  if (h.auth_key && !h.auth_key->assigned()) return WireError::InvalidHeader;
  return std::nullopt;
}

uint32_t read32(std::span<const uint8_t> at) {
  return (uint32_t{at[0]} << 24) | (uint32_t{at[1]} << 16) | (uint32_t{at[2]} << 8) | uint32_t{at[3]};
}

}  // namespace

GueHeader GueHeader::keyed(Family inner, AuthKey key) {
  GueHeader h;
  h.hlen = 1;
  h.inner_proto = proto_for(inner);
  h.flags = kFlagKeyPresent;
  h.auth_key = key;
  return h;
}

GueHeader GueHeader::unkeyed(Family inner) {
  GueHeader h;
  h.inner_proto = proto_for(inner);
  return h;
}

std::string_view to_string(WireError error) {
  switch (error) {
    case WireError::Truncated: return "truncated";
    case WireError::UnsupportedVersion: return "unsupported_version";
    case WireError::UnknownProto: return "unknown_proto";
    case WireError::MissingKey: return "missing_key";
    case WireError::UnknownFlags: return "unknown_flags";
    case WireError::InvalidHeader: return "invalid_header";
    case WireError::MalformedInner: return "malformed_inner";
  }
  return "unknown";
}

std::optional<WireError> encode_into(const GueHeader& header, std::span<const uint8_t> inner,
                                     Bytes& out) {
  if (auto err = validate_header(header)) return err;
  if (!inner_matches(header.inner_proto, inner)) return WireError::MalformedInner;

  out.reserve(out.size() + header.encoded_size() + inner.size());
  out.push_back(static_cast<uint8_t>((header.version << 6) | (header.control ? 0x20 : 0) |
                                     (header.hlen & 0x1f)));
  out.push_back(header.inner_proto);
  out.push_back(static_cast<uint8_t>(header.flags >> 8));
  out.push_back(static_cast<uint8_t>(header.flags));
  if (header.auth_key) {
    const uint32_t k = header.auth_key->value;
    out.push_back(static_cast<uint8_t>(k >> 24));
    out.push_back(static_cast<uint8_t>(k >> 16));
    out.push_back(static_cast<uint8_t>(k >> 8));
    out.push_back(static_cast<uint8_t>(k));
  }
  out.insert(out.end(), inner.begin(), inner.end());
  return std::nullopt;
}

Result<Bytes, WireError> encode(const GueHeader& header, std::span<const uint8_t> inner) {
  Bytes out;
  if (auto err = encode_into(header, inner, out)) return *err;
  return out;
}

Result<GueView, WireError> decode_view(std::span<const uint8_t> payload) {
  if (payload.size() < kGueBaseHeaderSize) return WireError::Truncated;

  GueView view;
  GueHeader& h = view.header;
  h.version = payload[0] >> 6;
  h.control = (payload[0] & 0x20) != 0;
  h.hlen = payload[0] & 0x1f;
  h.inner_proto = payload[1];
  h.flags = static_cast<uint16_t>((payload[2] << 8) | payload[3]);

  if (h.version != 0 || h.control) return WireError::UnsupportedVersion;
  if (!known_proto(h.inner_proto)) return WireError::UnknownProto;
  if ((h.flags & ~kFlagKeyPresent) != 0) return WireError::UnknownFlags;
  if (h.key_present() && h.hlen == 0) return WireError::MissingKey;
  // The key is the only extension this codec understands.
  if (h.hlen != (h.key_present() ? 1 : 0)) return WireError::InvalidHeader;
  if (payload.size() < h.encoded_size()) return WireError::Truncated;
  if (h.key_present()) {
    AuthKey key{read32(payload.subspan(kGueBaseHeaderSize, 4))};
    if (!key.assigned()) return WireError::InvalidHeader;
    h.auth_key = key;
  }
  view.inner = payload.subspan(h.encoded_size());
  if (!inner_matches(h.inner_proto, view.inner)) return WireError::MalformedInner;
  return view;
}

Result<GuePacket, WireError> decode(std::span<const uint8_t> payload) {
  auto view = decode_view(payload);
  if (!view) return view.error();
  return GuePacket{view->header, Bytes(view->inner.begin(), view->inner.end())};
}

Result<OverlayPair, WireError> extract_overlay_addresses(uint8_t inner_proto,
                                                         std::span<const uint8_t> inner) {
  if (!inner_matches(inner_proto, inner)) return WireError::MalformedInner;
  if (inner_proto == kProtoIpv4) {
    if (inner.size() < kIpv4HeaderSize) return WireError::MalformedInner;
    return OverlayPair{OverlayAddress(IpAddress::from_bytes(Family::V4, inner.subspan(12, 4))),
                       OverlayAddress(IpAddress::from_bytes(Family::V4, inner.subspan(16, 4)))};
  }
  if (inner.size() < kIpv6HeaderSize) return WireError::MalformedInner;
  return OverlayPair{OverlayAddress(IpAddress::from_bytes(Family::V6, inner.subspan(8, 16))),
                     OverlayAddress(IpAddress::from_bytes(Family::V6, inner.subspan(24, 16)))};
}

Result<OverlayPair, WireError> extract_overlay_addresses(const GuePacket& packet) {
  return extract_overlay_addresses(packet.header.inner_proto, packet.inner);
}

}  // namespace l3mesh
