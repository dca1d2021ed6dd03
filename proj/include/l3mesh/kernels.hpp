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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "l3mesh/policy.hpp"
#include "l3mesh/simnet.hpp"
#include "l3mesh/wire.hpp"

namespace l3mesh {

// Batch kernels. Each *_parallel function is an OpenMP version of the
// matching *_serial reference and must produce identical output; the
// serial versions stay as the test oracle.

// Per input: 0 for a valid packet, otherwise 1 + static_cast<int>(WireError).
using DecodeCode = uint8_t;
inline constexpr DecodeCode kDecodeOk = 0;

std::vector<DecodeCode> decode_batch_serial(std::span<const Bytes> inputs);
std::vector<DecodeCode> decode_batch_parallel(std::span<const Bytes> inputs);

// Tally of decode codes, index = DecodeCode.
using DecodeHistogram = std::vector<uint64_t>;
DecodeHistogram histogram(std::span<const DecodeCode> codes);

// Full per-packet enforcement path: GUE encode with `key`, decode, address
// extraction and ACL lookup. Returns how many packets the ACL permitted.
struct PacketPathInput {
  std::span<const Bytes> inner_packets;
  AuthKey key;
  const AclSet* acl = nullptr;
};

uint64_t packet_path_serial(const PacketPathInput& input);
uint64_t packet_path_parallel(const PacketPathInput& input);

// Every ordered pair probed in its own isolated simulation.
ReachabilityMatrix reachability_matrix_parallel(const Scenario& scenario);

int kernel_threads();

// Wall-clock cost of the packet path over `iterations` packets of
// `inner_size` bytes, timed in batches. Per-packet figures come from the
// serial kernel; the totals compare serial and parallel throughput.
struct BenchReport {
  uint64_t iterations = 0;
  size_t inner_size = 0;
  int threads = 1;
  size_t batch = 0;
  double median_ns = 0;
  double p99_ns = 0;
  double serial_ns_per_packet = 0;
  double parallel_ns_per_packet = 0;
  uint64_t permitted = 0;
};

// Throws std::invalid_argument for zero iterations or an unsupported size.
BenchReport bench_packet_path(uint64_t iterations, size_t inner_size, uint64_t seed = 1);

}  // namespace l3mesh
