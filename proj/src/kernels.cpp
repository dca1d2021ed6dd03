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

#include "l3mesh/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <random>
#include <stdexcept>

#include "l3mesh/ip_packet.hpp"

namespace l3mesh {

namespace {

DecodeCode decode_code(std::span<const uint8_t> input) {
  auto view = decode_view(input);
  return view ? kDecodeOk : static_cast<DecodeCode>(1 + static_cast<int>(view.error()));
}

bool packet_path_one(std::span<const uint8_t> inner, AuthKey key, const AclSet& acl, Bytes& scratch) {
  scratch.clear();
  const Family family = !inner.empty() && (inner[0] >> 4) == 6 ? Family::V6 : Family::V4;
  if (encode_into(GueHeader::keyed(family, key), inner, scratch)) return false;
  auto view = decode_view(scratch);
  if (!view) return false;
  auto pair = extract_overlay_addresses(view->header.inner_proto, view->inner);
  return pair && acl_permits(acl, pair->src, pair->dst);
}

}  // namespace

int kernel_threads() { return omp_get_max_threads(); }

std::vector<DecodeCode> decode_batch_serial(std::span<const Bytes> inputs) {
  std::vector<DecodeCode> out(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) out[i] = decode_code(inputs[i]);
  return out;
}

std::vector<DecodeCode> decode_batch_parallel(std::span<const Bytes> inputs) {
  std::vector<DecodeCode> out(inputs.size());
  const auto n = static_cast<int64_t>(inputs.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) out[i] = decode_code(inputs[i]);
  return out;
}

DecodeHistogram histogram(std::span<const DecodeCode> codes) {
  DecodeHistogram h(1 + kWireErrorCount, 0);
  for (DecodeCode c : codes) ++h.at(c);
  return h;
}

uint64_t packet_path_serial(const PacketPathInput& input) {
  const AclSet empty;
  const AclSet& acl = input.acl ? *input.acl : empty;
  Bytes scratch;
  uint64_t permitted = 0;
  for (const auto& inner : input.inner_packets) {
    permitted += packet_path_one(inner, input.key, acl, scratch) ? 1 : 0;
  }
  return permitted;
}

uint64_t packet_path_parallel(const PacketPathInput& input) {
  const AclSet empty;
  const AclSet& acl = input.acl ? *input.acl : empty;
  const auto n = static_cast<int64_t>(input.inner_packets.size());
  uint64_t permitted = 0;
#pragma omp parallel reduction(+ : permitted)
  {
    Bytes scratch;
#pragma omp for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
      permitted += packet_path_one(input.inner_packets[i], input.key, acl, scratch) ? 1 : 0;
    }
  }
  return permitted;
}

ReachabilityMatrix reachability_matrix_parallel(const Scenario& scenario) {
  const Deployment deployment = deploy_validated(scenario);
  ReachabilityMatrix m;
  m.entities = matrix_entities(scenario);
  std::vector<DirectedPair> pairs;
  for (const auto& src : m.entities) {
    for (const auto& dst : m.entities) {
      if (src != dst) pairs.emplace_back(src, dst);
    }
  }
  std::vector<MatrixCell> cells(pairs.size());
  const auto n = static_cast<int64_t>(pairs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    try {
      cells[i] = probe_pair(scenario, deployment, pairs[i].first, pairs[i].second);
    } catch (...) {
#pragma omp critical(l3mesh_matrix_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (size_t i = 0; i < pairs.size(); ++i) m.cells.emplace(pairs[i], std::move(cells[i]));
  return m;
}

BenchReport bench_packet_path(uint64_t iterations, size_t inner_size, uint64_t seed) {
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (inner_size < kIpv4HeaderSize || inner_size > 65535) {
    throw std::invalid_argument("inner size must be between 20 and 65535 bytes");
  }
  using Clock = std::chrono::steady_clock;
  constexpr size_t kPool = 1024;
  constexpr uint32_t kHosts = 16;

  std::mt19937_64 rng(seed);
  AclSet acl;
  for (uint32_t s = 0; s < kHosts; ++s) {
    for (uint32_t d = 0; d < kHosts; ++d) {
      if (s != d && (s + d) % 2 == 0) {
        acl.insert(AclRule{OverlayAddress(IpAddress::v4(0x64400001u + s)),
                           OverlayAddress(IpAddress::v4(0x64400001u + d))});
      }
    }
  }
  const size_t batch = static_cast<size_t>(std::min<uint64_t>(iterations, kPool));
  std::vector<Bytes> pool;
  pool.reserve(batch);
  const Bytes payload(inner_size - kIpv4HeaderSize, 0xab);
  for (size_t i = 0; i < batch; ++i) {
    const uint32_t s = static_cast<uint32_t>(rng() % kHosts);
    const uint32_t d = static_cast<uint32_t>(rng() % kHosts);
    pool.push_back(build_ip_packet(IpAddress::v4(0x64400001u + s), IpAddress::v4(0x64400001u + d),
                                   payload));
  }
  const AuthKey key{0x5a5a5a5au};

  BenchReport report;
  report.iterations = iterations;
  report.inner_size = inner_size;
  report.threads = kernel_threads();
  report.batch = batch;

  std::vector<double> samples;
  uint64_t remaining = iterations;
  auto serial_start = Clock::now();
  while (remaining > 0) {
    const size_t n = static_cast<size_t>(std::min<uint64_t>(remaining, batch));
    PacketPathInput input{std::span<const Bytes>(pool.data(), n), key, &acl};
    const auto t0 = Clock::now();
    report.permitted += packet_path_serial(input);
    const auto t1 = Clock::now();
    samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / n);
    remaining -= n;
  }
  const double serial_total =
      std::chrono::duration<double, std::nano>(Clock::now() - serial_start).count();

  remaining = iterations;
  uint64_t parallel_permitted = 0;
  const auto parallel_start = Clock::now();
  while (remaining > 0) {
    const size_t n = static_cast<size_t>(std::min<uint64_t>(remaining, batch));
    parallel_permitted +=
        packet_path_parallel(PacketPathInput{std::span<const Bytes>(pool.data(), n), key, &acl});
    remaining -= n;
  }
  const double parallel_total =
      std::chrono::duration<double, std::nano>(Clock::now() - parallel_start).count();
  if (parallel_permitted != report.permitted) {
    throw std::logic_error("parallel packet path disagrees with the serial kernel");
  }

  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const size_t idx = static_cast<size_t>(q * static_cast<double>(samples.size() - 1) + 0.5);
    return samples[std::min(idx, samples.size() - 1)];
  };
  report.median_ns = quantile(0.5);
  report.p99_ns = quantile(0.99);
  report.serial_ns_per_packet = serial_total / static_cast<double>(iterations);
  report.parallel_ns_per_packet = parallel_total / static_cast<double>(iterations);
  return report;
}

}  // namespace l3mesh
