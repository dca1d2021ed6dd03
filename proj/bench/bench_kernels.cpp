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

#include <benchmark/benchmark.h>

#include <random>

#include "l3mesh/ip_packet.hpp"
#include "l3mesh/kernels.hpp"
#include "l3mesh/scenario.hpp"

namespace {

using namespace l3mesh;

std::vector<Bytes> random_inputs(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Bytes> out(n);
  for (auto& b : out) {
    b.resize(rng() % 96);
    for (auto& byte : b) byte = static_cast<uint8_t>(rng());
    // Bias a quarter of the inputs towards valid headers.
    if (b.size() >= 8 && rng() % 4 == 0) {
      b[0] = 0x01;
      b[1] = 0x04;
      b[2] = 0x80;
      b[3] = 0x00;
    }
  }
  return out;
}

std::vector<Bytes> inner_packets(size_t n, size_t size) {
  std::vector<Bytes> out;
  const Bytes payload(size - kIpv4HeaderSize, 0);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(build_ip_packet(IpAddress::v4(0x64400001u + i % 8),
                                  IpAddress::v4(0x64400001u + (i + 3) % 8), payload));
  }
  return out;
}

AclSet even_acl() {
  AclSet acl;
  for (uint32_t s = 0; s < 8; ++s) {
    for (uint32_t d = 0; d < 8; ++d) {
      if (s != d && (s + d) % 2 == 0) {
        acl.insert({OverlayAddress(IpAddress::v4(0x64400001u + s)),
                    OverlayAddress(IpAddress::v4(0x64400001u + d))});
      }
    }
  }
  return acl;
}

void BM_DecodeSerial(benchmark::State& state) {
  const auto inputs = random_inputs(static_cast<size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(decode_batch_serial(inputs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DecodeParallel(benchmark::State& state) {
  const auto inputs = random_inputs(static_cast<size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(decode_batch_parallel(inputs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PacketPathSerial(benchmark::State& state) {
  const auto packets = inner_packets(static_cast<size_t>(state.range(0)), 512);
  const AclSet acl = even_acl();
  for (auto _ : state) {
    benchmark::DoNotOptimize(packet_path_serial({packets, AuthKey{0x5a5a5a5a}, &acl}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PacketPathParallel(benchmark::State& state) {
  const auto packets = inner_packets(static_cast<size_t>(state.range(0)), 512);
  const AclSet acl = even_acl();
  for (auto _ : state) {
    benchmark::DoNotOptimize(packet_path_parallel({packets, AuthKey{0x5a5a5a5a}, &acl}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MatrixSerial(benchmark::State& state) {
  const Scenario s = load_scenario(L3MESH_SCENARIO_DIR "/full_mesh.json");
  for (auto _ : state) benchmark::DoNotOptimize(reachability_matrix(s));
}

void BM_MatrixParallel(benchmark::State& state) {
  const Scenario s = load_scenario(L3MESH_SCENARIO_DIR "/full_mesh.json");
  for (auto _ : state) benchmark::DoNotOptimize(reachability_matrix_parallel(s));
}

BENCHMARK(BM_DecodeSerial)->Arg(1 << 14);
BENCHMARK(BM_DecodeParallel)->Arg(1 << 14);
BENCHMARK(BM_PacketPathSerial)->Arg(1 << 12);
BENCHMARK(BM_PacketPathParallel)->Arg(1 << 12);
BENCHMARK(BM_MatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatrixParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
