// SPDX-License-Identifier: Apache-2.0
//
// The OpenMP kernels must produce bitwise-identical results to their serial
// references for any thread count.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nfisac/conic.hpp"
#include "nfisac/metrics.hpp"
#include "test_util.hpp"

using namespace nfisac;

TEST_CASE("schur assembly kernel: omp equals serial bitwise") {
  auto r = conic::bench_schur_kernel(64, 16, 1, 4);
  CHECK(r.identical);
}

TEST_CASE("beampattern kernel: omp equals serial bitwise") {
  ScenarioConfig c = testutil::desk_scenario(71, 6, 6, 1, 0);
  ChannelSet ch = build_channel_set(c);
  MatrixXcd R = testutil::random_psd(3, 36, c.total_power_w);
  GridRange ry{-0.8, 0.8, 21}, rz{0.2, 3.0, 17};
  auto gs = beampattern_grid_serial(ch.tx_positions, c.wavelength(), R, Axis::x, 0.0, ry, rz);
  for (int threads : {1, 2, 4}) {
    auto gp = beampattern_grid(ch.tx_positions, c.wavelength(), R, Axis::x, 0.0, ry, rz, threads);
    REQUIRE(gp.power.size() == gs.power.size());
    for (size_t i = 0; i < gs.power.size(); ++i) CHECK(gp.power[i] == gs.power[i]);
  }
}
