// SPDX-License-Identifier: Apache-2.0
//
// Serial vs OpenMP timing for the two data-parallel kernels: the interior
// point Schur-complement assembly and the beampattern grid.

#include <chrono>
#include <cstdio>
#include <thread>

#include "nfisac/conic.hpp"
#include "nfisac/metrics.hpp"

using namespace nfisac;

int main(int argc, char** argv) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (argc > 1) threads = std::atoi(argv[1]);
  std::printf("kernel benchmark, %d threads vs serial\n", threads);
  std::printf("%-34s %10s %10s %8s %s\n", "kernel", "serial[s]", "omp[s]", "speedup",
              "identical");

  conic::bench_schur_kernel(64, 16, 1, threads); // warm up allocators and caches
  for (auto [rows, order] : {std::pair{128, 24}, std::pair{256, 32}, std::pair{384, 48}}) {
    auto r = conic::bench_schur_kernel(rows, order, 3, threads);
    std::printf("schur  m=%-4d block=%-3d            %10.4f %10.4f %7.2fx %s\n", rows, order,
                r.serial_seconds, r.parallel_seconds, r.serial_seconds / r.parallel_seconds,
                r.identical ? "yes" : "NO");
  }

  {
    ArraySpec tx{48, 48, 0.5, Vector3d(0, 0, 0), Axis::z};
    const double wl = kSpeedOfLight / 28e9;
    auto pos = build_antenna_positions(tx, wl);
    const int N = tx.count();
    VectorXcd v = VectorXcd::Ones(N).normalized();
    MatrixXcd R = 0.01 * (v * v.adjoint());
    GridRange ry{-0.5, 0.5, 40}, rz{0.1, 3.0, 40};

    (void)beampattern_grid_serial(pos, wl, R, Axis::x, 0.0, {0.0, 0.1, 4}, {1.0, 1.1, 4});
    auto t0 = std::chrono::steady_clock::now();
    auto gs = beampattern_grid_serial(pos, wl, R, Axis::x, 0.0, ry, rz);
    auto t1 = std::chrono::steady_clock::now();
    auto gp = beampattern_grid(pos, wl, R, Axis::x, 0.0, ry, rz, threads);
    auto t2 = std::chrono::steady_clock::now();
    bool same = gs.power.size() == gp.power.size();
    for (size_t i = 0; same && i < gs.power.size(); ++i)
      same = (gs.power[i] == gp.power[i]) ||
             (std::isnan(gs.power[i]) && std::isnan(gp.power[i]));
    const double ts = std::chrono::duration<double>(t1 - t0).count();
    const double tp = std::chrono::duration<double>(t2 - t1).count();
    std::printf("beampattern 48x48, 40x40 grid      %10.4f %10.4f %7.2fx %s\n", ts, tp, ts / tp,
                same ? "yes" : "NO");
  }
  return 0;
}
