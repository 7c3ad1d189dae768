// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "nfisac/channel.hpp"
#include "test_util.hpp"

using namespace nfisac;

TEST_CASE("steering vector amplitude and phase") {
  // one antenna at the origin, point one wavelength away: phase 2 pi
  std::vector<Vector3d> ants{Vector3d(0, 0, 0)};
  VectorXcd a = steering_vector(ants, Vector3d(0, 0, 1), 1.0);
  CHECK(a[0].real() == doctest::Approx(1.0 / (4 * std::numbers::pi)).epsilon(1e-12));
  CHECK(std::abs(a[0].imag()) < 1e-12);

  // symmetric pair seen from the axis: equal entries
  std::vector<Vector3d> pair{Vector3d(-0.25, 0, 0), Vector3d(0.25, 0, 0)};
  VectorXcd b = steering_vector(pair, Vector3d(0, 0, 0.7), 1.0);
  CHECK(std::abs(b[0] - b[1]) < 1e-15);

  // sign convention: entries are amp * exp(-j nu d); conjugating flips the phase
  const double nu = 2 * std::numbers::pi;
  const double d = 1.3;
  VectorXcd c = steering_vector(ants, Vector3d(0, 0, d), 1.0);
  CHECK(std::arg(c[0]) == doctest::Approx(std::arg(std::polar(1.0, -nu * d))).epsilon(1e-10));

  CHECK_THROWS_AS((void)steering_vector(ants, Vector3d(0, 0, 0), 1.0), Error);
}

TEST_CASE("element amplitudes match per-element recomputation at full scale") {
  ScenarioConfig c;
  c.carrier_hz = 28e9;
  c.tx = {48, 48, 0.5, Vector3d(0, 0, 0), Axis::z};
  const double wl = c.wavelength();
  auto ants = build_antenna_positions(c.tx, wl);
  const Vector3d p(0, 0, 1.235);
  VectorXcd v = steering_vector(ants, p, wl);
  for (size_t i = 0; i < ants.size(); i += 197) {
    const double dx = ants[i][0] - p[0], dy = ants[i][1] - p[1], dz = ants[i][2] - p[2];
    const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    CHECK(std::abs(v[static_cast<Eigen::Index>(i)]) ==
          doctest::Approx(wl / (4 * std::numbers::pi * dist)).epsilon(1e-12));
  }
}

TEST_CASE("analytic derivatives match central finite differences") {
  ScenarioConfig c = testutil::desk_scenario(5, 3, 4, 1, 0);
  auto ants = build_antenna_positions(c.tx, c.wavelength());
  const Vector3d p = c.targets[0].position;
  const double delta = 1e-5;
  for (int ax = 0; ax < 3; ++ax) {
    VectorXcd da = steering_derivative(ants, p, c.wavelength(), static_cast<Axis>(ax));
    Vector3d hi = p, lo = p;
    hi[ax] += delta;
    lo[ax] -= delta;
    VectorXcd fd =
        (steering_vector(ants, hi, c.wavelength()) - steering_vector(ants, lo, c.wavelength())) /
        (2 * delta);
    CHECK((da - fd).norm() / fd.norm() < 1e-6);
  }

  // antenna sharing the point's x coordinate has a zero x-derivative entry
  std::vector<Vector3d> one{Vector3d(0.3, 0.1, 0.0)};
  VectorXcd dz = steering_derivative(one, Vector3d(0.3, -0.5, 1.0), 0.2, Axis::x);
  CHECK(std::abs(dz[0]) == 0.0);
}

TEST_CASE("antisymmetric derivative for a symmetric pair") {
  std::vector<Vector3d> pair{Vector3d(-0.3, 0, 0), Vector3d(0.3, 0, 0)};
  const Vector3d p(0, 0, 1.1);
  VectorXcd v = steering_vector(pair, p, 0.5);
  VectorXcd dvx = steering_derivative(pair, p, 0.5, Axis::x);
  CHECK(std::abs(dvx[0] + dvx[1]) < 1e-15);
  CHECK(std::abs(v.dot(dvx)) < 1e-15); // v^H dv_x = 0
}

TEST_CASE("build_channel_set shapes and user channels") {
  ScenarioConfig c = testutil::desk_scenario(11, 3, 3, 2, 2);
  ChannelSet ch = build_channel_set(c);
  CHECK(ch.A.rows() == 9);
  CHECK(ch.A.cols() == 2);
  CHECK(ch.V.rows() == 9);
  CHECK(ch.H_c.cols() == 2);

  // LoS-only user channel is the conjugate Tx steering vector
  VectorXcd expect =
      steering_vector(ch.tx_positions, c.users[0].position, c.wavelength()).conjugate();
  CHECK((ch.H_c.col(0) - expect).norm() == 0.0);

  // collocated target/CU with eta = 0: h = v*
  ScenarioConfig cc = testutil::symmetric_scenario(3, false);
  ChannelSet chc = build_channel_set(cc);
  CHECK((chc.H_c.col(0) - chc.V.col(0).conjugate()).norm() == 0.0);

  // eta > 0 adds the designated target's conjugate steering vector
  ScenarioConfig cn = testutil::desk_scenario(12, 3, 3, 2, 1);
  cn.users[0].nlos_coefficient = 0.3;
  cn.users[0].nlos_target_index = 1;
  ChannelSet chn = build_channel_set(cn);
  VectorXcd h_los =
      steering_vector(chn.tx_positions, cn.users[0].position, cn.wavelength()).conjugate();
  CHECK((chn.H_c.col(0) - h_los - 0.3 * chn.V.col(1).conjugate()).norm() < 1e-15);
}

TEST_CASE("norm of steering vector decreases receding along the normal") {
  ScenarioConfig c = testutil::desk_scenario(13, 4, 4, 1, 0);
  auto ants = build_antenna_positions(c.tx, c.wavelength());
  double prev = std::numeric_limits<double>::infinity();
  for (double z = 0.4; z < 4.0; z += 0.37) {
    const double n = steering_vector(ants, Vector3d(0, 0, z), c.wavelength()).norm();
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("symmetric-configuration identities hold for both setups") {
  for (bool mono : {false, true}) {
    ScenarioConfig c = testutil::symmetric_scenario(4, mono);
    ChannelSet ch = build_channel_set(c);
    auto res = symmetric_config_residuals(ch);
    INFO((mono ? "monostatic" : "bistatic"));
    CHECK(res.max_residual < 1e-10);
  }
  // off-axis collocated point breaks them
  ScenarioConfig off = testutil::symmetric_scenario(4, false, 1.5e9, 0.35);
  auto res = symmetric_config_residuals(build_channel_set(off));
  CHECK(res.max_residual > 1e-3);
}
