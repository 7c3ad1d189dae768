// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nfisac/scenario.hpp"
#include "test_util.hpp"

using namespace nfisac;

TEST_CASE("antenna grid basics") {
  // single antenna at the center
  ArraySpec one{1, 1, 0.5, Vector3d(0, 0, 0), Axis::z};
  auto p = build_antenna_positions(one, 1.0);
  REQUIRE(p.size() == 1);
  CHECK(p[0].norm() == 0.0);

  // symmetric pair along x
  ArraySpec pair{2, 1, 0.5, Vector3d(0, 0, 0), Axis::z};
  auto q = build_antenna_positions(pair, 1.0);
  REQUIRE(q.size() == 2);
  CHECK(q[0].isApprox(Vector3d(-0.25, 0, 0)));
  CHECK(q[1].isApprox(Vector3d(0.25, 0, 0)));

  // centroid equals the declared center, x index fastest
  ArraySpec a{3, 4, 0.5, Vector3d(1.0, -2.0, 0.5), Axis::y};
  auto r = build_antenna_positions(a, 0.2);
  Vector3d mean = Vector3d::Zero();
  for (const auto& v : r) mean += v;
  mean /= static_cast<double>(r.size());
  CHECK((mean - a.center).norm() < 1e-12);
  CHECK(r[1][0] != r[0][0]);  // first in-plane axis (x) moves first
  CHECK(r[1][2] == r[0][2]);
}

TEST_CASE("fresnel distance matches the reported setup numbers") {
  ScenarioConfig c;
  c.carrier_hz = 28e9;
  c.tx = {48, 48, 0.5, Vector3d(0, 0, 0), Axis::z};
  c.rx = c.tx;
  const double D = aperture_diagonal(c.tx, c.wavelength());
  CHECK(std::abs(D - 0.364) / 0.364 < 0.005);
  CHECK(std::abs(fresnel_distance(c) - 24.7) / 24.7 < 0.005);

  // zero-aperture array
  ScenarioConfig c1 = c;
  c1.tx = {1, 1, 0.5, Vector3d(0, 0, 0), Axis::z};
  CHECK(fresnel_distance(c1) == 0.0);

  // translation invariance
  ScenarioConfig c2 = c;
  c2.tx.center = Vector3d(3, -4, 7);
  CHECK(fresnel_distance(c2) == fresnel_distance(c));
}

TEST_CASE("validation catches the documented violations") {
  using testutil::desk_scenario;
  CHECK(validate(desk_scenario(1, 3, 3, 2, 1)).ok()); // 4K+U = 9 <= 9

  ScenarioConfig bad = desk_scenario(1, 3, 3, 3, 1); // 13 > 9
  auto rep = validate(bad);
  CHECK_FALSE(rep.ok());
  CHECK(rep.summary().find("subspace dimension exceeds N") != std::string::npos);

  ScenarioConfig nq = desk_scenario(2, 2, 2, 1, 0);
  MatrixXcd Q = MatrixXcd::Identity(4, 4);
  Q(0, 0) = -1.0;
  nq.sensing_noise_matrix = Q;
  nq.sensing_noise_dbm.reset();
  nq.sensing_noise_w.reset();
  auto rep2 = validate(nq);
  CHECK_FALSE(rep2.ok());
  CHECK(rep2.summary().find("not PSD") != std::string::npos);

  ScenarioConfig empty = desk_scenario(3, 2, 2, 1, 0);
  empty.targets.clear();
  CHECK_FALSE(validate(empty).ok());

  ScenarioConfig coincident = desk_scenario(4, 2, 2, 1, 0);
  coincident.targets[0].position = build_antenna_positions(coincident.tx, coincident.wavelength())[0];
  CHECK_FALSE(validate(coincident).ok());
}

TEST_CASE("scenario JSON round trip is byte identical") {
  ScenarioConfig c = testutil::desk_scenario(9, 3, 2, 2, 2, 7.5);
  const std::string s1 = serialize_scenario(c);
  ScenarioConfig c2 = parse_scenario(s1);
  const std::string s2 = serialize_scenario(c2);
  CHECK(s1 == s2);
  CHECK(c2.users[0].sinr_threshold == doctest::Approx(db_to_linear(7.5)).epsilon(1e-15));
  CHECK(c2.total_power_w == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("sensing noise matrix file") {
  // M rows x 2M columns, interleaved re,im
  const std::string dir = "/tmp/nfisac_test_q";
  std::filesystem::create_directories(dir);
  {
    std::ofstream q(dir + "/q.csv");
    q << "1e-8,0,0,1e-9\n0,-1e-9,2e-8,0\n";
  }
  ScenarioConfig base = testutil::desk_scenario(10, 2, 2, 1, 0);
  base.rx.count_y = 1; // M = 2 to match the file
  base.sensing_noise_dbm.reset();
  base.sensing_noise_w.reset();
  base.sensing_noise_matrix_file = "q.csv";
  std::string text = serialize_scenario(base);
  ScenarioConfig c = parse_scenario(text, dir);
  REQUIRE(c.sensing_noise_matrix.has_value());
  CHECK((*c.sensing_noise_matrix)(0, 0) == cplx(1e-8, 0));
  CHECK((*c.sensing_noise_matrix)(0, 1) == cplx(0, 1e-9));
  CHECK((*c.sensing_noise_matrix)(1, 0) == cplx(0, -1e-9));
  CHECK(validate(c).ok());
}

TEST_CASE("dbm conversions") {
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
  CHECK(dbm_to_watt(10.0) == doctest::Approx(0.01));
  CHECK(watt_to_dbm(dbm_to_watt(-50.0)) == doctest::Approx(-50.0));
}
