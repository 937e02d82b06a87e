// Copyright 2026 The palmctl Authors.
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

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>
#include <doctest.h>

#include "oracles.hpp"
#include "palmctl/error.hpp"
#include "palmctl/pose6d.hpp"
#include "palmctl/synthetic_hand.hpp"
#include "support.hpp"

using namespace palmctl;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n, double spread = 1.0) {
  std::uniform_real_distribution<double> d(-spread, spread);
  std::vector<Point3> pts(n);
  for (auto& p : pts) p = {d(rng), d(rng), d(rng)};
  return pts;
}

std::vector<std::array<double, 3>> as_arrays(const std::vector<Point3>& pts) {
  std::vector<std::array<double, 3>> out;
  for (const auto& p : pts) out.push_back({p.x(), p.y(), p.z()});
  return out;
}

double sse(const std::vector<Point3>& pts, double a, double b, double c) {
  double s = 0;
  for (const auto& p : pts) {
    const double r = a * p.x() + b * p.y() + c - p.z();
    s += r * r;
  }
  return s;
}

// Facets of the convex hull by brute force: every triple whose plane has all
// points on one side.
struct Facet {
  Point3 normal;
  double offset;
};

std::vector<Facet> hull_facets(const std::vector<Point3>& pts) {
  std::vector<Facet> facets;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Point3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        if (nrm.norm() < 1e-12) continue;
        nrm.normalize();
        const double off = nrm.dot(pts[i]);
        int above = 0, below = 0;
        for (const auto& p : pts) {
          const double s = nrm.dot(p) - off;
          above += s > 1e-12;
          below += s < -1e-12;
        }
        if (above == 0) facets.push_back({nrm, off});
        if (below == 0) facets.push_back({-nrm, -off});
      }
    }
  }
  return facets;
}

Pose6D estimate_rendered(GestureLabel g, const Pose6D& pose) {
  return estimate_pose(testing::sample_frame(g, pose), default_intrinsics());
}

}  // namespace

TEST_CASE("center_of_mass") {
  const std::vector<Point3> same(21, Point3(1, 2, 3));
  CHECK(center_of_mass(same) == Point3(1, 2, 3));

  std::mt19937_64 rng(1);
  auto half = random_points(rng, 10);
  std::vector<Point3> sym = half;
  for (const auto& p : half) sym.push_back(-p);
  sym.push_back(Point3::Zero());
  CHECK(center_of_mass(sym).norm() <= 1e-15);

  for (int n = 0; n < 50; ++n) {
    const auto pts = random_points(rng, 21, 3.0);
    long double sx = 0, sy = 0, sz = 0;
    for (const auto& p : pts) {
      sx += p.x();
      sy += p.y();
      sz += p.z();
    }
    const Point3 c = center_of_mass(pts);
    CHECK(std::fabs(c.x() - static_cast<double>(sx / 21)) <= 1e-12);
    CHECK(std::fabs(c.y() - static_cast<double>(sy / 21)) <= 1e-12);
    CHECK(std::fabs(c.z() - static_cast<double>(sz / 21)) <= 1e-12);
  }
  CHECK(code_of([] { center_of_mass(std::vector<Point3>{}); }) == ErrorCode::kStructural);
}

TEST_CASE("expand_cloud_knn grows to the target and keeps the input") {
  std::mt19937_64 rng(2);
  const auto pts = random_points(rng, 21);
  const PointCloud cloud = expand_cloud_knn(pts);
  CHECK(cloud.size() == kDefaultCloudSize);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(cloud[i] == pts[i]);

  CHECK(expand_cloud_knn(pts, 21).size() == 21);
  CHECK(expand_cloud_knn(pts, 5).size() == 21);
  CHECK(expand_cloud_knn(pts, 777, 5).size() == 777);
  CHECK(expand_cloud_knn(pts) == cloud);  // deterministic

  const std::vector<Point3> same(21, Point3(0.1, 0.2, 0.3));
  CHECK(code_of([&] { expand_cloud_knn(same); }) == ErrorCode::kDegenerateInput);
  CHECK(code_of([&] { expand_cloud_knn(std::vector<Point3>{}); }) ==
        ErrorCode::kDegenerateInput);
}

TEST_CASE("expand_cloud_knn stays in the input's plane and convex hull") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<Point3> planar(21);
  for (auto& p : planar) {
    const double x = d(rng), y = d(rng);
    p = {x, y, x};
  }
  for (const auto& p : expand_cloud_knn(planar)) CHECK(std::fabs(p.z() - p.x()) <= 1e-12);

  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = random_points(rng, 21);
    const auto facets = hull_facets(pts);
    REQUIRE(facets.size() >= 4);
    for (const auto& p : expand_cloud_knn(pts)) {
      for (const auto& f : facets) CHECK(f.normal.dot(p) - f.offset <= 1e-9);
    }
  }
}

TEST_CASE("fit_plane recovers noiseless planes") {
  std::vector<Point3> pts;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const double x = d(rng), y = d(rng);
    pts.emplace_back(x, y, 2 * x + 3 * y + 1);
  }
  const Plane p = fit_plane(pts);
  CHECK(std::fabs(p.a - 2) <= 1e-9);
  CHECK(std::fabs(p.b - 3) <= 1e-9);
  CHECK(std::fabs(p.c - 1) <= 1e-9);

  for (auto& q : pts) q.z() = 0;
  const Plane zero = fit_plane(pts);
  CHECK(std::fabs(zero.a) <= 1e-12);
  CHECK(std::fabs(zero.b) <= 1e-12);
  CHECK(std::fabs(zero.c) <= 1e-12);
}

TEST_CASE("fit_plane matches the Cramer oracle on noisy clouds") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0), xy(-0.2, 0.2);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int n = 0; n < 100; ++n) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    std::vector<Point3> pts;
    for (int i = 0; i < 200; ++i) {
      const double x = xy(rng), y = xy(rng);
      pts.emplace_back(x, y, a * x + b * y + c + noise(rng));
    }
    const Plane got = fit_plane(pts);
    const auto want = oracle::plane_cramer(as_arrays(pts));
    CHECK(std::fabs(got.a - want.a) <= 1e-9 * std::max(1.0, std::fabs(want.a)));
    CHECK(std::fabs(got.b - want.b) <= 1e-9 * std::max(1.0, std::fabs(want.b)));
    CHECK(std::fabs(got.c - want.c) <= 1e-9 * std::max(1.0, std::fabs(want.c)));

    // Local optimality: any small perturbation does not reduce the residual.
    const double best = sse(pts, got.a, got.b, got.c);
    for (int axis = 0; axis < 3; ++axis) {
      for (double s : {-1e-3, 1e-3}) {
        double p[3] = {got.a, got.b, got.c};
        p[axis] += s;
        CHECK(sse(pts, p[0], p[1], p[2]) >= best);
      }
    }
  }
}

TEST_CASE("fit_plane on expanded coplanar clouds recovers the plane") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), xy(-0.1, 0.1);
  for (int n = 0; n < 10; ++n) {
    const double a = coef(rng), b = coef(rng), c = coef(rng);
    std::vector<Point3> pts;
    for (int i = 0; i < 21; ++i) {
      const double x = xy(rng), y = xy(rng);
      pts.emplace_back(x, y, a * x + b * y + c);
    }
    const Plane p = fit_plane(expand_cloud_knn(pts));
    CHECK(std::fabs(p.a - a) <= 1e-9);
    CHECK(std::fabs(p.b - b) <= 1e-9);
    CHECK(std::fabs(p.c - c) <= 1e-9);
  }
}

TEST_CASE("fit_plane rejects degenerate input") {
  std::vector<Point3> line;
  for (int i = 0; i < 21; ++i) line.emplace_back(0.01 * i, 0.02 * i, 0.3);
  CHECK(code_of([&] { fit_plane(line); }) == ErrorCode::kDegeneratePlane);

  std::vector<Point3> vertical;
  for (int i = 0; i < 21; ++i) vertical.emplace_back(0.1, 0.01 * (i % 5), 0.02 * i);
  CHECK(code_of([&] { fit_plane(vertical); }) == ErrorCode::kDegeneratePlane);

  const std::vector<Point3> two = {{0, 0, 0}, {1, 1, 1}};
  CHECK(code_of([&] { fit_plane(two); }) == ErrorCode::kDegeneratePlane);
}

TEST_CASE("plane_angle spot values and properties") {
  const Plane flat{0, 0, 0}, diag{1, 0, 0};
  CHECK(plane_angle(flat, flat) == 0.0);
  CHECK(plane_angle(Plane{0.3, -0.7, 2.0}, Plane{0.3, -0.7, 2.0}) == 0.0);
  CHECK(std::fabs(plane_angle(diag, flat) - 45.0) <= 1e-9);
  CHECK(std::fabs(normal_angle({0, 0, -1}, {1, 0, 0}) - 90.0) <= 1e-9);
  CHECK(std::fabs(normal_angle({0, 0, -1}, {0.6, 0.8, 0}) - 90.0) <= 1e-9);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int n = 0; n < 1000; ++n) {
    const Plane p{coef(rng), coef(rng), coef(rng)}, q{coef(rng), coef(rng), coef(rng)};
    const double pq = plane_angle(p, q);
    CHECK(pq == plane_angle(q, p));
    CHECK(pq >= 0.0);
    CHECK(pq <= 90.0);
    const double want = oracle::normal_angle_deg(p.a, p.b, -1, q.a, q.b, -1);
    CHECK(std::fabs(pq - want) <= 1e-6);
  }
}

TEST_CASE("plane_euler_angles conventions") {
  const EulerDeg canonical = plane_euler_angles(Plane{0, 0, 0}, {0, 1, 0});
  CHECK(canonical == EulerDeg{0, 0, 0});

  const EulerDeg tilted = plane_euler_angles(Plane{1, 0, 0}, {0, 1, 0});
  CHECK(std::fabs(tilted.ry - 45.0) <= 1e-9);
  CHECK(tilted.rx == 0.0);
  CHECK(std::fabs(tilted.rz) <= 1e-9);

  const EulerDeg pitched = plane_euler_angles(Plane{0, -1, 0}, {0, 1, -1});
  CHECK(std::fabs(pitched.rx + 45.0) <= 1e-9);
  CHECK(pitched.ry == 0.0);

  const EulerDeg rolled = plane_euler_angles(Plane{0, 0, 0}, {1, 0, 0});
  CHECK(std::fabs(rolled.rz - 90.0) <= 1e-9);
  const EulerDeg back = plane_euler_angles(Plane{0, 0, 0}, {0, -1, 0});
  CHECK(back.rz == 180.0);

  CHECK(code_of([] { plane_euler_angles(Plane{0, 0, 0}, {0, 0, 2}); }) ==
        ErrorCode::kDegenerateAxis);
}

TEST_CASE("rotation about the plane normal changes only rz") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> tilt(-30.0, 30.0);
  for (int n = 0; n < 20; ++n) {
    const Pose6D pose{{0.02, -0.01, 0.5}, {tilt(rng), tilt(rng), tilt(rng)}};
    const HandLandmarks hand = place_hand(hand_template(GestureLabel::kOpen), pose);
    const Pose6D before = estimate_pose(hand);

    const Point3 c = center_of_mass(hand);
    const Plane plane = fit_plane(expand_cloud_knn(hand));
    const Eigen::AngleAxisd spin(deg_to_rad(30.0), plane.normal().normalized());
    HandLandmarks turned;
    for (std::size_t i = 0; i < kNumLandmarks; ++i) turned[i] = c + spin * (hand[i] - c);
    const Pose6D after = estimate_pose(turned);

    CHECK(std::fabs(after.euler.rx - before.euler.rx) <= 1e-6);
    CHECK(std::fabs(after.euler.ry - before.euler.ry) <= 1e-6);
    CHECK(std::fabs(wrap_degrees(after.euler.rz - before.euler.rz) - 30.0) <= 1e-6);
    CHECK((after.translation - before.translation).norm() <= 1e-12);
  }
}

TEST_CASE("placed hands read back their pose angles exactly") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> tilt(-40.0, 40.0), roll(-179.0, 179.0);
  for (int n = 0; n < 100; ++n) {
    const EulerDeg e{tilt(rng), tilt(rng), roll(rng)};
    const Eigen::Matrix3d r = hand_rotation(e);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-12);
    CHECK(std::fabs(r.determinant() - 1.0) <= 1e-12);
    const Pose6D pose{Point3(0.01, -0.02, 0.45), e};
    const Pose6D est = estimate_pose(place_hand(hand_template(GestureLabel::kOpen), pose));
    CHECK(std::fabs(est.euler.rx - e.rx) <= 1e-6);
    CHECK(std::fabs(est.euler.ry - e.ry) <= 1e-6);
    CHECK(std::fabs(wrap_degrees(est.euler.rz - e.rz)) <= 1e-6);
    CHECK((est.translation - pose.translation).norm() <= 1e-12);
  }
  CHECK(hand_rotation(EulerDeg{}) == Eigen::Matrix3d::Identity());
  CHECK(code_of([] { hand_rotation(EulerDeg{60, 60, 0}); }) == ErrorCode::kDomain);
}

TEST_CASE("relative_pose wraps angles") {
  const Pose6D p{{0.1, 0.2, 0.3}, {10, 20, 30}};
  const Pose6D zero = relative_pose(p, p);
  CHECK(zero.translation == Point3::Zero());
  CHECK(zero.euler == EulerDeg{0, 0, 0});

  const Pose6D moved{{0.2, 0.2, 0.3}, {10, 20, 30}};
  const Pose6D d = relative_pose(moved, p);
  CHECK(std::fabs(d.translation.x() - 0.1) <= 1e-15);
  CHECK(d.euler == EulerDeg{0, 0, 0});

  const Pose6D w = relative_pose(Pose6D{{}, {170, 0, -180}}, Pose6D{{}, {-170, 0, 180}});
  CHECK(w.euler.rx == doctest::Approx(-20.0));
  CHECK(w.euler.rz == 0.0);
  CHECK(wrap_degrees(-180.0) == 180.0);
  CHECK(wrap_degrees(540.0) == 180.0);
  CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
}

TEST_CASE("estimate_pose on synthetic hands") {
  const Pose6D home = estimate_rendered(GestureLabel::kOpen, home_hand_pose());
  CHECK((home.translation - Point3(0, 0, 0.5)).norm() <= 1e-6);
  CHECK(std::fabs(home.euler.rx) <= 1e-6);
  CHECK(std::fabs(home.euler.ry) <= 1e-6);
  CHECK(std::fabs(home.euler.rz) <= 1e-6);

  Pose6D shifted_pose = home_hand_pose();
  shifted_pose.translation.x() += 0.1;
  const Pose6D shifted = estimate_rendered(GestureLabel::kOpen, shifted_pose);
  CHECK(std::fabs(shifted.translation.x() - home.translation.x() - 0.1) <= 1e-9);
  CHECK(std::fabs(shifted.translation.y() - home.translation.y()) <= 1e-9);
  CHECK(std::fabs(shifted.translation.z() - home.translation.z()) <= 1e-9);

  for (double angle : {-20.0, 20.0}) {
    Pose6D yawed = home_hand_pose();
    yawed.euler.ry = angle;
    const Pose6D est = estimate_rendered(GestureLabel::kOpen, yawed);
    CHECK(std::fabs(est.euler.ry - home.euler.ry - angle) <= 0.5);
  }

  // Equivariance under metric translation of the points themselves.
  const HandLandmarks hand = place_hand(hand_template(GestureLabel::kTwo), home_hand_pose());
  HandLandmarks moved = hand;
  for (auto& p : moved) p += Point3(0.03, -0.02, 0.1);
  const Pose6D a = estimate_pose(hand), b = estimate_pose(moved);
  CHECK((b.translation - a.translation - Point3(0.03, -0.02, 0.1)).norm() <= 1e-12);
  CHECK(std::fabs(a.euler.rx - b.euler.rx) <= 1e-9);
  CHECK(std::fabs(a.euler.ry - b.euler.ry) <= 1e-9);
  CHECK(std::fabs(a.euler.rz - b.euler.rz) <= 1e-9);
}

TEST_CASE("estimate_pose runtime per frame") {
  const LandmarkFrame f = testing::sample_frame();
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 10; ++i) estimate_pose(f, default_intrinsics());
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("estimate_pose: " << ms / 10 << " ms per frame");
  CHECK(ms / 10 < 200.0);
}
