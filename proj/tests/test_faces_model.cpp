#include "doctest.h"

#include <cmath>

#include "glue/error.hpp"
#include "glue/faces_model.hpp"
#include "glue/sampling.hpp"

using namespace glue;

namespace {

// Depth of a point of [0,1]^n: coordinates sitting exactly on 0 or 1.
int cube_depth(const Vec& u) {
  int d = 0;
  for (int i = 0; i < u.size(); ++i) d += (u[i] == 0.0 || u[i] == 1.0);
  return d;
}

} // namespace

TEST_CASE("cube depth agrees with coordinate count") {
  for (int n = 1; n <= 3; ++n) {
    const auto cube = CorneredSpace::unit_cube(n);
    Rng rng(n);
    for (int s = 0; s < 2000; ++s) {
      Vec u(n);
      for (int i = 0; i < n; ++i) {
        const auto r = rng.below(4);
        u[i] = r == 0 ? 0.0 : r == 1 ? 1.0 : rng.open_uniform(0.0, 1.0);
      }
      CHECK(depth(cube, Point{0, u}) == cube_depth(u));
      CHECK(depth(cube, Vec(u)) == cube_depth(u));
    }
    CHECK(faces(cube).size() == static_cast<std::size_t>(2 * n));
  }
  CHECK_THROWS_AS(depth(CorneredSpace::unit_cube(2), Point{0, Vec::Constant(2, 1.5)}), InputError);
}

TEST_CASE("manifold with faces") {
  for (int n = 1; n <= 3; ++n) CHECK(check_manifold_with_faces(CorneredSpace::unit_cube(n)).ok);
  CHECK(check_manifold_with_faces(CorneredSpace::sheared_cube(3, 0.4)).ok);
  CHECK(check_manifold_with_faces(CorneredSpace::circle()).ok);
  CHECK(check_manifold_with_faces(CorneredSpace::point()).ok);

  const auto drop = CorneredSpace::teardrop();
  const auto res = check_manifold_with_faces(drop);
  CHECK_FALSE(res.ok);
  REQUIRE(res.witness);
  // The witness is the corner where one face meets itself.
  CHECK(res.witness->coords.norm() == doctest::Approx(0.0));
  CHECK(connected_faces(drop).size() == 3);
}

TEST_CASE("depth is chart independent on the circle") {
  const auto circle = CorneredSpace::circle();
  CHECK(circle.charts().size() == 2);
  CHECK(check_depth_chart_independent(circle).ok);
  Vec y(2);
  y << std::cos(0.3), std::sin(0.3);
  CHECK(depth(circle, y) == 0);
}

TEST_CASE("face intersections have dimension n - k") {
  const auto cube = CorneredSpace::unit_cube(3);
  const std::string x0 = "c0:x0:lo", x1 = "c0:x1:lo", x2 = "c0:x2:hi", x0h = "c0:x0:hi";
  CHECK(face_intersection(cube, {x0}).dim() == 2);
  CHECK(face_intersection(cube, {x0, x1}).dim() == 1);
  CHECK(face_intersection(cube, {x0, x1, x2}).dim() == 0);
  CHECK(face_intersection(cube, {x0, x0h}).empty);
}

TEST_CASE("inward frames span the normal sector") {
  const auto cube = CorneredSpace::sheared_cube(3, 0.5);
  Vec u(3);
  u << 0.0, 0.0, 0.4;
  const auto frame = inward_frame(cube, Point{0, u}, {"c0:x0:lo", "c0:x1:lo"});
  CHECK(frame.chart_vectors.cols() == 2);
  CHECK(frame.chart_vectors(0, 0) == 1.0);
  CHECK(frame.chart_vectors(1, 1) == 1.0);
  const auto cone = check_frame_cone(cube, frame, 500, 3);
  CHECK(cone.ok);
  CHECK(cone.min_coefficient >= -1e-12);

  Vec v(3);
  v << 1.0, 0.5, 0.4;
  const auto upper = inward_frame(CorneredSpace::unit_cube(3), Point{0, v}, {"c0:x0:hi"});
  CHECK(upper.chart_vectors(0, 0) == -1.0);
  CHECK_THROWS_AS(inward_frame(cube, Point{0, u}, {"c0:x0:lo"}), InputError);
}
