#include "doctest.h"

#include "glue/error.hpp"
#include "glue/family_model.hpp"
#include "glue/sampling.hpp"

using namespace glue;

TEST_CASE("cube families validate") {
  for (int n = 1; n <= 4; ++n) {
    const auto fam = cube_family(n);
    CHECK(fam.spaces.size() == static_cast<std::size_t>(n * (n + 1) / 2));
    const auto rep = validate_family(fam, 64);
    CHECK_MESSAGE(rep.ok, (rep.first_failure() ? rep.first_failure()->witness : ""));
  }
  CHECK_THROWS_AS(cube_family(0), InputError);
  CHECK_THROWS_AS(cube_family(6), InputError);
}

TEST_CASE("strata are read off face labels") {
  const auto fam = cube_family(3);
  Vec u(2);
  u << 0.0, 0.3;
  CHECK(fam.classify("p0", "p3", Point{0, u}) == Chain({"p0", "p1", "p3"}));
  u << 0.0, 0.0;
  CHECK(fam.classify("p0", "p3", Point{0, u}) == Chain({"p0", "p1", "p2", "p3"}));
  u << 0.2, 0.7;
  CHECK(fam.classify("p0", "p3", Point{0, u}) == Chain({"p0", "p3"}));
}

TEST_CASE("embeddings insert a junction zero and split back") {
  const auto fam = cube_family(4);
  Vec a(1), b(1);
  a << 0.25;
  b << 0.75;
  const Point y = fam.embedding("p0", "p2", "p4").map({0, a}, {0, b});
  REQUIRE(y.coords.size() == 3);
  CHECK(y.coords[0] == 0.25);
  CHECK(y.coords[1] == 0.0);
  CHECK(y.coords[2] == 0.75);
  const auto parts = fam.split("p0", "p2", "p4", y);
  REQUIRE(parts);
  CHECK(parts->first.coords[0] == 0.25);
  CHECK(parts->second.coords[0] == 0.75);
  Vec off(3);
  off << 0.25, 0.1, 0.75;
  CHECK_FALSE(fam.split("p0", "p2", "p4", Point{0, off}));
}

TEST_CASE("a flipped embedding is caught with a witness") {
  auto fam = cube_family(3);
  mutate_flip(fam, "p0", "p1", "p3");
  const auto rep = validate_family(fam, 64);
  CHECK_FALSE(rep.ok);
  bool named = false;
  for (const auto& c : rep.conditions)
    if (!c.passed && c.condition == "embedding_face") {
      CHECK(c.where == "(p0,p1,p3)");
      CHECK(c.witness.find("expected {p0,p1,p3}") != std::string::npos);
      named = true;
    }
  CHECK(named);
}

TEST_CASE("warped embedding stays valid and invertible") {
  auto fam = cube_family(3);
  warp_embedding(fam, "p0", "p1", "p3", 0.3);
  CHECK(validate_family(fam, 64).ok);
  Rng rng(5);
  for (int s = 0; s < 100; ++s) {
    Vec v(1);
    v << rng.uniform(0.0, 0.999);
    const Point y = fam.embedding("p0", "p1", "p3").map({0, Vec(0)}, {0, v});
    CHECK(y.coords[1] == doctest::Approx(v[0] * (1.0 + 0.3 * (1.0 - v[0]))).epsilon(1e-15));
    const auto parts = fam.split("p0", "p1", "p3", y);
    REQUIRE(parts);
    CHECK(parts->second.coords[0] == doctest::Approx(v[0]).epsilon(1e-13));
  }
}

TEST_CASE("missing spaces and bad labels fail validation") {
  auto fam = cube_family(2);
  fam.spaces.erase({"p0", "p2"});
  CHECK_FALSE(validate_family(fam, 16).ok);

  auto single = single_pair_family(CorneredSpace::unit_cube(1));
  const auto rep = validate_family(single, 16);
  CHECK_FALSE(rep.ok);
  CHECK(rep.first_failure()->condition == "partition");
  CHECK(validate_family(single_pair_family(CorneredSpace::circle()), 16).ok);
}
