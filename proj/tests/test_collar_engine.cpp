#include "doctest.h"

#include <cmath>

#include "glue/collar_engine.hpp"
#include "glue/error.hpp"

using namespace glue;

namespace {

Point at(int chart, std::initializer_list<double> v) {
  Vec u(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) u[i++] = x;
  return {chart, u};
}

const Chain full({"p0", "p1", "p2", "p3"});
const Chain via1({"p0", "p1", "p3"});
const Chain via2({"p0", "p2", "p3"});

// a > b > c with two points in Mbar(a,b), one in Mbar(b,c), and an arc of
// length `len` for Mbar(a,c) whose ends are the two broken pairs.
StratifiedFamily short_arc_family(double len) {
  StratifiedFamily fam;
  fam.poset = CriticalPoset({{"a", 2}, {"b", 1}, {"c", 0}}, {{"a", "b"}, {"b", "c"}});
  auto pt = [] { return CornerChart::affine({}, Vec::Zero(1), Mat::Zero(1, 0)); };
  fam.spaces[{"a", "b"}] = CorneredSpace(0, 1, {pt(), pt()});
  fam.spaces[{"b", "c"}] = CorneredSpace(0, 1, {pt()});
  Interval iv{0.0, len, true, true, "b", "b"};
  fam.spaces[{"a", "c"}] = CorneredSpace(1, 1, {CornerChart::affine({iv}, Vec::Zero(1), Mat::Identity(1, 1))});
  AffinePiece lo{0, 0, 0, Mat::Zero(1, 0), Vec::Zero(1)};
  AffinePiece hi{1, 0, 0, Mat::Zero(1, 0), Vec::Constant(1, len)};
  fam.embeddings[{"a", "b", "c"}] = ProductEmbedding::from_affine({lo, hi});
  return fam;
}

} // namespace

TEST_CASE("initial collars of the cube") {
  const auto fam = cube_family(3);
  const auto edge = initial_collar(fam, via1);
  const Point y = edge.map(at(0, {0.0, 0.4}), {0.2});
  CHECK(y.coords[0] == 0.2);
  CHECK(y.coords[1] == 0.4);
  const auto corner = initial_collar(fam, full);
  const Point z = corner.map(at(0, {0.0, 0.0}), {0.1, 0.3});
  CHECK(z.coords[0] == 0.1);
  CHECK(z.coords[1] == 0.3);
  const auto back = corner.inverse(z);
  REQUIRE(back);
  CHECK(back->second == Params{0.1, 0.3});
}

TEST_CASE("glue on cube families") {
  const auto atlas = build_collars(cube_family(3));
  CHECK(atlas.flat("p0", "p3"));
  CHECK(atlas.epsilon("p0", "p3") == 0.25);
  CHECK(atlas.epsilon("p0", "p2") == 0.5);
  const Point corner = at(0, {0.0, 0.0});
  CHECK(atlas.glue(full, corner, {0.0, 0.0}).coords == corner.coords);
  const Point inner = atlas.glue(full, corner, {0.1, 0.2});
  CHECK(inner.coords[0] == 0.1);
  CHECK(inner.coords[1] == 0.2);
  CHECK(atlas.family().classify("p0", "p3", atlas.glue(full, corner, {0.1, 0.0})) == via2);
  CHECK_THROWS_AS(atlas.glue(full, corner, {0.3, 0.1}), RangeError);
  CHECK_THROWS_AS(atlas.glue(full, corner, {-0.1, 0.1}), RangeError);
  CHECK_THROWS_AS(atlas.glue(full, at(0, {0.0, 0.5}), {0.1, 0.1}), InputError);

  const Point g = glue_pair(atlas, "p0", "p1", "p2", at(0, {}), at(0, {}), 0.0);
  CHECK(g.coords[0] == 0.0);
  CHECK(glue_pair(atlas, "p0", "p1", "p2", at(0, {}), at(0, {}), 0.3).coords[0] == 0.3);
}

TEST_CASE("epsilon policy and monotonicity") {
  for (int n = 2; n <= 4; ++n) {
    const auto atlas = build_collars(cube_family(n));
    CHECK(atlas.epsilon("p0", "p" + std::to_string(n)) == std::ldexp(0.5, -(n - 2 > 0 ? n - 2 : 0)));
    CHECK(check_epsilon_monotone(atlas).passed);
  }
}

TEST_CASE("identities on cube(3)") {
  const auto atlas = build_collars(cube_family(3));
  for (const auto& chk : verify_atlas(atlas, 500)) {
    INFO(chk.identity, " ", chk.first.str(), " ", chk.second.str(), " ", chk.witness);
    CHECK(chk.passed);
    if (chk.identity.rfind("compat", 0) == 0 || chk.identity == "associativity") CHECK(chk.max_residual == 0.0);
  }
}

TEST_CASE("junction normalization repairs a warped embedding") {
  const double s = 0.3;
  auto fam = cube_family(3);
  warp_embedding(fam, "p0", "p1", "p3", s);
  const auto atlas = build_collars(fam);
  CHECK_FALSE(atlas.flat("p0", "p3"));

  const Point corner = at(0, {0.0, 0.0});
  const auto h = [s](double v) { return v * (1.0 + s * (1.0 - v)); };
  auto junction_gap = [&](const PreferredChart& phi) {
    double worst = 0.0;
    for (double mu : {0.05, 0.1, 0.2}) {
      const Point lhs = phi.map(corner, {0.0, mu});
      const Point rhs = fam.embedding("p0", "p1", "p3").map(at(0, {}), atlas.glue(Chain({"p1", "p2", "p3"}), at(0, {0.0}), {mu}));
      worst = std::max(worst, (lhs.coords - rhs.coords).norm());
    }
    return worst;
  };
  const auto raw = initial_collar(atlas.family(), full);
  CHECK(junction_gap(raw) > 1e-3);
  const auto fixed = normalize_junctions(atlas.family(), raw, atlas.maps());
  CHECK(fixed.corrected_junctions == std::vector<int>{1});
  CHECK(junction_gap(fixed) < 1e-9);

  // Closed form near the corner: G(corner, (a, b)) = (a, h(b)).
  const Point y = atlas.glue(full, corner, {0.1, 0.2});
  CHECK(y.coords[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(y.coords[1] == doctest::Approx(h(0.2)).epsilon(1e-12));
  // The shallower collar follows the corner near it and is flat far away.
  CHECK(atlas.glue(via2, at(0, {0.05, 0.0}), {0.2}).coords[1] == doctest::Approx(h(0.2)).epsilon(1e-12));
  CHECK(atlas.glue(via2, at(0, {0.6, 0.0}), {0.2}).coords[1] == doctest::Approx(0.2).epsilon(1e-12));

  for (const auto& chk : verify_atlas(atlas, 200)) {
    INFO(chk.identity, " ", chk.first.str(), " ", chk.second.str(), " ", chk.witness);
    CHECK(chk.passed);
  }
}

TEST_CASE("a flipped embedding is refused") {
  auto fam = cube_family(3);
  mutate_flip(fam, "p0", "p1", "p3");
  CHECK_THROWS_AS(build_collars(fam), InputError);
}

TEST_CASE("arc endpoints shrink epsilon until collars separate") {
  const auto atlas = build_collars(short_arc_family(0.6));
  CHECK(atlas.epsilon("a", "c") == 0.25);
  const Chain broken({"a", "b", "c"});
  CHECK(atlas.glue(broken, at(0, {0.6}), {0.1}).coords[0] == doctest::Approx(0.5));
  CHECK(check_injective(atlas, broken, 1000).passed);
  CHECK_THROWS_AS(build_collars(short_arc_family(1e-7)), NumericalAbort);
}

TEST_CASE("single-space collars") {
  const auto seg = single_space_collars(CorneredSpace::unit_cube(1), {"c0:x0:lo", "c0:x0:hi"});
  CHECK(seg.glue({"c0:x0:lo"}, at(0, {0.0}), {0.3}).coords[0] == 0.3);
  CHECK(seg.glue({"c0:x0:hi"}, at(0, {1.0}), {0.3}).coords[0] == 0.7);
  CHECK(seg.glue({}, at(0, {0.42}), {}).coords[0] == 0.42);

  const auto sq = CorneredSpace::unit_cube(2);
  std::vector<std::string> labels;
  for (const auto& f : faces(sq)) labels.push_back(f.label);
  const auto col = single_space_collars(sq, labels);
  CHECK(col.corner_sets().size() == 9);
  for (const auto& big : col.corner_sets())
    for (const auto& small : col.corner_sets()) {
      bool sub = true;
      for (const auto& l : small) sub = sub && std::find(big.begin(), big.end(), l) != big.end();
      if (!sub) continue;
      const auto chk = check_space_compat(col, big, small, 200);
      CHECK(chk.passed);
      CHECK(chk.max_residual < 1e-15);
    }
  CHECK_THROWS_AS(single_space_collars(sq, {labels[0], labels[0], labels[1], labels[2], labels[3]}), InputError);
  CHECK_THROWS_AS(single_space_collars(sq, {labels[0], labels[1], labels[2]}), InputError);
}
