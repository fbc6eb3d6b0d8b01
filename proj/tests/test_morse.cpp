#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "glue/error.hpp"
#include "glue/morse_engine.hpp"

using namespace glue;

namespace {

MorseModel& torus() {
  static MorseModel m(builtin_system("torus"));
  return m;
}

MorseModel& separable() {
  static MorseModel m(builtin_system("separable"));
  return m;
}

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

// Naive point-to-segment Hausdorff over positions.
double naive_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  auto seg = [](const Vec& p, const Vec& s, const Vec& t) {
    Vec d = t - s;
    double u = d.squaredNorm() > 0 ? std::clamp((p - s).dot(d) / d.squaredNorm(), 0.0, 1.0) : 0.0;
    return (s + u * d - p).norm();
  };
  auto one = [&](const std::vector<Vec>& from, const std::vector<Vec>& to) {
    double worst = 0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      if (to.size() == 1) best = (p - to[0]).norm();
      for (std::size_t k = 0; k + 1 < to.size(); ++k) best = std::min(best, seg(p, to[k], to[k + 1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one(a, b), one(b, a));
}

} // namespace

TEST_CASE("critical points of the built-ins") {
  // closed form for the tilted torus: theta in {0, pi}, tan phi = +-tan(tilt)
  const double a = 0.1, R = 2.0, r = 1.0;
  const std::vector<double> values = {R * std::cos(a) + r, -R * std::cos(a) + r, R * std::cos(a) - r,
                                      -R * std::cos(a) - r};
  auto expect = values;
  std::sort(expect.rbegin(), expect.rend());
  const auto& cps = torus().critical_points();
  REQUIRE(cps.size() == 4);
  const std::vector<int> indices = {2, 1, 1, 0};
  const std::vector<std::string> ids = {"max", "s1", "s2", "min"};
  for (int i = 0; i < 4; ++i) {
    CHECK(cps[i].id == ids[i]);
    CHECK(cps[i].index == indices[i]);
    CHECK(cps[i].value == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(cps[i].gradient_norm < 1e-8);
    CHECK(cps[i].min_abs_eigenvalue > 1e-6);
    CHECK(cps[i].morse);
  }

  const auto sphere = find_critical_points(builtin_system("sphere"));
  REQUIRE(sphere.size() == 2);
  CHECK(sphere[0].index == 2);
  CHECK(sphere[1].index == 0);
  CHECK(sphere[0].location.normalized()[2] == doctest::Approx(1.0));
  CHECK(sphere[1].location.normalized()[2] == doctest::Approx(-1.0));

  const auto par = find_critical_points(builtin_system("parabola"));
  REQUIRE(par.size() == 1);
  CHECK(par[0].index == 0);
  CHECK(std::abs(par[0].location[0]) < 1e-12);

  const auto sep = separable().critical_points();
  REQUIRE(sep.size() == 4);
  CHECK(sep[0].index == 2);
  CHECK(sep[1].index == 1);
  CHECK(sep[2].index == 1);
  CHECK(sep[3].index == 0);
}

TEST_CASE("a degenerate critical point is flagged") {
  const auto sys = custom_system("cubic", Expression::parse("x^3 + y^2", {"x", "y"}), {{-1, 1}, {-1, 1}}, {});
  const auto cps = find_critical_points(sys);
  REQUIRE_FALSE(cps.empty());
  CHECK(std::any_of(cps.begin(), cps.end(), [](const CriticalPointData& c) { return !c.morse; }));
  MorseModel m(sys);
  CHECK_THROWS_AS(export_family(m), InputError);
}

TEST_CASE("gradients agree with finite differences of f") {
  std::mt19937_64 rng(7);
  for (const auto& name : builtin_system_names()) {
    const auto sys = builtin_system(name);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
      Vec x(sys.state_dim);
      for (int i = 0; i < sys.state_dim; ++i)
        x[i] = std::uniform_real_distribution<double>(sys.box[i].first, sys.box[i].second)(rng);
      if (name == "sphere") x.normalize();
      const Vec g = sys.df(x);
      Vec fd(sys.state_dim);
      for (int i = 0; i < sys.state_dim; ++i) {
        const double h = 1e-6;
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        fd[i] = (sys.f(a) - sys.f(b)) / (2 * h);
      }
      if (g.norm() > 1e-3) worst = std::max(worst, (g - fd).norm() / g.norm());
    }
    CAPTURE(name);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("flow basics") {
  const auto par = builtin_system("parabola");
  const auto still = integrate_flow(par, Vec::Zero(1), 5.0);
  CHECK(still.stop == FlowStop::Stalled);
  for (const auto& x : still.x) CHECK(x[0] == 0.0);

  const auto sphere = builtin_system("sphere");
  const auto cps = find_critical_points(sphere);
  Vec x0(3);
  x0 << 0.3, -0.5, 0.6;
  x0.normalize();
  const auto seg = integrate_flow(sphere, x0, 400.0, cps);
  CHECK(seg.stop == FlowStop::Captured);
  CHECK(cps[seg.captured_by].id == "min");

  // exiting the box is a truncation
  const auto out = integrate_flow(custom_system("tilt", Expression::parse("x", {"x"}), {{-1, 1}}, {}), Vec::Zero(1), 10.0);
  CHECK(out.stop == FlowStop::ExitedDomain);
}

TEST_CASE("energy identity and monotone f along the flow") {
  const auto& sys = torus().system();
  FlowOptions opt;
  opt.spacing = 1e-4;
  const auto seg = integrate_flow(sys, v2(0.4, 2.0), 3.0, {}, opt);
  REQUIRE(seg.x.size() > 100);
  CHECK(seg.max_increase <= 1e-10);
  double integral = 0;
  for (std::size_t k = 0; k + 1 < seg.x.size(); ++k) {
    const double a = std::pow(sys.grad_norm(seg.x[k]), 2), b = std::pow(sys.grad_norm(seg.x[k + 1]), 2);
    integral += 0.5 * (a + b) * (seg.t[k + 1] - seg.t[k]);
  }
  const double drop = sys.f(seg.x.front()) - sys.f(seg.x.back());
  CHECK(std::abs(drop - integral) / drop < 1e-6);
}

TEST_CASE("hausdorff matches a naive oracle") {
  const auto sys = custom_system("plane", Expression::parse("x + y", {"x", "y"}), {{-10, 10}, {-10, 10}}, {});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> step(0.0, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory a, b;
    Vec p = v2(0, 0), q = v2(trial * 0.05, 0.3);
    for (int k = 0; k < 400; ++k) {
      a.x.push_back(p);
      b.x.push_back(q);
      p += v2(step(rng), step(rng));
      q += v2(step(rng), step(rng));
    }
    CHECK(hausdorff(sys, {&a}, {&b}) == doctest::Approx(naive_hausdorff(a.x, b.x)).epsilon(1e-12));
  }
  Trajectory seg, pt;
  seg.x = {v2(0, 0), v2(1, 0)};
  pt.x = {v2(0.5, 0.3)};
  CHECK(hausdorff(sys, {&seg}, {&pt}) == doctest::Approx(std::sqrt(0.25 + 0.09)));
  CHECK_THROWS_AS(hausdorff(sys, {}, {&pt}), InputError);
}

TEST_CASE("trajectory counts on the tilted torus") {
  auto& m = torus();
  for (const auto& [p, q] : std::vector<std::pair<std::string, std::string>>{
           {"max", "s1"}, {"max", "s2"}, {"s1", "min"}, {"s2", "min"}}) {
    const auto& s = m.moduli(p, q);
    CAPTURE(p);
    CAPTURE(q);
    CHECK(s.dim == 0);
    CHECK(s.trajectories.size() == 2);
    CHECK(s.unresolved.empty());
    for (const auto& t : s.trajectories) {
      CHECK(t.source == p);
      CHECK(t.target == q);
      CHECK(m.system().distance(t.x.front(), m.critical(p).location) < 1e-4);
      CHECK(m.system().distance(t.x.back(), m.critical(q).location) < 1e-4);
      for (std::size_t k = 0; k + 1 < t.x.size(); ++k) REQUIRE(m.system().f(t.x[k + 1]) <= m.system().f(t.x[k]) + 1e-10);
      CHECK(m.system().f(t.anchor) == doctest::Approx(0.5 * (m.critical(p).value + m.critical(q).value)).epsilon(1e-9));
    }
  }
  CHECK(m.moduli("s1", "s2").trajectories.empty());
  CHECK(m.moduli("s2", "s1").trajectories.empty());
}

TEST_CASE("10x shooting resolution finds the same trajectories") {
  auto& m = torus();
  for (const auto& [p, q] : std::vector<std::pair<std::string, std::string>>{{"max", "s1"}, {"s1", "min"}}) {
    const auto fine = m.find_trajectories(p, q, 10 * m.options().resolution);
    const auto& coarse = m.moduli(p, q);
    REQUIRE(fine.trajectories.size() == coarse.trajectories.size());
    for (std::size_t i = 0; i < fine.trajectories.size(); ++i)
      CHECK(m.system().distance(fine.trajectories[i].anchor, coarse.trajectories[i].anchor) < 1e-6);
  }
}

TEST_CASE("anchors do not depend on the truncation window") {
  MorseOptions opt;
  opt.flow.capture = 1e-6;
  opt.flow.max_time = 800;
  MorseModel other(builtin_system("torus"), opt);
  for (const auto& [p, q] : std::vector<std::pair<std::string, std::string>>{{"max", "s2"}, {"s2", "min"}}) {
    const auto& a = torus().moduli(p, q).trajectories;
    const auto& b = other.moduli(p, q).trajectories;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(torus().system().distance(a[i].anchor, b[i].anchor) < 1e-6);
  }
}

TEST_CASE("broken ends of M(max,min) on the torus") {
  auto& m = torus();
  const auto& arcs = m.detect_broken("max", "min");
  REQUIRE(arcs.size() == 4);
  std::set<std::tuple<std::string, int, int>> pairs;
  for (const auto& arc : arcs) {
    CHECK_FALSE(arc.circle);
    CHECK(arc.length > 0);
    REQUIRE(arc.ends.size() == 2);
    for (const auto& e : arc.ends) {
      pairs.insert({e.via, e.first, e.second});
      CHECK(e.hausdorff < 1e-2);
      REQUIRE(e.series.size() > 3);
      for (std::size_t k = 0; k + 1 < e.series.size(); ++k) {
        CHECK(e.series[k + 1].first < e.series[k].first);
        CHECK(e.series[k + 1].second < e.series[k].second);
      }
      // arc length dominates the distance to the broken image
      for (const auto& [len, h] : e.series) CHECK(h <= len * (1 + 1e-9));
    }
  }
  // every broken pair (2 x 2 through each saddle) ends exactly one arc
  CHECK(pairs.size() == 8);
  CHECK_THROWS_AS(m.detect_broken("max", "s1"), InputError);
}

TEST_CASE("gluing converges to the broken pair") {
  auto& m = torus();
  const auto& arc = m.detect_broken("max", "min")[0];
  const auto& e = arc.ends[0];
  const auto& g1 = m.moduli("max", e.via).trajectories[e.first];
  const auto& g2 = m.moduli(e.via, "min").trajectories[e.second];
  const auto broken = m.glue("max", e.via, "min", e.first, e.second, 0.0);
  CHECK(hausdorff(m.system(), {&broken}, {&g1, &g2}) < 1e-12);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-1, 1e-2, 1e-3}) {
    const auto t = m.glue("max", e.via, "min", e.first, e.second, lambda);
    CHECK(t.source == "max");
    CHECK(t.target == "min");
    const double h = hausdorff(m.system(), {&t}, {&g1, &g2});
    CHECK(h < lambda * (1 + 1e-6));
    CHECK(h < prev);
    prev = h;
  }
  CHECK_THROWS_AS(m.glue("max", e.via, "min", e.first, e.second, arc.length), RangeError);
  CHECK_THROWS_AS(m.glue("max", e.via, "min", e.first, e.second, -1.0), RangeError);
  CHECK_THROWS_AS(m.glue("max", e.via, "min", 7, 0, 0.1), InputError);
}

TEST_CASE("gluing on a separable system is a pair of factor trajectories") {
  // x' = sin x has tan(x/2) = C e^t, so along any trajectory of the product
  // y = 2 atan(tan(x/2) e^tau) for one shift tau.
  auto& m = separable();
  const auto& e = m.detect_broken("max", "min")[0].ends[0];
  auto wrap = [](double x) { return std::remainder(x, 2 * std::numbers::pi); };
  for (double lambda : {1e-1, 1e-2}) {
    const auto t = m.glue("max", e.via, "min", e.first, e.second, lambda);
    const Vec& a = t.anchor;
    const double tau = std::log(std::abs(std::tan(wrap(a[1]) / 2))) - std::log(std::abs(std::tan(wrap(a[0]) / 2)));
    double worst = 0;
    for (const auto& x : t.x) {
      const double sx = wrap(x[0]), sy = wrap(x[1]);
      if (std::abs(sx) < 1e-12 || std::abs(std::abs(sx) - std::numbers::pi) < 1e-12) continue;
      const double y = 2 * std::atan(std::tan(sx / 2) * std::exp(tau));
      worst = std::max(worst, std::abs(std::abs(y) - std::abs(sy)));
    }
    CAPTURE(lambda);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("observed moduli dimensions") {
  auto& m = torus();
  for (const auto& [p, q] : m.connected_pairs()) {
    const int dim = m.critical(p).index - m.critical(q).index - 1;
    CHECK(m.moduli(p, q).dim == dim);
    if (dim == 0) {
      std::set<std::pair<double, int>> shots;
      for (const auto& t : m.moduli(p, q).trajectories) shots.insert({t.shot, t.branch});
      CHECK(shots.size() == m.moduli(p, q).trajectories.size());
    } else {
      CHECK(dim == 1);
      CHECK_FALSE(m.detect_broken(p, q).empty());
    }
  }
  MorseModel sphere(builtin_system("sphere"));
  const auto& arcs = sphere.detect_broken("max", "min");
  REQUIRE(arcs.size() == 1);
  CHECK(arcs[0].circle);
  CHECK(arcs[0].ends.empty());
  // every shot lands in the minimum
  const auto s = sphere.find_trajectories("max", "min", 72);
  CHECK(s.dim == 1);
  CHECK(s.trajectories.size() == 72);
}

TEST_CASE("transversality heuristics") {
  auto& m = torus();
  const auto mm = m.check_transversality("max", "min");
  CHECK(mm.expected_dim == 2);
  CHECK(mm.passed);
  for (int d : mm.observed_dims) CHECK(d == 2);
  const auto ms = m.check_transversality("max", "s1");
  CHECK(ms.passed);
  for (int d : ms.observed_dims) CHECK(d == 1);
  const auto ss = m.check_transversality("s1", "s2");
  CHECK(ss.passed);
  CHECK(ss.observed_dims.empty());
  MorseModel sphere(builtin_system("sphere"));
  CHECK(sphere.check_transversality("max", "min").passed);
}

TEST_CASE("exported families") {
  const auto fam = export_family(torus());
  CHECK(fam.poset.size() == 4);
  CHECK(fam.spaces.size() == 5);
  CHECK(fam.space("max", "min").dim() == 1);
  CHECK(fam.space("max", "min").charts().size() == 4);
  CHECK(fam.space("max", "s1").charts().size() == 2);
  CHECK_FALSE(fam.poset.succ("s1", "s2"));
  const auto rep = validate_family(fam, 64);
  CHECK_MESSAGE(rep.ok, (rep.first_failure() ? rep.first_failure()->witness : ""));

  MorseModel sphere(builtin_system("sphere"));
  const auto sf = export_family(sphere);
  REQUIRE(sf.spaces.size() == 1);
  CHECK(sf.space("max", "min").dim() == 1);
  CHECK(connected_faces(sf.space("max", "min")).empty());
  CHECK(validate_family(sf, 64).ok);

  MorseModel par(builtin_system("parabola"));
  const auto pf = export_family(par);
  CHECK(pf.spaces.empty());
  CHECK(pf.poset.size() == 1);
}
