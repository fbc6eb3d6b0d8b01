// Acceptance run: one line per criterion, "criterion N: PASS|FAIL ...".
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "glue/cli.hpp"
#include "glue/collar_engine.hpp"
#include "glue/family_model.hpp"
#include "glue/morse_engine.hpp"
#include "glue/param_algebra.hpp"
#include "glue/sampling.hpp"

using namespace glue;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

int failures = 0;

void run(int n, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || secs < limit_s;
  const bool ok = o.passed && in_time;
  if (!ok) ++failures;
  std::printf("criterion %d: %s  %s  [%.2f s", n, ok ? "PASS" : "FAIL", o.detail.c_str(), secs);
  if (limit_s > 0) std::printf(", limit %.0f s%s", limit_s, in_time ? "" : " EXCEEDED");
  std::printf("]\n");
  std::fflush(stdout);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1. exact parameter algebra

CriticalPoset random_poset(int n, Rng& rng) {
  std::vector<CriticalPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back({"v" + std::to_string(i), std::nullopt});
  std::vector<std::pair<std::string, std::string>> succ;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.coin(0.6)) succ.emplace_back(pts[i].id, pts[j].id);
  return CriticalPoset(pts, succ);
}

ExactGlueParam random_exact(const Chain& c, Rng& rng) {
  std::vector<Rational> v;
  for (int i = 0; i < c.length(); ++i)
    v.emplace_back(rng.coin(0.3) ? 0 : static_cast<long long>(1 + rng.below(60)),
                   1 + static_cast<long long>(rng.below(12)));
  return {c, v};
}

Chain random_subchain(const Chain& c, Rng& rng) {
  std::vector<std::string> ids{c.head()};
  for (const auto& r : c.interior())
    if (rng.coin()) ids.push_back(r);
  ids.push_back(c.tail());
  return Chain(ids);
}

Outcome criterion1() {
  auto q = [](std::vector<long long> v) {
    std::vector<Rational> r(v.begin(), v.end());
    return r;
  };
  const Chain big({"p", "r1", "r2", "r3", "q"}), mid({"p", "r2", "q"});
  const ExactGlueParam lambda(big, q({5, 6, 7}));
  int bad = 0;
  bad += !(restrict(lambda, mid) == ExactGlueParam(mid, q({6})));
  bad += !(mask(lambda, mid) == ExactGlueParam(big, q({5, 0, 7})));
  bad += !(add(lambda, ExactGlueParam(mid, q({8}))) == ExactGlueParam(big, q({5, 14, 7})));
  const int worked_bad = bad;

  Rng rng(2024);
  std::vector<Chain> chains;
  int posets = 0;
  for (int n = 2; n <= 6; ++n)
    for (int k = 0; k < 8; ++k) {
      const auto poset = n == 6 && k == 0 ? CriticalPoset::linear(5) : random_poset(n, rng);
      ++posets;
      for (const auto& [a, b] : poset.comparable_pairs())
        for (const auto& c : enumerate_chains(poset, a, b)) chains.push_back(c);
    }
  const int tuples = 10000;
  for (int t = 0; t < tuples; ++t) {
    const Chain& c = chains[t % chains.size()];
    const Chain j = random_subchain(c, rng);
    const auto l = random_exact(c, rng);
    const auto mu = random_exact(j, rng);
    bad += !(add(mask(l, j), restrict(l, j)) == l);
    bad += !(restrict(extend(mu, c), j) == mu);
    bad += !(restrict(mask(l, j), j) == ExactGlueParam::zero(j));
    bad += !is_subchain(j, zero_support_subchain(mask(l, j)));
    for (int pos = 1; pos <= c.length(); ++pos) {
      const auto [c1, c2] = split_chain(c, pos);
      const auto l1 = random_exact(c1, rng), l2 = random_exact(c2, rng);
      const auto cat = concat_params(l1, l2);
      std::vector<Rational> expect = l1.values;
      expect.emplace_back(0);
      expect.insert(expect.end(), l2.values.begin(), l2.values.end());
      bad += !(cat == ExactGlueParam(c, expect));
      const auto zs = zero_support_subchain(cat);
      bad += std::find(zs.ids().begin(), zs.ids().end(), c[pos]) == zs.ids().end();
    }
  }
  return {bad == 0, std::to_string(tuples) + " rational tuples over " + std::to_string(chains.size()) + " chains of " +
                        std::to_string(posets) + " posets (<= 6 points), worked values " +
                        (worked_bad ? "wrong" : "exact") + ", " + std::to_string(bad) + " mismatches"};
}

// 2. collars on cube families

Outcome criterion2() {
  bool ok = true;
  std::ostringstream d;
  for (int n : {2, 3, 4}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto fam = cube_family(n);
    const auto val = validate_family(fam, 1000, 1, 1e-9);
    const auto atlas = build_collars(fam);
    double eps = 1e300, r1 = 0, r2 = 0;
    int inst = 0;
    bool pass = val.ok;
    for (const auto& rec : atlas.records()) eps = std::min(eps, rec.epsilon);
    std::uint64_t seed = 100;
    for (const auto& [p, q] : fam.pairs_by_length())
      for (const auto& i1 : enumerate_chains(fam.poset, p, q)) {
        for (const auto& i2 : subchains(i1)) {
          const auto c = check_compat_one_pair(atlas, i1, i2, 10000, ++seed, 1e-9);
          r1 = std::max(r1, c.max_residual);
          pass = pass && c.passed;
          ++inst;
        }
      }
    for (const auto& [p, q] : fam.pairs_by_length())
      for (const auto& pt : fam.poset.points()) {
        if (!fam.poset.succ(p, pt.id) || !fam.poset.succ(pt.id, q)) continue;
        for (const auto& i1 : enumerate_chains(fam.poset, p, pt.id))
          for (const auto& i2 : enumerate_chains(fam.poset, pt.id, q)) {
            const auto c = check_compat_concat(atlas, i1, i2, 10000, ++seed, 1e-9);
            r2 = std::max(r2, c.max_residual);
            pass = pass && c.passed;
            ++inst;
          }
      }
    pass = pass && eps >= 1e-3 && r1 < 1e-9 && r2 < 1e-9;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (n == 4 && secs >= 60) pass = false;
    ok = ok && pass;
    d << "n=" << n << (val.ok ? " valid" : " INVALID") << " eps_min=" << sci(eps) << " " << inst
      << " instances x 1e4 one-pair=" << sci(r1) << " concat=" << sci(r2) << " (" << sci(secs) << " s); ";
  }
  return {ok, d.str()};
}

// 3. associativity on cube(3)

Outcome criterion3() {
  const auto atlas = build_collars(cube_family(3));
  const Chain chain({"p0", "p1", "p2", "p3"});
  const auto c = check_associativity(atlas, chain, 32, 100, 7, 1e-9);
  return {c.passed && c.max_residual < 1e-9,
          "32x32 grid x 100 points on " + chain.str() + ", max residual (both sides and full chain) " +
              sci(c.max_residual) + (c.passed ? "" : " witness " + c.witness)};
}

// 4. single-space collars on cubes

Outcome criterion4() {
  bool ok = true;
  std::ostringstream d;
  for (int n = 1; n <= 3; ++n) {
    const auto sp = CorneredSpace::unit_cube(n);
    std::vector<std::string> labels;
    for (const auto& f : faces(sp)) labels.push_back(f.label);
    const auto col = single_space_collars(sp, labels);
    double worst = 0;
    int pairs = 0;
    std::uint64_t seed = 500;
    for (const auto& big : col.corner_sets())
      for (const auto& small : col.corner_sets()) {
        if (!std::includes(big.begin(), big.end(), small.begin(), small.end())) continue;
        const auto c = check_space_compat(col, big, small, 10000, ++seed, 1e-9);
        worst = std::max(worst, c.max_residual);
        ok = ok && c.passed;
        ++pairs;
      }
    Rng rng(77);
    int moved = 0;
    for (int s = 0; s < 10000; ++s) {
      const Point x = sample_corner_stratum(col, {}, rng);
      const Point y = col.glue({}, x, {});
      moved += !(y.chart == x.chart && y.coords == x.coords);
    }
    ok = ok && worst < 1e-9 && moved == 0;
    d << "[0,1]^" << n << ": " << labels.size() << " faces, " << pairs << " subset pairs, residual " << sci(worst)
      << ", G_empty moved " << moved << "; ";
  }
  return {ok, d.str()};
}

// 5. stratum condition on every built atlas

Outcome criterion5() {
  std::vector<StratifiedFamily> fams;
  for (int n = 1; n <= 4; ++n) fams.push_back(cube_family(n));
  {
    MorseModel sphere(builtin_system("sphere"));
    fams.push_back(export_family(sphere));
    MorseModel torus(builtin_system("torus"));
    fams.push_back(export_family(torus));
  }
  bool ok = true;
  int failed = 0;
  long long samples = 0;
  std::ostringstream d;
  for (const auto& fam : fams) {
    const auto atlas = build_collars(fam);
    std::uint64_t seed = 900;
    int chains = 0;
    for (const auto& [p, q] : fam.pairs_by_length())
      for (const auto& c : enumerate_chains(fam.poset, p, q)) {
        const auto chk = check_stratum_condition(atlas, c, 10000, ++seed);
        samples += chk.samples;
        ++chains;
        if (!chk.passed) {
          ++failed;
          ok = false;
          d << "failure " << fam.name << " " << c.str() << ": " << chk.witness << "; ";
        }
      }
    d << fam.name << " (" << chains << " chains) ";
  }
  d << "- " << samples << " samples, " << failed << " failing chains";
  return {ok, d.str()};
}

// 6. Morse instantiation on the tilted torus

Outcome criterion6() {
  MorseModel m(builtin_system("torus"));
  std::ostringstream d;
  bool ok = true;

  const auto& cps = m.critical_points();
  double gmax = 0;
  for (const auto& c : cps) gmax = std::max(gmax, c.gradient_norm);
  const bool cp_ok = cps.size() == 4 && gmax < 1e-8;
  ok = ok && cp_ok;
  d << cps.size() << " critical points (max |grad| " << sci(gmax) << "); ";

  bool counts_ok = true;
  for (const auto& [p, q] : std::vector<std::pair<std::string, std::string>>{
           {"max", "s1"}, {"max", "s2"}, {"s1", "min"}, {"s2", "min"}}) {
    const auto& coarse = m.moduli(p, q);
    const auto fine = m.find_trajectories(p, q, 10 * m.options().resolution);
    bool same = coarse.trajectories.size() == 2 && fine.trajectories.size() == 2 && coarse.unresolved.empty();
    for (std::size_t i = 0; same && i < 2; ++i)
      same = m.system().distance(fine.trajectories[i].anchor, coarse.trajectories[i].anchor) < 1e-6;
    counts_ok = counts_ok && same;
    d << "#M(" << p << "," << q << ")=" << coarse.trajectories.size() << "/" << fine.trajectories.size() << " ";
  }
  d << "(10x oracle " << (counts_ok ? "agrees" : "DISAGREES") << "); ";
  ok = ok && counts_ok;

  const auto& arcs = m.detect_broken("max", "min");
  std::set<std::tuple<std::string, int, int>> pairs;
  std::size_t ends = 0;
  double hend = 0;
  for (const auto& a : arcs)
    for (const auto& e : a.ends) {
      ++ends;
      pairs.insert({e.via, e.first, e.second});
      hend = std::max(hend, e.hausdorff);
    }
  const bool ends_ok = hend < 1e-2 && pairs.size() == ends;
  const bool shape_ok = arcs.size() == 2 && ends == 4;
  ok = ok && ends_ok && shape_ok;
  d << "Mbar(max,min): " << arcs.size() << " arcs / " << ends << " ends (expected 2 / 4), " << pairs.size()
    << " distinct broken pairs, max end Hausdorff " << sci(hend) << "; ";

  const double bound[3] = {1e-1, 1e-2, 2e-3};
  const double lambdas[3] = {1e-1, 1e-2, 1e-3};
  double worst[3] = {0, 0, 0};
  bool glue_ok = true;
  for (const auto& a : arcs)
    for (const auto& e : a.ends) {
      const auto& g1 = m.moduli("max", e.via).trajectories.at(e.first);
      const auto& g2 = m.moduli(e.via, "min").trajectories.at(e.second);
      double prev = 1e300;
      for (int k = 0; k < 3; ++k) {
        const auto t = m.glue("max", e.via, "min", e.first, e.second, lambdas[k]);
        const double h = hausdorff(m.system(), {&t}, {&g1, &g2});
        worst[k] = std::max(worst[k], h);
        glue_ok = glue_ok && h < bound[k] && h < prev;
        prev = h;
      }
    }
  ok = ok && glue_ok;
  d << "glue Hausdorff max over ends at 1e-1/1e-2/1e-3: " << sci(worst[0]) << "/" << sci(worst[1]) << "/"
    << sci(worst[2]) << (glue_ok ? " decreasing, within bounds" : " OUT OF BOUNDS");
  return {ok, d.str()};
}

// Same glue measurements with lambda as arc length in the anchor-chord
// metric instead of the Hausdorff metric.  Informational only.
void anchor_metric_info() {
  MorseOptions opt;
  opt.arc_metric = ArcMetric::Anchor;
  MorseModel m(builtin_system("torus"), opt);
  const double lambdas[3] = {1e-1, 1e-2, 1e-3};
  double worst[3] = {0, 0, 0};
  for (const auto& a : m.detect_broken("max", "min"))
    for (const auto& e : a.ends) {
      const auto& g1 = m.moduli("max", e.via).trajectories.at(e.first);
      const auto& g2 = m.moduli(e.via, "min").trajectories.at(e.second);
      for (int k = 0; k < 3; ++k) {
        if (!(lambdas[k] < a.length)) continue;
        const auto t = m.glue("max", e.via, "min", e.first, e.second, lambdas[k]);
        worst[k] = std::max(worst[k], hausdorff(m.system(), {&t}, {&g1, &g2}));
      }
    }
  std::printf("info: anchor-chord arc metric, glue Hausdorff max over ends at 1e-1/1e-2/1e-3: %s/%s/%s\n",
              sci(worst[0]).c_str(), sci(worst[1]).c_str(), sci(worst[2]).c_str());
  std::fflush(stdout);
}

// 7. mutation sensitivity

Outcome criterion7() {
  std::ostringstream clean_out, clean_err, out, err;
  const int clean = run_cli({"verify", "--family", "cube3", "--samples", "1000"}, clean_out, clean_err);
  const int code = run_cli({"verify", "--family", "cube3", "--mutate", "p0,p1,p3", "--samples", "1000"}, out, err);
  std::string fail_line;
  std::istringstream lines(out.str());
  for (std::string l; std::getline(lines, l);)
    if (l.rfind("FAIL ", 0) == 0) fail_line = l.substr(5);
  const bool named = fail_line.find("p0") != std::string::npos && fail_line.find("p3") != std::string::npos;
  return {clean == 0 && code == kIdentityFailure && named,
          "clean cube3 exit " + std::to_string(clean) + ", flipped iota(p0,p1,p3) exit " + std::to_string(code) +
              ", witness: " + (fail_line.empty() ? "(none)" : fail_line)};
}

} // namespace

int main() {
  run(1, 5, criterion1);
  run(2, 0, criterion2);
  run(3, 30, criterion3);
  run(4, 30, criterion4);
  run(5, 0, criterion5);
  run(6, 120, criterion6);
  try {
    anchor_metric_info();
  } catch (const std::exception& e) {
    std::printf("info: anchor-chord arc metric failed: %s\n", e.what());
  }
  run(7, 0, criterion7);
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
