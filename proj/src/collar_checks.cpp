#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "glue/collar_engine.hpp"
#include "glue/error.hpp"
#include "glue/param_algebra.hpp"

namespace glue {

namespace {

std::string pair_of(const Chain& c) { return "(" + c.head() + "," + c.tail() + ")"; }

std::string describe(const Point& x, const Params& lambda) {
  std::ostringstream os;
  os.precision(17);
  os << "x=[chart " << x.chart;
  for (int i = 0; i < x.coords.size(); ++i) os << (i ? ", " : ": ") << x.coords[i];
  os << "] lambda=(";
  for (std::size_t i = 0; i < lambda.size(); ++i) os << (i ? ", " : "") << lambda[i];
  os << ")";
  return os.str();
}

// Each entry zero with probability `zero`, otherwise uniform in (0, eps).
Params random_params(int k, double eps, double zero, Rng& rng) {
  Params out(k);
  for (auto& v : out) v = rng.coin(zero) ? 0.0 : rng.open_uniform(0.0, eps);
  return out;
}

void update(IdentityCheck& chk, double residual, double tol, const std::string& where) {
  ++chk.samples;
  if (!(residual <= chk.max_residual)) chk.max_residual = residual;
  if (!(residual <= tol) && chk.passed) {
    chk.passed = false;
    chk.witness = where;
  }
}

double inward(Side s) { return s == Side::Lower ? 1.0 : -1.0; }

} // namespace

IdentityCheck check_compat_one_pair(const CollarAtlas& atlas, const Chain& i1, const Chain& i2, int samples,
                                    std::uint64_t seed, double tol) {
  if (!is_subchain(i2, i1)) throw InputError(i2.str() + " is not a subchain of " + i1.str());
  const auto& fam = atlas.family();
  const auto& sp = fam.space(i1.head(), i1.tail());
  const double eps = atlas.epsilon(i1);
  const auto inner = i2.interior();
  IdentityCheck chk{"compat_one_pair", pair_of(i1), i1, i2, 0, 0.0, true, ""};
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Point x = sample_stratum(fam, i1, rng);
    GlueParam lambda(i1, random_params(i1.length(), eps, 1.0 / 3.0, rng));
    for (int i = 1; i <= i1.length(); ++i)
      if (std::find(inner.begin(), inner.end(), i1[i]) == inner.end() && lambda.values[i - 1] == 0.0)
        lambda.values[i - 1] = rng.open_uniform(0.0, eps);
    const Point lhs = atlas.evaluate(i1, x, lambda.values);
    const Point mid = atlas.evaluate(i1, x, mask(lambda, i2).values);
    const Point rhs = atlas.evaluate(i2, mid, restrict(lambda, i2).values);
    update(chk, sp.distance(lhs, rhs), tol, describe(x, lambda.values));
  }
  return chk;
}

IdentityCheck check_compat_concat(const CollarAtlas& atlas, const Chain& i1, const Chain& i2, int samples,
                                  std::uint64_t seed, double tol) {
  const Chain joined = concat_chains(i1, i2);
  const auto& fam = atlas.family();
  const auto& sp = fam.space(joined.head(), joined.tail());
  const auto& iota = fam.embedding(i1.head(), i1.tail(), i2.tail());
  const double eps = atlas.epsilon(joined);
  IdentityCheck chk{"compat_concat", pair_of(joined), i1, i2, 0, 0.0, true, ""};
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Point x1 = sample_stratum(fam, i1, rng);
    const Point x2 = sample_stratum(fam, i2, rng);
    const GlueParam l1(i1, random_params(i1.length(), eps, 1.0 / 3.0, rng));
    const GlueParam l2(i2, random_params(i2.length(), eps, 1.0 / 3.0, rng));
    const GlueParam l = concat_params(l1, l2);
    const Point x = iota.map(x1, x2);
    const Point lhs = atlas.evaluate(joined, x, l.values);
    const Point rhs = iota.map(atlas.evaluate(i1, x1, l1.values), atlas.evaluate(i2, x2, l2.values));
    update(chk, sp.distance(lhs, rhs), tol, describe(x, l.values));
  }
  return chk;
}

IdentityCheck check_associativity(const CollarAtlas& atlas, const Chain& chain, int grid, int points,
                                  std::uint64_t seed, double tol) {
  if (chain.length() != 2) throw InputError("associativity needs a chain p0 > p1 > p2 > p3");
  const auto& fam = atlas.family();
  const std::string p0 = chain[0], p1 = chain[1], p2 = chain[2], p3 = chain[3];
  const double eps = std::min({atlas.epsilon(p0, p2), atlas.epsilon(p1, p3), atlas.epsilon(p0, p3)});
  const auto& sp = fam.space(p0, p3);
  IdentityCheck chk{"associativity", pair_of(chain), chain, chain, 0, 0.0, true, ""};
  Rng rng(seed);
  for (int s = 0; s < points; ++s) {
    const Point g1 = sample_stratum(fam, Chain({p0, p1}), rng);
    const Point g2 = sample_stratum(fam, Chain({p1, p2}), rng);
    const Point g3 = sample_stratum(fam, Chain({p2, p3}), rng);
    const Point x = fam.include(chain, {g1, g2, g3});
    for (int a = 0; a < grid; ++a)
      for (int b = 0; b < grid; ++b) {
        const double l1 = eps * (a + 0.5) / grid;
        const double l2 = eps * (b + 0.5) / grid;
        const Point left = glue_pair(atlas, p0, p2, p3, glue_pair(atlas, p0, p1, p2, g1, g2, l1), g3, l2);
        const Point right = glue_pair(atlas, p0, p1, p3, g1, glue_pair(atlas, p1, p2, p3, g2, g3, l2), l1);
        const Point full = atlas.glue(chain, x, {l1, l2});
        const double r = std::max({sp.distance(left, right), sp.distance(left, full), sp.distance(right, full)});
        update(chk, r, tol, describe(x, {l1, l2}));
      }
  }
  return chk;
}

IdentityCheck check_stratum_condition(const CollarAtlas& atlas, const Chain& chain, int samples,
                                      std::uint64_t seed) {
  const auto& fam = atlas.family();
  const auto& sp = fam.space(chain.head(), chain.tail());
  const double eps = atlas.epsilon(chain);
  IdentityCheck chk{"stratum_condition", pair_of(chain), chain, chain, 0, 0.0, true, ""};
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Point x = sample_stratum(fam, chain, rng);
    const GlueParam lambda(chain, random_params(chain.length(), eps, 0.5, rng));
    const Point y = atlas.glue(chain, x, lambda.values);
    const auto zeros = std::count(lambda.values.begin(), lambda.values.end(), 0.0);
    const Chain expect = zero_support_subchain(lambda);
    const bool ok = depth(sp, y) == zeros && fam.classify(chain.head(), chain.tail(), y) == expect;
    update(chk, ok ? 0.0 : 1.0, 0.5, describe(x, lambda.values) + " does not land in " + expect.str());
  }
  return chk;
}

IdentityCheck check_injective(const CollarAtlas& atlas, const Chain& chain, int samples, std::uint64_t seed) {
  const auto& fam = atlas.family();
  const auto& sp = fam.space(chain.head(), chain.tail());
  const double eps = atlas.epsilon(chain);
  IdentityCheck chk{"injective", pair_of(chain), chain, chain, 0, 0.0, true, ""};
  if (sp.ambient_dim() == 0 || chain.length() == 0) return chk; // identity on the stratum
  Rng rng(seed);
  struct Item {
    Vec out;
    Point x;
    Params lambda;
  };
  std::vector<Item> items;
  items.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    Point x = sample_stratum(fam, chain, rng);
    Params lambda = random_params(chain.length(), eps, 0.25, rng);
    Vec out = sp.ambient(atlas.evaluate(chain, x, lambda));
    items.push_back({std::move(out), std::move(x), std::move(lambda)});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.out[0] < b.out[0]; });
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size() && items[j].out[0] - items[i].out[0] <= 1e-12; ++j) {
      const bool same_input = items[i].x.chart == items[j].x.chart && items[i].x.coords == items[j].x.coords &&
                              items[i].lambda == items[j].lambda;
      if (same_input) continue;
      const double d = (items[i].out - items[j].out).norm();
      closest = std::min(closest, d);
      if (d <= 1e-12 && chk.passed) {
        chk.passed = false;
        chk.witness = describe(items[i].x, items[i].lambda) + " and " + describe(items[j].x, items[j].lambda);
      }
    }
  chk.samples = samples;
  // a pass/fail check: 1 marks a collision, the separation goes to the witness
  chk.max_residual = chk.passed ? 0.0 : 1.0;
  if (chk.passed && std::isfinite(closest)) chk.witness = "closest separation " + std::to_string(closest);
  return chk;
}

IdentityCheck check_differential(const CollarAtlas& atlas, const Chain& chain, int samples, std::uint64_t seed,
                                 double tol) {
  const auto& fam = atlas.family();
  const auto& sp = fam.space(chain.head(), chain.tail());
  const double eps = atlas.epsilon(chain);
  IdentityCheck chk{"differential", pair_of(chain), chain, chain, 0, 0.0, true, ""};
  Rng rng(seed);
  const double h = 1e-6;
  for (int s = 0; s < samples; ++s) {
    const Point x = sample_stratum(fam, chain, rng);
    Params lambda(chain.length());
    for (auto& v : lambda) v = rng.uniform(2 * h, eps - 2 * h);
    const Mat d = atlas.differential(chain, x, lambda);
    const auto frame = collar_frame(fam, chain, x);
    std::vector<int> free;
    for (int c = 0; c < sp.dim(); ++c)
      if (std::none_of(frame.begin(), frame.end(), [&](const FacetRef& f) { return f.coord == c; }))
        free.push_back(c);
    double worst = 0.0;
    for (int j = 0; j < d.cols(); ++j) {
      auto eval = [&](double step) {
        Point y = x;
        Params l = lambda;
        if (j < static_cast<int>(free.size())) y.coords[free[j]] += step;
        else l[j - free.size()] += step;
        return Vec(atlas.evaluate(chain, y, l).coords);
      };
      const Vec fd = (eval(h) - eval(-h)) / (2 * h);
      worst = std::max(worst, (d.col(j) - fd).norm() / std::max(fd.norm(), 1e-12));
    }
    update(chk, worst, tol, describe(x, lambda));
  }
  return chk;
}

IdentityCheck check_epsilon_monotone(const CollarAtlas& atlas) {
  const auto& fam = atlas.family();
  IdentityCheck chk{"epsilon_monotone", "all", {}, {}, 0, 0.0, true, ""};
  for (const auto& [p, q] : fam.poset.comparable_pairs())
    for (const auto& pt : fam.poset.points()) {
      const auto& r = pt.id;
      if (!fam.poset.succ(p, r) || !fam.poset.succ(r, q)) continue;
      const double excess = atlas.epsilon(p, q) - std::min(atlas.epsilon(p, r), atlas.epsilon(r, q));
      update(chk, std::max(excess, 0.0), 0.0, "eps(" + p + "," + q + ") exceeds eps through " + r);
    }
  return chk;
}

std::vector<IdentityCheck> verify_atlas(const CollarAtlas& atlas, int samples, std::uint64_t seed, double tol) {
  const auto& fam = atlas.family();
  std::vector<IdentityCheck> out;
  std::uint64_t s = seed;
  for (const auto& [p, q] : fam.pairs_by_length())
    for (const auto& i1 : enumerate_chains(fam.poset, p, q)) {
      for (const auto& i2 : subchains(i1)) out.push_back(check_compat_one_pair(atlas, i1, i2, samples, ++s, tol));
      out.push_back(check_stratum_condition(atlas, i1, samples, ++s));
      out.push_back(check_injective(atlas, i1, samples, ++s));
      if (fam.space(p, q).dim() > 0)
        out.push_back(check_differential(atlas, i1, std::max(1, samples / 100), ++s));
      if (i1.length() == 2) out.push_back(check_associativity(atlas, i1, 8, std::max(1, samples / 500), ++s, tol));
    }
  for (const auto& [p, q] : fam.pairs_by_length())
    for (const auto& pt : fam.poset.points()) {
      const auto& r = pt.id;
      if (!fam.poset.succ(p, r) || !fam.poset.succ(r, q)) continue;
      for (const auto& i1 : enumerate_chains(fam.poset, p, r))
        for (const auto& i2 : enumerate_chains(fam.poset, r, q))
          out.push_back(check_compat_concat(atlas, i1, i2, samples, ++s, tol));
    }
  out.push_back(check_epsilon_monotone(atlas));
  return out;
}

// Single-space collars.

std::vector<FacetRef> SpaceCollars::frame(const std::vector<std::string>& faces, const Point& x) const {
  const auto active = space_.active_facets(x);
  if (active.size() != faces.size())
    throw InputError("point has depth " + std::to_string(active.size()) + ", expected " +
                     std::to_string(faces.size()));
  std::vector<FacetRef> out;
  for (const auto& l : faces) {
    auto it = std::find_if(active.begin(), active.end(), [&](const FacetRef& f) { return facet_label(space_, f) == l; });
    if (it == active.end()) throw InputError("point is not on the face " + l);
    out.push_back(*it);
  }
  return out;
}

Point SpaceCollars::glue(const std::vector<std::string>& faces, const Point& x, const Params& lambda) const {
  if (lambda.size() != faces.size()) throw InputError("one parameter per face is required");
  for (double t : lambda)
    if (!(t >= 0.0 && t < 1.0)) throw RangeError("collar parameter " + std::to_string(t) + " outside [0, 1)");
  Point y = x;
  const auto fr = frame(faces, x);
  for (std::size_t i = 0; i < fr.size(); ++i) {
    const auto& iv = space_.chart(x.chart).box[fr[i].coord];
    y.coords[fr[i].coord] += inward(fr[i].side) * (iv.hi - iv.lo) * lambda[i];
  }
  return y;
}

std::vector<std::vector<std::string>> SpaceCollars::corner_sets() const {
  std::set<std::vector<std::string>> sets;
  for (int c = 0; c < static_cast<int>(space_.charts().size()); ++c) {
    const auto& ch = space_.chart(c);
    // Each coordinate contributes nothing, its lower facet, or its upper facet.
    std::vector<int> choice(ch.dim(), 0);
    while (true) {
      std::vector<std::string> labels;
      bool ok = true;
      for (int i = 0; i < ch.dim() && ok; ++i) {
        if (choice[i] == 0) continue;
        const Side s = choice[i] == 1 ? Side::Lower : Side::Upper;
        if (!ch.closed(i, s)) ok = false;
        else labels.push_back(facet_label(space_, {c, i, s}));
      }
      if (ok) {
        std::sort(labels.begin(), labels.end());
        if (std::adjacent_find(labels.begin(), labels.end()) == labels.end()) sets.insert(labels);
      }
      int i = 0;
      while (i < ch.dim() && ++choice[i] == 3) choice[i++] = 0;
      if (i == ch.dim()) break;
    }
  }
  return {sets.begin(), sets.end()};
}

SpaceCollars single_space_collars(const CorneredSpace& space, const std::vector<std::string>& faces) {
  std::set<std::string> listed(faces.begin(), faces.end());
  if (listed.size() != faces.size()) throw InputError("a face is listed twice, so face interiors overlap");
  std::set<std::string> present;
  for (const auto& f : glue::faces(space)) present.insert(f.label);
  for (const auto& l : listed)
    if (!present.count(l)) throw InputError("unknown face " + l);
  for (const auto& l : present)
    if (!listed.count(l)) throw InputError("the faces do not cover the boundary: " + l + " is missing");
  SpaceCollars out;
  out.space_ = space;
  out.faces_ = faces;
  return out;
}

Point sample_corner_stratum(const SpaceCollars& collars, const std::vector<std::string>& faces, Rng& rng) {
  const auto& sp = collars.space();
  for (int c = 0; c < static_cast<int>(sp.charts().size()); ++c) {
    const auto& ch = sp.chart(c);
    Vec u(ch.dim());
    for (int i = 0; i < ch.dim(); ++i) u[i] = rng.open_uniform(ch.box[i].lo, ch.box[i].hi);
    std::vector<bool> used(ch.dim(), false);
    bool ok = true;
    for (const auto& l : faces) {
      bool found = false;
      for (int i = 0; i < ch.dim() && !found; ++i)
        for (Side s : {Side::Lower, Side::Upper})
          if (!used[i] && ch.closed(i, s) && facet_label(sp, {c, i, s}) == l) {
            used[i] = true;
            u[i] = ch.bound(i, s);
            found = true;
            break;
          }
      ok = ok && found;
    }
    if (ok) return {c, u};
  }
  throw InputError("the faces have no common corner stratum");
}

IdentityCheck check_space_compat(const SpaceCollars& collars, const std::vector<std::string>& big,
                                 const std::vector<std::string>& small, int samples, std::uint64_t seed,
                                 double tol) {
  for (const auto& l : small)
    if (std::find(big.begin(), big.end(), l) == big.end())
      throw InputError("face " + l + " is not among the larger face set");
  auto join = [](const std::vector<std::string>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s + "}";
  };
  IdentityCheck chk{"space_compat", join(big) + "/" + join(small), {}, {}, 0, 0.0, true, ""};
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Point x = sample_corner_stratum(collars, big, rng);
    Params lambda(big.size()), outer(big.size()), inner;
    for (std::size_t i = 0; i < big.size(); ++i) {
      const bool kept = std::find(small.begin(), small.end(), big[i]) != small.end();
      lambda[i] = kept && rng.coin(0.25) ? 0.0 : rng.open_uniform(0.0, 1.0);
      outer[i] = kept ? 0.0 : lambda[i];
      if (kept) inner.push_back(lambda[i]);
    }
    // Order of `small` follows `big`.
    std::vector<std::string> small_sorted;
    for (const auto& l : big)
      if (std::find(small.begin(), small.end(), l) != small.end()) small_sorted.push_back(l);
    const Point lhs = collars.glue(big, x, lambda);
    const Point rhs = collars.glue(small_sorted, collars.glue(big, x, outer), inner);
    update(chk, collars.space().distance(lhs, rhs), tol, describe(x, lambda));
  }
  return chk;
}

} // namespace glue
