#include "glue/collar_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glue/error.hpp"

namespace glue {

namespace {

double inward(Side s) { return s == Side::Lower ? 1.0 : -1.0; }

// C-infinity step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

// 1 for t <= delta, 0 for t >= 1.5 delta.
double blend_weight(double t, double delta) { return smooth_step((1.5 * delta - t) / (0.5 * delta)); }

std::vector<std::string> between(const CriticalPoset& poset, const std::string& p, const std::string& q) {
  std::vector<std::string> out;
  for (const auto& pt : poset.points())
    if (poset.succ(p, pt.id) && poset.succ(pt.id, q)) out.push_back(pt.id);
  return out;
}

Chain take(const Chain& c, std::size_t from, std::size_t to) {
  return Chain({c.ids().begin() + from, c.ids().begin() + to + 1});
}

Point flat_map(const std::vector<FacetRef>& frame, const Point& x, const Params& lambda) {
  Point y = x;
  for (std::size_t i = 0; i < frame.size(); ++i) y.coords[frame[i].coord] += inward(frame[i].side) * lambda[i];
  return y;
}

std::optional<Preimage> flat_inverse(const StratifiedFamily& family, const Chain& chain, const Point& y) {
  const auto& sp = family.space(chain.head(), chain.tail());
  if (y.chart < 0 || y.chart >= static_cast<int>(sp.charts().size())) return std::nullopt;
  const auto& ch = sp.chart(y.chart);
  Point x = y;
  Params lambda;
  std::vector<int> used;
  for (const auto& label : chain.interior()) {
    int best = -1;
    Side best_side = Side::Lower;
    double best_t = std::numeric_limits<double>::infinity();
    for (int c = 0; c < ch.dim(); ++c)
      for (Side s : {Side::Lower, Side::Upper}) {
        if (!ch.closed(c, s) || facet_label(sp, {y.chart, c, s}) != label) continue;
        const double t = inward(s) * (y.coords[c] - ch.bound(c, s));
        if (t >= 0.0 && t < best_t) {
          best = c;
          best_side = s;
          best_t = t;
        }
      }
    if (best < 0 || best_t >= 1.0 || std::find(used.begin(), used.end(), best) != used.end())
      return std::nullopt;
    used.push_back(best);
    x.coords[best] = ch.bound(best, best_side);
    lambda.push_back(best_t);
  }
  try {
    if (collar_frame(family, chain, x).size() != used.size()) return std::nullopt;
  } catch (const InputError&) {
    return std::nullopt;
  }
  return Preimage{x, lambda};
}

// Every column of every affine piece sends a chart coordinate to a target
// coordinate with the same closed ends and face labels, so flat frames are
// carried to flat frames.
bool carries_flat_frames(const StratifiedFamily& family, const std::string& p, const std::string& q) {
  for (const auto& r : between(family.poset, p, q)) {
    const auto& e = family.embedding(p, r, q);
    if (!e.affine) return false;
    const auto& left = family.space(p, r);
    const auto& right = family.space(r, q);
    const auto& target = family.space(p, q);
    for (const auto& pc : *e.affine) {
      const int da = left.dim();
      for (int j = 0; j < pc.matrix.cols(); ++j) {
        const CorneredSpace& src = j < da ? left : right;
        const int chart = j < da ? pc.left_chart : pc.right_chart;
        const int coord = j < da ? j : j - da;
        int row = -1;
        for (int i = 0; i < pc.matrix.rows(); ++i) {
          if (pc.matrix(i, j) == 0.0) continue;
          if (row >= 0 || std::abs(pc.matrix(i, j)) != 1.0) return false;
          row = i;
        }
        if (row < 0) return false;
        const bool flip = pc.matrix(row, j) < 0.0;
        for (Side s : {Side::Lower, Side::Upper}) {
          const Side t = flip ? (s == Side::Lower ? Side::Upper : Side::Lower) : s;
          const bool sc = src.chart(chart).closed(coord, s);
          if (sc != target.chart(pc.target_chart).closed(row, t)) return false;
          if (sc && facet_label(src, {chart, coord, s}) != facet_label(target, {pc.target_chart, row, t}))
            return false;
        }
      }
    }
  }
  return true;
}

std::vector<int> free_coords(int dim, const std::vector<FacetRef>& frame) {
  std::vector<int> out;
  for (int c = 0; c < dim; ++c)
    if (std::none_of(frame.begin(), frame.end(), [&](const FacetRef& f) { return f.coord == c; }))
      out.push_back(c);
  return out;
}

} // namespace

std::vector<FacetRef> collar_frame(const StratifiedFamily& family, const Chain& chain, const Point& x) {
  const auto& sp = family.space(chain.head(), chain.tail());
  if (!sp.contains(x)) throw InputError("point is outside Mbar(" + chain.head() + "," + chain.tail() + ")");
  const auto active = sp.active_facets(x);
  const auto labels = chain.interior();
  if (active.size() != labels.size())
    throw InputError("point has depth " + std::to_string(active.size()) + ", not in stratum " + chain.str());
  std::vector<FacetRef> frame;
  for (const auto& l : labels) {
    auto it = std::find_if(active.begin(), active.end(),
                           [&](const FacetRef& f) { return facet_label(sp, f) == l; });
    if (it == active.end()) throw InputError("point is not on the face " + l + " of stratum " + chain.str());
    frame.push_back(*it);
  }
  return frame;
}

Point sample_stratum(const StratifiedFamily& family, const Chain& chain, Rng& rng) {
  std::vector<Point> pieces;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const auto& sp = family.space(chain[i], chain[i + 1]);
    const int c = static_cast<int>(rng.below(sp.charts().size()));
    const auto& ch = sp.chart(c);
    Vec u(ch.dim());
    for (int k = 0; k < ch.dim(); ++k) u[k] = rng.open_uniform(ch.box[k].lo, ch.box[k].hi);
    pieces.push_back({c, u});
  }
  return family.include(chain, pieces);
}

PreferredChart initial_collar(const StratifiedFamily& family, const Chain& chain) {
  const StratifiedFamily* fam = &family;
  PreferredChart phi;
  phi.chain = chain;
  phi.map = [fam, chain](const Point& x, const Params& lambda) {
    return flat_map(collar_frame(*fam, chain, x), x, lambda);
  };
  phi.inverse = [fam, chain](const Point& y) { return flat_inverse(*fam, chain, y); };
  return phi;
}

PreferredChart normalize_junctions(const StratifiedFamily& family, PreferredChart phi,
                                   const CollarMaps& shorter, std::uint64_t seed) {
  const StratifiedFamily* fam = &family;
  const Chain chain = phi.chain;
  const int k = chain.length();
  const auto& target = family.space(chain.head(), chain.tail());
  Rng rng(seed);
  for (int l = 1; l <= k; ++l) {
    const std::string p = chain.head(), q = chain.tail(), r = chain[l];
    const Chain left = take(chain, 0, l);
    const Chain right = take(chain, l, chain.size() - 1);
    auto junction_point = [fam, p, q, r, left, right, l, shorter](const Point& x, const Params& lambda) {
      auto parts = fam->split(p, r, q, x);
      if (!parts) throw NumericalAbort("stratum point does not split at junction " + r);
      Params l1(lambda.begin(), lambda.begin() + (l - 1));
      Params l2(lambda.begin() + l, lambda.end());
      return fam->embedding(p, r, q).map(shorter.glue(left, parts->first, l1),
                                         shorter.glue(right, parts->second, l2));
    };

    // Skip theta_l when the chart already satisfies the junction identity.
    double worst = 0.0;
    for (int s = 0; s < 32; ++s) {
      const Point x = sample_stratum(family, chain, rng);
      Params lambda(k);
      for (auto& v : lambda) v = rng.uniform(0.0, 0.5);
      lambda[l - 1] = 0.0;
      worst = std::max(worst, target.distance(phi.map(x, lambda), junction_point(x, lambda)));
    }
    if (worst <= 1e-14) continue;

    auto prev_map = phi.map;
    auto prev_inverse = phi.inverse;
    auto theta = [prev_inverse, junction_point, l, r](const Point& x, const Params& lambda) {
      auto pre = prev_inverse(junction_point(x, lambda));
      if (!pre) throw NumericalAbort("junction correction at " + r + " left the chart image");
      pre->second[l - 1] = lambda[l - 1];
      return *pre;
    };
    phi.map = [prev_map, theta](const Point& x, const Params& lambda) {
      const auto t = theta(x, lambda);
      return prev_map(t.first, t.second);
    };
    phi.inverse = [fam, prev_map, prev_inverse, shorter, p, q, r, left, right,
                   l](const Point& y) -> std::optional<Preimage> {
      auto pre = prev_inverse(y);
      if (!pre) return std::nullopt;
      const double lam = pre->second[l - 1];
      pre->second[l - 1] = 0.0;
      const Point z = prev_map(pre->first, pre->second);
      auto parts = fam->split(p, r, q, z);
      if (!parts) return std::nullopt;
      auto a = shorter.invert(left, parts->first);
      auto b = shorter.invert(right, parts->second);
      if (!a || !b) return std::nullopt;
      Params lambda = a->second;
      lambda.push_back(lam);
      lambda.insert(lambda.end(), b->second.begin(), b->second.end());
      return Preimage{fam->embedding(p, r, q).map(a->first, b->first), lambda};
    };
    phi.corrected_junctions.push_back(l);
  }
  return phi;
}

namespace {

// Points of M_I used for the image checks: all of them when M_I is finite.
std::vector<Point> stratum_probes(const StratifiedFamily& family, const Chain& chain, int samples, Rng& rng) {
  std::vector<const CorneredSpace*> factors;
  bool finite = true;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    factors.push_back(&family.space(chain[i], chain[i + 1]));
    finite = finite && factors.back()->dim() == 0;
  }
  std::vector<Point> out;
  if (!finite) {
    for (int s = 0; s < samples; ++s) out.push_back(sample_stratum(family, chain, rng));
    return out;
  }
  std::vector<std::size_t> idx(factors.size(), 0);
  while (true) {
    std::vector<Point> pieces;
    for (std::size_t i = 0; i < factors.size(); ++i) pieces.push_back({static_cast<int>(idx[i]), Vec(0)});
    out.push_back(family.include(chain, pieces));
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == factors[i]->charts().size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return out;
}

struct ImageBox {
  int chart;
  Vec lo, hi;
  int stratum;
  bool discrete;
};

// Deepest-stratum collar images stay inside their chart and are pairwise disjoint.
bool deepest_images_ok(const StratifiedFamily& fam, const CollarMaps& maps, const std::string& p, const std::string& q, int depth,
                       double eps, int samples, std::uint64_t seed, std::string& why) {
  const auto& sp = fam.space(p, q);
  Rng rng(seed);
  std::vector<ImageBox> boxes;
  int stratum = 0;
  for (const auto& c : enumerate_chains(fam.poset, p, q)) {
    if (c.length() != depth) continue;
    const bool discrete = sp.dim() == depth;
    for (const auto& x : stratum_probes(fam, c, samples, rng)) {
      ImageBox box{x.chart, x.coords, x.coords, stratum, discrete};
      for (int mask = 0; mask < (1 << depth); ++mask) {
        Params lambda(depth);
        for (int i = 0; i < depth; ++i) lambda[i] = (mask >> i) & 1 ? eps * (1.0 - 1e-9) : 0.0;
        const Point y = maps.glue(c, x, lambda);
        if (y.chart != x.chart || !sp.contains(y)) {
          why = "collar of " + c.str() + " leaves its chart";
          return false;
        }
        box.lo = box.lo.cwiseMin(y.coords);
        box.hi = box.hi.cwiseMax(y.coords);
      }
      boxes.push_back(std::move(box));
    }
    ++stratum;
  }
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      const auto& a = boxes[i];
      const auto& b = boxes[j];
      if (a.chart != b.chart) continue;
      if (a.stratum == b.stratum && !a.discrete) continue;
      if (((a.lo.array() <= b.hi.array()) && (b.lo.array() <= a.hi.array())).all()) {
        why = "collar images of deepest strata overlap";
        return false;
      }
    }
  return true;
}

} // namespace

struct PairData {
  int depth = 0;
  double epsilon = 0.0;
  bool flat = true;
  std::vector<double> delta; // blend radius by level, entries 1..depth-1 used
};

struct CollarAtlas::Impl {
  std::shared_ptr<const StratifiedFamily> family;
  std::map<PairKey, PairData> pairs;
  std::map<Chain, PreferredChart> charts;

  const PairData& pair(const Chain& c) const {
    auto it = pairs.find({c.head(), c.tail()});
    if (it == pairs.end()) throw InputError("no collars built for pair (" + c.head() + "," + c.tail() + ")");
    return it->second;
  }

  Point evaluate(const Chain& chain, const Point& x, const Params& lambda) const {
    if (chain.length() == 0) return x;
    if (pair(chain).flat) {
      return flat_map(collar_frame(*family, chain, x), x, lambda);
    }
    return charts.at(chain).map(x, lambda);
  }

  std::optional<Preimage> invert(const Chain& chain, const Point& y) const {
    if (chain.length() == 0) {
      const auto& sp = family->space(chain.head(), chain.tail());
      if (!sp.contains(y) || !sp.active_facets(y).empty()) return std::nullopt;
      return Preimage{y, {}};
    }
    if (pair(chain).flat) return flat_inverse(*family, chain, y);
    return charts.at(chain).inverse(y);
  }

  // The deeper chain J' = J + {r} whose collar reaches y with the smallest
  // collar coordinate along r, with the preimage under G_{J'}.
  std::optional<std::tuple<Chain, Preimage, int>> nearest_deeper(const Chain& chain, const Point& y) const {
    std::optional<std::tuple<Chain, Preimage, int>> best;
    double best_t = std::numeric_limits<double>::infinity();
    for (const auto& r : between(family->poset, chain.head(), chain.tail())) {
      auto ids = chain.ids();
      auto it = std::find_if(ids.begin() + 1, ids.end(),
                             [&](const std::string& s) { return family->poset.succ(r, s); });
      if (it == ids.end() || !family->poset.succ(*(it - 1), r)) continue;
      const int slot = static_cast<int>(it - ids.begin()) - 1;
      ids.insert(it, r);
      Chain deeper(std::move(ids));
      auto pre = invert(deeper, y);
      if (!pre) continue;
      const double t = pre->second[slot];
      if (t < best_t) {
        best_t = t;
        best = std::make_tuple(deeper, *pre, slot);
      }
    }
    return best;
  }

  Point blend_base(const Chain& chain, const Point& x, const Params& lambda) const {
    const Point flat = flat_map(collar_frame(*family, chain, x), x, lambda);
    const auto& pd = pair(chain);
    if (chain.length() >= pd.depth) return flat;
    auto near = nearest_deeper(chain, x);
    if (!near) return flat;
    const auto& [deeper, pre, slot] = *near;
    const double w = blend_weight(pre.second[slot], pd.delta[chain.length()]);
    if (w == 0.0) return flat;
    Params full = lambda;
    full.insert(full.begin() + slot, pre.second[slot]);
    const Point deep = evaluate(deeper, pre.first, full);
    if (deep.chart != flat.chart) throw NumericalAbort("deeper collar of " + deeper.str() + " changes chart");
    return {flat.chart, w * deep.coords + (1.0 - w) * flat.coords};
  }

  std::optional<Preimage> invert_blend_base(const Chain& chain, const Point& y) const {
    auto start = flat_inverse(*family, chain, y);
    if (!start) return std::nullopt;
    const auto& sp = family->space(chain.head(), chain.tail());
    const auto frame = collar_frame(*family, chain, start->first);
    const auto free = free_coords(sp.dim(), frame);
    // Parameters whose facet is active at y stay exactly zero.
    std::vector<int> live;
    for (std::size_t i = 0; i < frame.size(); ++i)
      if (start->second[i] > 0.0) live.push_back(static_cast<int>(i));
    const int n = static_cast<int>(free.size() + live.size());
    auto unpack = [&](const Vec& v) {
      Preimage pre = *start;
      for (std::size_t i = 0; i < free.size(); ++i) pre.first.coords[free[i]] = v[i];
      for (std::size_t i = 0; i < live.size(); ++i) pre.second[live[i]] = v[free.size() + i];
      return pre;
    };
    Vec v(n);
    for (std::size_t i = 0; i < free.size(); ++i) v[i] = start->first.coords[free[i]];
    for (std::size_t i = 0; i < live.size(); ++i) v[free.size() + i] = start->second[live[i]];
    auto residual = [&](const Vec& at) {
      const auto pre = unpack(at);
      return Vec(blend_base(chain, pre.first, pre.second).coords - y.coords);
    };
    Vec res = residual(v);
    for (int it = 0; it < 40 && res.norm() > 1e-15; ++it) {
      Mat jac(res.size(), n);
      for (int j = 0; j < n; ++j) {
        const double h = 1e-7;
        Vec a = v, b = v;
        a[j] += h;
        b[j] -= h;
        jac.col(j) = (residual(a) - residual(b)) / (2.0 * h);
      }
      const Vec step = jac.colPivHouseholderQr().solve(res);
      v -= step;
      res = residual(v);
      if (step.norm() < 1e-16) break;
    }
    if (res.norm() > 1e-12) return std::nullopt;
    auto pre = unpack(v);
    for (double t : pre.second)
      if (t < 0.0 || t >= 1.0) return std::nullopt;
    if (!sp.contains(pre.first)) return std::nullopt;
    return pre;
  }

  CollarMaps maps() const {
    return {[this](const Chain& c, const Point& x, const Params& l) { return evaluate(c, x, l); },
            [this](const Chain& c, const Point& y) { return invert(c, y); }};
  }
};

const StratifiedFamily& CollarAtlas::family() const { return *impl_->family; }

double CollarAtlas::epsilon(const std::string& p, const std::string& q) const {
  auto it = impl_->pairs.find({p, q});
  if (it == impl_->pairs.end()) throw InputError("no collars built for pair (" + p + "," + q + ")");
  return it->second.epsilon;
}

bool CollarAtlas::flat(const std::string& p, const std::string& q) const {
  return impl_->pair(Chain({p, q})).flat;
}

Point CollarAtlas::glue(const Chain& chain, const Point& x, const Params& lambda) const {
  if (static_cast<int>(lambda.size()) != chain.length())
    throw InputError("chain " + chain.str() + " takes " + std::to_string(chain.length()) + " parameters");
  const double eps = epsilon(chain);
  for (double t : lambda)
    if (!(t >= 0.0 && t < eps))
      throw RangeError("gluing parameter " + std::to_string(t) + " outside [0, " + std::to_string(eps) + ")");
  if (impl_->family->classify(chain.head(), chain.tail(), x) != chain)
    throw InputError("point is not in the stratum " + chain.str());
  return evaluate(chain, x, lambda);
}

Point CollarAtlas::evaluate(const Chain& chain, const Point& x, const Params& lambda) const {
  return impl_->evaluate(chain, x, lambda);
}

std::optional<Preimage> CollarAtlas::invert(const Chain& chain, const Point& y) const {
  return impl_->invert(chain, y);
}

Mat CollarAtlas::differential(const Chain& chain, const Point& x, const Params& lambda) const {
  const auto& sp = impl_->family->space(chain.head(), chain.tail());
  const auto frame = collar_frame(*impl_->family, chain, x);
  const auto free = free_coords(sp.dim(), frame);
  const int n = static_cast<int>(free.size() + frame.size());
  Mat d = Mat::Zero(sp.dim(), n);
  if (chain.length() == 0 || impl_->pair(chain).flat) {
    for (std::size_t i = 0; i < free.size(); ++i) d(free[i], i) = 1.0;
    for (std::size_t i = 0; i < frame.size(); ++i) d(frame[i].coord, free.size() + i) = inward(frame[i].side);
    return d;
  }
  // Fourth-order central differences on the unchecked evaluator.
  auto eval = [&](int j, double h) {
    Point y = x;
    Params l = lambda;
    if (j < static_cast<int>(free.size())) y.coords[free[j]] += h;
    else l[j - free.size()] += h;
    return Vec(evaluate(chain, y, l).coords);
  };
  const double h = 1e-4;
  for (int j = 0; j < n; ++j)
    d.col(j) = (-eval(j, 2 * h) + 8.0 * eval(j, h) - 8.0 * eval(j, -h) + eval(j, -2 * h)) / (12.0 * h);
  return d;
}

const PreferredChart& CollarAtlas::chart(const Chain& chain) const {
  auto it = impl_->charts.find(chain);
  if (it != impl_->charts.end()) return it->second;
  throw InputError("no preferred chart stored for " + chain.str() + " (flat pair or bare chain)");
}

std::vector<AtlasRecord> CollarAtlas::records() const {
  std::vector<AtlasRecord> out;
  for (const auto& [key, pd] : impl_->pairs)
    for (const auto& c : enumerate_chains(impl_->family->poset, key.first, key.second)) {
      AtlasRecord rec{c, pd.epsilon, "", {}};
      if (c.length() == 0) rec.mode = "identity";
      else if (pd.flat) rec.mode = "flat";
      else {
        const auto& ch = impl_->charts.at(c);
        rec.mode = ch.blended ? "blended" : "normalized";
        rec.corrected_junctions = ch.corrected_junctions;
      }
      out.push_back(std::move(rec));
    }
  return out;
}

CollarMaps CollarAtlas::maps() const {
  auto impl = impl_;
  return {[impl](const Chain& c, const Point& x, const Params& l) { return impl->evaluate(c, x, l); },
          [impl](const Chain& c, const Point& y) { return impl->invert(c, y); }};
}

CollarAtlas build_collars(const StratifiedFamily& family, const CollarOptions& options) {
  const auto report = validate_family(family, options.check_samples, options.seed);
  if (!report.ok) {
    const auto* f = report.first_failure();
    throw InputError("family fails validation: " + f->condition + " at " + f->where + ": " + f->witness);
  }
  CollarAtlas atlas;
  atlas.impl_ = std::make_shared<CollarAtlas::Impl>();
  auto& impl = *atlas.impl_;
  impl.family = std::make_shared<const StratifiedFamily>(family);
  const auto& fam = *impl.family;

  for (const auto& key : fam.pairs_by_length()) {
    const auto& [p, q] = key;
    PairData pd;
    pd.depth = pair_length(fam.poset, p, q);
    pd.flat = carries_flat_frames(fam, p, q);
    double eps = options.epsilon0;
    pd.delta.assign(std::max(pd.depth, 1), 0.0);
    for (int k = 1; k < pd.depth; ++k) pd.delta[k] = options.epsilon0 / 2.0 * std::ldexp(1.0, -(pd.depth - 1 - k));
    if (pd.depth >= 2) eps = std::min(eps, pd.delta[1]);
    for (const auto& r : between(fam.poset, p, q)) {
      const auto& left = impl.pairs.at({p, r});
      const auto& right = impl.pairs.at({r, q});
      pd.flat = pd.flat && left.flat && right.flat;
      eps = std::min({eps, left.epsilon, right.epsilon});
    }
    pd.epsilon = eps;
    impl.pairs[key] = pd;

    if (!pd.flat) {
      auto chains = enumerate_chains(fam.poset, p, q);
      std::stable_sort(chains.begin(), chains.end(),
                       [](const Chain& a, const Chain& b) { return a.length() > b.length(); });
      const CollarMaps shorter = impl.maps();
      const CollarAtlas::Impl* self = &impl;
      for (const auto& c : chains) {
        if (c.length() == 0) continue;
        PreferredChart phi = initial_collar(fam, c);
        if (c.length() < pd.depth) {
          phi.blended = true;
          phi.map = [self, c](const Point& x, const Params& l) { return self->blend_base(c, x, l); };
          phi.inverse = [self, c](const Point& y) { return self->invert_blend_base(c, y); };
        }
        impl.charts[c] = normalize_junctions(fam, std::move(phi), shorter, options.seed);
      }
    }

    if (pd.depth == 0) continue;
    std::string why;
    while (!deepest_images_ok(fam, impl.maps(), p, q, pd.depth, impl.pairs[key].epsilon, options.check_samples,
                              options.seed, why)) {
      impl.pairs[key].epsilon /= 2.0;
      if (impl.pairs[key].epsilon < options.epsilon_floor)
        throw NumericalAbort("epsilon for pair (" + p + "," + q + ") fell below " +
                             std::to_string(options.epsilon_floor) + ": " + why);
    }
  }
  return atlas;
}

Point glue_pair(const CollarAtlas& atlas, const std::string& p, const std::string& r, const std::string& q,
                const Point& gamma1, const Point& gamma2, double lambda) {
  const auto& fam = atlas.family();
  const Chain chain = make_chain(fam.poset, {p, r, q});
  return atlas.glue(chain, fam.embedding(p, r, q).map(gamma1, gamma2), {lambda});
}

} // namespace glue
