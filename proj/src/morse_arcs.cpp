#include <algorithm>
#include <cmath>
#include <numbers>

#include "glue/error.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kFinestOffset = 1e-11;
constexpr double kOffsetRatio = 0.8408964152537145; // 2^(-1/4)

// Crossing of the level c along a sampled trajectory, linear between samples.
std::optional<Vec> crossing(const MorseSystem& sys, const Trajectory& t, double c) {
  for (std::size_t k = 0; k + 1 < t.x.size(); ++k) {
    double fa = sys.f(t.x[k]), fb = sys.f(t.x[k + 1]);
    if (fa >= c && fb <= c && fa > fb) {
      double s = (fa - c) / (fa - fb);
      return Vec(t.x[k] + s * (t.x[k + 1] - t.x[k]));
    }
  }
  return std::nullopt;
}

Trajectory concatenate(const Trajectory& a, const Trajectory& b, const Vec& anchor) {
  Trajectory t;
  t.source = a.source;
  t.target = b.target;
  t.x = a.x;
  t.t = a.t;
  // shift the second piece into the lift where the first one ends
  Vec shift = a.x.back() - b.x.front();
  double last = a.t.empty() ? 0.0 : a.t.back();
  double first = b.t.empty() ? 0.0 : b.t.front();
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    t.x.push_back(b.x[i] + shift);
    t.t.push_back(last + (b.t[i] - first));
  }
  t.anchor = anchor;
  return t;
}

// Shift a periodic path so that its first point matches `origin` up to whole periods.
Trajectory relift(const MorseSystem& sys, Trajectory t, const Vec& origin) {
  if (t.x.empty()) return t;
  Vec shift = Vec::Zero(sys.state_dim);
  for (int i = 0; i < sys.state_dim && i < static_cast<int>(sys.period.size()); ++i)
    if (sys.period[i] > 0) shift[i] = sys.period[i] * std::round((origin[i] - t.x.front()[i]) / sys.period[i]);
  for (auto& x : t.x) x += shift;
  if (t.anchor.size()) t.anchor += shift;
  return t;
}

// Every k-th sample, ends kept; enough to tell far-apart images apart.
Trajectory thin(const Trajectory& t, std::size_t max_points) {
  if (t.x.size() <= max_points) return t;
  Trajectory out = t;
  out.x.clear();
  out.t.clear();
  const std::size_t k = (t.x.size() + max_points - 1) / max_points;
  for (std::size_t i = 0; i < t.x.size(); i += k) out.x.push_back(t.x[i]), out.t.push_back(t.t[i]);
  if (out.x.size() && (t.x.size() - 1) % k) out.x.push_back(t.x.back()), out.t.push_back(t.t.back());
  return out;
}

} // namespace

const std::vector<ModuliArc>& MorseModel::detect_broken(const std::string& p, const std::string& q) {
  auto cached = arcs_.find({p, q});
  if (cached != arcs_.end()) return cached->second;
  const auto& cp = critical(p);
  const auto& cq = critical(q);
  if (cp.index - cq.index - 1 != 1) throw InputError("detect_broken: M(" + p + "," + q + ") is not one-dimensional");
  if (cp.index != 2) throw Unsupported("detect_broken: arcs from a source of index " + std::to_string(cp.index));
  const double level = 0.5 * (cp.value + cq.value);

  struct Sep {
    double shot;
    std::string via;
    int first;
  };
  std::vector<Sep> seps;
  for (const auto& r : critical_) {
    if (r.index != cp.index - 1 || r.value >= cp.value || r.value <= cq.value) continue;
    const auto& m = moduli(p, r.id);
    for (int i = 0; i < static_cast<int>(m.trajectories.size()); ++i)
      seps.push_back({m.trajectories[i].shot, r.id, i});
  }
  std::sort(seps.begin(), seps.end(), [](const Sep& a, const Sep& b) { return a.shot < b.shot; });

  auto anchor_pos = [&](const Vec& a) { return system_.position(a); };
  std::vector<ModuliArc> arcs;

  if (seps.empty()) {
    // a whole circle of trajectories, or nothing
    const int n = options_.resolution;
    const bool chords = options_.arc_metric == ArcMetric::Anchor;
    std::vector<Trajectory> ts;
    for (int i = 0; i < n; ++i) {
      auto t = shoot(p, kTwoPi * (i + 0.5) / n, 0, chords ? 0.0 : options_.spacing);
      if (!t || t->target != q) {
        ts.clear();
        break;
      }
      ts.push_back(std::move(*t));
    }
    if (!ts.empty()) {
      ModuliArc arc;
      arc.circle = true;
      arc.lo = 0.0;
      arc.hi = kTwoPi;
      for (int i = 0; i < n; ++i) {
        const auto& a = ts[i];
        const auto& b = ts[(i + 1) % n];
        arc.length += chords ? (anchor_pos(a.anchor) - anchor_pos(b.anchor)).norm() : hausdorff(system_, {&a}, {&b});
      }
      arcs.push_back(arc);
    }
    return arcs_[{p, q}] = arcs;
  }

  auto make_end = [&](const Sep& s, int side, double half) {
    BrokenEnd e;
    e.shot = s.shot;
    e.via = s.via;
    e.first = s.first;
    e.side = side;
    const auto& g1 = moduli(p, s.via).trajectories.at(s.first);
    const auto& m2 = moduli(s.via, q).trajectories;
    if (m2.empty()) throw InputError("detect_broken: no trajectory from " + s.via + " to " + q);

    for (double d = half; d >= kFinestOffset; d *= kOffsetRatio) {
      auto t = shoot(p, s.shot + side * d);
      if (!t || t->target != q) break;
      e.offset.push_back(d);
      e.anchor.push_back(t->anchor);
    }
    if (e.offset.empty()) throw NumericalAbort("detect_broken: no shot near " + s.via + " lands in " + q);

    // which trajectory out of the saddle the arc follows near this end
    auto near = shoot(p, s.shot + side * e.offset.back(), 0, options_.spacing);
    if (!near) throw NumericalAbort("detect_broken: shot near " + s.via + " not captured");
    {
      const Trajectory tn = thin(*near, 400), t1 = thin(g1, 400);
      double best = std::numeric_limits<double>::infinity();
      for (int b = 0; b < static_cast<int>(m2.size()); ++b) {
        const Trajectory t2 = thin(relift(system_, m2[b], g1.x.back()), 400);
        double h = hausdorff(system_, {&tn}, {&t1, &t2});
        if (h < best) best = h, e.second = b;
      }
    }
    Trajectory g2 = relift(system_, m2[e.second], g1.x.back());
    e.hausdorff = hausdorff(system_, {&*near}, {&g1, &g2});
    auto cross = crossing(system_, cp.value > level && critical(s.via).value < level ? g1 : g2, level);
    if (!cross) cross = crossing(system_, g1, level);
    if (!cross) throw NumericalAbort("detect_broken: broken pair misses the mid level");
    e.broken_anchor = *cross;

    const std::size_t n = e.offset.size();
    e.anchor_length.assign(n, 0.0);
    e.anchor_length[n - 1] = (anchor_pos(e.anchor[n - 1]) - anchor_pos(e.broken_anchor)).norm();
    for (std::size_t j = n - 1; j-- > 0;)
      e.anchor_length[j] = e.anchor_length[j + 1] + (anchor_pos(e.anchor[j]) - anchor_pos(e.anchor[j + 1])).norm();
    const bool chords = options_.arc_metric == ArcMetric::Anchor;
    if (chords) e.length = e.anchor_length;
    else e.length.assign(n, 0.0);

    // From the end outwards: dense images, their Hausdorff steps, and the
    // Hausdorff series to the broken image from 1e-1 down.
    Trajectory prev;
    for (std::size_t j = n; j-- > 0;) {
      const bool sample = (n - 1 - j) % 4 == 0 && e.length[j] <= 0.2;
      if (chords && !sample) continue;
      auto t = shoot(p, s.shot + side * e.offset[j], 0, options_.spacing);
      if (!t) throw NumericalAbort("detect_broken: table shot not captured");
      double to_broken = -1.0;
      if (!chords) {
        if (j == n - 1) e.length[j] = to_broken = e.hausdorff;
        else e.length[j] = e.length[j + 1] + hausdorff(system_, {&*t}, {&prev});
      }
      if ((n - 1 - j) % 4 == 0 && e.length[j] <= 0.2) {
        if (to_broken < 0) to_broken = hausdorff(system_, {&*t}, {&g1, &g2});
        e.series.emplace_back(e.length[j], to_broken);
      }
      prev = std::move(*t);
    }
    std::reverse(e.series.begin(), e.series.end());
    return e;
  };

  const int n = static_cast<int>(seps.size());
  for (int k = 0; k < n; ++k) {
    const Sep& a = seps[k];
    const Sep& b = seps[(k + 1) % n];
    double lo = a.shot, hi = b.shot;
    if (k + 1 == n) hi += kTwoPi;
    if (hi - lo < 1e-12) continue;
    auto mid = shoot(p, 0.5 * (lo + hi));
    if (!mid || mid->target != q) continue;
    ModuliArc arc;
    arc.lo = lo;
    arc.hi = hi;
    const double half = 0.5 * (hi - lo);
    arc.ends.push_back(make_end(a, +1, half));
    arc.ends.push_back(make_end(b, -1, half));
    // both tables start at the midpoint
    arc.length = arc.ends[0].length.front() + arc.ends[1].length.front();
    arcs.push_back(std::move(arc));
  }
  return arcs_[{p, q}] = arcs;
}

Trajectory MorseModel::glue(const std::string& p, const std::string& r, const std::string& q, int first, int second,
                            double lambda) {
  if (!(lambda >= 0.0)) throw RangeError("glue: lambda must be >= 0");
  const auto& arcs = detect_broken(p, q);
  const ModuliArc* arc = nullptr;
  int which = -1;
  for (const auto& a : arcs)
    for (int e = 0; e < static_cast<int>(a.ends.size()); ++e)
      if (a.ends[e].via == r && a.ends[e].first == first && a.ends[e].second == second) arc = &a, which = e;
  if (!arc) throw InputError("glue: (" + r + " #" + std::to_string(first) + ", #" + std::to_string(second) +
                             ") is not an end of M(" + p + "," + q + ")");
  const BrokenEnd& end = arc->ends[which];
  const auto& g1 = moduli(p, r).trajectories.at(first);
  Trajectory g2 = relift(system_, moduli(r, q).trajectories.at(second), g1.x.back());
  if (lambda == 0.0) return concatenate(g1, g2, end.broken_anchor);
  if (lambda >= arc->length)
    throw RangeError("glue: lambda " + std::to_string(lambda) + " beyond the arc length " + std::to_string(arc->length));

  const BrokenEnd* e = &end;
  double target = lambda;
  if (lambda > end.length.front()) {
    e = &arc->ends[1 - which];
    target = arc->length - lambda;
  }
  auto pos = [&](const Vec& a) { return system_.position(a); };
  const bool chords = options_.arc_metric == ArcMetric::Anchor;
  const std::size_t n = e->offset.size();
  const auto& eg1 = moduli(p, e->via).trajectories.at(e->first);
  const Trajectory eg2 = relift(system_, moduli(e->via, q).trajectories.at(e->second), eg1.x.back());
  // L(d) between two table entries: the finer entry's length plus the
  // distance to it (to the broken image past the finest entry)
  double d_lo, d_hi, base;
  std::size_t j = 0;
  while (j < n && e->length[j] > target) ++j;
  if (j == n) {
    d_lo = 0.0;
    d_hi = e->offset[n - 1];
    base = 0.0;
  } else if (j == 0) {
    d_lo = d_hi = e->offset[0];
    base = e->length[0];
  } else {
    d_lo = e->offset[j];
    d_hi = e->offset[j - 1];
    base = e->length[j];
  }
  const double spacing = chords ? 0.0 : options_.spacing;
  std::optional<Trajectory> ref;
  if (j < n) ref = shoot(p, e->shot + e->side * e->offset[j], 0, spacing);
  if (j < n && !ref) throw NumericalAbort("glue: table shot not captured");
  const Vec base_anchor = j < n ? ref->anchor : e->broken_anchor;
  auto length_at = [&](double d) {
    auto t = shoot(p, e->shot + e->side * d, 0, spacing);
    if (!t || t->target != q) throw NumericalAbort("glue: shot left M(" + p + "," + q + ")");
    if (chords) return base + (pos(t->anchor) - pos(base_anchor)).norm();
    return base + (j < n ? hausdorff(system_, {&*t}, {&*ref}) : hausdorff(system_, {&*t}, {&eg1, &eg2}));
  };
  double d = 0.5 * (d_lo + d_hi);
  for (int it = 0; it < 60 && d_hi - d_lo > 1e-15; ++it) {
    d = 0.5 * (d_lo + d_hi);
    const double l = length_at(d);
    if (std::abs(l - target) <= 1e-6 * target) break;
    (l < target ? d_lo : d_hi) = d;
    d = 0.5 * (d_lo + d_hi);
  }
  auto t = shoot(p, e->shot + e->side * d, 0, options_.spacing);
  if (!t) throw NumericalAbort("glue: final shot not captured");
  return *t;
}

TransversalityReport MorseModel::check_transversality(const std::string& p, const std::string& q) {
  TransversalityReport rep;
  rep.p = p;
  rep.q = q;
  const auto& cp = critical(p);
  const auto& cq = critical(q);
  rep.expected_dim = cp.index - cq.index;
  const auto& m = moduli(p, q);
  if (m.trajectories.empty()) {
    rep.passed = true;
    rep.confidence = rep.expected_dim <= 0 ? "no trajectories, none expected" : "no trajectories";
    return rep;
  }
  const int n = system_.state_dim;
  auto jac = [&](const Vec& x) {
    Mat j(n, n);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      Vec a = x, b = x;
      a[i] += h;
      b[i] -= h;
      j.col(i) = -(system_.grad(a) - system_.grad(b)) / (2 * h);
    }
    return j;
  };
  // Linearized flow V' = J(x(t)) V along the sampled path, re-orthonormalized.
  auto carry = [&](const Trajectory& t, Mat v, std::size_t from, std::size_t to) {
    const int dir = to >= from ? 1 : -1;
    for (std::size_t k = from; k != to; k += dir) {
      double dt = t.t[k + dir] - t.t[k];
      if (!std::isfinite(dt)) continue;
      const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(dt) / 0.01)));
      const double h = dt / sub;
      for (int s = 0; s < sub; ++s) {
        double w0 = double(s) / sub, w1 = double(s + 1) / sub;
        Mat j0 = jac(t.x[k] + w0 * (t.x[k + dir] - t.x[k]));
        Mat j1 = jac(t.x[k] + w1 * (t.x[k + dir] - t.x[k]));
        Mat jm = 0.5 * (j0 + j1);
        Mat k1 = j0 * v, k2 = jm * (v + 0.5 * h * k1), k3 = jm * (v + 0.5 * h * k2), k4 = j1 * (v + h * k3);
        v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      if (v.cols()) v = Eigen::HouseholderQR<Mat>(v).householderQ() * Mat::Identity(n, v.cols());
    }
    return v;
  };
  auto rank = [](const Mat& a, double& smin) {
    if (a.cols() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(a);
    const Vec s = svd.singularValues();
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
      if (s[i] > 1e-6 * s[0]) ++r;
    if (r > 0) smin = std::min(smin, s[r - 1] / s[0]);
    return r;
  };
  rep.min_singular_value = 1.0;
  const std::size_t step = std::max<std::size_t>(1, m.trajectories.size() / 8);
  for (std::size_t i = 0; i < m.trajectories.size(); i += step) {
    const Trajectory& t = m.trajectories[i];
    std::size_t a = 0;
    while (a < t.t.size() && t.t[a] < 0.0) ++a;
    if (a >= t.t.size()) continue;
    // start just off the critical points, where the eigen-directions are accurate
    std::size_t s0 = 1, s1 = t.x.size() - 2;
    Mat bt = system_.tangent_at(t.x[a]);
    Mat td = carry(t, cp.unstable, s0, a);
    Mat ta = carry(t, cq.stable, s1, a);
    // tangent coordinates at the anchor
    Mat gd = bt.transpose() * td, ga = bt.transpose() * ta;
    double smin = 1.0;
    const int rd = rank(gd, smin), ra = rank(ga, smin);
    Mat both(system_.dim, gd.cols() + ga.cols());
    both << gd, ga;
    const int rs = rank(both, smin);
    rep.min_singular_value = std::min(rep.min_singular_value, smin);
    const int observed = rd + ra - rs;
    rep.observed_dims.push_back(observed);
    if (rs != system_.dim || observed != rep.expected_dim) rep.passed = false;
  }
  rep.confidence = "linearized flow at anchors of " + std::to_string(rep.observed_dims.size()) + " trajectories";
  return rep;
}

} // namespace glue
