#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <unordered_map>

#include <boost/numeric/odeint.hpp>

#include "glue/error.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

namespace {

Vec to_vec(const State& s) { return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())); }

} // namespace

FlowSegment integrate_flow(const MorseSystem& system, const Vec& x0, double t_end,
                           const std::vector<CriticalPointData>& stops, const FlowOptions& options) {
  if (x0.size() != system.state_dim) throw InputError("integrate_flow: wrong state dimension");
  FlowSegment seg;
  seg.t.push_back(0.0);
  seg.x.push_back(x0);
  if (!system.inside(x0)) {
    seg.stop = FlowStop::ExitedDomain;
    return seg;
  }
  if (system.grad_norm(x0) == 0.0) {
    seg.t.push_back(t_end);
    seg.x.push_back(x0);
    seg.stop = FlowStop::Stalled;
    return seg;
  }

  auto rhs = [&](const State& s, State& ds, double) {
    Vec x = to_vec(s);
    Vec g = system.grad(system.project ? system.project(x) : x);
    for (std::size_t i = 0; i < s.size(); ++i) ds[i] = -g[static_cast<Eigen::Index>(i)];
  };

  auto stepper = odeint::make_dense_output(options.atol, options.rtol, odeint::runge_kutta_dopri5<State>());
  State s(x0.data(), x0.data() + x0.size());
  stepper.initialize(s, 0.0, 1e-3);
  double f_prev = system.f(x0);
  State tmp(s.size());
  for (long steps = 0; steps < 2000000; ++steps) {
    auto [ta, tb] = stepper.do_step(rhs);
    Vec xb = to_vec(stepper.current_state());
    if (options.spacing > 0) {
      const double gap = system.distance(seg.x.back(), xb);
      const int m = static_cast<int>(std::ceil(gap / options.spacing));
      for (int k = 1; k < m; ++k) {
        double t = ta + (tb - ta) * k / m;
        stepper.calc_state(t, tmp);
        seg.t.push_back(t);
        seg.x.push_back(to_vec(tmp));
      }
    }
    seg.t.push_back(tb);
    seg.x.push_back(xb);
    const double fb = system.f(system.project ? system.project(xb) : xb);
    seg.max_increase = std::max(seg.max_increase, fb - f_prev);
    f_prev = fb;

    if (!system.inside(xb)) {
      seg.stop = FlowStop::ExitedDomain;
      return seg;
    }
    for (std::size_t i = 0; i < stops.size(); ++i) {
      if (system.distance(xb, stops[i].location) < options.capture) {
        seg.stop = FlowStop::Captured;
        seg.captured_by = static_cast<int>(i);
        return seg;
      }
    }
    if (system.grad_norm(xb) < 1e-14) {
      seg.stop = FlowStop::Stalled;
      return seg;
    }
    if (tb >= t_end) {
      seg.stop = FlowStop::TimeLimit;
      return seg;
    }
  }
  seg.stop = FlowStop::TimeLimit;
  return seg;
}

// Hausdorff distance between polylines, with nested uniform grids over segments.

namespace {

constexpr int kMaxDim = 8;
using Cell = std::array<long, kMaxDim>;

struct Polylines {
  int dim = 0;
  std::vector<double> pts;           // flattened points
  std::vector<std::pair<int, int>> segs; // point indices; a lone point is a degenerate segment
  const double* at(int i) const { return pts.data() + static_cast<std::size_t>(i) * dim; }
  int size() const { return dim ? static_cast<int>(pts.size() / dim) : 0; }
};

Polylines flatten(const MorseSystem& s, const std::vector<const Trajectory*>& ts) {
  Polylines out;
  for (const auto* t : ts) {
    const int first = out.size();
    for (const auto& x : t->x) {
      Vec p = s.position(x);
      out.dim = static_cast<int>(p.size());
      out.pts.insert(out.pts.end(), p.data(), p.data() + p.size());
    }
    const int last = out.size();
    if (last - first == 1) out.segs.emplace_back(first, first);
    for (int i = first; i + 1 < last; ++i) out.segs.emplace_back(i, i + 1);
  }
  return out;
}

std::uint64_t cell_hash(const Cell& c, int dim) {
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 0; i < dim; ++i) h = (h ^ static_cast<std::uint64_t>(c[i])) * 1099511628211ull;
  return h;
}

double segment_distance(const Polylines& lines, const double* p, int id) {
  const double* a = lines.at(lines.segs[id].first);
  const double* b = lines.at(lines.segs[id].second);
  double dd = 0, pd = 0;
  for (int i = 0; i < lines.dim; ++i) {
    dd += (b[i] - a[i]) * (b[i] - a[i]);
    pd += (p[i] - a[i]) * (b[i] - a[i]);
  }
  const double t = dd > 0 ? std::clamp(pd / dd, 0.0, 1.0) : 0.0;
  double r = 0;
  for (int i = 0; i < lines.dim; ++i) {
    double d = a[i] + t * (b[i] - a[i]) - p[i];
    r += d * d;
  }
  return std::sqrt(r);
}

struct SegmentGrid {
  struct Level {
    double cell;
    std::unordered_map<std::uint64_t, std::vector<int>> cells; // hash collisions only add candidates
  };
  const Polylines& lines;
  std::vector<Level> levels;

  SegmentGrid(const Polylines& l, double extent) : lines(l) {
    for (double c = 0.01;; c *= 4) {
      levels.push_back({c, {}});
      if (c > extent) break;
    }
    for (int id = 0; id < static_cast<int>(lines.segs.size()); ++id) {
      const double* a = lines.at(lines.segs[id].first);
      const double* b = lines.at(lines.segs[id].second);
      for (auto& lv : levels) {
        Cell lo{}, hi{}, k{};
        for (int i = 0; i < lines.dim; ++i) {
          lo[i] = static_cast<long>(std::floor(std::min(a[i], b[i]) / lv.cell));
          hi[i] = static_cast<long>(std::floor(std::max(a[i], b[i]) / lv.cell));
        }
        k = lo;
        for (;;) {
          auto& v = lv.cells[cell_hash(k, lines.dim)];
          if (v.empty() || v.back() != id) v.push_back(id);
          int i = 0;
          while (i < lines.dim && ++k[i] > hi[i]) k[i] = lo[i], ++i;
          if (i == lines.dim) break;
        }
      }
    }
  }

  double seg_dist(const double* p, int id) const { return segment_distance(lines, p, id); }

  // Distance to the nearest segment, or any value <= cutoff once one is
  // known to be that close.  Finer levels first; a ring of radius r at a
  // level is conclusive once the best distance is within r cells.
  double nearest(const double* p, double cutoff) const {
    const int dim = lines.dim;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& lv : levels) {
      Cell c{};
      for (int i = 0; i < dim; ++i) c[i] = static_cast<long>(std::floor(p[i] / lv.cell));
      for (int r = 0; r <= 2; ++r) {
        Cell off{};
        for (int i = 0; i < dim; ++i) off[i] = -r;
        for (;;) {
          long m = 0;
          for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(off[i]));
          if (m == r) {
            Cell k{};
            for (int i = 0; i < dim; ++i) k[i] = c[i] + off[i];
            auto it = lv.cells.find(cell_hash(k, dim));
            if (it != lv.cells.end())
              for (int id : it->second) {
                best = std::min(best, seg_dist(p, id));
                if (best <= cutoff) return best;
              }
          }
          int i = 0;
          while (i < dim && ++off[i] > r) off[i] = -r, ++i;
          if (i == dim) break;
        }
        if (best <= r * lv.cell) return best;
      }
    }
    for (int id = 0; id < static_cast<int>(lines.segs.size()); ++id) {
      best = std::min(best, seg_dist(p, id));
      if (best <= cutoff) return best;
    }
    return best;
  }
};

double one_sided(const Polylines& from, const Polylines& to, double extent) {
  std::optional<SegmentGrid> grid;
  const int n = from.size(), m = static_cast<int>(to.segs.size());
  auto dist = [&](const double* p, int id) { return segment_distance(to, p, id); };
  // Upper bounds from walking along `to` in step with `from`: the nearest
  // segment of a point is usually next to that of the previous point.
  std::vector<double> ub(static_cast<std::size_t>(n));
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double* p = from.at(i);
    if (i == 0) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k)
        if (double d = dist(p, k); d < best) best = d, j = k;
    }
    constexpr int kWindow = 6;
    double best = dist(p, j);
    for (int moved = 1; moved;) {
      moved = 0;
      const int lo = std::max(0, j - kWindow), hi = std::min(m - 1, j + kWindow);
      int at = j;
      for (int k = lo; k <= hi; ++k)
        if (double d = dist(p, k); d < best) best = d, at = k;
      if (at != j && (at == lo || at == hi)) moved = 1;
      j = at;
    }
    ub[static_cast<std::size_t>(i)] = best;
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  // a fixed shuffle makes the running maximum grow early, so few points need the grid
  std::mt19937_64 rng(12345);
  std::shuffle(order.begin(), order.end(), rng);
  double worst = 0.0;
  int scans = 0;
  for (int i : order) {
    const double bound = ub[static_cast<std::size_t>(i)];
    if (bound <= worst) continue;
    const double* p = from.at(i);
    double d = bound;
    if (++scans <= 64) {
      // a plain scan is cheaper than building the grid for a few points
      for (int k = 0; k < m && d > worst; ++k) d = std::min(d, dist(p, k));
    } else {
      if (!grid) grid.emplace(to, extent);
      d = std::min(bound, grid->nearest(p, worst));
    }
    worst = std::max(worst, d);
  }
  return worst;
}

} // namespace

double hausdorff(const MorseSystem& system, const std::vector<const Trajectory*>& a,
                 const std::vector<const Trajectory*>& b) {
  if (a.empty() || b.empty()) throw InputError("hausdorff: empty image");
  Polylines pa = flatten(system, a), pb = flatten(system, b);
  if (pa.dim != pb.dim || pa.size() == 0 || pb.size() == 0) throw InputError("hausdorff: empty image");
  if (pa.dim > kMaxDim) throw Unsupported("hausdorff: position dimension above 8");
  double extent = 0;
  for (int i = 0; i < pa.dim; ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* l : {&pa, &pb})
      for (int k = 0; k < l->size(); ++k) lo = std::min(lo, l->at(k)[i]), hi = std::max(hi, l->at(k)[i]);
    extent = std::max(extent, hi - lo);
  }
  return std::max(one_sided(pa, pb, extent), one_sided(pb, pa, extent));
}

} // namespace glue
