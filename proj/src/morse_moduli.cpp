#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <boost/numeric/odeint.hpp>

#include "glue/error.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kBisectWidth = 2e-12;
constexpr double kNearPass = 0.05;

using State = std::vector<double>;

Vec to_vec(const State& s) { return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())); }

// x(tau) from x by the flow, tau >= 0.
Vec advance(const MorseSystem& sys, const Vec& x, double tau, const FlowOptions& o) {
  if (tau <= 0) return x;
  auto rhs = [&](const State& s, State& ds, double) {
    Vec y = to_vec(s);
    Vec g = sys.grad(sys.project ? sys.project(y) : y);
    for (std::size_t i = 0; i < s.size(); ++i) ds[i] = -g[static_cast<Eigen::Index>(i)];
  };
  State s(x.data(), x.data() + x.size());
  odeint::integrate_adaptive(odeint::make_controlled(o.atol, o.rtol, odeint::runge_kutta_dopri5<State>()), rhs, s,
                             0.0, tau, std::min(tau, 1e-2));
  return to_vec(s);
}

// First crossing of the level c after sample k0, refined by Newton in time.
std::optional<std::pair<int, std::pair<double, Vec>>> level_crossing(const MorseSystem& sys,
                                                                     const std::vector<double>& t,
                                                                     const std::vector<Vec>& x, double c,
                                                                     const FlowOptions& o) {
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    double fa = sys.f(x[k]), fb = sys.f(x[k + 1]);
    if (!(fa > c && fb <= c)) continue;
    double tau = (fa - c) / std::max(1e-300, std::pow(sys.grad_norm(x[k]), 2));
    const double span = t[k + 1] - t[k];
    if (!std::isfinite(span)) return std::nullopt;
    tau = std::clamp(tau, 0.0, span);
    Vec y = x[k];
    for (int it = 0; it < 40; ++it) {
      y = advance(sys, x[k], tau, o);
      double r = sys.f(y) - c;
      double g2 = std::pow(sys.grad_norm(y), 2);
      if (std::abs(r) < 1e-15 || g2 == 0) break;
      double step = r / g2;
      tau = std::clamp(tau + step, 0.0, span);
      if (std::abs(step) < 1e-15 * std::max(1.0, tau)) break;
    }
    return std::make_pair(static_cast<int>(k), std::make_pair(t[k] + tau, y));
  }
  return std::nullopt;
}

double slowest(const Vec& rates) { return rates.size() ? rates.minCoeff() : 1.0; }

} // namespace

// A shot's landing class: where it was captured, with which winding, and on
// which side it passed the saddles it came close to.
struct ShotClass {
  int target = -1;
  FlowStop stop = FlowStop::TimeLimit;
  std::vector<long> lift;
  std::vector<std::pair<int, int>> passes;
  friend bool operator==(const ShotClass&, const ShotClass&) = default;
};

struct MorseModel::Sweep {
  std::string p;
  int kind = 0; // 1: two branches, 2: shooting circle
  std::vector<double> shots;
  std::vector<ShotClass> classes;
  struct Separatrix {
    double shot = 0.0;
    int via = -1;
    Trajectory gamma;
  };
  std::vector<Separatrix> separatrices;
  std::vector<ShotBracket> unresolved;
};

namespace {

struct Shooter {
  const MorseSystem& sys;
  const std::vector<CriticalPointData>& crit;
  const MorseOptions& opt;
  int source;

  // Sweeps stop only at sinks: a capture zone around a saddle would show up
  // as a class of its own with two spurious edges.
  std::vector<int> stop_ids(bool sinks_only) const {
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(crit.size()); ++i)
      if (i != source && (!sinks_only || crit[i].index == 0)) ids.push_back(i);
    return ids;
  }

  Vec start(double shot, int branch) const {
    const auto& c = crit[source];
    Vec d;
    if (c.index == 1) d = branch >= 0 ? Vec(c.unstable.col(0)) : Vec(-c.unstable.col(0));
    else d = std::cos(shot) * c.unstable.col(0) + std::sin(shot) * c.unstable.col(1);
    Vec x = c.location + radius() * d;
    return sys.project ? sys.project(x) : x;
  }

  // Near a source every point lies on the unstable manifold, so a wider
  // circle costs nothing and keeps the shooting angle well resolved.
  double radius() const { return crit[source].index == sys.dim ? opt.source_radius : opt.start_radius; }

  FlowSegment run(double shot, int branch, double spacing, bool sinks_only = false) const {
    FlowOptions o = opt.flow;
    o.spacing = spacing;
    auto ids = stop_ids(sinks_only);
    std::vector<CriticalPointData> stops;
    for (int i : ids) stops.push_back(crit[i]);
    auto seg = integrate_flow(sys, start(shot, branch), o.max_time, stops, o);
    if (seg.captured_by >= 0) seg.captured_by = ids[seg.captured_by];
    return seg;
  }

  ShotClass classify(const FlowSegment& seg) const {
    ShotClass k;
    k.stop = seg.stop;
    k.target = seg.captured_by;
    if (k.target >= 0) {
      const Vec& end = seg.x.back();
      for (int i = 0; i < sys.state_dim; ++i) {
        double per = i < static_cast<int>(sys.period.size()) ? sys.period[i] : 0.0;
        k.lift.push_back(per > 0 ? std::lround((end[i] - crit[k.target].location[i]) / per) : 0);
      }
    }
    std::vector<std::tuple<std::size_t, int, int>> ps;
    for (int s = 0; s < static_cast<int>(crit.size()); ++s) {
      const auto& c = crit[s];
      if (s == source || c.index == 0 || c.index >= crit[source].index) continue;
      double best = std::numeric_limits<double>::infinity();
      std::size_t at = 0;
      for (std::size_t j = 0; j < seg.x.size(); ++j) {
        double d = sys.distance(seg.x[j], c.location);
        if (d < best) best = d, at = j;
      }
      if (best < kNearPass && s != k.target) {
        Vec dx = seg.x[at] - c.location;
        for (int i = 0; i < sys.state_dim; ++i) {
          double per = i < static_cast<int>(sys.period.size()) ? sys.period[i] : 0.0;
          if (per > 0) dx[i] -= per * std::round(dx[i] / per);
        }
        double side = dx.dot(sys.metric_at(c.location) * c.unstable.col(0));
        ps.emplace_back(at, s, side >= 0 ? 1 : -1);
      }
    }
    std::sort(ps.begin(), ps.end());
    for (auto& [at, s, side] : ps) k.passes.emplace_back(s, side);
    return k;
  }

  // closest approach of a segment to critical point s
  std::pair<double, std::size_t> closest(const FlowSegment& seg, int s) const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t j = 0; j < seg.x.size(); ++j) {
      double d = sys.distance(seg.x[j], crit[s].location);
      if (d < best) best = d, at = j;
    }
    return {best, at};
  }
};

} // namespace

MorseModel::MorseModel(MorseSystem system, MorseOptions options)
    : system_(std::move(system)), options_(options) {
  critical_ = find_critical_points(system_, {}, options_.grid);
}

const CriticalPointData& MorseModel::critical(const std::string& id) const {
  return critical_.at(static_cast<std::size_t>(critical_slot(id)));
}

int MorseModel::critical_slot(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(critical_.size()); ++i)
    if (critical_[i].id == id) return i;
  throw InputError("unknown critical point '" + id + "'");
}

Trajectory MorseModel::anchored(const std::string& p, const std::string& q, FlowSegment seg, double shot,
                                int branch) const {
  const auto& cp = critical(p);
  const auto& cq = critical(q);
  Trajectory tr;
  tr.source = p;
  tr.target = q;
  tr.shot = shot;
  tr.branch = branch;
  const double level = 0.5 * (cp.value + cq.value);
  auto hit = level_crossing(system_, seg.t, seg.x, level, options_.flow);
  if (!hit) throw NumericalAbort("trajectory " + p + " -> " + q + " never crosses its mid level");
  const auto [k, ta] = *hit;
  const double t0 = ta.first;
  tr.anchor = ta.second;
  // linearized asymptotics: the remaining distance decays like exp(-rate t)
  const double d0 = system_.distance(seg.x.front(), cp.location);
  tr.t.push_back(seg.t.front() - std::log(std::max(d0, 1e-12) / 1e-12) / slowest(cp.unstable_rates) - t0);
  tr.x.push_back(cp.location);
  if (d0 > 1e-8 && cp.index > 0) {
    // x(t) = p + sum c_i exp(rate_i t) u_i backwards from the start point
    const Mat& u = cp.unstable;
    Vec dx = seg.x.front() - cp.location;
    Vec c = (u.transpose() * system_.metric_at(cp.location) * u).ldlt().solve(u.transpose() * system_.metric_at(cp.location) * dx);
    for (double s = -std::log(d0 / 1e-9) / slowest(cp.unstable_rates); s < -1e-9; s *= 0.9) {
      Vec y = cp.location;
      for (int i = 0; i < u.cols(); ++i) y += c[i] * std::exp(cp.unstable_rates[i] * s) * u.col(i);
      tr.t.push_back(seg.t.front() + s - t0);
      tr.x.push_back(system_.project ? system_.project(y) : y);
    }
  }
  for (int j = 0; j <= k; ++j) {
    tr.t.push_back(seg.t[j] - t0);
    tr.x.push_back(seg.x[j]);
  }
  tr.t.push_back(0.0);
  tr.x.push_back(tr.anchor);
  for (std::size_t j = static_cast<std::size_t>(k) + 1; j < seg.x.size(); ++j) {
    if (seg.t[j] - t0 <= 0.0) continue;
    tr.t.push_back(seg.t[j] - t0);
    tr.x.push_back(seg.x[j]);
  }
  // a separatrix cut near a saddle may already have slipped below it
  while (tr.x.size() > 2 && tr.t.back() > 0.0 && system_.f(tr.x.back()) < cq.value) {
    tr.x.pop_back();
    tr.t.pop_back();
  }
  const double d1 = system_.distance(tr.x.back(), cq.location);
  tr.t.push_back(tr.t.back() + std::log(std::max(d1, 1e-12) / 1e-12) / slowest(cq.stable_rates));
  // keep the endpoint in the same lift as the path
  Vec end = cq.location;
  for (int i = 0; i < system_.state_dim && i < static_cast<int>(system_.period.size()); ++i)
    if (system_.period[i] > 0)
      end[i] += system_.period[i] * std::round((tr.x.back()[i] - end[i]) / system_.period[i]);
  tr.x.push_back(end);
  return tr;
}

std::optional<Trajectory> MorseModel::shoot(const std::string& p, double shot, int branch, double spacing) const {
  const int src = critical_slot(p);
  if (critical_[src].index == 0) return std::nullopt;
  if (critical_[src].index > 2) throw Unsupported("shooting from a source of index > 2");
  Shooter sh{system_, critical_, options_, src};
  auto seg = sh.run(shot, branch, spacing);
  if (seg.stop != FlowStop::Captured) return std::nullopt;
  return anchored(p, critical_[seg.captured_by].id, std::move(seg), shot, branch);
}

const MorseModel::Sweep& MorseModel::sweep(const std::string& p) {
  auto it = sweeps_.find(p);
  if (it != sweeps_.end()) return *it->second;
  const int src = critical_slot(p);
  const auto& cp = critical_[src];
  auto sw = std::make_shared<Sweep>();
  sw->p = p;
  Shooter sh{system_, critical_, options_, src};
  if (cp.index == 0) {
    sw->kind = 0;
  } else if (cp.index == 1) {
    sw->kind = 1;
    for (int branch : {1, -1}) {
      auto seg = sh.run(0.0, branch, 0.0);
      sw->shots.push_back(branch);
      sw->classes.push_back(sh.classify(seg));
      if (seg.stop != FlowStop::Captured)
        sw->unresolved.push_back({double(branch), double(branch), "branch not captured"});
    }
  } else if (cp.index == 2) {
    sw->kind = 2;
    const int n = options_.resolution;
    for (int i = 0; i < n; ++i) {
      double a = kTwoPi * (i + 0.5) / n;
      sw->shots.push_back(a);
      sw->classes.push_back(sh.classify(sh.run(a, 0, 0.0, true)));
    }
    // bisection on every class change, cyclically
    struct Work {
      double lo, hi;
      ShotClass klo, khi;
    };
    std::vector<Work> stack;
    for (int i = 0; i < n; ++i) {
      int j = (i + 1) % n;
      if (!(sw->classes[i] == sw->classes[j]))
        stack.push_back({sw->shots[i], sw->shots[i] + kTwoPi / n, sw->classes[i], sw->classes[j]});
    }
    std::vector<std::pair<double, double>> brackets;
    while (!stack.empty()) {
      Work w = stack.back();
      stack.pop_back();
      if (w.hi - w.lo < kBisectWidth) {
        brackets.emplace_back(w.lo, w.hi);
        continue;
      }
      double mid = 0.5 * (w.lo + w.hi);
      ShotClass km = sh.classify(sh.run(mid, 0, 0.0, true));
      if (!(km == w.klo)) stack.push_back({w.lo, mid, w.klo, km});
      if (!(km == w.khi)) stack.push_back({mid, w.hi, km, w.khi});
    }
    for (auto [lo, hi] : brackets) {
      double mid = 0.5 * (lo + hi);
      auto slo = sh.run(lo, 0, 0.0, true), shi = sh.run(hi, 0, 0.0, true);
      int via = -1;
      double best = 1e-3;
      for (int s = 0; s < static_cast<int>(critical_.size()); ++s) {
        if (s == src || critical_[s].index == 0 || critical_[s].index >= cp.index) continue;
        double d = std::max(sh.closest(slo, s).first, sh.closest(shi, s).first);
        if (d < best) best = d, via = s;
      }
      if (via < 0) {
        // near-pass boundaries without a saddle in between are not separatrices
        ShotClass a = sh.classify(slo), b = sh.classify(shi);
        if (a.target != b.target || a.lift != b.lift)
          sw->unresolved.push_back({lo, hi, "class change without a saddle connection"});
        continue;
      }
      // the separatrix itself, cut at its closest approach to the saddle
      auto seg = sh.run(mid, 0, options_.spacing);
      const std::size_t at = sh.closest(seg, via).second;
      if (!(seg.stop == FlowStop::Captured && seg.captured_by == via)) {
        seg.t.resize(at + 1);
        seg.x.resize(at + 1);
        seg.stop = FlowStop::Captured;
        seg.captured_by = via;
      }
      double a = std::fmod(mid, kTwoPi);
      Sweep::Separatrix sep;
      sep.shot = a;
      sep.via = via;
      sep.gamma = anchored(p, critical_[via].id, std::move(seg), a, 0);
      sw->separatrices.push_back(std::move(sep));
    }
    std::sort(sw->separatrices.begin(), sw->separatrices.end(),
              [](const auto& a, const auto& b) { return a.shot < b.shot; });
    // a grid shot exactly on a separatrix is bracketed from both sides
    std::vector<Sweep::Separatrix> kept;
    for (auto& s : sw->separatrices) {
      if (!kept.empty() && kept.back().via == s.via && s.shot - kept.back().shot < 1e-9) continue;
      kept.push_back(std::move(s));
    }
    if (kept.size() > 1 && kept.front().via == kept.back().via && kept.front().shot + kTwoPi - kept.back().shot < 1e-9)
      kept.pop_back();
    sw->separatrices = std::move(kept);
  } else {
    throw Unsupported("unstable manifolds of dimension > 2 are not swept");
  }
  return *sweeps_.emplace(p, std::move(sw)).first->second;
}

ModuliSample MorseModel::find_trajectories(const std::string& p, const std::string& q, int resolution) {
  const int ip = critical(p).index, iq = critical(q).index;
  const int qi = critical_slot(q);
  ModuliSample out;
  out.p = p;
  out.q = q;
  out.dim = ip - iq - 1;
  if (resolution <= 0 || resolution == options_.resolution) {
    auto it = moduli_.find({p, q});
    if (it != moduli_.end()) return it->second;
  }
  if (ip == 0 || critical(p).value <= critical(q).value) return out;
  if (ip > 2) throw Unsupported("moduli from a source of index > 2");

  MorseModel* self = this;
  std::unique_ptr<MorseModel> other;
  if (resolution > 0 && resolution != options_.resolution) {
    MorseOptions o = options_;
    o.resolution = resolution;
    other = std::make_unique<MorseModel>(*this);
    other->options_ = o;
    other->sweeps_.clear();
    other->moduli_.clear();
    other->arcs_.clear();
    self = other.get();
  }
  const Sweep& sw = self->sweep(p);
  for (const auto& u : sw.unresolved) out.unresolved.push_back(u);
  if (sw.kind == 1) {
    Shooter sh{system_, critical_, options_, critical_slot(p)};
    for (std::size_t i = 0; i < sw.shots.size(); ++i) {
      if (sw.classes[i].target != qi) continue;
      const int branch = static_cast<int>(sw.shots[i]);
      auto seg = sh.run(0.0, branch, options_.spacing);
      out.trajectories.push_back(anchored(p, q, std::move(seg), 0.0, branch));
    }
  } else if (sw.kind == 2) {
    for (const auto& sep : sw.separatrices)
      if (sep.via == qi) out.trajectories.push_back(sep.gamma);
    if (out.dim >= 1) {
      Shooter sh{system_, critical_, options_, critical_slot(p)};
      for (std::size_t i = 0; i < sw.shots.size(); ++i) {
        if (sw.classes[i].target != qi) continue;
        out.trajectories.push_back(anchored(p, q, sh.run(sw.shots[i], 0, 0.0, true), sw.shots[i], 0));
      }
    }
  }
  if (self == this) moduli_[{p, q}] = out;
  return out;
}

const ModuliSample& MorseModel::moduli(const std::string& p, const std::string& q) {
  auto it = moduli_.find({p, q});
  if (it != moduli_.end()) return it->second;
  ModuliSample m = find_trajectories(p, q);
  return moduli_[{p, q}] = std::move(m);
}

std::vector<std::pair<std::string, std::string>> MorseModel::connected_pairs() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : critical_)
    for (const auto& b : critical_)
      if (a.id != b.id && a.value > b.value && !moduli(a.id, b.id).trajectories.empty())
        out.emplace_back(a.id, b.id);
  return out;
}

} // namespace glue
