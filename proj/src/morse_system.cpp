#include <algorithm>
#include <cmath>
#include <numbers>

#include "glue/error.hpp"
#include "glue/morse_engine.hpp"

namespace glue {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

Vec vec(std::initializer_list<double> v) {
  Vec r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r[i++] = x;
  return r;
}

} // namespace

Mat MorseSystem::tangent_at(const Vec& x) const {
  return tangent ? tangent(x) : Mat::Identity(state_dim, dim);
}

Mat MorseSystem::metric_at(const Vec& x) const {
  return metric ? metric(x) : Mat::Identity(state_dim, state_dim);
}

Vec MorseSystem::grad(const Vec& x) const {
  if (!tangent && !metric) return df(x);
  if (!tangent) return metric(x).ldlt().solve(df(x));
  Mat b = tangent(x);
  Mat g = b.transpose() * metric_at(x) * b;
  return b * g.ldlt().solve(b.transpose() * df(x));
}

double MorseSystem::grad_norm(const Vec& x) const {
  Vec v = grad(x);
  return std::sqrt(std::max(0.0, v.dot(metric_at(x) * v)));
}

Vec MorseSystem::position(const Vec& x) const {
  if (embed) return embed(x);
  bool any = std::any_of(period.begin(), period.end(), [](double p) { return p > 0; });
  if (!any) return x;
  std::vector<double> out;
  for (int i = 0; i < state_dim; ++i) {
    double p = i < static_cast<int>(period.size()) ? period[i] : 0.0;
    if (p > 0) {
      double s = p / kTwoPi;
      out.push_back(s * std::cos(x[i] / s));
      out.push_back(s * std::sin(x[i] / s));
    } else {
      out.push_back(x[i]);
    }
  }
  return Eigen::Map<Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Vec MorseSystem::reduce(const Vec& x) const {
  Vec y = x;
  for (int i = 0; i < state_dim && i < static_cast<int>(period.size()); ++i) {
    if (period[i] > 0) {
      double lo = box[i].first;
      y[i] = lo + std::fmod(std::fmod(x[i] - lo, period[i]) + period[i], period[i]);
      if (y[i] >= lo + period[i]) y[i] = lo;
    }
  }
  return y;
}

bool MorseSystem::inside(const Vec& x) const {
  for (int i = 0; i < state_dim; ++i) {
    bool periodic = i < static_cast<int>(period.size()) && period[i] > 0;
    if (!periodic && (x[i] < box[i].first || x[i] > box[i].second)) return false;
  }
  return true;
}

MorseSystem tilted_torus(double tilt, double big_radius, double small_radius) {
  const double ca = std::cos(tilt), sa = std::sin(tilt), R = big_radius, r = small_radius;
  MorseSystem s;
  s.name = "torus";
  s.dim = 2;
  s.state_dim = 2;
  // (theta, phi) -> ((R + r cos phi) cos theta, (R + r cos phi) sin theta, r sin phi); height along (cos a, 0, sin a)
  s.f = [=](const Vec& x) { return ca * (R + r * std::cos(x[1])) * std::cos(x[0]) + sa * r * std::sin(x[1]); };
  s.df = [=](const Vec& x) {
    return vec({-ca * (R + r * std::cos(x[1])) * std::sin(x[0]),
                -ca * r * std::sin(x[1]) * std::cos(x[0]) + sa * r * std::cos(x[1])});
  };
  s.metric = [=](const Vec& x) {
    Mat g = Mat::Zero(2, 2);
    double w = R + r * std::cos(x[1]);
    g(0, 0) = w * w;
    g(1, 1) = r * r;
    return g;
  };
  s.embed = [=](const Vec& x) {
    double w = R + r * std::cos(x[1]);
    return vec({w * std::cos(x[0]), w * std::sin(x[0]), r * std::sin(x[1])});
  };
  s.box = {{0.0, kTwoPi}, {0.0, kTwoPi}};
  s.period = {kTwoPi, kTwoPi};
  return s;
}

MorseSystem round_sphere() {
  MorseSystem s;
  s.name = "sphere";
  s.dim = 2;
  s.state_dim = 3;
  s.f = [](const Vec& x) { return x[2] / x.norm(); };
  s.df = [](const Vec& x) {
    double n = x.norm();
    Vec e = vec({0, 0, 1});
    return Vec((e - x * (x[2] / (n * n))) / n);
  };
  s.tangent = [](const Vec& x) {
    Vec p = x.normalized();
    Eigen::Index k;
    p.cwiseAbs().minCoeff(&k);
    Vec e = Vec::Zero(3);
    e[k] = 1;
    Vec t1 = (e - e.dot(p) * p).normalized();
    Eigen::Vector3d a = p, b = t1;
    Vec t2 = a.cross(b);
    Mat t(3, 2);
    t.col(0) = t1;
    t.col(1) = t2;
    return t;
  };
  s.project = [](const Vec& x) { return Vec(x.normalized()); };
  s.embed = [](const Vec& x) { return Vec(x.normalized()); };
  s.box = {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  s.period = {0, 0, 0};
  return s;
}

MorseSystem parabola() {
  MorseSystem s;
  s.name = "parabola";
  s.dim = 1;
  s.state_dim = 1;
  s.f = [](const Vec& x) { return x[0] * x[0]; };
  s.df = [](const Vec& x) { return vec({2 * x[0]}); };
  s.box = {{-1.0, 1.0}};
  s.period = {0};
  return s;
}

MorseSystem separable_torus() {
  MorseSystem s;
  s.name = "separable";
  s.dim = 2;
  s.state_dim = 2;
  s.f = [](const Vec& x) { return std::cos(x[0]) + std::cos(x[1]); };
  s.df = [](const Vec& x) { return vec({-std::sin(x[0]), -std::sin(x[1])}); };
  s.box = {{-std::numbers::pi, std::numbers::pi}, {-std::numbers::pi, std::numbers::pi}};
  s.period = {kTwoPi, kTwoPi};
  return s;
}

MorseSystem custom_system(const std::string& name, const Expression& f, std::vector<std::pair<double, double>> box,
                          std::vector<double> period) {
  const int n = static_cast<int>(f.variables().size());
  if (n == 0) throw InputError("morse system: no variables");
  if (static_cast<int>(box.size()) != n) throw InputError("morse system: box must have one interval per variable");
  if (period.empty()) period.assign(n, 0.0);
  if (static_cast<int>(period.size()) != n) throw InputError("morse system: period must have one entry per variable");
  for (int i = 0; i < n; ++i) {
    if (!(box[i].first < box[i].second)) throw InputError("morse system: empty box interval");
    if (period[i] < 0) throw InputError("morse system: negative period");
  }
  MorseSystem s;
  s.name = name;
  s.dim = n;
  s.state_dim = n;
  s.f = [f](const Vec& x) { return f.value(x); };
  s.df = [f](const Vec& x) { return f.gradient(x); };
  s.box = std::move(box);
  s.period = std::move(period);
  return s;
}

MorseSystem builtin_system(const std::string& name) {
  if (name == "torus") return tilted_torus();
  if (name == "sphere") return round_sphere();
  if (name == "parabola") return parabola();
  if (name == "separable") return separable_torus();
  throw InputError("unknown morse system '" + name + "'");
}

std::vector<std::string> builtin_system_names() { return {"torus", "sphere", "parabola", "separable"}; }

// Critical points.

namespace {

struct Local {
  Vec g;   // df in tangent coordinates
  Mat h;   // Hessian of f in tangent coordinates
  Mat gram; // metric in tangent coordinates
};

Local local_data(const MorseSystem& s, const Vec& x) {
  Local out;
  Mat b = s.tangent_at(x);
  out.g = b.transpose() * s.df(x);
  out.gram = b.transpose() * s.metric_at(x) * b;
  const int n = s.dim;
  out.h.resize(n, n);
  if (!s.tangent && !s.project) {
    const double h = 1e-5;
    for (int j = 0; j < n; ++j) {
      Vec a = x, c = x;
      a[j] += h;
      c[j] -= h;
      out.h.col(j) = (s.df(a) - s.df(c)) / (2 * h);
    }
  } else {
    // second differences of f through the chart u -> project(x + B u)
    const double h = 1e-4;
    auto F = [&](const Vec& u) {
      Vec y = x + b * u;
      return s.f(s.project ? s.project(y) : y);
    };
    Vec z = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Vec ei = Vec::Zero(n), ej = Vec::Zero(n);
        ei[i] = h;
        ej[j] = h;
        double v = (F(z + ei + ej) - F(z + ei - ej) - F(z - ei + ej) + F(z - ei - ej)) / (4 * h * h);
        out.h(i, j) = out.h(j, i) = v;
      }
    }
  }
  out.h = 0.5 * (out.h + out.h.transpose());
  return out;
}

std::vector<Vec> default_seeds(const MorseSystem& s, int grid) {
  const int per = s.state_dim <= 2 ? grid : std::max(4, grid / 3);
  std::vector<Vec> seeds;
  std::vector<int> idx(s.state_dim, 0);
  for (;;) {
    Vec x(s.state_dim);
    for (int i = 0; i < s.state_dim; ++i) {
      const auto [lo, hi] = s.box[i];
      x[i] = lo + (hi - lo) * (idx[i] + 0.5) / per;
    }
    if (!s.project || x.norm() > 1e-9) seeds.push_back(s.project ? s.project(x) : x);
    int k = 0;
    while (k < s.state_dim && ++idx[k] == per) idx[k++] = 0;
    if (k == s.state_dim) break;
  }
  return seeds;
}

} // namespace

std::vector<CriticalPointData> find_critical_points(const MorseSystem& system, std::vector<Vec> seeds, int grid) {
  if (seeds.empty()) seeds = default_seeds(system, grid);
  std::vector<CriticalPointData> found;
  for (Vec x : seeds) {
    bool ok = true;
    for (int it = 0; it < 60; ++it) {
      Local l = local_data(system, x);
      if (l.g.norm() < 1e-15) break;
      Vec step = -l.h.fullPivLu().solve(l.g);
      if (!step.allFinite()) {
        ok = false;
        break;
      }
      if (step.norm() > 0.5) step *= 0.5 / step.norm();
      Vec y = x + system.tangent_at(x) * step;
      if (system.project) y = system.project(y);
      if (!system.inside(y)) {
        ok = false;
        break;
      }
      x = system.reduce(y);
      if (step.norm() < 1e-15) break;
    }
    if (!ok) continue;
    const double gn = system.grad_norm(x);
    if (!(gn < 1e-8)) continue;
    bool dup = false;
    for (auto& c : found) {
      if (system.distance(c.location, x) < 1e-6) {
        if (gn < c.gradient_norm) {
          c.location = x;
          c.gradient_norm = gn;
        }
        dup = true;
        break;
      }
    }
    if (dup) continue;
    CriticalPointData c;
    c.location = x;
    c.gradient_norm = gn;
    found.push_back(c);
  }

  for (auto& c : found) {
    const Vec& x = c.location;
    c.value = system.f(x);
    Local l = local_data(system, x);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(l.h, l.gram);
    const Vec mu = es.eigenvalues();
    const Mat v = es.eigenvectors(); // gram-orthonormal
    Mat b = system.tangent_at(x);
    c.index = 0;
    c.min_abs_eigenvalue = mu.size() ? mu.cwiseAbs().minCoeff() : 0.0;
    c.morse = c.min_abs_eigenvalue > 1e-6;
    std::vector<int> neg, pos;
    for (int i = 0; i < mu.size(); ++i) (mu[i] < 0 ? neg : pos).push_back(i);
    c.index = static_cast<int>(neg.size());
    // unstable: flow rate -mu, increasing; stable: decay mu, increasing
    std::sort(neg.begin(), neg.end(), [&](int a, int d) { return -mu[a] < -mu[d]; });
    c.unstable.resize(system.state_dim, static_cast<Eigen::Index>(neg.size()));
    c.unstable_rates.resize(static_cast<Eigen::Index>(neg.size()));
    for (std::size_t i = 0; i < neg.size(); ++i) {
      c.unstable.col(i) = b * v.col(neg[i]);
      c.unstable_rates[i] = -mu[neg[i]];
    }
    c.stable.resize(system.state_dim, static_cast<Eigen::Index>(pos.size()));
    c.stable_rates.resize(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t i = 0; i < pos.size(); ++i) {
      c.stable.col(i) = b * v.col(pos[i]);
      c.stable_rates[i] = mu[pos[i]];
    }
  }

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
  std::map<std::string, int> count, seen;
  auto prefix = [&](const CriticalPointData& c) {
    if (c.index == system.dim) return std::string("max");
    if (c.index == 0) return std::string("min");
    return std::string("s");
  };
  for (const auto& c : found) ++count[prefix(c)];
  for (auto& c : found) {
    std::string p = prefix(c);
    int k = ++seen[p];
    c.id = (count[p] > 1 || p == "s") ? p + std::to_string(k) : p;
  }
  return found;
}

} // namespace glue
