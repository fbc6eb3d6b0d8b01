#include "glue/faces_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "glue/error.hpp"
#include "glue/sampling.hpp"

namespace glue {

namespace {

bool in_interval(const Interval& iv, double v, double tol) {
  const bool above = iv.lo_closed ? v >= iv.lo - tol : v > iv.lo;
  const bool below = iv.hi_closed ? v <= iv.hi + tol : v < iv.hi;
  return above && below;
}

} // namespace

bool CornerChart::contains(const Vec& u, double tol) const {
  if (u.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (!in_interval(box[i], u[i], tol)) return false;
  return true;
}

CornerChart CornerChart::affine(std::vector<Interval> box, Vec origin, Mat linear) {
  CornerChart c;
  c.box = std::move(box);
  Mat inv = Mat::Zero(linear.cols(), linear.rows());
  if (linear.size() > 0)
    inv = linear.rows() == linear.cols() ? Mat(linear.inverse())
                                         : Mat(linear.completeOrthogonalDecomposition().pseudoInverse());
  c.to_ambient = [origin, linear](const Vec& u) -> Vec { return origin + linear * u; };
  const std::vector<Interval> b = c.box;
  c.from_ambient = [origin, inv, b, linear](const Vec& y) -> std::optional<Vec> {
    Vec u = inv * (y - origin);
    if ((origin + linear * u - y).norm() > 1e-12 * (1.0 + y.norm())) return std::nullopt;
    for (std::size_t i = 0; i < b.size(); ++i)
      if (!in_interval(b[i], u[static_cast<int>(i)], 1e-12)) return std::nullopt;
    return u;
  };
  c.jacobian = [linear](const Vec&) -> Mat { return linear; };
  c.kind = "affine";
  c.origin = std::move(origin);
  c.linear = std::move(linear);
  return c;
}

CornerChart CornerChart::circle_arc(double lo, double hi) {
  CornerChart c;
  c.box = {Interval{lo, hi, false, false, "", ""}};
  c.kind = "circle";
  c.to_ambient = [](const Vec& u) -> Vec {
    Vec y(2);
    y << std::cos(u[0]), std::sin(u[0]);
    return y;
  };
  c.from_ambient = [lo, hi](const Vec& y) -> std::optional<Vec> {
    if (std::abs(y.norm() - 1.0) > 1e-9) return std::nullopt;
    double t = std::atan2(y[1], y[0]);
    while (t <= lo) t += 2 * M_PI;
    while (t >= hi) t -= 2 * M_PI;
    if (t <= lo || t >= hi) return std::nullopt;
    Vec u(1);
    u << t;
    return u;
  };
  c.jacobian = [](const Vec& u) -> Mat {
    Mat j(2, 1);
    j << -std::sin(u[0]), std::cos(u[0]);
    return j;
  };
  return c;
}

CorneredSpace::CorneredSpace(int dim, int ambient_dim, std::vector<CornerChart> charts)
    : dim_(dim), ambient_dim_(ambient_dim), charts_(std::move(charts)) {
  for (std::size_t c = 0; c < charts_.size(); ++c) {
    auto& ch = charts_[c];
    if (ch.dim() != dim_) throw InputError("chart dimension does not match space dimension");
    for (int i = 0; i < ch.dim(); ++i) {
      auto& iv = ch.box[i];
      if (!(iv.lo < iv.hi)) throw InputError("empty chart interval");
      const std::string stem = "c" + std::to_string(c) + ":x" + std::to_string(i) + ":";
      if (iv.lo_closed && iv.lo_face.empty()) iv.lo_face = stem + "lo";
      if (iv.hi_closed && iv.hi_face.empty()) iv.hi_face = stem + "hi";
    }
  }
}

bool CorneredSpace::contains(const Point& x, double tol) const {
  return x.chart >= 0 && x.chart < static_cast<int>(charts_.size()) &&
         charts_[x.chart].contains(x.coords, tol);
}

std::optional<Point> CorneredSpace::locate(const Vec& y) const {
  for (std::size_t c = 0; c < charts_.size(); ++c)
    if (auto u = charts_[c].from_ambient(y)) return Point{static_cast<int>(c), *u};
  return std::nullopt;
}

std::vector<FacetRef> CorneredSpace::active_facets(const Point& x, double tol) const {
  std::vector<FacetRef> out;
  const auto& ch = chart(x.chart);
  for (int i = 0; i < ch.dim(); ++i) {
    const auto& iv = ch.box[i];
    if (iv.lo_closed && std::abs(x.coords[i] - iv.lo) <= tol) out.push_back({x.chart, i, Side::Lower});
    else if (iv.hi_closed && std::abs(x.coords[i] - iv.hi) <= tol) out.push_back({x.chart, i, Side::Upper});
  }
  return out;
}

CorneredSpace CorneredSpace::unit_cube(int n) {
  std::vector<Interval> box(n);
  return CorneredSpace(n, n, {CornerChart::affine(box, Vec::Zero(n), Mat::Identity(n, n))});
}

CorneredSpace CorneredSpace::sheared_cube(int n, double shear) {
  std::vector<Interval> box(n);
  Mat a = Mat::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = shear;
  return CorneredSpace(n, n, {CornerChart::affine(box, Vec::Zero(n), a)});
}

CorneredSpace CorneredSpace::teardrop() {
  std::vector<Interval> box(2);
  box[0].lo_face = "glued";
  box[1].lo_face = "glued";
  return CorneredSpace(2, 2, {CornerChart::affine(box, Vec::Zero(2), Mat::Identity(2, 2))});
}

CorneredSpace CorneredSpace::point() {
  return CorneredSpace(0, 0, {CornerChart::affine({}, Vec::Zero(0), Mat::Zero(0, 0))});
}

CorneredSpace CorneredSpace::circle() {
  return CorneredSpace(1, 2, {CornerChart::circle_arc(-0.5, M_PI + 0.5), CornerChart::circle_arc(M_PI - 0.5, 2 * M_PI + 0.5)});
}

int depth(const CorneredSpace& space, const Point& x, double tol) {
  if (!space.contains(x, tol)) throw InputError("point outside its chart");
  return static_cast<int>(space.active_facets(x, tol).size());
}

int depth(const CorneredSpace& space, const Vec& ambient_point, double tol) {
  auto located = space.locate(ambient_point);
  if (!located) throw InputError("point outside all charts");
  return depth(space, *located, tol);
}

namespace {

// Union-find over facets of one chart: same label and different coordinates.
std::vector<ConnectedFace> chart_components(const CorneredSpace& space, int c) {
  const auto& ch = space.chart(c);
  std::vector<FacetRef> facets;
  for (int i = 0; i < ch.dim(); ++i)
    for (Side s : {Side::Lower, Side::Upper})
      if (ch.closed(i, s)) facets.push_back({c, i, s});
  std::vector<std::size_t> parent(facets.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    return parent[a] == a ? a : parent[a] = find(parent[a]);
  };
  for (std::size_t a = 0; a < facets.size(); ++a)
    for (std::size_t b = a + 1; b < facets.size(); ++b)
      if (facets[a].coord != facets[b].coord &&
          ch.face(facets[a].coord, facets[a].side) == ch.face(facets[b].coord, facets[b].side))
        parent[find(a)] = find(b);
  std::map<std::size_t, ConnectedFace> groups;
  for (std::size_t a = 0; a < facets.size(); ++a) {
    auto& g = groups[find(a)];
    g.label = ch.face(facets[a].coord, facets[a].side);
    g.facets.push_back(facets[a]);
  }
  std::vector<ConnectedFace> out;
  for (auto& [root, g] : groups) out.push_back(std::move(g));
  return out;
}

} // namespace

std::vector<ConnectedFace> connected_faces(const CorneredSpace& space) {
  std::vector<ConnectedFace> out;
  for (int c = 0; c < static_cast<int>(space.charts().size()); ++c) {
    auto comps = chart_components(space, c);
    out.insert(out.end(), comps.begin(), comps.end());
  }
  return out;
}

std::vector<Face> faces(const CorneredSpace& space) {
  std::map<std::string, Face> by_label;
  for (auto& cf : connected_faces(space)) {
    auto& f = by_label[cf.label];
    f.label = cf.label;
    f.components.push_back(std::move(cf));
  }
  std::vector<Face> out;
  for (auto& [label, f] : by_label) out.push_back(std::move(f));
  return out;
}

std::string facet_label(const CorneredSpace& space, const FacetRef& f) {
  return space.chart(f.chart).face(f.coord, f.side);
}

std::vector<Point> sample_chart(const CorneredSpace& space, int c, const SamplingConfig& cfg) {
  const auto& ch = space.chart(c);
  const int n = ch.dim();
  std::vector<Point> out;
  if (n == 0) {
    out.push_back({c, Vec::Zero(0)});
    return out;
  }
  auto grid_value = [&](int axis, int k, int m) {
    const auto& iv = ch.box[axis];
    // closed ends are hit exactly, open ends are approached but not reached
    const double a = iv.lo_closed ? 0.0 : 0.5;
    const double b = iv.hi_closed ? static_cast<double>(m - 1) : m - 1.5;
    const double t = (a + (b - a) * k / std::max(1, m - 1)) / std::max(1, m - 1);
    return iv.lo + (iv.hi - iv.lo) * t;
  };
  const int m = cfg.grid_per_axis;
  Rng rng(cfg.seed + 7919u * static_cast<std::uint64_t>(c));
  if (n <= 2) {
    const int total = n == 1 ? m : m * m;
    for (int idx = 0; idx < total; ++idx) {
      Vec u(n);
      u[0] = grid_value(0, idx % m, m);
      if (n == 2) u[1] = grid_value(1, idx / m, m);
      out.push_back({c, u});
    }
  } else {
    // 32^2 points spread over the box, snapped to a per-axis grid.
    for (int idx = 0; idx < m * m; ++idx) {
      Vec u(n);
      for (int i = 0; i < n; ++i) u[i] = grid_value(i, static_cast<int>(rng.below(m)), m);
      out.push_back({c, u});
    }
  }
  // Box corners (closed ends only).
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vec u(n);
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      const auto& iv = ch.box[i];
      const bool upper = mask & (1u << i);
      if (upper ? !iv.hi_closed : !iv.lo_closed) ok = false;
      u[i] = upper ? iv.hi : iv.lo;
    }
    if (ok) out.push_back({c, u});
  }
  for (int r = 0; r < cfg.random_points; ++r) {
    Vec u(n);
    for (int i = 0; i < n; ++i) {
      const auto& iv = ch.box[i];
      const double roll = rng.uniform();
      if (roll < 0.2 && iv.lo_closed) u[i] = iv.lo;
      else if (roll < 0.3 && iv.hi_closed) u[i] = iv.hi;
      else u[i] = rng.open_uniform(iv.lo, iv.hi);
    }
    out.push_back({c, u});
  }
  return out;
}

FacesCheck check_manifold_with_faces(const CorneredSpace& space, const SamplingConfig& cfg) {
  FacesCheck res;
  std::vector<std::vector<ConnectedFace>> comps;
  for (int c = 0; c < static_cast<int>(space.charts().size()); ++c)
    comps.push_back(chart_components(space, c));
  for (int c = 0; c < static_cast<int>(space.charts().size()); ++c) {
    for (const auto& x : sample_chart(space, c, cfg)) {
      ++res.samples;
      const auto active = space.active_facets(x);
      std::set<std::size_t> hit;
      for (const auto& f : active)
        for (std::size_t k = 0; k < comps[c].size(); ++k)
          if (std::find(comps[c][k].facets.begin(), comps[c][k].facets.end(), f) !=
              comps[c][k].facets.end())
            hit.insert(k);
      if (hit.size() != active.size()) {
        res.ok = false;
        res.witness = x;
        res.message = "point of depth " + std::to_string(active.size()) + " lies in " +
                      std::to_string(hit.size()) + " distinct connected faces";
        return res;
      }
    }
  }
  return res;
}

FacesCheck check_depth_chart_independent(const CorneredSpace& space, const SamplingConfig& cfg) {
  FacesCheck res;
  const int nc = static_cast<int>(space.charts().size());
  for (int a = 0; a < nc; ++a)
    for (const auto& x : sample_chart(space, a, cfg)) {
      const Vec y = space.ambient(x);
      const int da = depth(space, x);
      for (int b = 0; b < nc; ++b) {
        if (b == a) continue;
        auto u = space.chart(b).from_ambient(y);
        if (!u) continue;
        ++res.samples;
        const int db = depth(space, Point{b, *u}, cfg.tol);
        if (db != da) {
          res.ok = false;
          res.witness = x;
          res.message = "charts " + std::to_string(a) + " and " + std::to_string(b) +
                        " disagree on depth";
          return res;
        }
      }
    }
  return res;
}

FaceIntersection face_intersection(const CorneredSpace& space, const std::vector<std::string>& labels) {
  FaceIntersection out;
  for (int c = 0; c < static_cast<int>(space.charts().size()); ++c) {
    const auto& ch = space.chart(c);
    // each label must be realized by a facet of this chart; different labels
    // need different coordinates, and a coordinate cannot be pinned twice
    std::vector<std::vector<FacetRef>> options;
    for (const auto& label : labels) {
      std::vector<FacetRef> opts;
      for (int i = 0; i < ch.dim(); ++i)
        for (Side s : {Side::Lower, Side::Upper})
          if (ch.closed(i, s) && ch.face(i, s) == label) opts.push_back({c, i, s});
      options.push_back(std::move(opts));
    }
    std::vector<FacetRef> pick(labels.size());
    std::function<void(std::size_t)> choose = [&](std::size_t k) {
      if (k == labels.size()) {
        IntersectionPiece piece{c, ch.dim(), {}};
        for (const auto& f : pick) piece.pinned.emplace_back(f.coord, ch.bound(f.coord, f.side));
        piece.dim = ch.dim() - static_cast<int>(pick.size());
        out.pieces.push_back(std::move(piece));
        return;
      }
      for (const auto& f : options[k]) {
        bool clash = false;
        for (std::size_t j = 0; j < k; ++j) clash |= pick[j].coord == f.coord;
        if (clash) continue;
        pick[k] = f;
        choose(k + 1);
      }
    };
    choose(0);
  }
  out.empty = out.pieces.empty();
  return out;
}

SectorFrame inward_frame(const CorneredSpace& space, const Point& base,
                         const std::vector<std::string>& labels) {
  const auto active = space.active_facets(base);
  if (active.size() != labels.size())
    throw InputError("base point has depth " + std::to_string(active.size()) + ", expected " +
                     std::to_string(labels.size()));
  SectorFrame fr;
  fr.base = base;
  fr.labels = labels;
  const int n = space.dim();
  fr.chart_vectors = Mat::Zero(n, static_cast<int>(labels.size()));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    auto it = std::find_if(active.begin(), active.end(),
                           [&](const FacetRef& f) { return facet_label(space, f) == labels[k]; });
    if (it == active.end())
      throw InputError("base point is not in face '" + labels[k] + "'");
    fr.facets.push_back(*it);
    fr.chart_vectors(it->coord, static_cast<int>(k)) = it->side == Side::Lower ? 1.0 : -1.0;
  }
  fr.ambient_vectors = space.chart(base.chart).jacobian(base.coords) * fr.chart_vectors;
  return fr;
}

ConeCheck check_frame_cone(const CorneredSpace& space, const SectorFrame& frame, int samples,
                           std::uint64_t seed) {
  ConeCheck res;
  const auto& ch = space.chart(frame.base.chart);
  const int n = ch.dim();
  const Mat jac = ch.jacobian(frame.base.coords);
  const int k = static_cast<int>(frame.facets.size());

  // Tangent space of the stratum: images of the free chart directions.
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (std::none_of(frame.facets.begin(), frame.facets.end(),
                     [&](const FacetRef& f) { return f.coord == i; }))
      free.push_back(i);
  Mat tangent(jac.rows(), static_cast<int>(free.size()));
  for (std::size_t j = 0; j < free.size(); ++j) tangent.col(static_cast<int>(j)) = jac.col(free[j]);
  Mat proj = Mat::Identity(jac.rows(), jac.rows());
  if (tangent.cols() > 0) {
    Eigen::HouseholderQR<Mat> qr(tangent);
    Mat q = qr.householderQ() * Mat::Identity(jac.rows(), tangent.cols());
    proj -= q * q.transpose();
  }
  const Mat generators = proj * frame.ambient_vectors;
  if (k > 0) {
    Eigen::JacobiSVD<Mat> svd(generators);
    res.min_singular_value = svd.singularValues().minCoeff();
    if (res.min_singular_value < 1e-9) res.ok = false;
  }
  Rng rng(seed);
  res.min_coefficient = k > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  for (int s = 0; s < samples && k > 0; ++s) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    for (const auto& f : frame.facets)
      v[f.coord] = (f.side == Side::Lower ? 1.0 : -1.0) * rng.uniform(0.0, 1.0);
    const Vec target = proj * (jac * v);
    const Vec coef = generators.colPivHouseholderQr().solve(target);
    res.max_residual = std::max(res.max_residual, (generators * coef - target).norm());
    res.min_coefficient = std::min(res.min_coefficient, coef.minCoeff());
  }
  if (res.max_residual >= 1e-9 || res.min_coefficient < -1e-12) res.ok = false;
  return res;
}

} // namespace glue
