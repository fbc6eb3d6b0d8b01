#pragma once

// Negative gradient flow on low-dimensional closed manifolds (or boxes), its
// critical points, connecting trajectories, and the 0/1-dimensional moduli
// data the collar engine consumes.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glue/expression.hpp"
#include "glue/family_model.hpp"

namespace glue {

/// f on a manifold presented in state coordinates.  Either a box chart
/// (possibly periodic per coordinate) or a surface embedded in R^n with an
/// orthonormal tangent basis and a projection back onto the surface.
struct MorseSystem {
  std::string name;
  int dim = 0;       // manifold dimension
  int state_dim = 0; // coordinates of a state
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> df;      // differential in state coordinates
  std::function<Mat(const Vec&)> metric;  // empty: Euclidean
  std::function<Mat(const Vec&)> tangent; // state_dim x dim; empty: identity
  std::function<Vec(const Vec&)> project; // empty: none
  std::function<Vec(const Vec&)> embed;   // where distances are measured; empty: identity (periodic coords wrapped)
  std::vector<std::pair<double, double>> box;
  std::vector<double> period; // 0 for a non-periodic coordinate

  Mat tangent_at(const Vec& x) const;
  Mat metric_at(const Vec& x) const;
  /// Riemannian gradient as a state vector.  The flow is x' = -grad(x).
  Vec grad(const Vec& x) const;
  /// |grad f| in the metric.
  double grad_norm(const Vec& x) const;
  Vec position(const Vec& x) const;
  double distance(const Vec& a, const Vec& b) const { return (position(a) - position(b)).norm(); }
  /// Periodic coordinates reduced into the box.
  Vec reduce(const Vec& x) const;
  bool inside(const Vec& x) const; // non-periodic coordinates within the box
};

MorseSystem tilted_torus(double tilt = 0.1, double big_radius = 2.0, double small_radius = 1.0);
MorseSystem round_sphere();
MorseSystem parabola(); // f = x^2 on [-1, 1]
MorseSystem separable_torus(); // cos x + cos y on the flat torus
/// f given as an expression in flat coordinates over a box.
MorseSystem custom_system(const std::string& name, const Expression& f, std::vector<std::pair<double, double>> box,
                          std::vector<double> period);
/// "torus", "sphere", "parabola", "separable".  Throws InputError otherwise.
MorseSystem builtin_system(const std::string& name);
std::vector<std::string> builtin_system_names();

struct CriticalPointData {
  std::string id;
  Vec location;
  double value = 0.0;
  int index = 0;
  double gradient_norm = 0.0;
  double min_abs_eigenvalue = 0.0;
  bool morse = true;
  Mat unstable;      // state_dim x index, metric-orthonormal eigen-directions
  Vec unstable_rates; // growth rates of the flow along them, increasing
  Mat stable;
  Vec stable_rates;
};

/// Newton from each seed (a grid over the box by default), deduplicated,
/// sorted by decreasing value.  Ids are max/min/s with a number when repeated.
std::vector<CriticalPointData> find_critical_points(const MorseSystem& system, std::vector<Vec> seeds = {},
                                                    int grid = 24);

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double capture = 1e-5;   // stop this close to a critical point
  double spacing = 0.0;    // >0: interpolate so consecutive samples are at most this far apart
  double max_time = 400.0;
};

enum class FlowStop { Captured, TimeLimit, ExitedDomain, Stalled };

struct FlowSegment {
  std::vector<double> t;
  std::vector<Vec> x;
  FlowStop stop = FlowStop::TimeLimit;
  int captured_by = -1;           // index into the stop list
  double max_increase = 0.0;      // largest per-step increase of f
};

/// Integrates x' = -grad f from x (adaptive Dormand-Prince 5(4)).  The path
/// is kept unreduced, so periodic coordinates record winding.
FlowSegment integrate_flow(const MorseSystem& system, const Vec& x, double t_end,
                           const std::vector<CriticalPointData>& stops = {}, const FlowOptions& options = {});

struct Trajectory {
  std::string source;
  std::string target;
  std::vector<double> t; // anchor crossing at t = 0
  std::vector<Vec> x;
  Vec anchor;
  double shot = 0.0;     // shooting parameter at the source
  int branch = 0;        // which unstable direction, for index-1 sources
};

/// Hausdorff distance between sampled images (measured after `position`).
double hausdorff(const MorseSystem& system, const std::vector<const Trajectory*>& a,
                 const std::vector<const Trajectory*>& b);

struct ShotBracket {
  double lo = 0.0;
  double hi = 0.0;
  std::string why;
};

struct ModuliSample {
  std::string p;
  std::string q;
  int dim = -1;                       // ind p - ind q - 1
  std::vector<Trajectory> trajectories; // isolated points, or samples along the continuum
  std::vector<ShotBracket> unresolved;
};

struct BrokenEnd {
  double shot = 0.0;      // the separatrix parameter the arc ends at
  std::string via;        // intermediate critical point r
  int first = -1;         // index into M(p, r)
  int second = -1;        // index into M(r, q)
  double hausdorff = 0.0; // nearest computed arc trajectory to the broken image
  std::vector<std::pair<double, double>> series; // (arc length, Hausdorff) approaching the end

  // Arc-length table: shots at shot + side * offset[j], offsets decreasing
  // towards the end.  length is measured to the broken end in the arc metric;
  // anchor_length always uses anchor chords.
  int side = 1;
  std::vector<double> offset;
  std::vector<Vec> anchor;
  std::vector<double> length;
  std::vector<double> anchor_length;
  Vec broken_anchor;
};

/// A component of a one-dimensional M(p, q): an open arc between two
/// separatrix parameters, or the whole shooting circle.
struct ModuliArc {
  double lo = 0.0;
  double hi = 0.0;
  bool circle = false;
  double length = 0.0; // in the arc metric
  std::vector<BrokenEnd> ends; // at lo and at hi
};

/// Arc length along a one-dimensional moduli space: summed Hausdorff
/// distances between consecutive trajectory images, or summed chords
/// between their anchors on the mid level.
enum class ArcMetric { Hausdorff, Anchor };

struct MorseOptions {
  int resolution = 360; // shooting sweep per unstable circle
  int grid = 24;
  FlowOptions flow;
  double start_radius = 1e-5;  // off a saddle along its unstable direction
  double source_radius = 1e-3; // shooting circle around a source of full index
  double spacing = 5e-4;       // sample spacing of stored and glued trajectories
  ArcMetric arc_metric = ArcMetric::Hausdorff;
};

struct TransversalityReport {
  std::string p;
  std::string q;
  int expected_dim = 0;           // ind p - ind q
  std::vector<int> observed_dims; // per trajectory, at its anchor
  double min_singular_value = 0.0;
  bool passed = true;
  std::string confidence;
};

/// Critical points, trajectories, arcs and gluing for one system, computed
/// lazily and cached.
class MorseModel {
public:
  explicit MorseModel(MorseSystem system, MorseOptions options = {});

  const MorseSystem& system() const { return system_; }
  const MorseOptions& options() const { return options_; }
  const std::vector<CriticalPointData>& critical_points() const { return critical_; }
  const CriticalPointData& critical(const std::string& id) const;
  int critical_slot(const std::string& id) const; // position in critical_points()

  /// Shooting from the unstable sphere of p at the given resolution, with
  /// bisection on changes of the landing class.
  ModuliSample find_trajectories(const std::string& p, const std::string& q, int resolution = 0);
  /// Cached find_trajectories at the model resolution.
  const ModuliSample& moduli(const std::string& p, const std::string& q);

  /// The arcs of a one-dimensional M(p, q) with their broken ends.
  const std::vector<ModuliArc>& detect_broken(const std::string& p, const std::string& q);

  /// gamma1 #_lambda gamma2: the trajectory of M(p, q) at arc length
  /// lambda from the broken end (gamma1, gamma2).  lambda = 0 returns the
  /// broken pair concatenated.  Throws RangeError past the arc midpoint.
  Trajectory glue(const std::string& p, const std::string& r, const std::string& q, int first, int second,
                  double lambda);

  TransversalityReport check_transversality(const std::string& p, const std::string& q);

  /// Trajectory from the source through the given shooting parameter.
  std::optional<Trajectory> shoot(const std::string& p, double shot, int branch = 0,
                                  double spacing = 0.0) const;

  /// Pairs (p, q) with M(p, q) nonempty, closed under breaking.
  std::vector<std::pair<std::string, std::string>> connected_pairs();

private:
  struct Sweep;
  const Sweep& sweep(const std::string& p);
  Trajectory anchored(const std::string& p, const std::string& q, FlowSegment seg, double shot, int branch) const;

  MorseSystem system_;
  MorseOptions options_;
  std::vector<CriticalPointData> critical_;
  std::map<std::string, std::shared_ptr<Sweep>> sweeps_;
  std::map<std::pair<std::string, std::string>, ModuliSample> moduli_;
  std::map<std::pair<std::string, std::string>, std::vector<ModuliArc>> arcs_;
};

/// The family of compactified moduli spaces: points for dim 0 and closed
/// arcs (or circles) for dim 1.  Throws Unsupported for a moduli space of
/// dimension 2 or more and InputError for an unresolved arc end.
StratifiedFamily export_family(MorseModel& model);

} // namespace glue
