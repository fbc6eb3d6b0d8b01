#pragma once

// Compact manifolds with corners presented by box-domain charts.
//
// Every chart domain is a product of intervals; each interval end is either
// closed (a corner-type boundary coordinate) or open.  Closed ends carry a
// face label.  Connected faces are computed combinatorially: facets of one
// chart that share a label and meet along a corner belong to one component.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glue {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Side : std::uint8_t { Lower, Upper };

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool lo_closed = true;
  bool hi_closed = true;
  std::string lo_face; // empty: a default label is generated
  std::string hi_face;
};

struct CornerChart {
  std::vector<Interval> box;

  // Smooth evaluators to the ambient representation shared by all charts.
  std::function<Vec(const Vec&)> to_ambient;
  std::function<std::optional<Vec>(const Vec&)> from_ambient; // nullopt outside the domain
  std::function<Mat(const Vec&)> jacobian;

  // What the evaluators compute, for writing the chart out: "affine"
  // (origin + linear u), "circle" (u -> (cos u, sin u)), or empty when only
  // the evaluators are known.
  std::string kind;
  Vec origin;
  Mat linear;

  int dim() const { return static_cast<int>(box.size()); }
  bool contains(const Vec& u, double tol = 0.0) const;
  double bound(int coord, Side side) const { return side == Side::Lower ? box[coord].lo : box[coord].hi; }
  bool closed(int coord, Side side) const {
    return side == Side::Lower ? box[coord].lo_closed : box[coord].hi_closed;
  }
  const std::string& face(int coord, Side side) const {
    return side == Side::Lower ? box[coord].lo_face : box[coord].hi_face;
  }

  /// Affine chart u -> origin + A u over the given box.
  static CornerChart affine(std::vector<Interval> box, Vec origin, Mat linear);
  /// The open arc (lo, hi) of the unit circle by angle.
  static CornerChart circle_arc(double lo, double hi);
};

/// A point of a cornered space: chart index plus chart coordinates.
struct Point {
  int chart = 0;
  Vec coords;
};

/// One facet of one chart (coordinate `coord` pinned at `side`).
struct FacetRef {
  int chart = 0;
  int coord = 0;
  Side side = Side::Lower;
  friend bool operator==(const FacetRef&, const FacetRef&) = default;
};

/// A connected (closed) face: the closure of one component of the codimension-1 stratum.
struct ConnectedFace {
  std::string label;
  std::vector<FacetRef> facets; // more than one only when facets are glued by label
};

/// A face: a union of pairwise disjoint connected faces sharing a label.
struct Face {
  std::string label;
  std::vector<ConnectedFace> components;
};

class CorneredSpace {
public:
  CorneredSpace() = default;
  CorneredSpace(int dim, int ambient_dim, std::vector<CornerChart> charts);

  int dim() const { return dim_; }
  int ambient_dim() const { return ambient_dim_; }
  const std::vector<CornerChart>& charts() const { return charts_; }
  const CornerChart& chart(int i) const { return charts_.at(i); }

  bool contains(const Point& x, double tol = 0.0) const;
  Vec ambient(const Point& x) const { return chart(x.chart).to_ambient(x.coords); }

  /// Locate an ambient point in the first chart containing it.
  std::optional<Point> locate(const Vec& y) const;

  /// Euclidean distance between ambient images.
  double distance(const Point& a, const Point& b) const { return (ambient(a) - ambient(b)).norm(); }

  /// Facets active at x (coordinate equal to a closed bound within tol).
  std::vector<FacetRef> active_facets(const Point& x, double tol = 0.0) const;

  // Built-in polytopal models.
  static CorneredSpace unit_cube(int n);                 // [0,1]^n, all 2n facets
  static CorneredSpace sheared_cube(int n, double shear); // [0,1]^n with an affine shear
  static CorneredSpace teardrop();                        // square, two adjacent edges one face
  static CorneredSpace circle();                          // two open charts, no boundary
  static CorneredSpace point();                           // dimension 0

private:
  int dim_ = 0;
  int ambient_dim_ = 0;
  std::vector<CornerChart> charts_;
};

/// c(x): number of corner coordinates equal to 0 in the chart of x.  Throws
/// InputError when x lies outside its chart.
int depth(const CorneredSpace& space, const Point& x, double tol = 0.0);

/// Depth of an ambient point; throws InputError if no chart contains it.
int depth(const CorneredSpace& space, const Vec& ambient_point, double tol = 0.0);

inline bool stratum_membership(const CorneredSpace& space, const Point& x, int k, double tol = 0.0) {
  return depth(space, x, tol) == k;
}

std::vector<ConnectedFace> connected_faces(const CorneredSpace& space);

/// Connected faces grouped by label.
std::vector<Face> faces(const CorneredSpace& space);

/// Label of the connected face a facet belongs to.
std::string facet_label(const CorneredSpace& space, const FacetRef& f);

struct FacesCheck {
  bool ok = true;
  int samples = 0;
  std::optional<Point> witness;
  std::string message;
};

struct SamplingConfig {
  int grid_per_axis = 32;
  int random_points = 256;
  std::uint64_t seed = 1;
  double tol = 1e-9;
};

/// Sample points of a chart: a grid (32^min(n,2)), the box corners, and
/// random points with some coordinates snapped to closed bounds.
std::vector<Point> sample_chart(const CorneredSpace& space, int chart, const SamplingConfig& cfg);

/// Every sampled x must lie in the closures of exactly c(x) distinct connected faces.
FacesCheck check_manifold_with_faces(const CorneredSpace& space, const SamplingConfig& cfg = {});

/// Depth must agree between overlapping charts.
FacesCheck check_depth_chart_independent(const CorneredSpace& space, const SamplingConfig& cfg = {});

struct IntersectionPiece {
  int chart = 0;
  int dim = 0;
  std::vector<std::pair<int, double>> pinned; // (coordinate, value)
};

struct FaceIntersection {
  bool empty = true;
  std::vector<IntersectionPiece> pieces;
  int dim() const { return pieces.empty() ? -1 : pieces.front().dim; }
};

/// Intersection of the faces with the given labels, presented chart by chart.
FaceIntersection face_intersection(const CorneredSpace& space, const std::vector<std::string>& labels);

/// Inward frame e_1..e_k at a point of the k-stratum lying in the listed faces.
struct SectorFrame {
  Point base;
  std::vector<std::string> labels;
  std::vector<FacetRef> facets; // facet realizing each label at base
  Mat chart_vectors;            // n x k, columns e_i in chart coordinates
  Mat ambient_vectors;          // ambient_dim x k
};

SectorFrame inward_frame(const CorneredSpace& space, const Point& base,
                         const std::vector<std::string>& labels);

struct ConeCheck {
  bool ok = true;
  double max_residual = 0.0;
  double min_coefficient = 0.0;
  double min_singular_value = 0.0;
};

/// Nonnegative-cone test: sampled tangent-sector vectors, projected to the
/// normal space, are nonnegative combinations of the projected frame.
ConeCheck check_frame_cone(const CorneredSpace& space, const SectorFrame& frame, int samples,
                           std::uint64_t seed);

} // namespace glue
