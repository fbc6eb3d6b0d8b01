#pragma once

// A stratified family: a poset of critical points, one compact cornered space
// per comparable pair (p, q), and product embeddings
//   iota_{p,r,q}: Mbar(p,r) x Mbar(r,q) -> Mbar(p,q)
// onto the faces labelled r.  Strata are read off the face labels: a point
// whose active facets carry labels r_1 > ... > r_k lies in M_I for
// I = {p, r_1, ..., r_k, q}.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "glue/chain_poset.hpp"
#include "glue/faces_model.hpp"

namespace glue {

using PairKey = std::pair<std::string, std::string>;
using TripleKey = std::tuple<std::string, std::string, std::string>;

/// One affine piece of a product embedding between specific charts:
/// target = offset + matrix * (left coords, right coords).
struct AffinePiece {
  int left_chart = 0;
  int right_chart = 0;
  int target_chart = 0;
  Mat matrix;
  Vec offset;
};

struct ProductEmbedding {
  std::function<Point(const Point&, const Point&)> map;
  /// Differential in chart coordinates: target_dim x (left_dim + right_dim).
  std::function<Mat(const Point&, const Point&)> differential;
  /// Optional closed-form inverse on the image; otherwise a Gauss-Newton solve is used.
  std::function<std::optional<std::pair<Point, Point>>(const Point&)> inverse;
  /// Present when the embedding is piecewise affine (serializable).
  std::optional<std::vector<AffinePiece>> affine;

  static ProductEmbedding from_affine(std::vector<AffinePiece> pieces);
};

class StratifiedFamily {
public:
  std::string name;
  CriticalPoset poset;
  std::map<PairKey, CorneredSpace> spaces;
  std::map<TripleKey, ProductEmbedding> embeddings;

  const CorneredSpace& space(const std::string& p, const std::string& q) const;
  const ProductEmbedding& embedding(const std::string& p, const std::string& r,
                                    const std::string& q) const;

  /// Comparable pairs with a space attached, ordered by (pair_length, ids).
  std::vector<PairKey> pairs_by_length() const;

  /// The chain whose stratum contains x; throws InputError when the active
  /// labels are not a chain strictly between p and q.
  Chain classify(const std::string& p, const std::string& q, const Point& x) const;

  /// iota_I: the image of x_0 . ... . x_k in Mbar(head, tail), folding left.
  Point include(const Chain& chain, const std::vector<Point>& pieces) const;

  /// Inverse of iota_{p,r,q} on its image.  Returns nullopt if y is not in the face r.
  std::optional<std::pair<Point, Point>> split(const std::string& p, const std::string& r,
                                               const std::string& q, const Point& y) const;
};

/// Linear poset p0 > ... > pn, Mbar(p_i, p_j) = [0,1)^{j-i-1} whose lower
/// facets are labelled by the intermediate points; embeddings insert a zero
/// at the junction coordinate.
StratifiedFamily cube_family(int n);

/// Family with a single pair and no intermediate points.
StratifiedFamily single_pair_family(CorneredSpace space);

/// Replaces iota_{p,r,q} with a copy whose first two output coordinates are swapped.
void mutate_flip(StratifiedFamily& family, const std::string& p, const std::string& r,
                 const std::string& q);

/// Pre-composes iota_{p,r,q} with v_i -> v_i (1 + s (1 - v_i)) on the right
/// factor, a face-preserving diffeomorphism of [0,1) for |s| < 1.
void warp_embedding(StratifiedFamily& family, const std::string& p, const std::string& r,
                    const std::string& q, double s);

struct ConditionResult {
  std::string condition; // partition, faces, embedding_face, embedding_injective, ...
  std::string where;      // pair or triple
  int samples = 0;
  double max_residual = 0.0;
  bool passed = true;
  std::string witness;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ConditionResult> conditions;
  const ConditionResult* first_failure() const;
};

ValidationReport validate_family(const StratifiedFamily& family, int samples,
                                 std::uint64_t seed = 1, double tol = 1e-9);

} // namespace glue
