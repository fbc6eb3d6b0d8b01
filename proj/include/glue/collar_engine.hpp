#pragma once

// Compatible collars G_I for a stratified family.
//
// Collars are straight lines in preferred-chart coordinates.  For a chain I
// from p to q and x in M_I, the flat chart moves x along the inward unit
// coordinate of the facet labelled r_i by lambda_i.  Junction corrections
// (theta maps) and blends towards deeper strata are applied only when the
// family's embeddings do not already carry flat frames to flat frames.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glue/family_model.hpp"
#include "glue/sampling.hpp"

namespace glue {

using Params = std::vector<double>;
using Preimage = std::pair<Point, Params>;

struct CollarOptions {
  double epsilon0 = 0.5;
  double epsilon_floor = 1e-6;
  int check_samples = 64;
  std::uint64_t seed = 1;
};

/// phi_I: M_I x [0,1)^{|I|} -> Mbar(p,q) with an inverse on its image.
struct PreferredChart {
  Chain chain;
  std::function<Point(const Point&, const Params&)> map;
  std::function<std::optional<Preimage>(const Point&)> inverse;
  std::vector<int> corrected_junctions; // positions l whose theta_l is not the identity
  bool blended = false;                 // agrees with deeper collars near deeper strata
};

/// Read-only access to the collars of shorter pairs.
struct CollarMaps {
  std::function<Point(const Chain&, const Point&, const Params&)> glue;
  std::function<std::optional<Preimage>(const Chain&, const Point&)> invert;
};

/// The inward facets at x carrying the labels r_1..r_k of I, in chain order.
/// Throws InputError when x is not in the stratum M_I.
std::vector<FacetRef> collar_frame(const StratifiedFamily& family, const Chain& chain, const Point& x);

/// Flat collar of the stratum: coordinates shifted along the inward frame.
PreferredChart initial_collar(const StratifiedFamily& family, const Chain& chain);

/// Composes phi with theta_1, ..., theta_n so that
/// phi(x1.x2, L1.0.L2) = iota(G(x1, L1), G(x2, L2)) at every junction.
/// Corrections that are the identity at sample points are skipped.
PreferredChart normalize_junctions(const StratifiedFamily& family, PreferredChart phi,
                                   const CollarMaps& shorter, std::uint64_t seed = 1);

struct AtlasRecord {
  Chain chain;
  double epsilon = 0.0;
  std::string mode; // identity, flat, normalized, blended
  std::vector<int> corrected_junctions;
};

class CollarAtlas {
public:
  const StratifiedFamily& family() const;

  double epsilon(const std::string& p, const std::string& q) const;
  double epsilon(const Chain& chain) const { return epsilon(chain.head(), chain.tail()); }
  bool flat(const std::string& p, const std::string& q) const;

  /// G_I(x, L).  Throws RangeError if some lambda_i is outside [0, eps) and
  /// InputError if x is not in M_I.
  Point glue(const Chain& chain, const Point& x, const Params& lambda) const;

  /// G_I without argument checks (used by the checks and by deeper constructions).
  Point evaluate(const Chain& chain, const Point& x, const Params& lambda) const;

  /// (x, L) with G_I(x, L) = y, when y lies in the collar image.
  std::optional<Preimage> invert(const Chain& chain, const Point& y) const;

  /// Differential of G_I with respect to (free coordinates of x, lambda_1..lambda_k).
  Mat differential(const Chain& chain, const Point& x, const Params& lambda) const;

  const PreferredChart& chart(const Chain& chain) const;
  std::vector<AtlasRecord> records() const;
  CollarMaps maps() const;

private:
  struct Impl;
  friend CollarAtlas build_collars(const StratifiedFamily&, const CollarOptions&);
  std::shared_ptr<Impl> impl_;
};

/// Builds the collars by induction on pair length, deepest strata first
/// inside each pair.  Throws InputError if the family fails validation and
/// NumericalAbort if epsilon falls below the floor.
CollarAtlas build_collars(const StratifiedFamily& family, const CollarOptions& options = {});

/// gamma1 #_lambda gamma2 for gamma1 in M(p,r), gamma2 in M(r,q).
Point glue_pair(const CollarAtlas& atlas, const std::string& p, const std::string& r,
                const std::string& q, const Point& gamma1, const Point& gamma2, double lambda);

// Identity checks.

struct IdentityCheck {
  std::string identity; // compat_one_pair, compat_concat, associativity, ...
  std::string pair;
  Chain first;
  Chain second;
  int samples = 0;
  double max_residual = 0.0;
  bool passed = true;
  std::string witness;
};

/// max |G_{I1}(x, L) - G_{I2}(G_{I1}(x, mask(L, I2)), restrict(L, I2))| for I2 <= I1.
IdentityCheck check_compat_one_pair(const CollarAtlas& atlas, const Chain& i1, const Chain& i2,
                                    int samples, std::uint64_t seed = 1, double tol = 1e-9);

/// max |G_{I1.I2}(x1.x2, L1.0.L2) - iota(G_{I1}(x1, L1), G_{I2}(x2, L2))|.
IdentityCheck check_compat_concat(const CollarAtlas& atlas, const Chain& i1, const Chain& i2,
                                  int samples, std::uint64_t seed = 1, double tol = 1e-9);

/// Associativity on the chain p0 > p1 > p2 > p3, over a grid x grid of
/// (lambda1, lambda2) in (0, eps)^2 and `points` random stratum points.
/// Reports the larger of the two-sided residual and the full-chain residual.
IdentityCheck check_associativity(const CollarAtlas& atlas, const Chain& chain, int grid, int points,
                                  std::uint64_t seed = 1, double tol = 1e-9);

/// depth(G_I(x, L)) equals the zero count of L and the stratum is zero_support_subchain(L).
IdentityCheck check_stratum_condition(const CollarAtlas& atlas, const Chain& chain, int samples,
                                      std::uint64_t seed = 1);

/// Random distinct inputs have outputs separated by more than 1e-12.
IdentityCheck check_injective(const CollarAtlas& atlas, const Chain& chain, int samples,
                              std::uint64_t seed = 1);

/// The differential agrees with central differences to relative error `tol`.
IdentityCheck check_differential(const CollarAtlas& atlas, const Chain& chain, int samples,
                                 std::uint64_t seed = 1, double tol = 1e-6);

/// eps_{I1.I2} <= min(eps_{I1}, eps_{I2}) for every composable pair.
IdentityCheck check_epsilon_monotone(const CollarAtlas& atlas);

/// Every identity above over every chain of the family.
std::vector<IdentityCheck> verify_atlas(const CollarAtlas& atlas, int samples, std::uint64_t seed = 1,
                                        double tol = 1e-9);

/// A random point of the open stratum M_I (product of interior points, included).
Point sample_stratum(const StratifiedFamily& family, const Chain& chain, Rng& rng);

// Collars of a single compact manifold with faces.

class SpaceCollars {
public:
  const CorneredSpace& space() const { return space_; }
  const std::vector<std::string>& faces() const { return faces_; }

  /// G_I for a set of face labels I (sorted), x in the open corner stratum F_I.
  Point glue(const std::vector<std::string>& faces, const Point& x, const Params& lambda) const;

  /// The chart facets of x belonging to the faces I, in the order of I.
  std::vector<FacetRef> frame(const std::vector<std::string>& faces, const Point& x) const;

  /// Subsets of the faces with a nonempty common corner stratum.
  std::vector<std::vector<std::string>> corner_sets() const;

private:
  friend SpaceCollars single_space_collars(const CorneredSpace&, const std::vector<std::string>&);
  CorneredSpace space_;
  std::vector<std::string> faces_;
};

/// Collars over faces F_1..F_n with pairwise disjoint interiors covering the
/// boundary, parameters scaled so that every collar is defined on [0,1).
/// Throws InputError on repeated or unknown labels or an uncovered facet.
SpaceCollars single_space_collars(const CorneredSpace& space, const std::vector<std::string>& faces);

/// A random point of the open corner stratum with exactly the given faces active.
Point sample_corner_stratum(const SpaceCollars& collars, const std::vector<std::string>& faces, Rng& rng);

/// max |G_I(x, L) - G_J(G_I(x, L(I-J)), L_{I,J})| over samples, J subset of I.
IdentityCheck check_space_compat(const SpaceCollars& collars, const std::vector<std::string>& big,
                                 const std::vector<std::string>& small, int samples,
                                 std::uint64_t seed = 1, double tol = 1e-9);

} // namespace glue
