#pragma once

// The kappa profile of a subspace W. The feasible set
//   { v : v (x) a in W for some a != 0, v_j >= -1 }
// is a union of polytopes P_a = { v in L_a : v >= -1 }, one for each rank-one
// direction a, where L_a = { v in V : v (x) a in W }. Both kappa(theta) (a
// convex function of v) and the entropy infimum (a concave function of v) are
// extremised at vertices of these polytopes, so once the directions are known
// the computation is a finite vertex enumeration.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "martlab/spacew.hpp"

namespace martlab {

/// theta log((1/m) sum |1+v_j|^{1/theta}); theta = 0 gives log max |1+v_j|.
[[nodiscard]] double kappa_v(const Eigen::VectorXd& v, double theta);

/// -(1/m) sum (1+v_j) log(1+v_j) with 0 log 0 = 0. Requires v_j >= -1.
[[nodiscard]] double entropy_functional(const Eigen::VectorXd& v);

struct RankOneDirection {
  Eigen::VectorXd a;        // unit vector in R^ell
  Eigen::MatrixXd lbasis;   // orthonormal basis of L_a (m x d), d >= 1
  std::vector<Eigen::VectorXd> vertices;  // vertices of P_a (always includes some v with v >= -1)
};

struct KappaWitness {
  double value = 0.0;
  Eigen::VectorXd v;  // zero vector when only v = 0 is feasible
  Eigen::VectorXd a;  // empty when v = 0
};

struct GapResult {
  bool strict = true;
  double kappa = 0.0;  // kappa(1/p)
  double bound = 0.0;  // ((p-1)/p) log m
  double margin = 0.0;
};

struct KappaProfile {
  std::vector<double> theta;
  std::vector<KappaWitness> values;
  KappaWitness kappa_prime_one;
  double dimension_bound = 1.0;
};

struct KappaOptions {
  std::uint64_t seed = 1;
  int starts = 0;               // multistart count for ell >= 3 (0 = automatic)
  int angle_grid = 7200;        // scan resolution for ell = 2
  double accept_sigma = 1e-10;  // a direction is accepted when sigma_min(Q (U (x) a)) <= this
  double null_threshold = 1e-9; // singular-value cut for L_a
};

inline constexpr double kGapTolerance = 1e-9;

class KappaSolver {
 public:
  explicit KappaSolver(const SubspaceW& w, KappaOptions options = {});

  [[nodiscard]] const SubspaceW& subspace() const noexcept { return w_; }
  [[nodiscard]] const std::vector<RankOneDirection>& directions() const noexcept { return dirs_; }
  /// Every candidate vertex, the zero vector included.
  [[nodiscard]] std::size_t candidate_count() const noexcept;

  [[nodiscard]] KappaWitness kappa(double theta) const;
  [[nodiscard]] KappaWitness kappa_prime_one() const;
  /// 1 + kappa'(1) / log m.
  [[nodiscard]] double dimension_bound() const;
  /// kappa(1/p) against ((p-1)/p) log m; p = infinity allowed.
  [[nodiscard]] GapResult strict_gap(double p) const;
  [[nodiscard]] KappaProfile profile(const std::vector<double>& thetas) const;

 private:
  void find_directions(const KappaOptions& options);
  void add_direction(const Eigen::VectorXd& a, const KappaOptions& options);

  SubspaceW w_;
  std::vector<RankOneDirection> dirs_;
};

/// Vertices of { y in R^d : N y >= -1 } mapped to v = N y, entries within
/// 1e-10 (relative) of -1 snapped to -1. N is m x d with full column rank.
[[nodiscard]] std::vector<Eigen::VectorXd> feasible_vertices(const Eigen::MatrixXd& n);

/// Uniform grid 0, 1/(k-1), ..., 1.
[[nodiscard]] std::vector<double> theta_grid(int k);

}  // namespace martlab
