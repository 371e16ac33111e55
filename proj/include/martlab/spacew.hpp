#pragma once

// Subspaces W of V^ell = {m x ell blocks with zero column sums}. A block is
// flattened row-major (row j = child j), so v (x) a is the Kronecker product
// kron(v, a) of length m*ell.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "martlab/filtration.hpp"

namespace martlab {

class SubspaceW {
 public:
  /// Orthonormalises the span of the given blocks (rank threshold 1e-10
  /// relative to the largest singular value). Throws if a block has the wrong
  /// size or does not lie in V^ell.
  SubspaceW(int m, int ell, const std::vector<Eigen::VectorXd>& spanning);

  [[nodiscard]] static SubspaceW zero(int m, int ell);
  /// All of V^ell.
  [[nodiscard]] static SubspaceW full(int m, int ell);

  [[nodiscard]] int m() const noexcept { return m_; }
  [[nodiscard]] int ell() const noexcept { return ell_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(basis_.cols()); }
  /// Orthonormal basis as columns (m*ell x k).
  [[nodiscard]] const Eigen::MatrixXd& basis() const noexcept { return basis_; }

  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& block) const;
  [[nodiscard]] double distance(const Eigen::VectorXd& block) const;
  /// I - P_W on R^{m*ell}.
  [[nodiscard]] Eigen::MatrixXd complement_projector() const;
  /// Largest deviation from orthonormality and from zero column sums.
  [[nodiscard]] double basis_defect() const;

 private:
  struct OrthonormalTag {};
  SubspaceW(OrthonormalTag, int m, int ell, Eigen::MatrixXd basis);
  int m_;
  int ell_;
  Eigen::MatrixXd basis_;
};

/// Orthonormal basis of V = {v in R^m : sum v = 0} as columns (m x (m-1)).
[[nodiscard]] Eigen::MatrixXd zero_sum_basis(int m);
[[nodiscard]] Eigen::VectorXd rank_one_block(const Eigen::VectorXd& v, const Eigen::VectorXd& a);
/// The delta direction m e_j - 1.
[[nodiscard]] Eigen::VectorXd delta_vector(int m, int j);

/// Projects an arbitrary m*ell block onto V^ell (subtracts column means).
[[nodiscard]] Eigen::VectorXd center_block(int m, int ell, Eigen::VectorXd block);

/// k Gaussian blocks projected onto V^ell; dimension min(k, (m-1) ell) almost surely.
[[nodiscard]] SubspaceW random_subspace(int m, int ell, int k, std::uint64_t seed);

/// Difference blocks i.i.d. standard Gaussian in W-coordinates, multiplied by
/// profile[n-1] on level n (profile empty = all ones). F_0 = f0 (zero if empty).
[[nodiscard]] Martingale random_w_martingale(const SubspaceW& w, const FiltrationSpec& spec,
                                             const std::vector<double>& profile, std::uint64_t seed,
                                             const std::vector<double>& f0 = {});

/// Largest distance of a difference block of f from W.
[[nodiscard]] double membership_residual(const Martingale& f, const SubspaceW& w);

enum class ConditionStatus { Holds, Violated, Inconclusive };
[[nodiscard]] const char* to_string(ConditionStatus s) noexcept;

struct SecondConditionResult {
  bool violated = false;
  int j = -1;                      // 0-based index of the violating delta direction
  Eigen::VectorXd a;               // unit witness with (m e_j - 1) (x) a in W
  std::vector<double> min_singular;  // per j
};

struct FirstConditionResult {
  ConditionStatus status = ConditionStatus::Holds;
  /// min over unit v in V, unit a of dist(v (x) a, W)^2.
  double objective = 1.0;
  Eigen::VectorXd v;
  Eigen::VectorXd a;
  double witness_residual = 0.0;  // dist(v (x) a, W) / |v (x) a|
  int starts = 0;
  int iterations = 0;
};

struct StructuralReport {
  FirstConditionResult first;
  SecondConditionResult second;
};

inline constexpr double kSecondConditionThreshold = 1e-9;
inline constexpr double kFirstViolatedThreshold = 1e-12;
inline constexpr double kFirstHoldsThreshold = 1e-6;

[[nodiscard]] SecondConditionResult check_second_condition(const SubspaceW& w);
[[nodiscard]] FirstConditionResult check_first_condition(const SubspaceW& w, std::uint64_t seed = 1, int starts = 0);
[[nodiscard]] StructuralReport check_structure(const SubspaceW& w, std::uint64_t seed = 1);

/// Alternating minimisation of |Q (v (x) a)|^2 over unit v in V and unit a,
/// started from a. Returns the objective; v and a are updated in place.
double rank_one_descent(const Eigen::MatrixXd& q, const Eigen::MatrixXd& vbasis, Eigen::VectorXd& v, Eigen::VectorXd& a,
                        int max_iterations, int* iterations = nullptr);

/// Gauss-Newton refinement of a rank-one candidate (quadratic convergence at
/// exact zeros). Only accepts steps that decrease the normalised objective.
double rank_one_polish(const Eigen::MatrixXd& q, const Eigen::MatrixXd& vbasis, Eigen::VectorXd& v, Eigen::VectorXd& a,
                       int max_iterations);

}  // namespace martlab
