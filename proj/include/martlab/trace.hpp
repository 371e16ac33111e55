#pragma once

// Traces of Riesz potentials on reference measures nu: the (alpha, p)
// Frostman condition nu(w)^{1/p} <= C m^{(alpha - 1) n}, the embedding
// experiments I_alpha : W-martingales -> L_p(nu), and the extremal measure
// nu = F_0 + I_gamma F built from the kappa(1/2) witness.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "martlab/filtration.hpp"
#include "martlab/riesz.hpp"
#include "martlab/spacew.hpp"

namespace martlab {

/// max over atoms of levels 0..N of nu(w)^{1/p} m^{(1 - alpha) n}. Throws for
/// signed or vector nu and p < 1.
[[nodiscard]] double frostman_constant(const TreeMeasure& nu, double alpha, double p);

/// The same maximum restricted to each level n = 0..N (entry n).
[[nodiscard]] std::vector<double> frostman_level_maxima(const TreeMeasure& nu, double alpha, double p);

/// Multiplicative cascade with Dirichlet(1) splits, water-filled so that every
/// level-n atom has nu(w) <= m^{(alpha - 1) p n}; the Frostman constant is at
/// most 1 by construction. When alpha < 1 - 1/p the caps cannot hold the mass
/// and the excess is dropped, so nu(T) < 1.
[[nodiscard]] TreeMeasure capped_cascade(const FiltrationSpec& spec, double alpha, double p, std::uint64_t seed);

/// F_0 = a, F_k = m^k a on the ancestors of `target` up to its level and zero
/// off that path; constant below the target. E|F_N| = |a|.
[[nodiscard]] Martingale atom_indicator_martingale(const FiltrationSpec& spec, const AtomId& target,
                                                   const std::vector<double>& a = {});

struct TraceReport {
  double alpha = 0.0;
  double p = 1.0;
  double frostman_constant = 0.0;       // at the deepest requested depth
  std::vector<double> frostman_by_depth;
  // lhs = ||I_alpha F||_{L_p(nu)}, rhs = E|F_N|; F is truncated and nu aggregated to each depth.
  EmbeddingReport embedding;
};

struct TreeTraceRow {
  int trial = 0;
  std::size_t tree = 0;
  AtomId root;
  double lhs = 0.0;  // sum over members w (level n) of m^{-alpha (n+1)} ||f_{n+1} chi_w||_{L_1(nu)}
  double rhs = 0.0;  // m^{-n_0} |F_{n_0}(w_0)|
  double ratio = 0.0;
};

struct TraceL1Report {
  TraceReport trace;
  double epsilon = 0.1;
  std::vector<TreeTraceRow> trees;  // every flat tree of every trial, at the deepest depth
  double max_tree_ratio = 0.0;
  // Worst trial of: ||I_alpha F||_{L_1(nu)} <= |F_0| nu(T) + convex sum + sum of tree sums.
  double split_slack = 0.0;  // min of (right side - left side) / right side, >= 0 when it holds
  // Worst trial of: convex sum <= C ||F_Co||_{B_1^{0,1}}, C the (alpha, 1) Frostman constant.
  double convex_slack = 0.0;
};

/// Requires p > 1, nu nonnegative scalar with nu.spec().m == W.m() and depth >= max depth.
[[nodiscard]] TraceReport trace_experiment_p(const TreeMeasure& nu, const SubspaceW& w, double alpha, double p,
                                             const std::vector<int>& depths, int trials, std::uint64_t seed);

[[nodiscard]] TraceL1Report trace_experiment_l1(const TreeMeasure& nu, const SubspaceW& w, double alpha,
                                                const std::vector<int>& depths, int trials, std::uint64_t seed,
                                                double epsilon = 0.1);

struct TraceSharpness {
  TreeMeasure nu;
  Martingale f;  // F (x) a with F_n = prod (1 + h_i), F_0 = a
  Eigen::VectorXd v{};
  Eigen::VectorXd a{};
  double gamma = 0.0;
  double alpha = 0.0;  // kappa(0) / log m - gamma
  double kappa0 = 0.0;
  double kappa_half = 0.0;
  double linearity_defect = 0.0;  // max |kappa(theta) - (1 - theta) kappa(0)| on the grid
  std::vector<int> depths{};        // 1..N
  std::vector<double> frostman{};   // (alpha, 1) constant of nu aggregated to each depth
  std::vector<double> level_terms{};   // m^{-(alpha + gamma) n} E|f_n|^2, n = 1..N
  std::vector<double> partial_sums{};  // 1 + sum_{n <= N} level_terms = int I_alpha F dnu
  std::vector<double> trace_norm{};    // ||I_alpha F_N||_{L_1(nu)}
  double level_constant = 0.0;  // 1 - e^{-kappa(0)}, the exact value of every level term
  double partial_slope = 0.0;   // least-squares slope of partial_sums against N
  double norm_slope = 0.0;      // the same for trace_norm
};

inline constexpr double kLinearityTolerance = 1e-6;

/// Throws std::invalid_argument unless 0 < gamma < kappa(0)/log m, spec matches
/// W, and kappa is linear on a 21-point grid (defect <= kLinearityTolerance).
[[nodiscard]] TraceSharpness build_sharpness_trace_measure(const SubspaceW& w, double gamma,
                                                           const FiltrationSpec& spec);

}  // namespace martlab
