#pragma once

// Finite-depth lower Hausdorff dimension tools: antichain Frostman sums, the
// Eggleston entropy formula, and the extremal multiplicative measures.

#include <cstdint>
#include <vector>

#include "martlab/filtration.hpp"
#include "martlab/spacew.hpp"

namespace martlab {

struct AntichainResult {
  double value = 0.0;  // sum over the antichain of (mu(w) - lambda m^{-n beta}); 0 for the empty one
  double mass = 0.0;
  double cost = 0.0;   // sum of m^{-n beta}
  std::vector<AtomId> atoms;
};

/// Exact maximum over antichains of the atom tree (levels 0..N) by a bottom-up
/// pass. Atom weights are mu(w) for scalar measures and |mu(w)| for vector
/// ones. Throws for a signed scalar measure or lambda < 0.
[[nodiscard]] AntichainResult antichain_max(const TreeMeasure& mu, double beta, double lambda, bool witness = true);

enum class FrostmanVerdict { Certified, Violated };
[[nodiscard]] const char* to_string(FrostmanVerdict v) noexcept;

struct FrostmanPoint {
  double cost = 0.0;
  double mass = 0.0;
};

struct FrostmanOptions {
  int lambda_points = 64;       // geometric grid over [m^{-N beta}, m^{N beta}]
  int max_refinements = 4000;   // DP calls spent on the exact hull per depth
  double growth_threshold = 0.01;  // VIOLATED when log_m K grows faster than this per level
};

struct FrostmanCertificate {
  double beta = 0.0;
  double gamma = 1.0;
  std::vector<double> lambda_grid;
  std::vector<double> best_value;       // antichain_max value per lambda at full depth
  std::vector<FrostmanPoint> hull;      // upper hull of (cost, mass) at full depth
  std::vector<int> depths;              // 1..N
  std::vector<double> constant;         // K_d = max over antichains of mass / cost^gamma at depth d
  double growth = 0.0;  // least-squares slope of log_m K_d over the deeper half of the depths
  FrostmanVerdict verdict = FrostmanVerdict::Certified;
  std::vector<AtomId> witness;          // antichain attaining K_N
};

/// Smallest K with sum_C mu <= K (sum_C m^{-n beta})^gamma over all antichains C
/// of depth <= d, for every d. The supremum of mass / cost^gamma over antichains
/// is attained on a vertex of the upper concave hull of their (cost, mass)
/// points, which the lambda scan plus chord refinement enumerates exactly.
[[nodiscard]] FrostmanCertificate frostman_certify(const TreeMeasure& mu, double beta, double gamma,
                                                   FrostmanOptions options = {});

/// -sum p_j log p_j / log m, 0 log 0 = 0. Throws unless p is a probability vector.
[[nodiscard]] double eggleston_dimension(const std::vector<double>& p);

struct MultiplicativeMeasure {
  Eigen::VectorXd v;           // v_j >= -1, sum 0
  std::vector<double> weights; // p_j = (1 + v_j) / m
  TreeMeasure measure;         // leaf mass = prod p_digit
};

/// Leaf masses prod p_{digit} on the depth-N tree. Throws unless v in V with v >= -1.
[[nodiscard]] MultiplicativeMeasure multiplicative_measure(const Eigen::VectorXd& v, const FiltrationSpec& spec);

struct SharpnessMeasure {
  MultiplicativeMeasure measure;
  Martingale lift;       // F (x) a with F_n = prod (1 + h_i); every block lies in W
  Eigen::VectorXd a;     // unit vector, e_0 when W admits no rank-one direction
  double dimension = 1.0;        // eggleston_dimension(weights)
  double dimension_bound = 1.0;  // 1 + kappa'(1) / log m
};

/// The extremal measure built from the kappa'(1) witness of W. spec.ell must equal W.ell().
[[nodiscard]] SharpnessMeasure build_sharpness_measure(const SubspaceW& w, const FiltrationSpec& spec);

struct DigitFrequencyReport {
  std::vector<double> frequencies;
  double max_deviation = 0.0;
  double bound = 0.0;   // 4 sigma of the worst binomial proportion
  bool within = true;
};

/// Samples i.i.d. digit strings of the given length from the weights.
[[nodiscard]] DigitFrequencyReport digit_frequency_test(const std::vector<double>& weights, int samples, int digits,
                                                       std::uint64_t seed);

}  // namespace martlab
