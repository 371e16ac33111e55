#pragma once

// The Riesz potential I_alpha (levelwise multiplier m^{-alpha n} on the
// differences) and the finite-depth embedding experiments built on it.

#include <cstdint>
#include <vector>

#include "martlab/filtration.hpp"
#include "martlab/spacew.hpp"

namespace martlab {

/// Scales f_n by m^{-alpha n} for n >= 1; F_0 is left alone. Throws for alpha < 0.
[[nodiscard]] Martingale riesz_potential(const Martingale& f, double alpha);

/// The product martingale G_n = prod_{i<=n} (1 + h_i) minus its start, times a.
/// h_{n+1} puts the delta vector m e_j - 1 on the children of the one atom
/// where G_n is nonzero, so F_n = (G_n - 1) a, F_0 = 0 and f_{n+1} = h_{n+1} G_n a.
/// a defaults to e_0 in R^ell.
[[nodiscard]] Martingale delta_martingale(const FiltrationSpec& spec, int j = 0, std::vector<double> a = {});

/// sum_{n=1}^N m^{-((p-1)/p) n} ||f_n||_{L_{p,1}}.
[[nodiscard]] double main_inequality_lhs(const Martingale& f, double p);

/// The same sum, one term per level n = 1..N (index n-1).
[[nodiscard]] std::vector<double> main_inequality_terms(const Martingale& f, double p);

enum class Verdict { Bounded, Growing };
[[nodiscard]] const char* to_string(Verdict v) noexcept;

struct EmbeddingRow {
  int depth = 0;
  int trial = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct EmbeddingReport {
  std::vector<int> depths;
  // Per depth, taken from the trial with the largest ratio at that depth.
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> ratio;
  std::vector<EmbeddingRow> rows;  // every (depth, trial)
  double slope = 0.0;           // least-squares slope of log ratio against N
  double predicted_rate = 0.0;  // slope of log N against N over the same depths
  Verdict verdict = Verdict::Bounded;
};

/// Needed to call a growth: at least this many depths.
inline constexpr std::size_t kMinTrendDepths = 5;

/// Fills the per-depth maxima, slope and verdict from report.rows. GROWING
/// means slope > 0.5 * predicted_rate, i.e. at least square-root growth,
/// and needs kMinTrendDepths depths; otherwise BOUNDED.
void finalize_report(EmbeddingReport& report);

/// Running maximum of the per-depth ratio.
[[nodiscard]] std::vector<double> running_max(const std::vector<double>& x);

/// ||I_{(q-p)/(qp)} F||_{L_q} / ||F||_{L_p} at each depth for dense Gaussian
/// scalar martingales, one martingale per trial truncated to each depth.
[[nodiscard]] EmbeddingReport hls_experiment(double p, double q, int m, const std::vector<int>& depths, int trials,
                                             std::uint64_t seed);

struct DeltaReport {
  EmbeddingReport report;  // lhs = power sum, rhs = E|F_N|
  std::vector<double> l1;               // E|F_N|
  std::vector<double> power_sum;        // sum_{n<=N} ||m^{-((p-1)/p) n} f_n||_p^p
  std::vector<double> potential_power;  // ||I_{(p-1)/p} F at level N||_p^p
  std::vector<double> level_terms;      // ||m^{-((p-1)/p) n} f_n||_p^p for n = 1..max depth
  double level_constant = 0.0;  // m^{-p}((m-1)^p + m - 1), the exact value of every level term
  double power_slope = 0.0;     // least-squares slope of power_sum against N
};

/// The delta counterexample at m with p > 1.
[[nodiscard]] DeltaReport delta_counterexample(double p, int m, const std::vector<int>& depths);

/// main_inequality_lhs / E|F_N| for random W-martingales (Gaussian blocks in
/// W-coordinates, F_0 = 0), one martingale per trial truncated to each depth.
[[nodiscard]] EmbeddingReport main_inequality_experiment(const SubspaceW& w, double p, const std::vector<int>& depths,
                                                         int trials, std::uint64_t seed);

/// The same ratio for the delta martingale along a second-condition witness of W.
/// Throws std::invalid_argument if W satisfies the second condition.
[[nodiscard]] EmbeddingReport main_inequality_delta(const SubspaceW& w, double p, const std::vector<int>& depths);

/// ||I_{(p-1)/p} F||_{B_p^{0,1}} = sum_{n>=0} m^{-((p-1)/p) n} ||f_n||_p.
[[nodiscard]] double besov_potential_norm(const Martingale& f, double p);

}  // namespace martlab
