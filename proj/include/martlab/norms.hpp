#pragma once

// Norms of simple functions and martingales on the finite tree. The pointwise
// size of an R^ell value is always its Euclidean norm.

#include <limits>
#include <vector>

#include "martlab/filtration.hpp"

namespace martlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// (sum_w m^{-n} |g(w)|^p)^{1/p}; the maximum for p = infinity. Throws for p < 1.
[[nodiscard]] double lp_norm(const SimpleFunction& g, double p);

/// Lorentz L_{p,1} norm normalised as p * int_0^inf mu{|g| > s}^{1/p} ds
/// (equivalently int_0^1 t^{1/p-1} g*(t) dt). Exact on simple functions. Throws for p <= 1.
[[nodiscard]] double lorentz_p1_norm(const SimpleFunction& g, double p);
/// The same norm for a function given by the magnitudes on some atoms of
/// equal mass atom_weight (zero elsewhere).
[[nodiscard]] double lorentz_p1_norm(std::vector<double> magnitudes, double atom_weight, double p);

/// Weak-L_p quasi-norm sup_s s * mu{|g| > s}^{1/p}. Throws for p < 1.
[[nodiscard]] double weak_lp_norm(const SimpleFunction& g, double p);

/// sum_{n=0}^N m^{beta n} ||f_n||_{L_p} with f_0 = F_0.
[[nodiscard]] double besov_norm(const Martingale& f, double beta, double p);

/// E max_{0<=n<=N} |F_n|.
[[nodiscard]] double h1_norm(const Martingale& f);

/// E |F_N|, the L_1 norm of the martingale.
[[nodiscard]] double l1_norm(const Martingale& f);

/// (sum_w |g(w)|^p nu(w))^{1/p} with nu aggregated to the level of g.
/// Throws for signed or vector nu, for p < 1, or if nu is coarser than g.
[[nodiscard]] double lp_nu_norm(const SimpleFunction& g, const TreeMeasure& nu, double p);

}  // namespace martlab
