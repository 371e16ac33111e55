#pragma once

// Shift-invariant subspaces W of (V (x) C^ell) described fiberwise through the
// Fourier transform on a finite abelian group G with |G| = m:
//   W = { f : G -> C^ell | f^(gamma) in W_gamma for every gamma != 0 }.
// Elements of G are indexed 0..m-1 in mixed radix over the invariant factors
// (first factor most significant); 0 is the identity.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "martlab/spacew.hpp"

namespace martlab {

using cplx = std::complex<double>;

class FiniteAbelianGroup {
 public:
  /// Z_{n_1} x ... x Z_{n_k}; every factor >= 2. Throws otherwise.
  explicit FiniteAbelianGroup(std::vector<int> factors);
  /// Z_m.
  [[nodiscard]] static FiniteAbelianGroup cyclic(int m);

  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] const std::vector<int>& factors() const noexcept { return factors_; }
  [[nodiscard]] int add(int x, int y) const { return add_[static_cast<std::size_t>(x * order_ + y)]; }
  [[nodiscard]] int negate(int x) const { return neg_[static_cast<std::size_t>(x)]; }
  [[nodiscard]] std::vector<int> coordinates(int x) const;
  [[nodiscard]] int element(const std::vector<int>& coords) const;

  /// chi_gamma(z) = exp(2 pi i sum_k gamma_k z_k / n_k); rows gamma, columns z.
  [[nodiscard]] const Eigen::MatrixXcd& characters() const noexcept { return chars_; }
  /// f^(gamma) = m^{-1/2} sum_z f(z) conj(chi_gamma(z)), applied to every column of f (m x ell).
  [[nodiscard]] Eigen::MatrixXcd dft(const Eigen::MatrixXcd& f) const;
  [[nodiscard]] Eigen::MatrixXcd inverse_dft(const Eigen::MatrixXcd& fhat) const;
  /// (S_z f)(x) = f(z + x).
  [[nodiscard]] Eigen::MatrixXcd shift(const Eigen::MatrixXcd& f, int z) const;
  /// The subgroup generated by a set of elements, sorted.
  [[nodiscard]] std::vector<int> generated_subgroup(const std::vector<int>& gens) const;

 private:
  std::vector<int> factors_;
  int order_ = 1;
  std::vector<int> add_;
  std::vector<int> neg_;
  Eigen::MatrixXcd chars_;
};

/// Subspaces W_gamma of C^ell for gamma = 1..m-1 (entry gamma-1), each given by
/// an orthonormal basis as columns (ell x d, d = 0 allowed).
struct FiberFamily {
  int ell = 1;
  std::vector<Eigen::MatrixXcd> fibers;

  [[nodiscard]] const Eigen::MatrixXcd& at(int gamma) const { return fibers.at(static_cast<std::size_t>(gamma - 1)); }
  [[nodiscard]] int dim(int gamma) const { return static_cast<int>(at(gamma).cols()); }
};

/// Orthonormal basis of the span of the columns (rank cut 1e-10 relative).
[[nodiscard]] Eigen::MatrixXcd orthonormal_span(const Eigen::MatrixXcd& a);
/// Orthonormal basis of the intersection of the column spans (singular-value cut `threshold`).
[[nodiscard]] Eigen::MatrixXcd intersect_subspaces(const std::vector<Eigen::MatrixXcd>& spans, double threshold = 1e-9);

/// Builds a family from arbitrary spanning columns per gamma. Throws if the
/// count is not m - 1 or a block has the wrong row count.
[[nodiscard]] FiberFamily make_fibers(int ell, const std::vector<Eigen::MatrixXcd>& spanning);

/// W as a complex subspace: orthonormal basis of m*ell-vectors (row-major
/// m x ell blocks), one element chi_gamma (x) b / sqrt(m) per fiber basis vector.
struct ComplexW {
  int m = 0;
  int ell = 0;
  Eigen::MatrixXcd basis;
};

[[nodiscard]] ComplexW build_shift_invariant_w(const FiniteAbelianGroup& g, const FiberFamily& fibers);
/// Largest distance from W of a shifted basis element, over all shifts.
[[nodiscard]] double shift_invariance_residual(const FiniteAbelianGroup& g, const ComplexW& w);
/// C^ell read as R^{2 ell} (coordinates [Re, Im]): the real span of b and i b
/// for every basis element b, as a SubspaceW of V^{2 ell}.
[[nodiscard]] SubspaceW realify(const ComplexW& w);

struct FiberCheck {
  bool holds = true;
  int gamma = 0;       // violating dual element (antisymmetry only)
  Eigen::VectorXcd a;  // unit witness, empty when the condition holds
};

/// True iff the intersection of all W_gamma (gamma != 0) is {0}. The witness a
/// satisfies (m delta_0 - 1) (x) a in W.
[[nodiscard]] FiberCheck check_cancellation_fibers(const FiberFamily& fibers);
/// True iff W_gamma cap W_{-gamma} = {0} for every gamma != 0.
[[nodiscard]] FiberCheck check_antisymmetry_fibers(const FiniteAbelianGroup& g, const FiberFamily& fibers);

struct SubgroupBound {
  int k = 1;                  // least K with every W^{-1}(a) inside a subgroup of order <= K
  std::vector<int> subgroup;  // a subgroup attaining K
  double bound = 1.0;         // 1 - log K / log m
  std::size_t visited = 0;    // subsets examined
};

/// Enumerates the sets T of nonzero duals with a common nonzero vector in
/// every W_gamma cap W_{-gamma}, gamma in T. Throws std::runtime_error if more
/// than `budget` subsets are visited and std::invalid_argument for m > 16.
[[nodiscard]] SubgroupBound antisymmetry_subgroup_bound(const FiniteAbelianGroup& g, const FiberFamily& fibers,
                                                        std::size_t budget = 1u << 22);

/// Random family: each fiber is a Gaussian subspace of dimension dims[gamma-1].
/// When `plant` is nonempty it is added to every fiber whose index is listed in `planted`.
[[nodiscard]] FiberFamily random_fibers(int ell, const std::vector<int>& dims, std::uint64_t seed,
                                        const Eigen::VectorXcd& plant = {}, const std::vector<int>& planted = {});

}  // namespace martlab
