#include "martlab/spacew.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace martlab {

namespace {

void check_shape(int m, int ell) {
  if (m < 3) throw std::invalid_argument("SubspaceW: m must be >= 3");
  if (ell < 1) throw std::invalid_argument("SubspaceW: ell must be >= 1");
}

double column_sum_defect(int m, int ell, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (int c = 0; c < ell; ++c) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += b(j * ell + c);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

// Smallest right singular vector of a (rows >= cols is not required).
Eigen::VectorXd smallest_right_singular(const Eigen::MatrixXd& a, double* sigma) {
  // Eigen of the Gram matrix is accurate enough here only away from zero, so use SVD.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Index n = a.cols();
  const auto& s = svd.singularValues();
  if (sigma) *sigma = s.size() < n ? 0.0 : s(n - 1);
  return svd.matrixV().col(n - 1);
}

}  // namespace

SubspaceW::SubspaceW(OrthonormalTag, int m, int ell, Eigen::MatrixXd basis) : m_(m), ell_(ell), basis_(std::move(basis)) {}

SubspaceW::SubspaceW(int m, int ell, const std::vector<Eigen::VectorXd>& spanning) : m_(m), ell_(ell) {
  check_shape(m, ell);
  const Eigen::Index dim = static_cast<Eigen::Index>(m) * ell;
  if (spanning.empty()) {
    basis_ = Eigen::MatrixXd(dim, 0);
    return;
  }
  Eigen::MatrixXd a(dim, static_cast<Eigen::Index>(spanning.size()));
  for (std::size_t i = 0; i < spanning.size(); ++i) {
    const auto& b = spanning[i];
    if (b.size() != dim) throw std::invalid_argument("SubspaceW: block has size " + std::to_string(b.size()) +
                                                     ", expected " + std::to_string(dim));
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if (!b.allFinite() || column_sum_defect(m, ell, b) > 1e-9 * scale) {
      throw std::invalid_argument("SubspaceW: block " + std::to_string(i) + " does not have zero column sums");
    }
    a.col(static_cast<Eigen::Index>(i)) = b;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double top = s.size() > 0 ? s(0) : 0.0;
  while (rank < s.size() && s(rank) > 1e-10 * top && s(rank) > 1e-300) ++rank;
  basis_ = svd.matrixU().leftCols(rank);
  // Remove the tiny column-sum drift left by rounding.
  for (Eigen::Index k = 0; k < rank; ++k) basis_.col(k) = center_block(m, ell, basis_.col(k));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis_);
  basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(dim, rank);
}

SubspaceW SubspaceW::zero(int m, int ell) {
  check_shape(m, ell);
  return {OrthonormalTag{}, m, ell, Eigen::MatrixXd(static_cast<Eigen::Index>(m) * ell, 0)};
}

SubspaceW SubspaceW::full(int m, int ell) {
  check_shape(m, ell);
  const Eigen::MatrixXd u = zero_sum_basis(m);
  Eigen::MatrixXd b(static_cast<Eigen::Index>(m) * ell, static_cast<Eigen::Index>(m - 1) * ell);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    for (int c = 0; c < ell; ++c) b.col(col++) = rank_one_block(u.col(i), Eigen::VectorXd::Unit(ell, c));
  }
  return {OrthonormalTag{}, m, ell, b};
}

Eigen::VectorXd SubspaceW::project(const Eigen::VectorXd& block) const {
  if (block.size() != basis_.rows()) throw std::invalid_argument("project: block shape does not match (m, ell)");
  return basis_ * (basis_.transpose() * block);
}

double SubspaceW::distance(const Eigen::VectorXd& block) const { return (block - project(block)).norm(); }

Eigen::MatrixXd SubspaceW::complement_projector() const {
  const Eigen::Index n = basis_.rows();
  return Eigen::MatrixXd::Identity(n, n) - basis_ * basis_.transpose();
}

double SubspaceW::basis_defect() const {
  double worst = 0.0;
  if (basis_.cols() > 0) {
    const Eigen::MatrixXd g = basis_.transpose() * basis_;
    worst = (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }
  for (Eigen::Index k = 0; k < basis_.cols(); ++k) worst = std::max(worst, column_sum_defect(m_, ell_, basis_.col(k)));
  return worst;
}

Eigen::MatrixXd zero_sum_basis(int m) {
  // Helmert-style orthonormal basis.
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, m - 1);
  for (int k = 1; k < m; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int j = 0; j < k; ++j) u(j, k - 1) = 1.0 / norm;
    u(k, k - 1) = -static_cast<double>(k) / norm;
  }
  return u;
}

Eigen::VectorXd rank_one_block(const Eigen::VectorXd& v, const Eigen::VectorXd& a) {
  Eigen::VectorXd out(v.size() * a.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) out.segment(j * a.size(), a.size()) = v(j) * a;
  return out;
}

Eigen::VectorXd delta_vector(int m, int j) {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(m, -1.0);
  d(j) = m - 1.0;
  return d;
}

Eigen::VectorXd center_block(int m, int ell, Eigen::VectorXd block) {
  for (int c = 0; c < ell; ++c) {
    double mean = 0.0;
    for (int j = 0; j < m; ++j) mean += block(j * ell + c);
    mean /= m;
    for (int j = 0; j < m; ++j) block(j * ell + c) -= mean;
  }
  return block;
}

SubspaceW random_subspace(int m, int ell, int k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> blocks;
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd b(m * ell);
    for (Eigen::Index t = 0; t < b.size(); ++t) b(t) = standard_normal(rng);
    blocks.push_back(center_block(m, ell, b));
  }
  return {m, ell, blocks};
}

Martingale random_w_martingale(const SubspaceW& w, const FiltrationSpec& spec, const std::vector<double>& profile,
                               std::uint64_t seed, const std::vector<double>& f0) {
  if (spec.m != w.m() || spec.ell != w.ell()) throw std::invalid_argument("random_w_martingale: W does not match the filtration");
  if (!profile.empty() && profile.size() < static_cast<std::size_t>(spec.depth)) {
    throw std::invalid_argument("random_w_martingale: scale profile shorter than the depth");
  }
  if (!f0.empty() && f0.size() != static_cast<std::size_t>(spec.ell)) throw std::invalid_argument("random_w_martingale: f0 has wrong size");
  Rng rng(seed);
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto block_size = static_cast<std::size_t>(spec.m) * ell;
  std::vector<double> data(spec.total_atoms() * ell, 0.0);
  for (std::size_t c = 0; c < f0.size(); ++c) data[c] = f0[c];
  Eigen::VectorXd coeff(w.dim());
  for (int n = 1; n <= spec.depth; ++n) {
    const double scale = profile.empty() ? 1.0 : profile[static_cast<std::size_t>(n - 1)];
    for (std::size_t i = 0; i < spec.atoms_at(n - 1); ++i) {
      if (w.dim() == 0) continue;
      for (Eigen::Index t = 0; t < coeff.size(); ++t) coeff(t) = standard_normal(rng);
      const Eigen::VectorXd b = scale * (w.basis() * coeff);
      double* out = data.data() + (spec.level_offset(n) + i * static_cast<std::size_t>(spec.m)) * ell;
      for (std::size_t t = 0; t < block_size; ++t) out[t] = b(static_cast<Eigen::Index>(t));
    }
  }
  return {spec, std::move(data)};
}

double membership_residual(const Martingale& f, const SubspaceW& w) {
  const auto& s = f.spec();
  if (s.m != w.m() || s.ell != w.ell()) throw std::invalid_argument("membership_residual: W does not match the filtration");
  double worst = 0.0;
  const Eigen::Index size = static_cast<Eigen::Index>(s.m) * s.ell;
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const auto b = f.block(n, i);
      const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(b.data(), size);
      worst = std::max(worst, w.distance(x));
    }
  }
  return worst;
}

const char* to_string(ConditionStatus s) noexcept {
  switch (s) {
    case ConditionStatus::Holds: return "holds";
    case ConditionStatus::Violated: return "violated";
    case ConditionStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

SecondConditionResult check_second_condition(const SubspaceW& w) {
  SecondConditionResult r;
  const int m = w.m(), ell = w.ell();
  const Eigen::MatrixXd q = w.complement_projector();
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd d = delta_vector(m, j).normalized();
    Eigen::MatrixXd lift(m * ell, ell);
    for (int c = 0; c < ell; ++c) lift.col(c) = rank_one_block(d, Eigen::VectorXd::Unit(ell, c));
    double sigma = 0.0;
    const Eigen::VectorXd a = smallest_right_singular(q * lift, &sigma);
    r.min_singular.push_back(sigma);
    if (sigma <= kSecondConditionThreshold && sigma < best) {
      best = sigma;
      r.violated = true;
      r.j = j;
      r.a = a;
    }
  }
  return r;
}

double rank_one_descent(const Eigen::MatrixXd& q, const Eigen::MatrixXd& vbasis, Eigen::VectorXd& v, Eigen::VectorXd& a,
                        int max_iterations, int* iterations) {
  const Eigen::Index m = vbasis.rows(), ell = a.size();
  const Eigen::Index dv = vbasis.cols();
  Eigen::MatrixXd ma(m * ell, dv), mv(m * ell, ell);
  double prev = std::numeric_limits<double>::infinity();
  double obj = prev;
  int it = 0;
  for (; it < max_iterations; ++it) {
    for (Eigen::Index k = 0; k < dv; ++k) ma.col(k) = q * rank_one_block(vbasis.col(k), a);
    double s = 0.0;
    const Eigen::VectorXd c = smallest_right_singular(ma, &s);
    v = vbasis * c;
    for (Eigen::Index k = 0; k < ell; ++k) mv.col(k) = q * rank_one_block(v, Eigen::VectorXd::Unit(ell, k));
    a = smallest_right_singular(mv, &s);
    obj = s * s;
    if ((it > 0 && prev - obj <= 1e-15 * prev) || obj < 1e-30) {
      ++it;
      break;
    }
    prev = obj;
  }
  if (iterations) *iterations = it;
  return obj;
}

double rank_one_polish(const Eigen::MatrixXd& q, const Eigen::MatrixXd& vbasis, Eigen::VectorXd& v, Eigen::VectorXd& a,
                       int max_iterations) {
  const Eigen::Index dv = vbasis.cols(), ell = a.size(), rows = q.rows();
  auto objective = [&](const Eigen::VectorXd& vv, const Eigen::VectorXd& aa) {
    return (q * rank_one_block(vv, aa)).squaredNorm() / (vv.squaredNorm() * aa.squaredNorm());
  };
  Eigen::VectorXd c = vbasis.transpose() * v;
  c.normalize();
  a.normalize();
  double obj = objective(vbasis * c, a);
  Eigen::MatrixXd jac(rows, dv + ell);
  for (int it = 0; it < max_iterations && obj > 0.0; ++it) {
    const Eigen::VectorXd u = vbasis * c;
    for (Eigen::Index k = 0; k < dv; ++k) jac.col(k) = q * rank_one_block(vbasis.col(k), a);
    for (Eigen::Index k = 0; k < ell; ++k) jac.col(dv + k) = q * rank_one_block(u, Eigen::VectorXd::Unit(ell, k));
    const Eigen::VectorXd r = q * rank_one_block(u, a);
    // Minimum-norm step; the scaling direction (c, -a) is in the null space.
    const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-r);
    Eigen::VectorXd c2 = c + step.head(dv), a2 = a + step.tail(ell);
    const double n2 = c2.norm(), na = a2.norm();
    if (!(n2 > 0.0) || !(na > 0.0)) break;
    c2 /= n2;
    a2 /= na;
    const double obj2 = objective(vbasis * c2, a2);
    if (!(obj2 < obj)) break;
    c = c2;
    a = a2;
    obj = obj2;
  }
  v = vbasis * c;
  return obj;
}

FirstConditionResult check_first_condition(const SubspaceW& w, std::uint64_t seed, int starts) {
  FirstConditionResult r;
  const int m = w.m(), ell = w.ell();
  if (w.dim() == 0) {
    r.status = ConditionStatus::Holds;
    r.objective = 1.0;
    return r;
  }
  const Eigen::MatrixXd q = w.complement_projector();
  const Eigen::MatrixXd vb = zero_sum_basis(m);
  if (starts <= 0) starts = 32 + 8 * ell;
  r.starts = starts;
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v, best_a;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd a(ell);
    // The coordinate axes are cheap deterministic starts; the rest are random.
    if (s < ell) {
      a = Eigen::VectorXd::Unit(ell, s);
    } else {
      for (int k = 0; k < ell; ++k) a(k) = standard_normal(rng);
      a.normalize();
    }
    Eigen::VectorXd v;
    int its = 0;
    double obj = rank_one_descent(q, vb, v, a, 200, &its);
    obj = std::min(obj, rank_one_polish(q, vb, v, a, 20));
    r.iterations += its;
    if (obj < best) {
      best = obj;
      best_v = v;
      best_a = a;
    }
  }
  // Polish the winner.
  int its = 0;
  best = std::min(best, rank_one_descent(q, vb, best_v, best_a, 2000, &its));
  r.iterations += its;
  best = std::min(best, rank_one_polish(q, vb, best_v, best_a, 100));
  r.objective = std::max(best, 0.0);
  r.v = best_v;
  r.a = best_a;
  const Eigen::VectorXd x = rank_one_block(best_v, best_a);
  r.witness_residual = w.distance(x) / x.norm();
  if (r.objective <= kFirstViolatedThreshold) {
    r.status = ConditionStatus::Violated;
  } else if (r.objective > kFirstHoldsThreshold) {
    r.status = ConditionStatus::Holds;
  } else {
    r.status = ConditionStatus::Inconclusive;
  }
  return r;
}

StructuralReport check_structure(const SubspaceW& w, std::uint64_t seed) {
  return {check_first_condition(w, seed), check_second_condition(w)};
}

}  // namespace martlab
