#include "martlab/kappa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace martlab {

namespace {

constexpr double kSnap = 1e-10;

double sigma_min(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  return s.size() < a.cols() ? 0.0 : s(a.cols() - 1);
}

Eigen::MatrixXd lift(const Eigen::MatrixXd& q, const Eigen::MatrixXd& u, const Eigen::VectorXd& a) {
  Eigen::MatrixXd out(q.rows(), u.cols());
  for (Eigen::Index k = 0; k < u.cols(); ++k) out.col(k) = q * rank_one_block(u.col(k), a);
  return out;
}

// Calls f on every d-subset of [0, m).
template <class F>
void for_each_subset(int m, int d, F&& f) {
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    int i = d - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - d + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < d; ++k) idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
}

}  // namespace

double kappa_v(const Eigen::VectorXd& v, double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("kappa_v: theta must be >= 0");
  const Eigen::Index m = v.size();
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) top = std::max(top, std::log(std::abs(1.0 + v(j))));
  if (theta == 0.0 || std::isinf(top)) return top;
  // theta log((1/m) sum exp(L_j / theta)) evaluated around the largest term.
  double s = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double l = std::log(std::abs(1.0 + v(j)));
    if (std::isfinite(l)) s += std::exp((l - top) / theta);
  }
  return top + theta * (std::log(s) - std::log(static_cast<double>(m)));
}

double entropy_functional(const Eigen::VectorXd& v) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double x = 1.0 + v(j);
    if (x < -1e-9) throw std::invalid_argument("entropy_functional: v_j < -1");
    if (x > 0.0) s += x * std::log(x);
  }
  return -s / static_cast<double>(v.size());
}

std::vector<double> theta_grid(int k) {
  if (k < 2) throw std::invalid_argument("theta_grid: need at least two points");
  std::vector<double> t(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / (k - 1);
  return t;
}

std::vector<Eigen::VectorXd> feasible_vertices(const Eigen::MatrixXd& n) {
  const int m = static_cast<int>(n.rows()), d = static_cast<int>(n.cols());
  std::vector<Eigen::VectorXd> out;
  if (d == 0 || d > m) return out;
  const double scale = n.cwiseAbs().maxCoeff();
  for_each_subset(m, d, [&](const std::vector<int>& rows) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) a.row(i) = n.row(rows[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (lu.rank() < d) return;
    const Eigen::VectorXd y = lu.solve(Eigen::VectorXd::Constant(d, -1.0));
    Eigen::VectorXd v = n * y;
    const double tol = 1e-9 * std::max(1.0, scale * y.norm());
    if ((v.array() < -1.0 - tol).any()) return;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (std::abs(v(j) + 1.0) <= kSnap * std::max(1.0, scale * y.norm())) v(j) = -1.0;
    }
    for (const auto& u : out) {
      if ((u - v).cwiseAbs().maxCoeff() <= 1e-9) return;
    }
    out.push_back(v);
  });
  return out;
}

KappaSolver::KappaSolver(const SubspaceW& w, KappaOptions options) : w_(w) { find_directions(options); }

std::size_t KappaSolver::candidate_count() const noexcept {
  std::size_t n = 1;
  for (const auto& d : dirs_) n += d.vertices.size();
  return n;
}

void KappaSolver::add_direction(const Eigen::VectorXd& a_in, const KappaOptions& options) {
  const Eigen::VectorXd a = a_in.normalized();
  const Eigen::MatrixXd q = w_.complement_projector();
  const Eigen::MatrixXd u = zero_sum_basis(w_.m());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lift(q, u, a), Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  std::vector<Eigen::Index> null;
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    const double sk = k < s.size() ? s(k) : 0.0;
    if (sk <= options.null_threshold) null.push_back(k);
  }
  if (null.empty()) return;
  Eigen::MatrixXd lb(w_.m(), static_cast<Eigen::Index>(null.size()));
  for (std::size_t i = 0; i < null.size(); ++i) lb.col(static_cast<Eigen::Index>(i)) = u * svd.matrixV().col(null[i]);
  const Eigen::MatrixXd proj = lb * lb.transpose();
  for (const auto& d : dirs_) {
    if (d.lbasis.cols() == lb.cols() && (d.lbasis * d.lbasis.transpose() - proj).cwiseAbs().maxCoeff() < 1e-8) return;
  }
  RankOneDirection dir{a, lb, feasible_vertices(lb)};
  dirs_.push_back(std::move(dir));
}

void KappaSolver::find_directions(const KappaOptions& options) {
  const int ell = w_.ell(), m = w_.m();
  if (w_.dim() == 0) return;
  const Eigen::MatrixXd q = w_.complement_projector();
  const Eigen::MatrixXd u = zero_sum_basis(m);
  auto sigma_at = [&](double phi) { return sigma_min(lift(q, u, Eigen::Vector2d(std::cos(phi), std::sin(phi)))); };

  if (ell == 1) {
    add_direction(Eigen::VectorXd::Ones(1), options);
    return;
  }
  // Directions a with delta_j (x) a in W carry the extremal vertices; when the
  // rank-one directions form a continuum, sampling would only find them by luck.
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd d = delta_vector(m, j).normalized();
    Eigen::MatrixXd qd(q.rows(), ell);
    for (int c = 0; c < ell; ++c) qd.col(c) = q * rank_one_block(d, Eigen::VectorXd::Unit(ell, c));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(qd, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    for (int c = 0; c < ell; ++c) {
      if ((c < s.size() ? s(c) : 0.0) <= options.null_threshold) add_direction(svd.matrixV().col(c), options);
    }
  }
  if (ell == 2) {
    const int n = std::max(64, options.angle_grid);
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = sigma_at(M_PI * i / n);
    for (int i = 0; i < n; ++i) {
      const double left = f[static_cast<std::size_t>((i + n - 1) % n)];
      const double right = f[static_cast<std::size_t>((i + 1) % n)];
      const double mid = f[static_cast<std::size_t>(i)];
      if (mid > left || mid > right || (mid == left && i > 0)) continue;
      // Golden-section search on the bracketing cell pair.
      double lo = M_PI * (i - 1) / n, hi = M_PI * (i + 1) / n;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      double f1 = sigma_at(x1), f2 = sigma_at(x2);
      for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
        if (f1 <= f2) {
          hi = x2, x2 = x1, f2 = f1;
          x1 = hi - g * (hi - lo), f1 = sigma_at(x1);
        } else {
          lo = x1, x1 = x2, f1 = f2;
          x2 = lo + g * (hi - lo), f2 = sigma_at(x2);
        }
      }
      const double phi = f1 <= f2 ? x1 : x2;
      Eigen::VectorXd a = Eigen::Vector2d(std::cos(phi), std::sin(phi));
      Eigen::VectorXd v;
      rank_one_descent(q, u, v, a, 50);
      rank_one_polish(q, u, v, a, 50);
      if (sigma_min(lift(q, u, a)) <= options.accept_sigma) add_direction(a, options);
    }
    return;
  }
  const int starts = options.starts > 0 ? options.starts : 64 + 16 * ell;
  Rng rng(options.seed);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd a(ell);
    if (s < ell) {
      a = Eigen::VectorXd::Unit(ell, s);
    } else {
      for (int k = 0; k < ell; ++k) a(k) = standard_normal(rng);
      a.normalize();
    }
    Eigen::VectorXd v;
    rank_one_descent(q, u, v, a, 500);
    rank_one_polish(q, u, v, a, 50);
    if (sigma_min(lift(q, u, a)) <= options.accept_sigma) add_direction(a, options);
  }
}

KappaWitness KappaSolver::kappa(double theta) const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("kappa: theta must lie in [0, 1]");
  KappaWitness best{0.0, Eigen::VectorXd::Zero(w_.m()), Eigen::VectorXd()};
  for (const auto& d : dirs_) {
    for (const auto& v : d.vertices) {
      const double k = kappa_v(v, theta);
      if (k > best.value) best = {k, v, d.a};
    }
  }
  return best;
}

KappaWitness KappaSolver::kappa_prime_one() const {
  KappaWitness best{0.0, Eigen::VectorXd::Zero(w_.m()), Eigen::VectorXd()};
  for (const auto& d : dirs_) {
    for (const auto& v : d.vertices) {
      const double e = entropy_functional(v);
      if (e < best.value) best = {e, v, d.a};
    }
  }
  return best;
}

double KappaSolver::dimension_bound() const {
  const double b = 1.0 + kappa_prime_one().value / std::log(static_cast<double>(w_.m()));
  return std::clamp(b, 0.0, 1.0);
}

GapResult KappaSolver::strict_gap(double p) const {
  if (!(p > 1.0)) throw std::invalid_argument("strict_gap: p must be > 1");
  const double theta = std::isinf(p) ? 0.0 : 1.0 / p;
  GapResult r;
  r.kappa = kappa(theta).value;
  r.bound = (1.0 - theta) * std::log(static_cast<double>(w_.m()));
  r.margin = r.bound - r.kappa;
  r.strict = r.margin > kGapTolerance;
  return r;
}

KappaProfile KappaSolver::profile(const std::vector<double>& thetas) const {
  KappaProfile out;
  out.theta = thetas;
  for (double t : thetas) out.values.push_back(kappa(t));
  out.kappa_prime_one = kappa_prime_one();
  out.dimension_bound = dimension_bound();
  return out;
}

}  // namespace martlab
