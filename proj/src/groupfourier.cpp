#include "martlab/groupfourier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace martlab {

namespace {

constexpr double kRankCut = 1e-10;

Eigen::MatrixXcd null_space(const Eigen::MatrixXcd& a, double threshold) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Eigen::MatrixXcd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < n; ++k) {
    if ((k < s.size() ? s(k) : 0.0) <= threshold) keep.push_back(k);
  }
  Eigen::MatrixXcd out(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = svd.matrixV().col(keep[i]);
  return out;
}

}  // namespace

FiniteAbelianGroup::FiniteAbelianGroup(std::vector<int> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("FiniteAbelianGroup: no factors");
  for (int n : factors_) {
    if (n < 2) throw std::invalid_argument("FiniteAbelianGroup: factors must be >= 2");
    order_ *= n;
  }
  const auto m = static_cast<std::size_t>(order_);
  add_.resize(m * m);
  neg_.resize(m);
  std::vector<std::vector<int>> coords(m);
  for (int x = 0; x < order_; ++x) coords[static_cast<std::size_t>(x)] = coordinates(x);
  for (int x = 0; x < order_; ++x) {
    const auto& cx = coords[static_cast<std::size_t>(x)];
    std::vector<int> c(cx.size());
    for (std::size_t k = 0; k < cx.size(); ++k) c[k] = (factors_[k] - cx[k]) % factors_[k];
    neg_[static_cast<std::size_t>(x)] = element(c);
    for (int y = 0; y < order_; ++y) {
      const auto& cy = coords[static_cast<std::size_t>(y)];
      for (std::size_t k = 0; k < cx.size(); ++k) c[k] = (cx[k] + cy[k]) % factors_[k];
      add_[static_cast<std::size_t>(x) * m + static_cast<std::size_t>(y)] = element(c);
    }
  }
  chars_.resize(order_, order_);
  for (int g = 0; g < order_; ++g) {
    for (int z = 0; z < order_; ++z) {
      double phase = 0.0;
      const auto& cg = coords[static_cast<std::size_t>(g)];
      const auto& cz = coords[static_cast<std::size_t>(z)];
      // Reduce the integer product first so the phase stays in [0, 1).
      for (std::size_t k = 0; k < cg.size(); ++k) {
        phase += static_cast<double>((cg[k] * cz[k]) % factors_[k]) / factors_[k];
      }
      chars_(g, z) = std::polar(1.0, 2.0 * M_PI * phase);
    }
  }
}

FiniteAbelianGroup FiniteAbelianGroup::cyclic(int m) { return FiniteAbelianGroup({m}); }

std::vector<int> FiniteAbelianGroup::coordinates(int x) const {
  if (x < 0 || x >= order_) throw std::out_of_range("FiniteAbelianGroup: element out of range");
  std::vector<int> c(factors_.size());
  for (std::size_t k = factors_.size(); k-- > 0;) {
    c[k] = x % factors_[k];
    x /= factors_[k];
  }
  return c;
}

int FiniteAbelianGroup::element(const std::vector<int>& coords) const {
  if (coords.size() != factors_.size()) throw std::invalid_argument("FiniteAbelianGroup: wrong coordinate count");
  int x = 0;
  for (std::size_t k = 0; k < factors_.size(); ++k) x = x * factors_[k] + coords[k];
  return x;
}

Eigen::MatrixXcd FiniteAbelianGroup::dft(const Eigen::MatrixXcd& f) const {
  if (f.rows() != order_) throw std::invalid_argument("dft: row count must equal |G|");
  return chars_.conjugate() * f / std::sqrt(static_cast<double>(order_));
}

Eigen::MatrixXcd FiniteAbelianGroup::inverse_dft(const Eigen::MatrixXcd& fhat) const {
  if (fhat.rows() != order_) throw std::invalid_argument("inverse_dft: row count must equal |G|");
  return chars_.transpose() * fhat / std::sqrt(static_cast<double>(order_));
}

Eigen::MatrixXcd FiniteAbelianGroup::shift(const Eigen::MatrixXcd& f, int z) const {
  Eigen::MatrixXcd out(f.rows(), f.cols());
  for (int x = 0; x < order_; ++x) out.row(x) = f.row(add(z, x));
  return out;
}

std::vector<int> FiniteAbelianGroup::generated_subgroup(const std::vector<int>& gens) const {
  std::vector<char> in(static_cast<std::size_t>(order_), 0);
  std::vector<int> out{0};
  in[0] = 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int g : gens) {
      const int y = add(out[i], g);
      if (!in[static_cast<std::size_t>(y)]) {
        in[static_cast<std::size_t>(y)] = 1;
        out.push_back(y);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXcd orthonormal_span(const Eigen::MatrixXcd& a) {
  if (a.cols() == 0) return Eigen::MatrixXcd(a.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > kRankCut * std::max(1.0, s(0))) ++r;
  return svd.matrixU().leftCols(r);
}

Eigen::MatrixXcd intersect_subspaces(const std::vector<Eigen::MatrixXcd>& spans, double threshold) {
  if (spans.empty()) throw std::invalid_argument("intersect_subspaces: nothing to intersect");
  const Eigen::Index n = spans.front().rows();
  for (const auto& u : spans) {
    if (u.rows() != n) throw std::invalid_argument("intersect_subspaces: ambient dimensions differ");
    if (u.cols() == 0) return Eigen::MatrixXcd(n, 0);
  }
  // a lies in every span iff (I - U U^*) a = 0 for all of them.
  Eigen::MatrixXcd stack(n * static_cast<Eigen::Index>(spans.size()), n);
  for (std::size_t k = 0; k < spans.size(); ++k) {
    stack.middleRows(static_cast<Eigen::Index>(k) * n, n) =
        Eigen::MatrixXcd::Identity(n, n) - spans[k] * spans[k].adjoint();
  }
  return null_space(stack, threshold);
}

FiberFamily make_fibers(int ell, const std::vector<Eigen::MatrixXcd>& spanning) {
  if (ell < 1) throw std::invalid_argument("make_fibers: ell must be >= 1");
  FiberFamily out{ell, {}};
  for (const auto& s : spanning) {
    if (s.rows() != ell) throw std::invalid_argument("make_fibers: fiber has wrong ambient dimension");
    out.fibers.push_back(orthonormal_span(s));
  }
  return out;
}

namespace {

void check_family(const FiniteAbelianGroup& g, const FiberFamily& fibers) {
  if (static_cast<int>(fibers.fibers.size()) != g.order() - 1) {
    throw std::invalid_argument("fiber family must have one fiber per nonzero dual element");
  }
  for (const auto& f : fibers.fibers) {
    if (f.rows() != fibers.ell) throw std::invalid_argument("fiber has wrong ambient dimension");
  }
}

}  // namespace

ComplexW build_shift_invariant_w(const FiniteAbelianGroup& g, const FiberFamily& fibers) {
  check_family(g, fibers);
  const int m = g.order(), ell = fibers.ell;
  Eigen::Index dim = 0;
  for (const auto& f : fibers.fibers) dim += f.cols();
  ComplexW w{m, ell, Eigen::MatrixXcd(static_cast<Eigen::Index>(m) * ell, dim)};
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::Index col = 0;
  for (int gamma = 1; gamma < m; ++gamma) {
    const auto& b = fibers.at(gamma);
    for (Eigen::Index k = 0; k < b.cols(); ++k, ++col) {
      for (int z = 0; z < m; ++z) {
        for (int c = 0; c < ell; ++c) w.basis(static_cast<Eigen::Index>(z) * ell + c, col) = s * g.characters()(gamma, z) * b(c, k);
      }
    }
  }
  return w;
}

double shift_invariance_residual(const FiniteAbelianGroup& g, const ComplexW& w) {
  double worst = 0.0;
  const Eigen::MatrixXcd proj = w.basis * w.basis.adjoint();
  for (Eigen::Index k = 0; k < w.basis.cols(); ++k) {
    Eigen::MatrixXcd f(w.m, w.ell);
    for (int z = 0; z < w.m; ++z) f.row(z) = w.basis.col(k).segment(static_cast<Eigen::Index>(z) * w.ell, w.ell).transpose();
    for (int z = 0; z < w.m; ++z) {
      const Eigen::MatrixXcd s = g.shift(f, z);
      Eigen::VectorXcd x(static_cast<Eigen::Index>(w.m) * w.ell);
      for (int r = 0; r < w.m; ++r) x.segment(static_cast<Eigen::Index>(r) * w.ell, w.ell) = s.row(r).transpose();
      worst = std::max(worst, (x - proj * x).norm());
    }
  }
  return worst;
}

SubspaceW realify(const ComplexW& w) {
  std::vector<Eigen::VectorXd> blocks;
  const Eigen::Index ell = w.ell;
  for (Eigen::Index k = 0; k < w.basis.cols(); ++k) {
    for (const cplx unit : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
      Eigen::VectorXd b(static_cast<Eigen::Index>(w.m) * 2 * ell);
      for (Eigen::Index z = 0; z < w.m; ++z) {
        for (Eigen::Index c = 0; c < ell; ++c) {
          const cplx x = unit * w.basis(z * ell + c, k);
          b(z * 2 * ell + c) = x.real();
          b(z * 2 * ell + ell + c) = x.imag();
        }
      }
      blocks.push_back(std::move(b));
    }
  }
  if (blocks.empty()) return SubspaceW::zero(w.m, 2 * w.ell);
  return SubspaceW(w.m, 2 * w.ell, blocks);
}

FiberCheck check_cancellation_fibers(const FiberFamily& fibers) {
  FiberCheck r;
  if (fibers.fibers.empty()) return r;
  const Eigen::MatrixXcd common = intersect_subspaces(fibers.fibers);
  if (common.cols() > 0) {
    r.holds = false;
    r.a = common.col(0);
  }
  return r;
}

FiberCheck check_antisymmetry_fibers(const FiniteAbelianGroup& g, const FiberFamily& fibers) {
  check_family(g, fibers);
  FiberCheck r;
  for (int gamma = 1; gamma < g.order(); ++gamma) {
    const Eigen::MatrixXcd both = intersect_subspaces({fibers.at(gamma), fibers.at(g.negate(gamma))});
    if (both.cols() > 0) {
      r.holds = false;
      r.gamma = gamma;
      r.a = both.col(0);
      return r;
    }
  }
  return r;
}

SubgroupBound antisymmetry_subgroup_bound(const FiniteAbelianGroup& g, const FiberFamily& fibers, std::size_t budget) {
  check_family(g, fibers);
  const int m = g.order();
  if (m > 16) throw std::invalid_argument("antisymmetry_subgroup_bound: m must be <= 16");
  std::vector<Eigen::MatrixXcd> pair(static_cast<std::size_t>(m));
  for (int gamma = 1; gamma < m; ++gamma) {
    pair[static_cast<std::size_t>(gamma)] = intersect_subspaces({fibers.at(gamma), fibers.at(g.negate(gamma))});
  }
  SubgroupBound out;
  out.subgroup = {0};
  std::vector<int> chosen;
  // Depth-first over subsets in increasing order; a branch dies as soon as the
  // common intersection is trivial, since supersets only shrink it.
  std::function<void(int, const Eigen::MatrixXcd&)> walk = [&](int next, const Eigen::MatrixXcd& common) {
    for (int gamma = next; gamma < m; ++gamma) {
      const auto& u = pair[static_cast<std::size_t>(gamma)];
      if (u.cols() == 0) continue;
      if (++out.visited > budget) throw std::runtime_error("antisymmetry_subgroup_bound: enumeration budget exceeded");
      const Eigen::MatrixXcd c = chosen.empty() ? u : intersect_subspaces({common, u});
      if (c.cols() == 0) continue;
      chosen.push_back(gamma);
      const auto h = g.generated_subgroup(chosen);
      if (static_cast<int>(h.size()) > out.k) {
        out.k = static_cast<int>(h.size());
        out.subgroup = h;
      }
      walk(gamma + 1, c);
      chosen.pop_back();
    }
  };
  walk(1, Eigen::MatrixXcd(fibers.ell, 0));
  out.bound = 1.0 - std::log(static_cast<double>(out.k)) / std::log(static_cast<double>(m));
  return out;
}

FiberFamily random_fibers(int ell, const std::vector<int>& dims, std::uint64_t seed, const Eigen::VectorXcd& plant,
                          const std::vector<int>& planted) {
  Rng rng(seed);
  std::vector<Eigen::MatrixXcd> spanning;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const int d = dims[k];
    if (d < 0 || d > ell) throw std::invalid_argument("random_fibers: fiber dimension out of range");
    const int gamma = static_cast<int>(k) + 1;
    const bool add = plant.size() > 0 && std::find(planted.begin(), planted.end(), gamma) != planted.end();
    Eigen::MatrixXcd s(ell, d + (add ? 1 : 0));
    for (int c = 0; c < d; ++c) {
      for (int r = 0; r < ell; ++r) {
        const double re = standard_normal(rng);
        s(r, c) = cplx(re, standard_normal(rng));
      }
    }
    if (add) {
      if (plant.size() != ell) throw std::invalid_argument("random_fibers: planted vector has wrong size");
      s.col(d) = plant;
    }
    spanning.push_back(std::move(s));
  }
  return make_fibers(ell, spanning);
}

}  // namespace martlab
