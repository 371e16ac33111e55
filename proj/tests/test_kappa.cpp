#include <doctest.h>

#include <cmath>
#include <vector>

#include "martlab/kappa.hpp"
#include "oracles.hpp"
#include "martlab/norms.hpp"
#include "random_instances.hpp"

using namespace martlab;
using martlab::testing::line_oracle;
using martlab::testing::delta_w;
using martlab::testing::span_example;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (double d : x) v(i++) = d;
  return v;
}

}  // namespace

TEST_CASE("kappa_v closed forms") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  for (double t : {0.0, 0.3, 1.0}) CHECK(kappa_v(zero, t) == 0.0);
  const Eigen::VectorXd d = delta_vector(3, 1);
  CHECK(kappa_v(d, 0.5) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-14));
  CHECK(std::abs(kappa_v(d, 0.5) - 0.549306) < 1e-6);
  for (double t : {0.0, 0.1, 0.25, 0.7, 1.0}) CHECK(kappa_v(d, t) == doctest::Approx((1 - t) * std::log(3.0)).epsilon(1e-13));
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd v(5);
    for (int j = 0; j < 5; ++j) v(j) = uniform01(rng);
    v = v / v.sum() * 5.0 - Eigen::VectorXd::Ones(5);  // 1 + v is a positive vector with mean 1
    CHECK(std::abs(kappa_v(v, 1.0)) < 1e-14);
    // continuity at theta = 0
    CHECK(kappa_v(v, 1e-7) == doctest::Approx(kappa_v(v, 0.0)).epsilon(1e-5));
  }
}

TEST_CASE("entropy functional") {
  CHECK(entropy_functional(Eigen::VectorXd::Zero(3)) == 0.0);
  CHECK(entropy_functional(delta_vector(3, 0)) == doctest::Approx(-std::log(3.0)).epsilon(1e-14));
  CHECK(entropy_functional(vec({1, -1, 0})) == doctest::Approx(-2.0 * std::log(2.0) / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)entropy_functional(vec({-2, 1, 1})), std::invalid_argument);
}

TEST_CASE("polytope vertices") {
  // single line: endpoints of the feasible segment
  const auto v1 = feasible_vertices(vec({1, -1, 0}).normalized());
  REQUIRE(v1.size() == 2);
  for (const auto& v : v1) CHECK(v.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  // all of V: the m delta vectors
  const auto all = feasible_vertices(zero_sum_basis(4));
  CHECK(all.size() == 4);
  for (const auto& v : all) {
    int minus = 0;
    for (Eigen::Index j = 0; j < 4; ++j) minus += v(j) == -1.0 ? 1 : 0;
    CHECK(minus == 3);
  }
}

TEST_CASE("W = {0}") {
  const KappaSolver k(SubspaceW::zero(3, 2));
  for (double t : theta_grid(11)) CHECK(k.kappa(t).value == 0.0);
  CHECK(k.kappa_prime_one().value == 0.0);
  CHECK(k.dimension_bound() == 1.0);
  const auto gap = k.strict_gap(2.0);
  CHECK(gap.strict);
  CHECK(gap.margin == doctest::Approx(0.5 * std::log(3.0)));
}

TEST_CASE("delta-containing W: kappa is the line (1 - theta) log m") {
  for (int m : {3, 4, 5}) {
    for (int ell : {1, 2, 3}) {
      const KappaSolver k(delta_w(m, ell));
      for (double t : theta_grid(21)) {
        CHECK(std::abs(k.kappa(t).value - (1 - t) * std::log(m)) <= 1e-9);
      }
      CHECK(std::abs(k.kappa_prime_one().value + std::log(m)) <= 1e-9);
      CHECK(std::abs(k.dimension_bound()) <= 1e-9);
      for (double p : {1.5, 2.0, 4.0, kInfinity}) {
        const auto g = k.strict_gap(p);
        CHECK_FALSE(g.strict);
        CHECK(std::abs(g.margin) <= 1e-9);
      }
    }
  }
  // a larger W containing the delta direction
  Rng rng(4);
  Eigen::VectorXd extra(8);
  for (Eigen::Index i = 0; i < 8; ++i) extra(i) = standard_normal(rng);
  const SubspaceW w(4, 2, {rank_one_block(delta_vector(4, 2), vec({0.6, 0.8})), center_block(4, 2, extra)});
  const KappaSolver k(w);
  CHECK(std::abs(k.kappa(0.3).value - 0.7 * std::log(4.0)) <= 1e-9);
  CHECK(std::abs(k.dimension_bound()) <= 1e-9);
}

TEST_CASE("span example (1,-1,0) (x) e1") {
  const KappaSolver k(span_example());
  CHECK(k.kappa(0.0).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(k.kappa_prime_one().value - (-2.0 / 3.0 * std::log(2.0))) <= 1e-9);
  CHECK(std::abs(k.kappa_prime_one().value + 0.462098) <= 1e-6);
  CHECK(std::abs(k.dimension_bound() - 0.579380) <= 1e-6);
  CHECK(std::abs(k.kappa(0.5).value - 0.5 * std::log(5.0 / 3.0)) <= 1e-12);
  CHECK(std::abs(k.kappa(0.5).value - 0.255413) <= 1e-6);
  const auto g = k.strict_gap(2.0);
  CHECK(g.strict);
  CHECK(g.margin == doctest::Approx(0.5 * std::log(3.0) - 0.5 * std::log(5.0 / 3.0)));
  for (double t : theta_grid(21)) {
    const auto o = line_oracle(vec({1, -1, 0}), t, 100000);
    CHECK(std::abs(k.kappa(t).value - o.kappa) <= 1e-6);
  }
  CHECK(std::abs(k.kappa_prime_one().value - line_oracle(vec({1, -1, 0}), 1.0, 100000).entropy) <= 1e-6);
  // witness is feasible
  const auto w = k.kappa_prime_one();
  CHECK(span_example().distance(rank_one_block(w.v, w.a)) <= 1e-10 * w.v.norm());
  CHECK(w.v.minCoeff() >= -1.0);
}

TEST_CASE("one-dimensional rank-one W: optimiser equals the grid oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 3 + trial % 4;
    const int ell = 1 + trial % 3;
    if (m * ell > 12) continue;
    Eigen::VectorXd v0(m), a0(ell);
    for (int j = 0; j < m; ++j) v0(j) = standard_normal(rng);
    v0.array() -= v0.mean();
    for (int c = 0; c < ell; ++c) a0(c) = standard_normal(rng);
    const KappaSolver k(SubspaceW(m, ell, {rank_one_block(v0, a0)}));
    for (double t : theta_grid(11)) CHECK(std::abs(k.kappa(t).value - line_oracle(v0, t, 100000).kappa) <= 1e-6);
    CHECK(std::abs(k.kappa_prime_one().value - line_oracle(v0, 1.0, 100000).entropy) <= 1e-6);
  }
}

TEST_CASE("two-dimensional W with two real rank-one lines (m = 3, ell = 2)") {
  Rng rng(31);
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 10; ++trial) {
    Eigen::VectorXd v0(3), a0(2), b(6);
    for (int j = 0; j < 3; ++j) v0(j) = standard_normal(rng);
    v0.array() -= v0.mean();
    a0 << standard_normal(rng), standard_normal(rng);
    for (int i = 0; i < 6; ++i) b(i) = standard_normal(rng);
    const SubspaceW w(3, 2, {rank_one_block(v0, a0), center_block(3, 2, b)});
    // Rank-one elements of w: s * x + t * y with det = 0 in V-coordinates.
    const Eigen::MatrixXd u = zero_sum_basis(3);
    auto coords = [&](const Eigen::VectorXd& f) {
      Eigen::Matrix<double, 3, 2> x;
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 2; ++c) x(j, c) = f(j * 2 + c);
      return Eigen::Matrix2d(u.transpose() * x);
    };
    const Eigen::Matrix2d x = coords(w.basis().col(0)), y = coords(w.basis().col(1));
    const double c2 = x.determinant(), c0 = y.determinant();
    const double c1 = x(0, 0) * y(1, 1) + x(1, 1) * y(0, 0) - x(0, 1) * y(1, 0) - x(1, 0) * y(0, 1);
    const double disc = c1 * c1 - 4 * c2 * c0;
    if (disc < 1e-6 || std::abs(c2) < 1e-6) continue;
    ++tested;
    std::vector<Eigen::VectorXd> lines;
    for (double sgn : {-1.0, 1.0}) {
      const double r = (-c1 + sgn * std::sqrt(disc)) / (2 * c2);  // s / t
      const Eigen::Matrix2d z = r * x + y;
      Eigen::JacobiSVD<Eigen::Matrix2d> svd(z, Eigen::ComputeFullU);
      lines.push_back(u * svd.matrixU().col(0));
    }
    const KappaSolver k(w);
    CHECK(k.directions().size() == 2);
    for (double t : theta_grid(6)) {
      const double oracle = std::max(line_oracle(lines[0], t, 20000).kappa, line_oracle(lines[1], t, 20000).kappa);
      CHECK(std::abs(k.kappa(t).value - oracle) <= 1e-6);
    }
    const double e = std::min(line_oracle(lines[0], 1.0, 20000).entropy, line_oracle(lines[1], 1.0, 20000).entropy);
    CHECK(std::abs(k.kappa_prime_one().value - e) <= 1e-6);
  }
  CHECK(tested >= 5);
}

TEST_CASE("profile invariants: convex, non-increasing, kappa(1) = 0, secant slopes below the end slope") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int m = 3 + static_cast<int>(seed % 3), ell = 1 + static_cast<int>(seed % 3);
    const int k = 1 + static_cast<int>(seed % static_cast<std::uint64_t>((m - 1) * ell));
    SubspaceW w = random_subspace(m, ell, k, seed);
    if (seed % 2 == 0) {
      // plant a feasible rank-one line so the profile is nontrivial
      std::vector<Eigen::VectorXd> gens;
      for (Eigen::Index c = 0; c < w.basis().cols(); ++c) gens.push_back(w.basis().col(c));
      Eigen::VectorXd v0 = Eigen::VectorXd::LinSpaced(m, -1.0, 1.0);
      gens.push_back(rank_one_block(v0, Eigen::VectorXd::Ones(ell)));
      w = SubspaceW(m, ell, gens);
    }
    const KappaSolver solver(w);
    const auto prof = solver.profile(theta_grid(21));
    const auto& val = prof.values;
    CHECK(std::abs(val.back().value) <= 1e-12);
    for (std::size_t i = 0; i + 1 < val.size(); ++i) CHECK(val[i + 1].value <= val[i].value + 1e-8);
    for (std::size_t i = 1; i + 1 < val.size(); ++i) {
      CHECK(val[i].value <= 0.5 * (val[i - 1].value + val[i + 1].value) + 1e-8);
    }
    const double kp = prof.kappa_prime_one.value;
    CHECK(kp <= 1e-12);
    CHECK(kp >= -std::log(m) - 1e-12);
    for (std::size_t i = 0; i + 1 < val.size(); ++i) {
      CHECK(kp >= val[i].value / (prof.theta[i] - 1.0) - 1e-8);
    }
    // supremum dominance over every candidate the solver examined
    for (const auto& d : solver.directions()) {
      for (const auto& v : d.vertices) {
        for (std::size_t i = 0; i < val.size(); ++i) CHECK(val[i].value >= kappa_v(v, prof.theta[i]) - 1e-12);
      }
    }
    // the strict gap is the second structural condition
    for (double p : {1.5, 2.0, 3.0}) CHECK(solver.strict_gap(p).strict == !check_second_condition(w).violated);
  }
}

TEST_CASE("non-intensive linear algebra: sampled (a, b) never beat e^{kappa(1/p) + delta}") {
  const SubspaceW w = span_example();
  const KappaSolver solver(w);
  Rng rng(12);
  const double p = 2.0;
  const double bound_exp = solver.kappa(1.0 / p).value;
  struct Pair {
    double eps, delta;
  };
  for (const Pair pr : {Pair{1e-2, 0.1}, Pair{1e-3, 0.05}, Pair{1e-4, 0.02}}) {
    int accepted = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      Eigen::VectorXd a(2);
      a << standard_normal(rng), standard_normal(rng);
      // b_j in W: t * (1,-1,0) (x) e1 plus, half of the time, a nudge towards the extremal direction
      const double t = (uniform01(rng) * 2.2 - 1.1) * a.norm();
      const Eigen::VectorXd b = t * rank_one_block(vec({1, -1, 0}), Eigen::VectorXd::Unit(2, 0));
      double lhs1 = 0.0, lhsp = 0.0;
      for (int j = 0; j < 3; ++j) {
        const double nb = (a + b.segment(j * 2, 2)).norm();
        lhs1 += nb / 3.0;
        lhsp += std::pow(nb, p) / 3.0;
      }
      if (lhs1 - a.norm() > pr.eps * a.norm()) continue;
      ++accepted;
      CHECK(std::pow(lhsp, 1.0 / p) <= std::exp(bound_exp + pr.delta) * a.norm());
    }
    CHECK(accepted > 0);
  }
}
