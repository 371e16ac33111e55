#include <doctest.h>

#include <cmath>
#include <vector>

#include "martlab/norms.hpp"
#include "martlab/riesz.hpp"
#include "random_instances.hpp"

using namespace martlab;
using martlab::testing::random_martingale;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double max_abs(const std::vector<double>& a) {
  double d = 0.0;
  for (double x : a) d = std::max(d, std::abs(x));
  return d;
}

// Martingale whose only nonzero difference is one block on level n.
Martingale single_block(const FiltrationSpec& s, int n, std::size_t atom, const std::vector<double>& block) {
  std::vector<double> data(s.total_atoms() * static_cast<std::size_t>(s.ell), 0.0);
  const std::size_t at = (s.level_offset(n) + atom * static_cast<std::size_t>(s.m)) * static_cast<std::size_t>(s.ell);
  std::copy(block.begin(), block.end(), data.begin() + static_cast<std::ptrdiff_t>(at));
  return {s, std::move(data)};
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> out;
  for (int n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

}  // namespace

TEST_CASE("I_0 is the identity, I_alpha scales single levels, I_a I_b = I_{a+b}") {
  const FiltrationSpec s(3, 6, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Martingale f = random_martingale(s, seed);
    CHECK(riesz_potential(f, 0.0).data() == f.data());
    const double a = 0.1 * static_cast<double>(seed % 7), b = 0.37;
    const Martingale ab = riesz_potential(riesz_potential(f, a), b);
    const Martingale c = riesz_potential(f, a + b);
    CHECK(max_abs_diff(ab.data(), c.data()) <= 1e-12 * max_abs(f.data()));
    const Martingale g = riesz_potential(f, a);
    for (int n = 1; n <= s.depth; ++n) {
      const auto fn = f.difference(n).values, gn = g.difference(n).values;
      for (std::size_t k = 0; k < fn.size(); ++k) CHECK(gn[k] == doctest::Approx(fn[k] * std::pow(3.0, -a * n)).epsilon(1e-14));
    }
    CHECK(g.f0()[0] == f.f0()[0]);
  }
  CHECK_THROWS_AS((void)riesz_potential(Martingale::zero(s), -0.1), std::invalid_argument);
}

TEST_CASE("I_alpha is linear") {
  const FiltrationSpec s(4, 4);
  const Martingale f = random_martingale(s, 1), g = random_martingale(s, 2);
  std::vector<double> sum(f.data().size());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = 2.0 * f.data()[k] - 3.0 * g.data()[k];
  const Martingale lhs = riesz_potential(Martingale(s, sum), 0.4);
  const auto a = riesz_potential(f, 0.4).data(), b = riesz_potential(g, 0.4).data();
  for (std::size_t k = 0; k < sum.size(); ++k) CHECK(std::abs(lhs.data()[k] - (2.0 * a[k] - 3.0 * b[k])) <= 1e-12);
}

TEST_CASE("single scale: ||I_alpha f_n||_q / ||f_n||_p is the block ratio, independent of n") {
  const double p = 2.0, q = 4.0, alpha = (q - p) / (q * p);
  const FiltrationSpec s(3, 7);
  const std::vector<double> block{2.0, -0.5, -1.5};
  double lq = 0.0, lp = 0.0;
  for (double x : block) lq += std::pow(std::abs(x), q), lp += std::pow(std::abs(x), p);
  const double block_ratio = std::pow(lq, 1.0 / q) / std::pow(lp, 1.0 / p);
  for (int n = 1; n <= s.depth; ++n) {
    const Martingale f = single_block(s, n, s.atoms_at(n - 1) / 2, block);
    const double ratio = lp_norm(evaluate(riesz_potential(f, alpha), s.depth), q) / lp_norm(evaluate(f, s.depth), p);
    CHECK(std::abs(ratio - block_ratio) <= 1e-12);
    CHECK(ratio <= 1.0);
  }
  // the extreme zero-sum block (1, -1, 0) gives 2^{1/q - 1/p}
  const Martingale f = single_block(s, 3, 0, {1.0, -1.0, 0.0});
  const double ratio = lp_norm(evaluate(riesz_potential(f, alpha), 3), q) / lp_norm(evaluate(f, 3), p);
  CHECK(std::abs(ratio - std::pow(2.0, 1.0 / q - 1.0 / p)) <= 1e-12);
}

TEST_CASE("delta martingale: closed forms") {
  for (int m : {3, 4, 5}) {
    const FiltrationSpec s(m, 7);
    const Martingale f = delta_martingale(s);
    CHECK(f.f0()[0] == 0.0);
    for (int n = 0; n <= s.depth; ++n) {
      const double expected = 2.0 - 2.0 * std::pow(m, -n);
      CHECK(std::abs(lp_norm(evaluate(f, n), 1.0) - expected) <= 1e-12);
    }
    // F_N + 1 is m^N on the leaf 0...0 (digit j = 0) and zero elsewhere
    const auto fn = evaluate(f, s.depth);
    CHECK(fn.values[0] == doctest::Approx(std::pow(m, s.depth) - 1.0).epsilon(1e-15));
    for (std::size_t i = 1; i < fn.size(); ++i) CHECK(fn.values[i] == -1.0);
    CHECK(h1_norm(f) >= 0.5 * s.depth * (1.0 - 1.0 / m));
  }
  const FiltrationSpec s2(3, 4, 2);
  const Martingale g = delta_martingale(s2, 2, {0.6, -0.8});
  const auto top = evaluate(g, 4);
  const std::size_t leaf = 2 + 3 * (2 + 3 * (2 + 3 * 2));
  CHECK(top.at(leaf)[0] == doctest::Approx(0.6 * 80.0));
  CHECK(top.at(leaf)[1] == doctest::Approx(-0.8 * 80.0));
  CHECK_THROWS_AS((void)delta_martingale(s2, 3), std::invalid_argument);
}

TEST_CASE("delta counterexample: bounded L1, level terms equal the derived constant, linear growth") {
  for (const auto& [m, p] : std::vector<std::pair<int, double>>{{3, 2.0}, {3, 1.5}, {4, 3.0}, {5, 2.0}}) {
    const auto d = delta_counterexample(p, m, range(2, 8));
    const double c = (std::pow(m - 1.0, p) + m - 1.0) / std::pow(m, p);
    CHECK(d.level_constant == doctest::Approx(c).epsilon(1e-14));
    for (double t : d.level_terms) CHECK(std::abs(t - c) <= 1e-12 * c);
    for (double l : d.l1) CHECK(l <= 2.0);
    CHECK(std::abs(d.power_slope - c) <= 1e-10);
    CHECK(d.report.verdict == Verdict::Growing);
    // the potential itself keeps pace with the level sum (almost disjoint supports)
    for (std::size_t i = 0; i < d.power_sum.size(); ++i) {
      CHECK(d.potential_power[i] >= 0.3 * d.power_sum[i]);
      CHECK(d.potential_power[i] <= 10.0 * d.power_sum[i]);
      if (i > 0) CHECK(d.potential_power[i] - d.potential_power[i - 1] >= 0.3 * c);
    }
  }
}

TEST_CASE("HLS: random dense inputs stay bounded") {
  const auto r = hls_experiment(2.0, 4.0, 3, range(2, 8), 20, 5);
  CHECK(r.verdict == Verdict::Bounded);
  for (double x : r.ratio) {
    CHECK(x > 0.0);
    CHECK(x < 3.0);
  }
  CHECK(r.rows.size() == 7 * 20);
  CHECK_THROWS_AS((void)hls_experiment(2.0, 2.0, 3, {3}, 1, 1), std::invalid_argument);
}

TEST_CASE("main inequality: single-level W-martingales obey the local constant p") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int m = 3 + static_cast<int>(seed % 3), ell = 1 + static_cast<int>(seed % 2);
    const double p = 1.25 + 0.25 * static_cast<double>(seed % 6);
    const SubspaceW w = random_subspace(m, ell, 1 + static_cast<int>(seed % 3), seed);
    const FiltrationSpec s(m, 5, ell);
    const int level = 1 + static_cast<int>(seed % 5);
    std::vector<double> profile(5, 0.0);
    profile[static_cast<std::size_t>(level - 1)] = 1.0;
    const Martingale f = random_w_martingale(w, s, profile, seed);
    CHECK(main_inequality_lhs(f, p) <= p * l1_norm(f) * (1.0 + 1e-12));
  }
}

TEST_CASE("main inequality: bounded under the second condition, growing on a delta-containing W") {
  const SubspaceW w = random_subspace(3, 2, 2, 11);
  REQUIRE(!check_second_condition(w).violated);
  const auto r = main_inequality_experiment(w, 2.0, range(3, 8), 10, 3);
  CHECK(r.verdict == Verdict::Bounded);
  const auto rm = running_max(r.ratio);
  for (std::size_t i = 3; i < rm.size(); ++i) CHECK(rm[i] <= rm[2] * (1.0 + 1e-12));

  const SubspaceW dw(3, 2, {rank_one_block(delta_vector(3, 1), Eigen::Vector2d(1.0, 2.0)), w.basis().col(0)});
  const auto g = main_inequality_delta(dw, 2.0, range(4, 10));
  CHECK(g.verdict == Verdict::Growing);
  CHECK(g.ratio.back() >= 1.5 * g.ratio.front());
  CHECK_THROWS_AS((void)main_inequality_delta(w, 2.0, {4}), std::invalid_argument);
}

TEST_CASE("triangle route and weak-type endpoint") {
  const double p = 2.0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 2), 6, 1 + static_cast<int>(seed % 2));
    const Martingale f = random_martingale(s, seed, 1.0, true);
    const Martingale g = riesz_potential(f, (p - 1.0) / p);
    const double whole = lorentz_p1_norm(evaluate(g, s.depth), p);
    CHECK(whole <= 2.0 * main_inequality_lhs(f, p));
    CHECK(besov_potential_norm(f, p) <= main_inequality_lhs(f, p) * (1.0 + 1e-12));
  }
  // weak L_p of I F against E|F_N| over depths, including the delta martingale
  std::vector<double> ratios;
  for (int n = 2; n <= 9; ++n) {
    const FiltrationSpec s(3, n);
    double worst = weak_lp_norm(evaluate(riesz_potential(delta_martingale(s), 0.5), n), p) / l1_norm(delta_martingale(s));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Martingale f = random_martingale(s, seed, 1.0, true);
      worst = std::max(worst, weak_lp_norm(evaluate(riesz_potential(f, 0.5), n), p) / l1_norm(f));
    }
    ratios.push_back(worst);
  }
  for (double r : ratios) CHECK(r <= 3.0);
}

TEST_CASE("report verdicts need five depths and at least square-root growth") {
  EmbeddingReport r;
  r.depths = range(4, 10);
  for (int n : r.depths) r.rows.push_back({n, 0, double(n), 1.0, double(n)});
  finalize_report(r);
  CHECK(r.verdict == Verdict::Growing);
  CHECK(std::abs(r.slope - r.predicted_rate) <= 1e-12);

  EmbeddingReport flat;
  flat.depths = range(4, 10);
  for (int n : flat.depths) flat.rows.push_back({n, 0, 1.0, 1.0, 1.0 + 0.01 * std::sin(n)});
  finalize_report(flat);
  CHECK(flat.verdict == Verdict::Bounded);

  EmbeddingReport short_run;
  short_run.depths = range(4, 7);
  for (int n : short_run.depths) short_run.rows.push_back({n, 0, double(n), 1.0, double(n)});
  finalize_report(short_run);
  CHECK(short_run.verdict == Verdict::Bounded);

  const auto rm = running_max({1.0, 3.0, 2.0, 4.0});
  CHECK(rm == std::vector<double>{1.0, 3.0, 3.0, 4.0});
}
