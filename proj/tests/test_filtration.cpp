#include <doctest.h>

#include <cmath>
#include <vector>

#include "martlab/filtration.hpp"
#include "random_instances.hpp"

using namespace martlab;

TEST_CASE("filtration spec validation") {
  CHECK_THROWS_AS(FiltrationSpec(2, 3), std::invalid_argument);
  CHECK_THROWS_AS(FiltrationSpec(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(FiltrationSpec(3, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(FiltrationSpec(3, 20), std::invalid_argument);
  const FiltrationSpec s(3, 4, 2);
  CHECK(s.atoms_at(4) == 81);
  CHECK(s.total_atoms() == 1 + 3 + 9 + 27 + 81);
  CHECK(s.level_offset(2) == 4);
  CHECK(s.atom_weight(2) == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("atom addressing") {
  const int m = 4;
  const AtomId a{3, 27};
  CHECK(a.parent(m) == AtomId{2, 6});
  CHECK(a.child(m, 3) == AtomId{4, 111});
  const auto d = a.digits(m);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == 1);
  CHECK(d[1] == 2);
  CHECK(d[2] == 3);
  CHECK(AtomId::from_digits(m, d) == a);
  CHECK(a.ancestor(m, 1) == AtomId{1, 1});
  CHECK(AtomId{1, 1}.contains(m, a));
  CHECK_FALSE(AtomId{1, 0}.contains(m, a));
  CHECK_THROWS_AS((void)AtomId{}.parent(m), std::out_of_range);
}

TEST_CASE("cylinders are nested or disjoint") {
  const int m = 3;
  const FiltrationSpec s(m, 4);
  for (int k1 = 0; k1 <= 4; ++k1) {
    for (int k2 = 0; k2 <= 4; ++k2) {
      for (std::size_t i = 0; i < s.atoms_at(k1); ++i) {
        for (std::size_t j = 0; j < s.atoms_at(k2); ++j) {
          const AtomId a{k1, i}, b{k2, j};
          // Compare leaf ranges directly.
          const std::size_t a0 = i * ipow_size(m, 4 - k1), a1 = (i + 1) * ipow_size(m, 4 - k1);
          const std::size_t b0 = j * ipow_size(m, 4 - k2), b1 = (j + 1) * ipow_size(m, 4 - k2);
          const bool overlap = a0 < b1 && b0 < a1;
          CHECK(overlap == !atoms_disjoint(m, a, b));
          if (overlap) CHECK((a.contains(m, b) || b.contains(m, a)));
        }
      }
    }
  }
}

TEST_CASE("tree distance") {
  const FiltrationSpec s(3, 4);
  const AtomId a = AtomId::from_digits(3, std::vector<int>{0, 1, 2, 0});
  CHECK(tree_distance(s, a, a) == 0.0);
  CHECK(tree_distance(s, a, AtomId::from_digits(3, std::vector<int>{1, 1, 2, 0})) == 1.0);
  CHECK(tree_distance(s, a, AtomId::from_digits(3, std::vector<int>{0, 1, 0, 0})) == doctest::Approx(1.0 / 9.0));
  CHECK(tree_distance(s, a, AtomId::from_digits(3, std::vector<int>{0, 1, 2, 1})) == doctest::Approx(1.0 / 27.0));
  CHECK_THROWS_AS((void)tree_distance(s, a, AtomId{2, 0}), std::invalid_argument);
}

TEST_CASE("martingale construction rejects blocks outside V^ell") {
  const FiltrationSpec s(3, 1, 1);
  CHECK_THROWS_AS(Martingale(s, {0.0, 1.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Martingale(s, {0.0, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(Martingale(s, {0.5, 1.0, -1.0, 0.0}));
}

TEST_CASE("evaluate: zero differences and one root block") {
  const FiltrationSpec s(3, 3, 2);
  std::vector<double> data(s.total_atoms() * 2, 0.0);
  data[0] = 1.5;
  data[1] = -2.0;
  const Martingale flat(s, data);
  for (int n = 0; n <= 3; ++n) {
    const auto g = evaluate(flat, n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g.at(i)[0] == 1.5);
      CHECK(g.at(i)[1] == -2.0);
    }
  }
  // block b at the root
  data[2] = 1.0, data[3] = 0.5, data[4] = -3.0, data[5] = 0.25, data[6] = 2.0, data[7] = -0.75;
  const Martingale one(s, data);
  const auto g1 = evaluate(one, 1);
  CHECK(g1.at(0)[0] == 2.5);
  CHECK(g1.at(1)[0] == -1.5);
  CHECK(g1.at(2)[1] == -2.75);
  CHECK_THROWS_AS((void)evaluate(one, 4), std::out_of_range);
}

TEST_CASE("evaluate agrees with per-leaf ancestor sums") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 2), 5, 2);
    const Martingale f = testing::random_martingale(s, seed);
    const auto leaves = evaluate(f, s.depth);
    for (std::size_t leaf = 0; leaf < s.atoms_at(s.depth); ++leaf) {
      const AtomId id{s.depth, leaf};
      for (int c = 0; c < s.ell; ++c) {
        double sum = f.f0()[static_cast<std::size_t>(c)];
        for (int k = 1; k <= s.depth; ++k) sum += f.diff(k, id.ancestor(s.m, k).index)[static_cast<std::size_t>(c)];
        CHECK(leaves.at(leaf)[static_cast<std::size_t>(c)] == doctest::Approx(sum).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("martingale property per block") {
  const FiltrationSpec s(3, 6, 2);
  const Martingale f = testing::random_martingale(s, 11, 1e3);
  const AtomTable all = evaluate_all(f);
  double worst = 0.0;
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      for (int c = 0; c < s.ell; ++c) {
        double sum = 0.0;
        for (int j = 0; j < s.m; ++j) sum += all.at(n + 1, i * 3 + static_cast<std::size_t>(j))[static_cast<std::size_t>(c)];
        worst = std::max(worst, std::abs(sum - 3.0 * all.at(n, i)[static_cast<std::size_t>(c)]));
      }
    }
  }
  CHECK(worst <= 1e-12 * 1e3);
}

TEST_CASE("cumulative roundtrip") {
  const FiltrationSpec s(4, 4, 3);
  const Martingale f = testing::random_martingale(s, 3);
  const Martingale g = from_cumulative(evaluate_all(f));
  for (std::size_t i = 0; i < f.data().size(); ++i) CHECK(g.data()[i] == doctest::Approx(f.data()[i]).epsilon(1e-12));
}

TEST_CASE("measure to martingale") {
  const FiltrationSpec s(3, 4);
  SUBCASE("uniform measure has density one") {
    const Martingale f = measure_to_martingale(TreeMeasure::uniform(s));
    for (int n = 0; n <= 4; ++n) {
      const auto g = evaluate(f, n);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.at(i)[0] == doctest::Approx(1.0).epsilon(1e-14));
    }
    const TreeMeasure back = martingale_to_measure(f);
    CHECK(back.is_probability());
  }
  SUBCASE("point mass density is m^n along the path") {
    const std::size_t leaf = 50;
    const Martingale f = measure_to_martingale(TreeMeasure::point_mass(s, leaf));
    for (int n = 0; n <= 4; ++n) {
      const auto g = evaluate(f, n);
      const std::size_t anc = AtomId{4, leaf}.ancestor(3, n).index;
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.at(i)[0] == (i == anc ? ipow(3, n) : 0.0));
    }
    const TreeMeasure back = martingale_to_measure(f);
    for (std::size_t i = 0; i < back.leaf_mass().size(); ++i) CHECK(back.leaf_mass()[i] == (i == leaf ? 1.0 : 0.0));
  }
  SUBCASE("dyadic leaf masses roundtrip exactly") {
    Rng rng(5);
    std::vector<double> mass(s.atoms_at(4));
    for (auto& x : mass) x = static_cast<double>(rng() % 1024) / 1024.0;
    const TreeMeasure mu(s, mass);
    const TreeMeasure back = martingale_to_measure(measure_to_martingale(mu));
    for (std::size_t i = 0; i < mass.size(); ++i) CHECK(back.leaf_mass()[i] == mass[i]);
  }
  SUBCASE("E F_N chi_w equals the mass of w") {
    const Martingale f = testing::random_martingale(s, 8);
    const TreeMeasure mu = martingale_to_measure(f);
    const AtomTable masses = mu.atom_masses();
    const auto fn = evaluate(f, 4);
    for (int n = 0; n <= 4; ++n) {
      for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
        double sum = 0.0;
        const std::size_t width = ipow_size(3, 4 - n);
        for (std::size_t l = i * width; l < (i + 1) * width; ++l) sum += fn.at(l)[0] / 81.0;
        CHECK(masses.at(n, i)[0] == doctest::Approx(sum).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("tree measures reject non-additive atom masses") {
  const FiltrationSpec s(3, 1);
  CHECK_NOTHROW((void)TreeMeasure::from_atom_masses(AtomTable(s, {1.0, 0.2, 0.3, 0.5})));
  CHECK_THROWS_AS((void)TreeMeasure::from_atom_masses(AtomTable(s, {1.0, 0.2, 0.3, 0.6})), std::invalid_argument);
}

TEST_CASE("sampling") {
  const FiltrationSpec s(3, 5);
  SUBCASE("point mass is always hit") {
    const auto paths = sample_paths(TreeMeasure::point_mass(s, 77), 100, 9);
    for (const auto& p : paths) CHECK(p.index == 77);
  }
  SUBCASE("uniform level-1 frequencies within four standard errors") {
    const std::size_t n = 100000;
    const auto paths = sample_paths(TreeMeasure::uniform(s), n, 2024);
    std::vector<double> count(3, 0.0);
    for (const auto& p : paths) count[p.ancestor(3, 1).index] += 1.0;
    const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / static_cast<double>(n));
    for (double c : count) CHECK(std::abs(c / static_cast<double>(n) - 1.0 / 3.0) <= 4.0 * se);
  }
  SUBCASE("deterministic given the seed") {
    const auto a = sample_paths(TreeMeasure::uniform(s), 50, 1);
    const auto b = sample_paths(TreeMeasure::uniform(s), 50, 1);
    CHECK(a == b);
  }
  SUBCASE("invalid measures") {
    std::vector<double> mass(s.atoms_at(5), 0.0);
    CHECK_THROWS_AS((void)sample_path(TreeMeasure(s, mass), 1), std::invalid_argument);
    mass[0] = 2.0;
    mass[1] = -1.0;
    CHECK_THROWS_AS((void)sample_path(TreeMeasure(s, mass), 1), std::invalid_argument);
  }
}
