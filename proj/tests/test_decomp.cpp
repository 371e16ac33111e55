#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "martlab/decomp.hpp"
#include "martlab/norms.hpp"
#include "martlab/riesz.hpp"
#include "martlab/spacew.hpp"
#include "random_instances.hpp"

using namespace martlab;
using martlab::testing::random_martingale;
using martlab::testing::random_measure;

namespace {

// Labels from the definition, level by level through evaluate().
std::vector<AtomLabel> oracle_labels(const Martingale& f, double eps) {
  const auto& s = f.spec();
  std::vector<AtomLabel> out;
  for (int n = 0; n < s.depth; ++n) {
    const auto fn = evaluate(f, n), fn1 = evaluate(f, n + 1);
    for (std::size_t i = 0; i < fn.size(); ++i) {
      double children = 0.0;
      for (int j = 0; j < s.m; ++j) children += fn1.norm_at(i * static_cast<std::size_t>(s.m) + static_cast<std::size_t>(j));
      const double inc = children * s.atom_weight(n + 1) - fn.norm_at(i) * s.atom_weight(n);
      const double base = fn.norm_at(i) * s.atom_weight(n);
      out.push_back(inc >= eps * base && inc > 0.0 ? AtomLabel::Convex : AtomLabel::Flat);
    }
  }
  return out;
}

// Scalar martingale whose every atom is convex for eps <= 1: each block pushes
// |F| up by at least a factor 2 on two children.
Martingale all_convex(const FiltrationSpec& s) {
  std::vector<double> data(s.total_atoms(), 0.0);
  AtomTable vals(s);
  vals.at(0, 0)[0] = 0.0;
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const double here = vals.at(n, i)[0];
      const double t = 2.0 * std::abs(here) + 1.0 + 0.1 * static_cast<double>(i % 3);
      for (int j = 0; j < s.m; ++j) {
        const double d = j == 0 ? t : (j == 1 ? -t : 0.0);
        vals.at(n + 1, i * static_cast<std::size_t>(s.m) + static_cast<std::size_t>(j))[0] = here + d;
      }
    }
  }
  return from_cumulative(vals);
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> out;
  for (int n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

}  // namespace

TEST_CASE("labels follow the definition and are traversal independent") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 3), 4, 1 + static_cast<int>(seed % 2));
    const Martingale f = random_martingale(s, seed, 1.0, seed % 2 == 0);
    for (double eps : {0.5, 0.1, 0.02}) {
      const auto forest = classify_atoms(f, eps);
      const auto oracle = oracle_labels(f, eps);
      CHECK(forest.labels == oracle);
    }
  }
  CHECK_THROWS_AS((void)classify_atoms(Martingale::zero(FiltrationSpec(3, 2)), 0.0), std::invalid_argument);
}

TEST_CASE("nonnegative densities are flat everywhere: one tree, all leaves") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 2), 5);
    const Martingale f = measure_to_martingale(random_measure(s, seed));
    for (double eps : {0.5, 0.1, 0.02, 1e-9}) {
      const auto forest = classify_atoms(f, eps);
      CHECK(forest.convex_count() == 0);
      REQUIRE(forest.trees.size() == 1);
      CHECK(forest.trees[0].root == AtomId{0, 0});
      CHECK(forest.trees[0].fruits.empty());
      CHECK(forest.trees[0].leaves.size() == s.atoms_at(s.depth));
    }
  }
}

TEST_CASE("zero martingale is flat; a block under a vanishing F_n is convex") {
  const FiltrationSpec s(3, 3);
  const auto zero = classify_atoms(Martingale::zero(s), 0.1);
  CHECK(zero.convex_count() == 0);
  CHECK(zero.trees.size() == 1);

  AtomTable vals(s);
  for (int n = 0; n <= s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) vals.at(n, i)[0] = 1.0;
  }
  // F_1 = 0 on atom (1, 1), then a sign-flipping block below it
  for (int n = 1; n <= s.depth; ++n) {
    const std::size_t width = s.atoms_at(n - 1);
    for (std::size_t i = width; i < 2 * width; ++i) vals.at(n, i)[0] = 0.0;
  }
  vals.at(2, 3)[0] = 1.0, vals.at(2, 4)[0] = -1.0, vals.at(2, 5)[0] = 0.0;
  for (std::size_t i = 9; i < 18; ++i) vals.at(3, i)[0] = vals.at(2, i / 3)[0];
  vals.at(1, 0)[0] = 2.0, vals.at(1, 2)[0] = 1.0;
  for (std::size_t i = 0; i < 3; ++i) vals.at(2, i)[0] = 2.0;
  for (std::size_t i = 0; i < 9; ++i) vals.at(3, i)[0] = 2.0;
  const Martingale f = from_cumulative(vals);
  const auto forest = classify_atoms(f, 0.1);
  CHECK(forest.base[s.level_offset(1) + 1] == 0.0);
  CHECK(forest.convex({1, 1}));
  CHECK(forest.convex_count() == 1);
}

TEST_CASE("F = F_Co + F_Fl exactly; degenerate labellings") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 2), 5, 1 + static_cast<int>(seed % 2));
    const Martingale f = random_martingale(s, seed);
    const auto forest = classify_atoms(f, 0.1);
    const auto split = split_convex_flat(f, forest);
    for (std::size_t k = 0; k < f.data().size(); ++k) CHECK(split.convex.data()[k] + split.flat.data()[k] == f.data()[k]);
    CHECK(split.convex.f0()[0] == 0.0);
  }
  const FiltrationSpec s(3, 4);
  const Martingale pos = measure_to_martingale(random_measure(s, 3));
  const auto sp = split_convex_flat(pos, classify_atoms(pos, 0.1));
  for (double x : sp.convex.data()) CHECK(x == 0.0);

  const Martingale c = all_convex(s);
  const auto fc = classify_atoms(c, 0.5);
  CHECK(fc.convex_count() == s.level_offset(s.depth));
  CHECK(fc.trees.empty());
  const auto sc = split_convex_flat(c, fc);
  for (double x : sc.flat.data()) CHECK(x == 0.0);
  CHECK_THROWS_AS((void)split_convex_flat(random_martingale(FiltrationSpec(3, 3), 1), fc), std::invalid_argument);
}

TEST_CASE("forest structure: components, maximal roots, distinct fruits, fruit/leaf partition") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 3), 5, 1 + static_cast<int>(seed % 2));
    const Martingale f = random_w_martingale(random_subspace(s.m, s.ell, 2, seed), s, {}, seed, std::vector<double>(static_cast<std::size_t>(s.ell), 0.5));
    const auto forest = classify_atoms(f, 0.1);
    std::vector<int> seen(s.level_offset(s.depth), 0);
    std::set<std::size_t> fruits;
    std::map<std::size_t, int> roots_under;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      const auto& tree = forest.trees[t];
      CHECK(tree.members.front() == tree.root);
      if (tree.root.level > 0) {
        const AtomId parent = tree.root.parent(s.m);
        CHECK(forest.convex(parent));
        ++roots_under[parent.global(s)];
      }
      for (const auto& a : tree.members) {
        CHECK(!forest.convex(a));
        CHECK(tree.root.contains(s.m, a));
        if (a != tree.root) CHECK(forest.tree_of[a.parent(s.m).global(s)] == static_cast<int>(t));
        ++seen[a.global(s)];
      }
      std::size_t covered = 0;  // in leaves of level N
      for (const auto& a : tree.fruits) {
        CHECK(forest.convex(a));
        CHECK(forest.tree_of[a.parent(s.m).global(s)] == static_cast<int>(t));
        CHECK(fruits.insert(a.global(s)).second);
        covered += s.atoms_at(s.depth - a.level);
      }
      for (const auto& a : tree.leaves) {
        CHECK(a.level == s.depth);
        CHECK(tree.root.contains(s.m, a));
        ++covered;
      }
      CHECK(covered == s.atoms_at(s.depth - tree.root.level));
      // pieces are pairwise disjoint
      std::vector<AtomId> pieces = tree.fruits;
      pieces.insert(pieces.end(), tree.leaves.begin(), tree.leaves.end());
      if (pieces.size() < 200) {
        for (std::size_t i = 0; i < pieces.size(); ++i) {
          for (std::size_t j = i + 1; j < pieces.size(); ++j) CHECK(atoms_disjoint(s.m, pieces[i], pieces[j]));
        }
      }
    }
    for (std::size_t g = 0; g < seen.size(); ++g) CHECK(seen[g] == (forest.labels[g] == AtomLabel::Flat ? 1 : 0));
    for (const auto& [parent, count] : roots_under) CHECK(count <= s.m);
  }
}

TEST_CASE("stepwise splitting telescopes and every summand is nonnegative") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 3), 5, 1 + static_cast<int>(seed % 3));
    const bool zero_start = seed % 2 == 0;
    const Martingale f = random_martingale(s, seed, 1.0 + static_cast<double>(seed), zero_start);
    const auto r = verify_stepwise_identity(f);
    CHECK(r.ok);
    CHECK(r.defect <= 1e-12 * r.l1);
    CHECK(r.min_summand >= -1e-12 * r.l1);
    CHECK(std::abs(r.l1 - l1_norm(f)) <= 1e-12 * r.l1);
    if (zero_start) CHECK(std::abs(r.increments - l1_norm(f)) <= 1e-12 * r.l1);
  }
  const auto z = verify_stepwise_identity(Martingale::zero(FiltrationSpec(3, 3)));
  CHECK(z.ok);
  CHECK(z.increments == 0.0);
  CHECK(z.telescoped == 0.0);
}

TEST_CASE("convex atoms: per-atom constant (eps+2)/eps and the Besov aggregate") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const FiltrationSpec s(3 + static_cast<int>(seed % 2), 5, 1 + static_cast<int>(seed % 2));
    const Martingale f = random_martingale(s, seed, 1.0, seed % 3 == 0);
    for (double eps : {1.0, 0.5, 0.1, 0.02}) {
      const auto forest = classify_atoms(f, eps);
      const auto r = verify_convex_lemma(f, forest);
      CHECK(r.constant == doctest::Approx((eps + 2.0) / eps));
      CHECK(r.per_atom_ok);
      CHECK(r.aggregate_ok);
      CHECK(r.worst_atom_ratio <= r.constant * (1.0 + 1e-12));
      const double oracle = besov_norm(split_convex_flat(f, forest).convex, 0.0, 1.0);
      CHECK(std::abs(r.convex_besov - oracle) <= 1e-12 * std::max(1.0, oracle));
      CHECK(r.convex_besov <= r.constant * l1_norm(f) * (1.0 + 1e-12));
    }
  }
  const auto none = verify_convex_lemma(Martingale::zero(FiltrationSpec(3, 3)), classify_atoms(Martingale::zero(FiltrationSpec(3, 3)), 0.1));
  CHECK(none.convex_besov == 0.0);
  CHECK(none.aggregate_ok);
}

TEST_CASE("flat tree growth of the multiplicative delta martingale") {
  const int m = 3;
  const double p = 2.0, margin = 0.05;
  const FiltrationSpec s(m, 8);
  std::vector<double> data = delta_martingale(s).data();
  data[0] = 1.0;  // the product martingale G itself, which is nonnegative
  const Martingale g(s, data);
  const auto forest = classify_atoms(g, 0.1);
  REQUIRE(forest.trees.size() == 1);
  const double alpha = ((p - 1.0) / p) * std::log(m) + margin;
  const auto r = verify_flat_tree_growth(g, forest, p, alpha);
  REQUIRE(r.rows.size() == static_cast<std::size_t>(s.depth));
  for (const auto& row : r.rows) {
    const double expected = std::pow(m, (p - 1.0) / p) * std::exp(-margin * row.level);
    CHECK(std::abs(row.ratio - expected) <= 1e-12 * expected);
  }
  const auto z = verify_flat_tree_growth(Martingale::zero(s), classify_atoms(Martingale::zero(s), 0.1), p, alpha);
  CHECK(z.rows.empty());
  CHECK(z.max_ratio == 0.0);
}

TEST_CASE("tree summation matches the tree parts and the forest reassembles F") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FiltrationSpec s(3, 5, 1 + static_cast<int>(seed % 2));
    const SubspaceW w = random_subspace(3, s.ell, 1 + static_cast<int>(seed % 2), seed);
    const Martingale f = random_w_martingale(w, s, {}, seed, std::vector<double>(static_cast<std::size_t>(s.ell), 1.0));
    const double p = 2.0;
    const auto forest = classify_atoms(f, 0.1);
    const auto r = verify_tree_summation(f, forest, p);
    std::vector<double> rebuilt = split_convex_flat(f, forest).convex.data();
    for (int c = 0; c < s.ell; ++c) rebuilt[static_cast<std::size_t>(c)] = f.data()[static_cast<std::size_t>(c)];
    std::size_t row = 0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      const Martingale ft = tree_part(f, forest, t);
      for (std::size_t k = 0; k < rebuilt.size(); ++k) rebuilt[k] += ft.data()[k];
      double lhs = 0.0;
      const int n0 = forest.trees[t].root.level;
      for (int n = n0; n < s.depth; ++n) lhs += std::pow(3.0, -0.5 * n) * lorentz_p1_norm(ft.difference(n + 1), p);
      if (row < r.rows.size() && r.rows[row].tree == t) {
        CHECK(std::abs(r.rows[row].lhs - lhs) <= 1e-12 * std::max(1.0, lhs));
        CHECK(std::abs(r.rows[row].tree_l1 - l1_norm(ft)) <= 1e-12 * std::max(1.0, l1_norm(ft)));
        ++row;
      }
    }
    CHECK(row == r.rows.size());
    for (std::size_t k = 0; k < rebuilt.size(); ++k) CHECK(std::abs(rebuilt[k] - f.data()[k]) <= 1e-12);
    CHECK(r.max_ratio < std::numeric_limits<double>::infinity());
  }
  // single nonnegative tree: ratio finite over many seeds
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const FiltrationSpec s(3, 5);
    const Martingale f = measure_to_martingale(random_measure(s, seed, 0.0));
    const auto r = verify_tree_summation(f, classify_atoms(f, 0.1), 2.0);
    REQUIRE(r.rows.size() == 1);
    worst = std::max(worst, r.rows[0].ratio);
  }
  CHECK(worst < 10.0);
}
