#include "martlab/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "martlab/norms.hpp"

namespace martlab {

namespace {

std::vector<double> atom_norms(const AtomTable& t) {
  const auto& s = t.spec();
  std::vector<double> out(s.total_atoms());
  for (int n = 0; n <= s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) out[s.level_offset(n) + i] = t.norm_at(n, i);
  }
  return out;
}

void check_match(const Martingale& f, const FlatForest& forest, const char* who) {
  if (!(f.spec() == forest.spec)) throw std::invalid_argument(std::string(who) + ": forest built for another filtration");
}

// Copies the m x ell block of f_{n+1} under (n, i) from src into dst.
void copy_block(const FiltrationSpec& s, const std::vector<double>& src, std::vector<double>& dst, int n, std::size_t i) {
  const auto ell = static_cast<std::size_t>(s.ell), m = static_cast<std::size_t>(s.m);
  const std::size_t at = (s.level_offset(n + 1) + i * m) * ell;
  std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(at), m * ell, dst.begin() + static_cast<std::ptrdiff_t>(at));
}

double diff_norm(const Martingale& f, int level, std::size_t index) { return euclidean_norm(f.diff(level, index)); }

}  // namespace

std::size_t FlatForest::convex_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), AtomLabel::Convex));
}

FlatForest classify_atoms(const Martingale& f, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("classify_atoms: epsilon must be > 0");
  const auto& s = f.spec();
  const auto norms = atom_norms(evaluate_all(f));
  const std::size_t internal = s.level_offset(s.depth);
  const auto m = static_cast<std::size_t>(s.m);
  FlatForest out;
  out.spec = s;
  out.epsilon = epsilon;
  out.labels.assign(internal, AtomLabel::Flat);
  out.increment.assign(internal, 0.0);
  out.base.assign(internal, 0.0);
  out.tree_of.assign(internal, -1);
  for (int n = 0; n < s.depth; ++n) {
    const double w = s.atom_weight(n);
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const std::size_t g = s.level_offset(n) + i;
      double mean = 0.0;
      for (std::size_t j = 0; j < m; ++j) mean += norms[s.level_offset(n + 1) + i * m + j];
      mean /= static_cast<double>(m);
      const double inc = w * (mean - norms[g]);
      const double base = w * norms[g];
      out.increment[g] = inc;
      out.base[g] = base;
      if (inc >= epsilon * base && inc > 0.0) out.labels[g] = AtomLabel::Convex;
    }
  }
  // Forest sweep: a flat atom joins its parent's tree, or starts one if the
  // parent is convex (or it is the root of the whole space).
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const std::size_t g = s.level_offset(n) + i;
      const AtomId a{n, i};
      int parent_tree = -1;
      if (n > 0) parent_tree = out.tree_of[s.level_offset(n - 1) + i / m];
      if (out.labels[g] == AtomLabel::Convex) {
        if (parent_tree >= 0) out.trees[static_cast<std::size_t>(parent_tree)].fruits.push_back(a);
        continue;
      }
      if (parent_tree < 0) {
        parent_tree = static_cast<int>(out.trees.size());
        out.trees.push_back(FlatTree{a, {}, {}, {}});
      }
      out.tree_of[g] = parent_tree;
      out.trees[static_cast<std::size_t>(parent_tree)].members.push_back(a);
    }
  }
  for (std::size_t i = 0; i < s.atoms_at(s.depth); ++i) {
    const int t = out.tree_of[s.level_offset(s.depth - 1) + i / m];
    if (t >= 0) out.trees[static_cast<std::size_t>(t)].leaves.push_back({s.depth, i});
  }
  return out;
}

ConvexFlatSplit split_convex_flat(const Martingale& f, const FlatForest& forest) {
  check_match(f, forest, "split_convex_flat");
  const auto& s = f.spec();
  std::vector<double> co(f.data().size(), 0.0), fl(f.data().size(), 0.0);
  for (int c = 0; c < s.ell; ++c) fl[static_cast<std::size_t>(c)] = f.data()[static_cast<std::size_t>(c)];
  for (int n = 0; n < s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const bool convex = forest.labels[s.level_offset(n) + i] == AtomLabel::Convex;
      copy_block(s, f.data(), convex ? co : fl, n, i);
    }
  }
  return {Martingale(s, std::move(co)), Martingale(s, std::move(fl))};
}

Martingale tree_part(const Martingale& f, const FlatForest& forest, std::size_t tree) {
  check_match(f, forest, "tree_part");
  const auto& s = f.spec();
  std::vector<double> out(f.data().size(), 0.0);
  for (const auto& a : forest.trees.at(tree).members) copy_block(s, f.data(), out, a.level, a.index);
  return {s, std::move(out)};
}

StepwiseReport verify_stepwise_identity(const Martingale& f) {
  const auto& s = f.spec();
  const auto norms = atom_norms(evaluate_all(f));
  const auto m = static_cast<std::size_t>(s.m);
  StepwiseReport r;
  CompensatedSum total;
  r.min_summand = 0.0;
  bool first = true;
  for (int n = 0; n < s.depth; ++n) {
    const double w = s.atom_weight(n);
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < m; ++j) mean += norms[s.level_offset(n + 1) + i * m + j];
      const double inc = w * (mean / static_cast<double>(m) - norms[s.level_offset(n) + i]);
      total += inc;
      r.min_summand = first ? inc : std::min(r.min_summand, inc);
      first = false;
    }
  }
  CompensatedSum l1;
  const double wn = s.atom_weight(s.depth);
  for (std::size_t i = 0; i < s.atoms_at(s.depth); ++i) l1 += wn * norms[s.level_offset(s.depth) + i];
  r.increments = total.value();
  r.l1 = l1.value();
  r.telescoped = r.l1 - norms[0];
  r.defect = std::abs(r.increments - r.telescoped);
  const double scale = std::max({r.l1, norms[0], 1e-300});
  r.ok = r.defect <= 1e-12 * scale && r.min_summand >= -1e-12 * scale;
  return r;
}

ConvexLemmaReport verify_convex_lemma(const Martingale& f, const FlatForest& forest) {
  check_match(f, forest, "verify_convex_lemma");
  const auto& s = f.spec();
  const auto m = static_cast<std::size_t>(s.m);
  ConvexLemmaReport r;
  r.constant = (forest.epsilon + 2.0) / forest.epsilon;
  CompensatedSum besov, incs;
  for (int n = 0; n < s.depth; ++n) {
    const double w = s.atom_weight(n + 1);
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const std::size_t g = s.level_offset(n) + i;
      if (forest.labels[g] != AtomLabel::Convex) continue;
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) sum += diff_norm(f, n + 1, i * m + j);
      const double lhs = w * sum;
      const double inc = forest.increment[g];
      besov += lhs;
      incs += inc;
      r.worst_atom_ratio = std::max(r.worst_atom_ratio, lhs / inc);
      if (lhs > r.constant * inc * (1.0 + 1e-12)) r.per_atom_ok = false;
    }
  }
  r.convex_besov = besov.value();
  r.convex_increments = incs.value();
  r.l1 = l1_norm(f);
  const double start = euclidean_norm(f.f0());
  r.aggregate_ok = r.convex_besov <= r.constant * (r.l1 - start) * (1.0 + 1e-12) + 1e-300;
  return r;
}

TreeGrowthReport verify_flat_tree_growth(const Martingale& f, const FlatForest& forest, double p, double alpha) {
  check_match(f, forest, "verify_flat_tree_growth");
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("verify_flat_tree_growth: p must be finite and >= 1");
  const auto& s = f.spec();
  const auto norms = atom_norms(evaluate_all(f));
  const auto m = static_cast<std::size_t>(s.m);
  TreeGrowthReport r;
  r.alpha = alpha;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const auto& tree = forest.trees[t];
    const int n0 = tree.root.level;
    const double root_norm =
        norms[tree.root.global(s)] * std::pow(s.atom_weight(n0), 1.0 / p);
    std::vector<double> power(static_cast<std::size_t>(s.depth - n0), 0.0);
    for (const auto& a : tree.members) {
      const double w = s.atom_weight(a.level + 1);
      for (std::size_t j = 0; j < m; ++j) {
        power[static_cast<std::size_t>(a.level - n0)] += w * std::pow(norms[s.level_offset(a.level + 1) + a.index * m + j], p);
      }
    }
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double num = std::pow(power[k], 1.0 / p);
      const double den = std::exp(alpha * static_cast<double>(k)) * root_norm;
      if (den == 0.0 && num == 0.0) continue;
      const double ratio = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
      r.rows.push_back({t, n0 + static_cast<int>(k), ratio});
      r.max_ratio = std::max(r.max_ratio, ratio);
    }
  }
  return r;
}

TreeSummationReport verify_tree_summation(const Martingale& f, const FlatForest& forest, double p) {
  check_match(f, forest, "verify_tree_summation");
  if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument("verify_tree_summation: p must be finite and > 1");
  const auto& s = f.spec();
  const auto norms = atom_norms(evaluate_all(f));
  const auto m = static_cast<std::size_t>(s.m);
  const auto ell = static_cast<std::size_t>(s.ell);
  const double total_l1 = l1_norm(f);
  // Running value of F_T along each tree, indexed by global atom position.
  std::vector<double> acc(s.total_atoms() * ell, 0.0);
  TreeSummationReport r;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const auto& tree = forest.trees[t];
    const int n0 = tree.root.level;
    std::vector<std::vector<double>> mags(static_cast<std::size_t>(s.depth - n0));
    CompensatedSum tree_l1;
    for (const auto& a : tree.members) {
      const double* here = acc.data() + a.global(s) * ell;
      for (std::size_t j = 0; j < m; ++j) {
        const AtomId c = a.child(s.m, static_cast<int>(j));
        const auto d = f.diff(c.level, c.index);
        mags[static_cast<std::size_t>(a.level - n0)].push_back(euclidean_norm(d));
        double* there = acc.data() + c.global(s) * ell;
        for (std::size_t k = 0; k < ell; ++k) there[k] = here[k] + d[k];
        const bool member = c.level < s.depth && forest.tree_of[c.global(s)] == static_cast<int>(t);
        if (!member) tree_l1 += s.atom_weight(c.level) * euclidean_norm({there, ell});
      }
    }
    CompensatedSum lhs;
    for (std::size_t k = 0; k < mags.size(); ++k) {
      const int n = n0 + static_cast<int>(k);
      const double scale = std::pow(static_cast<double>(s.m), -((p - 1.0) / p) * n);
      lhs += scale * lorentz_p1_norm(std::move(mags[k]), s.atom_weight(n + 1), p);
    }
    TreeSummationRow row;
    row.tree = t;
    row.lhs = lhs.value();
    row.rhs = s.atom_weight(n0) * norms[tree.root.global(s)];
    row.tree_l1 = tree_l1.value();
    if (total_l1 > 0.0) r.max_tree_constant = std::max(r.max_tree_constant, row.tree_l1 / total_l1);
    if (row.lhs == 0.0 && row.rhs == 0.0) continue;
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : std::numeric_limits<double>::infinity();
    r.max_ratio = std::max(r.max_ratio, row.ratio);
    r.rows.push_back(row);
  }
  r.flat_l1 = l1_norm(split_convex_flat(f, forest).flat);
  return r;
}

}  // namespace martlab
