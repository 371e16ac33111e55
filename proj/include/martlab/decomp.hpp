#pragma once

// The epsilon-convex / epsilon-flat labelling of atoms, the splitting
// F = F_Co + F_Fl, the forest of maximal flat trees, and numerical checks of
// the estimates that go with them.

#include <cstdint>
#include <vector>

#include "martlab/filtration.hpp"

namespace martlab {

enum class AtomLabel : std::uint8_t { Flat, Convex };

struct FlatTree {
  AtomId root;
  std::vector<AtomId> members;  // flat atoms, root first, level by level
  std::vector<AtomId> fruits;   // convex atoms whose parent is a member
  std::vector<AtomId> leaves;   // level-N atoms whose parent is a member
};

struct FlatForest {
  FiltrationSpec spec;
  double epsilon = 0.0;
  // Indexed by global atom position, levels 0..N-1.
  std::vector<AtomLabel> labels;
  std::vector<double> increment;  // E(|F_{n+1}| - |F_n|) chi_w
  std::vector<double> base;       // E|F_n| chi_w
  std::vector<int> tree_of;       // tree index of a flat atom, -1 for convex atoms
  std::vector<FlatTree> trees;

  [[nodiscard]] AtomLabel label(const AtomId& a) const { return labels.at(a.global(spec)); }
  [[nodiscard]] bool convex(const AtomId& a) const { return label(a) == AtomLabel::Convex; }
  [[nodiscard]] std::size_t convex_count() const;
};

/// Convex iff increment >= epsilon * base and increment > 0; every other atom
/// (in particular one with both sides zero) is flat. Throws for epsilon <= 0.
[[nodiscard]] FlatForest classify_atoms(const Martingale& f, double epsilon);

struct ConvexFlatSplit {
  Martingale convex;  // F_Co: blocks under convex atoms, F_0 = 0
  Martingale flat;    // F_Fl: blocks under flat atoms, plus F_0
};

/// Throws std::invalid_argument if the forest was built for another filtration.
[[nodiscard]] ConvexFlatSplit split_convex_flat(const Martingale& f, const FlatForest& forest);

/// F_T = sum over members w of f_{n+1} chi_w, with F_0 = 0.
[[nodiscard]] Martingale tree_part(const Martingale& f, const FlatForest& forest, std::size_t tree);

struct StepwiseReport {
  double increments = 0.0;     // sum over atoms of E(|F_{n+1}| - |F_n|) chi_w
  double telescoped = 0.0;     // E|F_N| - E|F_0|
  double l1 = 0.0;             // E|F_N|
  double min_summand = 0.0;    // smallest single-atom summand
  double defect = 0.0;         // |increments - telescoped|
  bool ok = false;             // defect and negativity within 1e-12 relative to l1
};

[[nodiscard]] StepwiseReport verify_stepwise_identity(const Martingale& f);

struct ConvexLemmaReport {
  double constant = 0.0;             // (epsilon + 2) / epsilon
  double worst_atom_ratio = 0.0;     // max over convex w of E|f_{n+1}| chi_w / increment
  bool per_atom_ok = true;
  double convex_besov = 0.0;         // ||F_Co||_{B_1^{0,1}}
  double convex_increments = 0.0;    // sum of increments over convex atoms
  double l1 = 0.0;                   // E|F_N|
  bool aggregate_ok = true;          // convex_besov <= constant * (E|F_N| - E|F_0|)
};

[[nodiscard]] ConvexLemmaReport verify_convex_lemma(const Martingale& f, const FlatForest& forest);

struct TreeGrowthRow {
  std::size_t tree = 0;
  int level = 0;       // n >= n_0
  double ratio = 0.0;  // ||sum_{T cap A_n} F_{n+1} chi_w||_p / (e^{alpha (n - n_0)} ||F_{n_0}||_{L_p(w_0)})
};

struct TreeGrowthReport {
  double alpha = 0.0;
  std::vector<TreeGrowthRow> rows;
  double max_ratio = 0.0;
};

/// Rows with a zero denominator are skipped when the numerator is also zero.
[[nodiscard]] TreeGrowthReport verify_flat_tree_growth(const Martingale& f, const FlatForest& forest, double p,
                                                      double alpha);

struct TreeSummationRow {
  std::size_t tree = 0;
  double lhs = 0.0;      // sum_{n >= n_0} m^{-((p-1)/p) n} ||sum_{T cap A_n} f_{n+1} chi_w||_{L_{p,1}}
  double rhs = 0.0;      // E|F_{n_0}| chi_{w_0}
  double ratio = 0.0;
  double tree_l1 = 0.0;  // ||F_T||_{L_1}
};

struct TreeSummationReport {
  std::vector<TreeSummationRow> rows;  // trees with lhs = rhs = 0 are skipped
  double max_ratio = 0.0;
  double flat_l1 = 0.0;            // ||F_Fl||_{L_1}
  double max_tree_constant = 0.0;  // max ||F_T||_1 / ||F||_1
};

[[nodiscard]] TreeSummationReport verify_tree_summation(const Martingale& f, const FlatForest& forest, double p);

}  // namespace martlab
