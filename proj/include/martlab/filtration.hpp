#pragma once

// The m-adic tree probability space: atoms, addressing, martingales and
// tree measures. Everything is stored level by level in contiguous arrays:
// atom (n, i) lives at global position (m^n - 1)/(m - 1) + i.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "martlab/numeric.hpp"

namespace martlab {

/// Default cap on the number of leaves m^N.
inline constexpr std::size_t kMaxLeaves = 2'000'000;

struct FiltrationSpec {
  int m = 3;
  int depth = 1;
  int ell = 1;

  FiltrationSpec() = default;
  /// Throws std::invalid_argument unless m >= 3, depth >= 1, ell >= 1 and m^depth <= kMaxLeaves.
  FiltrationSpec(int m, int depth, int ell = 1);

  [[nodiscard]] std::size_t atoms_at(int level) const noexcept { return ipow_size(m, level); }
  /// Number of atoms on levels 0..depth.
  [[nodiscard]] std::size_t total_atoms() const noexcept { return level_offset(depth + 1); }
  [[nodiscard]] std::size_t level_offset(int level) const noexcept {
    return (ipow_size(m, level) - 1) / static_cast<std::size_t>(m - 1);
  }
  [[nodiscard]] double atom_weight(int level) const noexcept { return 1.0 / ipow(m, level); }
  [[nodiscard]] FiltrationSpec with_depth(int n) const { return {m, n, ell}; }

  friend bool operator==(const FiltrationSpec&, const FiltrationSpec&) = default;
};

/// A cylinder of the tree. Child j of (n, i) is (n + 1, m*i + j); this fixed
/// ordering is the identification of a parent's children with [0, m).
struct AtomId {
  int level = 0;
  std::size_t index = 0;

  [[nodiscard]] AtomId parent(int m) const;
  [[nodiscard]] AtomId child(int m, int j) const noexcept {
    return {level + 1, index * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)};
  }
  /// Base-m digits, most significant (level-1 choice) first.
  [[nodiscard]] std::vector<int> digits(int m) const;
  [[nodiscard]] static AtomId from_digits(int m, std::span<const int> digits);
  /// The level-k ancestor (k <= level).
  [[nodiscard]] AtomId ancestor(int m, int k) const;
  /// True if `other` is this atom or one of its descendants.
  [[nodiscard]] bool contains(int m, const AtomId& other) const;
  [[nodiscard]] std::size_t global(const FiltrationSpec& spec) const noexcept {
    return spec.level_offset(level) + index;
  }

  friend bool operator==(const AtomId&, const AtomId&) = default;
};

/// Two level-k cylinders are either disjoint or equal; cylinders on different
/// levels are disjoint or nested.
[[nodiscard]] bool atoms_disjoint(int m, const AtomId& a, const AtomId& b);

/// Metric on leaves: m^{-d} where d is the length of the common digit prefix.
[[nodiscard]] double tree_distance(const FiltrationSpec& spec, const AtomId& a, const AtomId& b);

/// Values in R^ell attached to every atom of levels 0..depth, level-order.
class AtomTable {
 public:
  AtomTable() = default;
  explicit AtomTable(FiltrationSpec spec);
  AtomTable(FiltrationSpec spec, std::vector<double> values);

  [[nodiscard]] const FiltrationSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::span<const double> at(int level, std::size_t index) const;
  [[nodiscard]] std::span<double> at(int level, std::size_t index);
  [[nodiscard]] std::span<const double> level(int level) const;
  [[nodiscard]] std::span<double> level(int level);
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double norm_at(int level, std::size_t index) const { return euclidean_norm(at(level, index)); }

 private:
  FiltrationSpec spec_;
  std::vector<double> values_;
};

/// A function constant on the atoms of one level, with values in R^ell.
struct SimpleFunction {
  FiltrationSpec spec;
  int level = 0;
  std::vector<double> values;  // atoms_at(level) * ell, atom-major

  SimpleFunction() = default;
  SimpleFunction(FiltrationSpec spec, int level);
  SimpleFunction(FiltrationSpec spec, int level, std::vector<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return spec.atoms_at(level); }
  [[nodiscard]] std::span<const double> at(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(spec.ell), static_cast<std::size_t>(spec.ell)};
  }
  [[nodiscard]] std::span<double> at(std::size_t i) {
    return {values.data() + i * static_cast<std::size_t>(spec.ell), static_cast<std::size_t>(spec.ell)};
  }
  [[nodiscard]] double norm_at(std::size_t i) const { return euclidean_norm(at(i)); }
  /// The same function viewed on a finer level (constant on cylinders).
  [[nodiscard]] SimpleFunction refined(int finer_level) const;
};

/// An R^ell-valued martingale to depth N. Storage is level-order over atoms of
/// levels 0..N: the level-0 entry is F_0, the level-n entry (n >= 1) of atom
/// w is f_n(w). The children of a level-n atom are contiguous, so the block of
/// f_{n+1} on that atom is an m x ell row-major slab whose columns sum to zero.
class Martingale {
 public:
  /// Throws std::invalid_argument if sizes mismatch or a block has nonzero column sums.
  Martingale(FiltrationSpec spec, std::vector<double> values);

  [[nodiscard]] static Martingale zero(const FiltrationSpec& spec);

  [[nodiscard]] const FiltrationSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::span<const double> f0() const noexcept {
    return {values_.data(), static_cast<std::size_t>(spec_.ell)};
  }
  /// f_n restricted to a level-n atom, n >= 1.
  [[nodiscard]] std::span<const double> diff(int level, std::size_t index) const;
  /// The m x ell block of f_{n+1} on the level-n atom `index`.
  [[nodiscard]] std::span<const double> block(int level, std::size_t index) const;
  [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }
  /// Difference f_n as a simple function on level n (F_0 for n = 0).
  [[nodiscard]] SimpleFunction difference(int level) const;
  [[nodiscard]] Martingale truncated(int depth) const;

 private:
  FiltrationSpec spec_;
  std::vector<double> values_;
};

/// Relative tolerance for the zero column-sum constraint on difference blocks.
inline constexpr double kBlockSumTolerance = 1e-9;

/// F_n on every level-n atom.
[[nodiscard]] SimpleFunction evaluate(const Martingale& f, int level);
/// F_n for every level at once (prefix sums along the tree).
[[nodiscard]] AtomTable evaluate_all(const Martingale& f);
/// Builds a martingale from the values F_n on all atoms (inverse of evaluate_all).
[[nodiscard]] Martingale from_cumulative(const AtomTable& values);

/// A finite (possibly R^ell-valued) measure on the tree, given by its leaf masses.
class TreeMeasure {
 public:
  TreeMeasure(FiltrationSpec spec, std::vector<double> leaf_mass);
  /// Accepts masses on every atom; throws std::invalid_argument if they are not additive.
  [[nodiscard]] static TreeMeasure from_atom_masses(const AtomTable& masses);
  [[nodiscard]] static TreeMeasure uniform(const FiltrationSpec& spec);
  [[nodiscard]] static TreeMeasure point_mass(const FiltrationSpec& spec, std::size_t leaf);

  [[nodiscard]] const FiltrationSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<double>& leaf_mass() const noexcept { return leaf_mass_; }
  [[nodiscard]] std::span<const double> leaf(std::size_t i) const {
    return {leaf_mass_.data() + i * static_cast<std::size_t>(spec_.ell), static_cast<std::size_t>(spec_.ell)};
  }
  /// Masses of every atom on levels 0..N.
  [[nodiscard]] AtomTable atom_masses() const;
  /// The same measure seen on a coarser filtration depth.
  [[nodiscard]] TreeMeasure aggregated(int depth) const;
  [[nodiscard]] bool is_nonnegative_scalar() const;
  [[nodiscard]] bool is_probability(double tol = 1e-12) const;

 private:
  FiltrationSpec spec_;
  std::vector<double> leaf_mass_;
};

/// Conditional-density martingale of a measure: F_n = mu(w) / m^{-n} on each level-n atom.
[[nodiscard]] Martingale measure_to_martingale(const TreeMeasure& mu);
/// Leaf masses m^{-N} F_N.
[[nodiscard]] TreeMeasure martingale_to_measure(const Martingale& f);

/// Draws a leaf with probability equal to its mass. Throws on negative or zero total mass.
[[nodiscard]] AtomId sample_path(const TreeMeasure& mu, std::uint64_t seed);
/// Several draws from one seeded stream.
[[nodiscard]] std::vector<AtomId> sample_paths(const TreeMeasure& mu, std::size_t count, std::uint64_t seed);

}  // namespace martlab
