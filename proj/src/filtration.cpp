#include "martlab/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace martlab {

FiltrationSpec::FiltrationSpec(int m_, int depth_, int ell_) : m(m_), depth(depth_), ell(ell_) {
  if (m < 3) throw std::invalid_argument("branching factor m must be >= 3, got " + std::to_string(m));
  if (depth < 1) throw std::invalid_argument("depth must be >= 1, got " + std::to_string(depth));
  if (ell < 1) throw std::invalid_argument("value dimension ell must be >= 1, got " + std::to_string(ell));
  std::size_t leaves = 1;
  for (int i = 0; i < depth; ++i) {
    leaves *= static_cast<std::size_t>(m);
    if (leaves > kMaxLeaves) {
      throw std::invalid_argument("m^depth exceeds the leaf cap of " + std::to_string(kMaxLeaves));
    }
  }
}

AtomId AtomId::parent(int m) const {
  if (level == 0) throw std::out_of_range("the root atom has no parent");
  return {level - 1, index / static_cast<std::size_t>(m)};
}

std::vector<int> AtomId::digits(int m) const {
  std::vector<int> d(static_cast<std::size_t>(level));
  std::size_t i = index;
  for (int k = level - 1; k >= 0; --k) {
    d[static_cast<std::size_t>(k)] = static_cast<int>(i % static_cast<std::size_t>(m));
    i /= static_cast<std::size_t>(m);
  }
  return d;
}

AtomId AtomId::from_digits(int m, std::span<const int> digits) {
  std::size_t i = 0;
  for (int d : digits) {
    if (d < 0 || d >= m) throw std::invalid_argument("digit out of range");
    i = i * static_cast<std::size_t>(m) + static_cast<std::size_t>(d);
  }
  return {static_cast<int>(digits.size()), i};
}

AtomId AtomId::ancestor(int m, int k) const {
  if (k < 0 || k > level) throw std::out_of_range("ancestor level out of range");
  return {k, index / ipow_size(m, level - k)};
}

bool AtomId::contains(int m, const AtomId& other) const {
  if (other.level < level) return false;
  return other.ancestor(m, level).index == index;
}

bool atoms_disjoint(int m, const AtomId& a, const AtomId& b) {
  return !a.contains(m, b) && !b.contains(m, a);
}

double tree_distance(const FiltrationSpec& spec, const AtomId& a, const AtomId& b) {
  if (a.level != spec.depth || b.level != spec.depth) {
    throw std::invalid_argument("tree_distance expects two leaves (level N atoms)");
  }
  if (a.index == b.index) return 0.0;
  int common = 0;
  while (common < spec.depth && a.ancestor(spec.m, common + 1) == b.ancestor(spec.m, common + 1)) ++common;
  return 1.0 / ipow(spec.m, common);
}

// ---------------------------------------------------------------------------

AtomTable::AtomTable(FiltrationSpec spec)
    : spec_(spec), values_(spec.total_atoms() * static_cast<std::size_t>(spec.ell), 0.0) {}

AtomTable::AtomTable(FiltrationSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.total_atoms() * static_cast<std::size_t>(spec_.ell)) {
    throw std::invalid_argument("AtomTable: value count does not match the filtration");
  }
}

std::span<const double> AtomTable::at(int level, std::size_t index) const {
  const auto ell = static_cast<std::size_t>(spec_.ell);
  return {values_.data() + (spec_.level_offset(level) + index) * ell, ell};
}

std::span<double> AtomTable::at(int level, std::size_t index) {
  const auto ell = static_cast<std::size_t>(spec_.ell);
  return {values_.data() + (spec_.level_offset(level) + index) * ell, ell};
}

std::span<const double> AtomTable::level(int n) const {
  const auto ell = static_cast<std::size_t>(spec_.ell);
  return {values_.data() + spec_.level_offset(n) * ell, spec_.atoms_at(n) * ell};
}

std::span<double> AtomTable::level(int n) {
  const auto ell = static_cast<std::size_t>(spec_.ell);
  return {values_.data() + spec_.level_offset(n) * ell, spec_.atoms_at(n) * ell};
}

// ---------------------------------------------------------------------------

SimpleFunction::SimpleFunction(FiltrationSpec s, int lvl)
    : spec(s), level(lvl), values(s.atoms_at(lvl) * static_cast<std::size_t>(s.ell), 0.0) {}

SimpleFunction::SimpleFunction(FiltrationSpec s, int lvl, std::vector<double> v)
    : spec(s), level(lvl), values(std::move(v)) {
  if (level < 0 || level > spec.depth) throw std::invalid_argument("SimpleFunction: level out of range");
  if (values.size() != spec.atoms_at(level) * static_cast<std::size_t>(spec.ell)) {
    throw std::invalid_argument("SimpleFunction: value count must be m^level * ell");
  }
}

SimpleFunction SimpleFunction::refined(int finer_level) const {
  if (finer_level < level || finer_level > spec.depth) throw std::invalid_argument("refined: bad level");
  SimpleFunction out(spec, finer_level);
  const std::size_t factor = ipow_size(spec.m, finer_level - level);
  const auto ell = static_cast<std::size_t>(spec.ell);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>((i / factor) * ell), ell,
                out.values.begin() + static_cast<std::ptrdiff_t>(i * ell));
  }
  return out;
}

// ---------------------------------------------------------------------------

Martingale::Martingale(FiltrationSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
  const auto ell = static_cast<std::size_t>(spec_.ell);
  const auto m = static_cast<std::size_t>(spec_.m);
  if (values_.size() != spec_.total_atoms() * ell) {
    throw std::invalid_argument("Martingale: expected ell*(m^{N+1}-1)/(m-1) values");
  }
  // Absolute floor so that blocks of rounding-level differences under large values pass.
  double scale = 0.0;
  for (double x : values_) scale = std::max(scale, std::abs(x));
  const double floor = 1e-13 * scale;
  for (int n = 0; n < spec_.depth; ++n) {
    for (std::size_t i = 0; i < spec_.atoms_at(n); ++i) {
      const double* b = values_.data() + (spec_.level_offset(n + 1) + i * m) * ell;
      for (std::size_t c = 0; c < ell; ++c) {
        double s = 0.0, a = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          s += b[j * ell + c];
          a += std::abs(b[j * ell + c]);
        }
        if (!std::isfinite(s) || std::abs(s) > kBlockSumTolerance * a + floor) {
          throw std::invalid_argument("Martingale: difference block at level " + std::to_string(n) + ", atom " +
                                      std::to_string(i) + " does not sum to zero");
        }
      }
    }
  }
}

Martingale Martingale::zero(const FiltrationSpec& spec) {
  return {spec, std::vector<double>(spec.total_atoms() * static_cast<std::size_t>(spec.ell), 0.0)};
}

std::span<const double> Martingale::diff(int level, std::size_t index) const {
  if (level < 1 || level > spec_.depth) throw std::out_of_range("diff: level out of range");
  const auto ell = static_cast<std::size_t>(spec_.ell);
  return {values_.data() + (spec_.level_offset(level) + index) * ell, ell};
}

std::span<const double> Martingale::block(int level, std::size_t index) const {
  if (level < 0 || level >= spec_.depth) throw std::out_of_range("block: level out of range");
  const auto ell = static_cast<std::size_t>(spec_.ell);
  const auto m = static_cast<std::size_t>(spec_.m);
  return {values_.data() + (spec_.level_offset(level + 1) + index * m) * ell, m * ell};
}

SimpleFunction Martingale::difference(int level) const {
  if (level < 0 || level > spec_.depth) throw std::out_of_range("difference: level out of range");
  const auto ell = static_cast<std::size_t>(spec_.ell);
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(spec_.level_offset(level) * ell);
  return {spec_, level, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(spec_.atoms_at(level) * ell))};
}

Martingale Martingale::truncated(int depth) const {
  if (depth < 1 || depth > spec_.depth) throw std::out_of_range("truncated: depth out of range");
  const FiltrationSpec s = spec_.with_depth(depth);
  std::vector<double> v(values_.begin(),
                        values_.begin() + static_cast<std::ptrdiff_t>(s.total_atoms() * static_cast<std::size_t>(s.ell)));
  return {s, std::move(v)};
}

SimpleFunction evaluate(const Martingale& f, int level) {
  const auto& spec = f.spec();
  if (level < 0 || level > spec.depth) throw std::out_of_range("evaluate: level out of range");
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto m = static_cast<std::size_t>(spec.m);
  std::vector<double> cur(f.f0().begin(), f.f0().end());
  for (int n = 1; n <= level; ++n) {
    std::vector<double> next(spec.atoms_at(n) * ell);
    const double* d = f.data().data() + spec.level_offset(n) * ell;
    for (std::size_t i = 0; i < spec.atoms_at(n); ++i) {
      for (std::size_t c = 0; c < ell; ++c) next[i * ell + c] = cur[(i / m) * ell + c] + d[i * ell + c];
    }
    cur = std::move(next);
  }
  return {spec, level, std::move(cur)};
}

AtomTable evaluate_all(const Martingale& f) {
  const auto& spec = f.spec();
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto m = static_cast<std::size_t>(spec.m);
  AtomTable out(spec, f.data());
  for (int n = 1; n <= spec.depth; ++n) {
    auto cur = out.level(n);
    const auto prev = std::as_const(out).level(n - 1);
    for (std::size_t i = 0; i < spec.atoms_at(n); ++i) {
      for (std::size_t c = 0; c < ell; ++c) cur[i * ell + c] += prev[(i / m) * ell + c];
    }
  }
  return out;
}

Martingale from_cumulative(const AtomTable& table) {
  const auto& spec = table.spec();
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto m = static_cast<std::size_t>(spec.m);
  std::vector<double> v = table.values();
  for (int n = spec.depth; n >= 1; --n) {
    const std::size_t off = spec.level_offset(n), poff = spec.level_offset(n - 1);
    for (std::size_t i = 0; i < spec.atoms_at(n); ++i) {
      for (std::size_t c = 0; c < ell; ++c) v[(off + i) * ell + c] -= table.values()[(poff + i / m) * ell + c];
    }
  }
  return {spec, std::move(v)};
}

// ---------------------------------------------------------------------------

TreeMeasure::TreeMeasure(FiltrationSpec spec, std::vector<double> leaf_mass)
    : spec_(spec), leaf_mass_(std::move(leaf_mass)) {
  if (leaf_mass_.size() != spec_.atoms_at(spec_.depth) * static_cast<std::size_t>(spec_.ell)) {
    throw std::invalid_argument("TreeMeasure: expected m^N * ell leaf masses");
  }
  for (double x : leaf_mass_) {
    if (!std::isfinite(x)) throw std::invalid_argument("TreeMeasure: non-finite mass");
  }
}

TreeMeasure TreeMeasure::from_atom_masses(const AtomTable& masses) {
  const auto& spec = masses.spec();
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto m = static_cast<std::size_t>(spec.m);
  for (int n = 0; n < spec.depth; ++n) {
    for (std::size_t i = 0; i < spec.atoms_at(n); ++i) {
      const auto parent = masses.at(n, i);
      for (std::size_t c = 0; c < ell; ++c) {
        double s = 0.0, a = std::abs(parent[c]);
        for (std::size_t j = 0; j < m; ++j) {
          const double x = masses.at(n + 1, i * m + j)[c];
          s += x;
          a += std::abs(x);
        }
        if (std::abs(s - parent[c]) > 1e-12 * std::max(a, 1e-300)) {
          throw std::invalid_argument("TreeMeasure: atom masses are not additive at level " + std::to_string(n));
        }
      }
    }
  }
  const auto leaves = masses.level(spec.depth);
  return {spec, std::vector<double>(leaves.begin(), leaves.end())};
}

TreeMeasure TreeMeasure::uniform(const FiltrationSpec& spec) {
  FiltrationSpec s = spec;
  s.ell = 1;
  return {s, std::vector<double>(s.atoms_at(s.depth), 1.0 / ipow(s.m, s.depth))};
}

TreeMeasure TreeMeasure::point_mass(const FiltrationSpec& spec, std::size_t leaf) {
  FiltrationSpec s = spec;
  s.ell = 1;
  if (leaf >= s.atoms_at(s.depth)) throw std::out_of_range("point_mass: leaf index out of range");
  std::vector<double> v(s.atoms_at(s.depth), 0.0);
  v[leaf] = 1.0;
  return {s, std::move(v)};
}

AtomTable TreeMeasure::atom_masses() const {
  const auto ell = static_cast<std::size_t>(spec_.ell);
  const auto m = static_cast<std::size_t>(spec_.m);
  AtomTable t(spec_);
  std::copy(leaf_mass_.begin(), leaf_mass_.end(), t.level(spec_.depth).begin());
  for (int n = spec_.depth - 1; n >= 0; --n) {
    for (std::size_t i = 0; i < spec_.atoms_at(n); ++i) {
      auto dst = t.at(n, i);
      for (std::size_t c = 0; c < ell; ++c) {
        CompensatedSum s;
        for (std::size_t j = 0; j < m; ++j) s += t.at(n + 1, i * m + j)[c];
        dst[c] = s.value();
      }
    }
  }
  return t;
}

TreeMeasure TreeMeasure::aggregated(int depth) const {
  if (depth < 1 || depth > spec_.depth) throw std::out_of_range("aggregated: depth out of range");
  if (depth == spec_.depth) return *this;
  const AtomTable t = atom_masses();
  const auto lv = t.level(depth);
  return {spec_.with_depth(depth), std::vector<double>(lv.begin(), lv.end())};
}

bool TreeMeasure::is_nonnegative_scalar() const {
  return spec_.ell == 1 && std::all_of(leaf_mass_.begin(), leaf_mass_.end(), [](double x) { return x >= 0.0; });
}

bool TreeMeasure::is_probability(double tol) const {
  if (!is_nonnegative_scalar()) return false;
  CompensatedSum s;
  for (double x : leaf_mass_) s += x;
  return std::abs(s.value() - 1.0) <= tol;
}

Martingale measure_to_martingale(const TreeMeasure& mu) {
  const auto& spec = mu.spec();
  AtomTable t = mu.atom_masses();
  for (int n = 0; n <= spec.depth; ++n) {
    const double scale = ipow(spec.m, n);
    for (double& x : t.level(n)) x *= scale;
  }
  return from_cumulative(t);
}

TreeMeasure martingale_to_measure(const Martingale& f) {
  const auto& spec = f.spec();
  SimpleFunction fn = evaluate(f, spec.depth);
  const double scale = ipow(spec.m, spec.depth);
  for (double& x : fn.values) x /= scale;
  return {spec, std::move(fn.values)};
}

namespace {

AtomId descend(const FiltrationSpec& spec, const AtomTable& masses, Rng& rng) {
  const auto m = static_cast<std::size_t>(spec.m);
  AtomId cur{0, 0};
  for (int n = 0; n < spec.depth; ++n) {
    const double total = masses.at(n, cur.index)[0];
    double u = uniform01(rng) * total;
    std::size_t pick = m;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double w = masses.at(n + 1, cur.index * m + j)[0];
      if (w > 0.0) last_positive = j;
      if (pick == m && w > 0.0 && u < w) pick = j;
      u -= w;
    }
    if (pick == m) pick = last_positive;  // rounding at the upper end
    cur = cur.child(spec.m, static_cast<int>(pick));
  }
  return cur;
}

AtomTable checked_masses(const TreeMeasure& mu) {
  if (mu.spec().ell != 1) throw std::invalid_argument("sample_path: measure must be scalar");
  for (double x : mu.leaf_mass()) {
    if (x < 0.0) throw std::invalid_argument("sample_path: negative mass");
  }
  AtomTable t = mu.atom_masses();
  if (!(t.at(0, 0)[0] > 0.0)) throw std::invalid_argument("sample_path: zero total mass");
  return t;
}

}  // namespace

AtomId sample_path(const TreeMeasure& mu, std::uint64_t seed) {
  const AtomTable t = checked_masses(mu);
  Rng rng(seed);
  return descend(mu.spec(), t, rng);
}

std::vector<AtomId> sample_paths(const TreeMeasure& mu, std::size_t count, std::uint64_t seed) {
  const AtomTable t = checked_masses(mu);
  Rng rng(seed);
  std::vector<AtomId> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(descend(mu.spec(), t, rng));
  return out;
}

}  // namespace martlab
