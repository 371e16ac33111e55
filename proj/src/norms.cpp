#include "martlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace martlab {

namespace {

void require_p_at_least_one(double p, const char* what) {
  if (!(p >= 1.0)) throw std::invalid_argument(std::string(what) + ": p must be >= 1");
}

/// Distinct positive values of the magnitudes in decreasing order paired with
/// the measure of {|g| >= value}, each entry carrying mass w.
std::vector<std::pair<double, double>> level_sets(std::vector<double> norms, double w) {
  norms.erase(std::remove_if(norms.begin(), norms.end(), [](double a) { return !(a > 0.0); }), norms.end());
  std::sort(norms.begin(), norms.end(), std::greater<>());
  std::vector<std::pair<double, double>> out;
  std::size_t count = 0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    ++count;
    if (i + 1 == norms.size() || norms[i + 1] != norms[i]) {
      out.emplace_back(norms[i], static_cast<double>(count) * w);
    }
  }
  return out;
}

std::vector<std::pair<double, double>> level_sets(const SimpleFunction& g) {
  std::vector<double> norms(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) norms[i] = g.norm_at(i);
  return level_sets(std::move(norms), g.spec.atom_weight(g.level));
}

}  // namespace

double lp_norm(const SimpleFunction& g, double p) {
  require_p_at_least_one(p, "lp_norm");
  if (std::isinf(p)) {
    double mx = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mx = std::max(mx, g.norm_at(i));
    return mx;
  }
  // Factor out the maximum so large exponents do not overflow.
  double mx = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) mx = std::max(mx, g.norm_at(i));
  if (mx == 0.0) return 0.0;
  CompensatedSum s;
  for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(g.norm_at(i) / mx, p);
  return mx * std::pow(s.value() * g.spec.atom_weight(g.level), 1.0 / p);
}

double lorentz_p1_norm(const SimpleFunction& g, double p) {
  std::vector<double> norms(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) norms[i] = g.norm_at(i);
  return lorentz_p1_norm(std::move(norms), g.spec.atom_weight(g.level), p);
}

double lorentz_p1_norm(std::vector<double> magnitudes, double atom_weight, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("lorentz_p1_norm: p must be > 1");
  const auto levels = level_sets(std::move(magnitudes), atom_weight);
  CompensatedSum s;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double next = i + 1 < levels.size() ? levels[i + 1].first : 0.0;
    s += (levels[i].first - next) * std::pow(levels[i].second, 1.0 / p);
  }
  return p * s.value();
}

double weak_lp_norm(const SimpleFunction& g, double p) {
  require_p_at_least_one(p, "weak_lp_norm");
  double best = 0.0;
  for (const auto& [value, measure] : level_sets(g)) {
    best = std::max(best, std::isinf(p) ? value : value * std::pow(measure, 1.0 / p));
  }
  return best;
}

double besov_norm(const Martingale& f, double beta, double p) {
  require_p_at_least_one(p, "besov_norm");
  const int m = f.spec().m;
  CompensatedSum s;
  for (int n = 0; n <= f.spec().depth; ++n) {
    s += std::pow(static_cast<double>(m), beta * n) * lp_norm(f.difference(n), p);
  }
  return s.value();
}

double h1_norm(const Martingale& f) {
  const auto& spec = f.spec();
  const AtomTable values = evaluate_all(f);
  // Running maximum of |F_n| pushed down the tree.
  std::vector<double> running{values.norm_at(0, 0)};
  for (int n = 1; n <= spec.depth; ++n) {
    std::vector<double> next(spec.atoms_at(n));
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = std::max(running[i / static_cast<std::size_t>(spec.m)], values.norm_at(n, i));
    }
    running = std::move(next);
  }
  CompensatedSum s;
  for (double x : running) s += x;
  return s.value() * spec.atom_weight(spec.depth);
}

double l1_norm(const Martingale& f) { return lp_norm(evaluate(f, f.spec().depth), 1.0); }

double lp_nu_norm(const SimpleFunction& g, const TreeMeasure& nu, double p) {
  require_p_at_least_one(p, "lp_nu_norm");
  if (!nu.is_nonnegative_scalar()) throw std::invalid_argument("lp_nu_norm: nu must be a nonnegative scalar measure");
  if (nu.spec().m != g.spec.m) throw std::invalid_argument("lp_nu_norm: branching factors differ");
  if (nu.spec().depth < g.level) throw std::invalid_argument("lp_nu_norm: nu is coarser than g");
  const TreeMeasure coarse = g.level == 0 ? nu : nu.aggregated(g.level);
  const std::vector<double> mass =
      g.level == 0 ? std::vector<double>{nu.atom_masses().at(0, 0)[0]} : coarse.leaf_mass();
  if (std::isinf(p)) {
    double mx = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (mass[i] > 0.0) mx = std::max(mx, g.norm_at(i));
    }
    return mx;
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mass[i] > 0.0) s += std::pow(g.norm_at(i), p) * mass[i];
  }
  return std::pow(s.value(), 1.0 / p);
}

}  // namespace martlab
