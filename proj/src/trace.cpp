#include "martlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "martlab/decomp.hpp"
#include "martlab/dimension.hpp"
#include "martlab/kappa.hpp"

namespace martlab {

namespace {

void check_nu(const TreeMeasure& nu, const char* who) {
  if (!nu.is_nonnegative_scalar()) throw std::invalid_argument(std::string(who) + ": nu must be a nonnegative scalar measure");
}

double safe_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::vector<double> level_maxima(const AtomTable& masses, double alpha, double p) {
  const auto& s = masses.spec();
  std::vector<double> out(static_cast<std::size_t>(s.depth) + 1, 0.0);
  for (int n = 0; n <= s.depth; ++n) {
    double mx = 0.0;
    for (double x : masses.level(n)) mx = std::max(mx, x);
    out[static_cast<std::size_t>(n)] = std::pow(mx, 1.0 / p) * std::pow(static_cast<double>(s.m), (1.0 - alpha) * n);
  }
  return out;
}

std::vector<double> running_over(const std::vector<double>& levels, const std::vector<int>& depths) {
  std::vector<double> out;
  for (int d : depths) out.push_back(*std::max_element(levels.begin(), levels.begin() + d + 1));
  return out;
}

struct Setup {
  FiltrationSpec spec;
  AtomTable masses;  // nu aggregated to the deepest requested depth
};

Setup prepare(const TreeMeasure& nu, const SubspaceW& w, double alpha, double p, const std::vector<int>& depths,
              int trials, const char* who) {
  check_nu(nu, who);
  if (!(alpha >= 0.0)) throw std::invalid_argument(std::string(who) + ": alpha must be >= 0");
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument(std::string(who) + ": p must be finite and >= 1");
  if (trials < 1) throw std::invalid_argument(std::string(who) + ": trials must be >= 1");
  if (depths.empty()) throw std::invalid_argument(std::string(who) + ": no depths");
  const int top = *std::max_element(depths.begin(), depths.end());
  if (*std::min_element(depths.begin(), depths.end()) < 1) throw std::invalid_argument(std::string(who) + ": depths must be >= 1");
  if (nu.spec().m != w.m()) throw std::invalid_argument(std::string(who) + ": nu and W have different m");
  if (nu.spec().depth < top) throw std::invalid_argument(std::string(who) + ": nu is shallower than the deepest depth");
  const TreeMeasure coarse = nu.spec().depth == top ? nu : nu.aggregated(top);
  return {FiltrationSpec(w.m(), top, w.ell()), coarse.atom_masses()};
}

// ||I_alpha F||_{L_p(nu)} against E|F_n| at every requested depth.
void add_trace_rows(EmbeddingReport& r, const Martingale& f, const AtomTable& masses, double alpha, double p, int trial,
                    AtomTable* potential_out = nullptr, AtomTable* values_out = nullptr) {
  const auto& s = f.spec();
  AtomTable pot = evaluate_all(riesz_potential(f, alpha));
  AtomTable vals = evaluate_all(f);
  for (int n : r.depths) {
    CompensatedSum lhs, rhs;
    const auto mass = masses.level(n);
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      if (mass[i] > 0.0) lhs += std::pow(pot.norm_at(n, i), p) * mass[i];
      rhs += vals.norm_at(n, i);
    }
    const double l = std::pow(lhs.value(), 1.0 / p);
    const double rr = rhs.value() * s.atom_weight(n);
    r.rows.push_back({n, trial, l, rr, safe_ratio(l, rr)});
  }
  if (potential_out) *potential_out = std::move(pot);
  if (values_out) *values_out = std::move(vals);
}

}  // namespace

std::vector<double> frostman_level_maxima(const TreeMeasure& nu, double alpha, double p) {
  check_nu(nu, "frostman_constant");
  if (!(p >= 1.0)) throw std::invalid_argument("frostman_constant: p must be >= 1");
  return level_maxima(nu.atom_masses(), alpha, p);
}

double frostman_constant(const TreeMeasure& nu, double alpha, double p) {
  const auto lv = frostman_level_maxima(nu, alpha, p);
  return *std::max_element(lv.begin(), lv.end());
}

TreeMeasure capped_cascade(const FiltrationSpec& spec, double alpha, double p, std::uint64_t seed) {
  if (!(p >= 1.0)) throw std::invalid_argument("capped_cascade: p must be >= 1");
  const int m = spec.m;
  const auto mm = static_cast<std::size_t>(m);
  Rng rng(seed);
  std::vector<double> cur{1.0}, next;
  std::vector<double> w(mm), x(mm);
  std::vector<char> full(mm);
  for (int n = 0; n < spec.depth; ++n) {
    const double cap = std::pow(static_cast<double>(m), (alpha - 1.0) * p * (n + 1));
    next.assign(cur.size() * mm, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double mass = cur[i];
      for (auto& v : w) v = -std::log(1.0 - uniform01(rng));
      if (mass >= static_cast<double>(m) * cap) {
        std::fill(x.begin(), x.end(), cap);
      } else {
        // Water-filling: proportional shares, clipped at the cap, remainder
        // redistributed over the unclipped children until nothing clips.
        std::fill(full.begin(), full.end(), 0);
        double left = mass;
        while (true) {
          double wsum = 0.0;
          for (std::size_t j = 0; j < mm; ++j) {
            if (!full[j]) wsum += w[j];
          }
          bool clipped = false;
          for (std::size_t j = 0; j < mm; ++j) {
            if (!full[j] && left * w[j] / wsum > cap) full[j] = 1, clipped = true, left -= cap;
          }
          if (!clipped) {
            for (std::size_t j = 0; j < mm; ++j) x[j] = full[j] ? cap : left * w[j] / wsum;
            break;
          }
        }
      }
      for (std::size_t j = 0; j < mm; ++j) next[i * mm + j] = x[j];
    }
    cur.swap(next);
  }
  return {FiltrationSpec(spec.m, spec.depth, 1), std::move(cur)};
}

Martingale atom_indicator_martingale(const FiltrationSpec& spec, const AtomId& target, const std::vector<double>& a_in) {
  if (target.level < 0 || target.level > spec.depth || target.index >= spec.atoms_at(target.level)) {
    throw std::invalid_argument("atom_indicator_martingale: atom out of range");
  }
  std::vector<double> a = a_in;
  if (a.empty()) {
    a.assign(static_cast<std::size_t>(spec.ell), 0.0);
    a[0] = 1.0;
  }
  if (a.size() != static_cast<std::size_t>(spec.ell)) throw std::invalid_argument("atom_indicator_martingale: a has wrong size");
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto m = static_cast<std::size_t>(spec.m);
  std::vector<double> data(spec.total_atoms() * ell, 0.0);
  for (std::size_t c = 0; c < ell; ++c) data[c] = a[c];
  const auto digits = target.digits(spec.m);
  std::size_t active = 0;
  double g = 1.0;
  for (int n = 0; n < target.level; ++n) {
    const auto j = static_cast<std::size_t>(digits[static_cast<std::size_t>(n)]);
    for (std::size_t c = 0; c < m; ++c) {
      const double h = c == j ? static_cast<double>(m) - 1.0 : -1.0;
      double* out = data.data() + (spec.level_offset(n + 1) + active * m + c) * ell;
      for (std::size_t k = 0; k < ell; ++k) out[k] = h * g * a[k];
    }
    active = active * m + j;
    g *= static_cast<double>(m);
  }
  return {spec, std::move(data)};
}

TraceReport trace_experiment_p(const TreeMeasure& nu, const SubspaceW& w, double alpha, double p,
                               const std::vector<int>& depths, int trials, std::uint64_t seed) {
  if (!(p > 1.0)) throw std::invalid_argument("trace_experiment_p: p must be > 1");
  const auto setup = prepare(nu, w, alpha, p, depths, trials, "trace_experiment_p");
  TraceReport r;
  r.alpha = alpha;
  r.p = p;
  r.frostman_by_depth = running_over(level_maxima(setup.masses, alpha, p), depths);
  r.frostman_constant = *std::max_element(r.frostman_by_depth.begin(), r.frostman_by_depth.end());
  r.embedding.depths = depths;
  for (int t = 0; t < trials; ++t) {
    const Martingale f = random_w_martingale(w, setup.spec, {}, derive_seed(seed, static_cast<std::uint64_t>(t)));
    add_trace_rows(r.embedding, f, setup.masses, alpha, p, t);
  }
  finalize_report(r.embedding);
  return r;
}

TraceL1Report trace_experiment_l1(const TreeMeasure& nu, const SubspaceW& w, double alpha,
                                  const std::vector<int>& depths, int trials, std::uint64_t seed, double epsilon) {
  const auto setup = prepare(nu, w, alpha, 1.0, depths, trials, "trace_experiment_l1");
  const auto& s = setup.spec;
  const auto& masses = setup.masses;
  const int top = s.depth;
  const auto m = static_cast<std::size_t>(s.m);
  const auto ell = static_cast<std::size_t>(s.ell);
  TraceL1Report out;
  out.epsilon = epsilon;
  TraceReport& r = out.trace;
  r.alpha = alpha;
  r.p = 1.0;
  const auto levels = level_maxima(masses, alpha, 1.0);
  r.frostman_by_depth = running_over(levels, depths);
  r.frostman_constant = *std::max_element(r.frostman_by_depth.begin(), r.frostman_by_depth.end());
  const double c_top = *std::max_element(levels.begin(), levels.end());
  r.embedding.depths = depths;
  out.split_slack = std::numeric_limits<double>::infinity();
  out.convex_slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const Martingale f = random_w_martingale(w, s, {}, derive_seed(seed, static_cast<std::uint64_t>(t)));
    AtomTable pot, vals;
    add_trace_rows(r.embedding, f, masses, alpha, 1.0, t, &pot, &vals);
    // Exact L_1(nu) contribution of each block and its Besov counterpart, per atom.
    std::vector<double> term(s.level_offset(top), 0.0), besov(s.level_offset(top), 0.0);
    for (int n = 0; n < top; ++n) {
      const double scale = std::pow(static_cast<double>(s.m), -alpha * (n + 1));
      const auto child_mass = masses.level(n + 1);
      for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
        const auto b = f.block(n, i);
        double tv = 0.0, bv = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double x = euclidean_norm(b.subspan(j * ell, ell));
          tv += x * child_mass[i * m + j];
          bv += x;
        }
        term[s.level_offset(n) + i] = scale * tv;
        besov[s.level_offset(n) + i] = bv * s.atom_weight(n + 1);
      }
    }
    const FlatForest forest = classify_atoms(f, epsilon);
    CompensatedSum convex, convex_besov, trees;
    for (std::size_t k = 0; k < term.size(); ++k) {
      if (forest.labels[k] == AtomLabel::Convex) convex += term[k], convex_besov += besov[k];
    }
    for (std::size_t k = 0; k < forest.trees.size(); ++k) {
      const auto& tree = forest.trees[k];
      CompensatedSum lhs;
      for (const auto& a : tree.members) lhs += term[a.global(s)];
      const double rhs = vals.norm_at(tree.root.level, tree.root.index) * s.atom_weight(tree.root.level);
      const double ratio = safe_ratio(lhs.value(), rhs);
      out.trees.push_back({t, k, tree.root, lhs.value(), rhs, ratio});
      out.max_tree_ratio = std::max(out.max_tree_ratio, ratio);
      trees += lhs.value();
    }
    // The trace row at the deepest depth is ||I_alpha F||_{L_1(nu)}.
    double whole = 0.0;
    for (const auto& row : r.embedding.rows) {
      if (row.trial == t && row.depth == top) whole = row.lhs;
    }
    const double right = euclidean_norm(f.f0()) * masses.at(0, 0)[0] + convex.value() + trees.value();
    if (right > 0.0) out.split_slack = std::min(out.split_slack, (right - whole) / right);
    const double cb = c_top * convex_besov.value();
    if (cb > 0.0) out.convex_slack = std::min(out.convex_slack, (cb - convex.value()) / cb);
  }
  if (std::isinf(out.split_slack)) out.split_slack = 0.0;
  if (std::isinf(out.convex_slack)) out.convex_slack = 0.0;
  finalize_report(r.embedding);
  return out;
}

TraceSharpness build_sharpness_trace_measure(const SubspaceW& w, double gamma, const FiltrationSpec& spec) {
  if (spec.m != w.m() || spec.ell != w.ell()) throw std::invalid_argument("build_sharpness_trace_measure: spec does not match W");
  const KappaSolver solver(w);
  const double logm = std::log(static_cast<double>(spec.m));
  TraceSharpness r{TreeMeasure::uniform(FiltrationSpec(spec.m, spec.depth, 1)), Martingale::zero(spec)};
  r.gamma = gamma;
  r.kappa0 = solver.kappa(0.0).value;
  if (!(gamma > 0.0 && gamma < r.kappa0 / logm)) {
    throw std::invalid_argument("build_sharpness_trace_measure: gamma must lie in (0, kappa(0)/log m) = (0, " +
                                std::to_string(r.kappa0 / logm) + ")");
  }
  for (double t : theta_grid(21)) {
    r.linearity_defect = std::max(r.linearity_defect, std::abs(solver.kappa(t).value - (1.0 - t) * r.kappa0));
  }
  if (r.linearity_defect > kLinearityTolerance) {
    throw std::invalid_argument("build_sharpness_trace_measure: kappa is not linear on [0, 1] (max deviation from the chord " +
                                std::to_string(r.linearity_defect) + ")");
  }
  const auto wit = solver.kappa(0.5);
  r.kappa_half = wit.value;
  r.v = wit.v;
  r.a = wit.a.normalized();
  r.alpha = r.kappa0 / logm - gamma;

  const FiltrationSpec scalar(spec.m, spec.depth, 1);
  const Martingale g = measure_to_martingale(multiplicative_measure(r.v, scalar).measure);
  // nu = F_0 + I_gamma F, as a martingale N; nonnegative by Abel summation.
  const AtomTable n_vals = evaluate_all(riesz_potential(g, gamma));
  std::vector<double> leaf(scalar.atoms_at(spec.depth));
  const auto last = n_vals.level(spec.depth);
  const double wN = scalar.atom_weight(spec.depth);
  for (std::size_t i = 0; i < leaf.size(); ++i) {
    double x = last[i];
    if (x < 0.0) {
      if (x < -1e-12) throw std::runtime_error("build_sharpness_trace_measure: nu has a negative atom");
      x = 0.0;
    }
    leaf[i] = x * wN;
  }
  r.nu = TreeMeasure(scalar, std::move(leaf));
  const AtomTable masses = r.nu.atom_masses();

  const auto ell = static_cast<std::size_t>(spec.ell);
  std::vector<double> data(g.data().size() * ell);
  for (std::size_t k = 0; k < g.data().size(); ++k) {
    for (std::size_t c = 0; c < ell; ++c) data[k * ell + c] = g.data()[k] * r.a(static_cast<Eigen::Index>(c));
  }
  r.f = Martingale(spec, std::move(data));

  const AtomTable pot = evaluate_all(riesz_potential(g, r.alpha));
  const auto levels = level_maxima(masses, r.alpha, 1.0);
  CompensatedSum partial;
  partial += g.f0()[0] * masses.at(0, 0)[0];
  std::vector<double> x;
  for (int n = 1; n <= spec.depth; ++n) {
    const auto diff = g.difference(n);
    CompensatedSum e2;
    for (double d : diff.values) e2 += d * d;
    const double term = std::pow(static_cast<double>(spec.m), -(r.alpha + gamma) * n) * e2.value() * scalar.atom_weight(n);
    r.level_terms.push_back(term);
    partial += term;
    CompensatedSum norm;
    const auto mass = masses.level(n);
    for (std::size_t i = 0; i < scalar.atoms_at(n); ++i) norm += std::abs(pot.level(n)[i]) * mass[i];
    r.depths.push_back(n);
    x.push_back(static_cast<double>(n));
    r.partial_sums.push_back(partial.value());
    r.trace_norm.push_back(norm.value());
    r.frostman.push_back(*std::max_element(levels.begin(), levels.begin() + n + 1));
  }
  r.level_constant = 1.0 - std::exp(-r.kappa0);
  if (x.size() >= 2) {
    r.partial_slope = least_squares_slope(x, r.partial_sums);
    r.norm_slope = least_squares_slope(x, r.trace_norm);
  }
  return r;
}

}  // namespace martlab
