#include "martlab/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "martlab/norms.hpp"

namespace martlab {

namespace {

void check_p(double p, const char* who) {
  if (!(p > 1.0) || std::isinf(p)) throw std::invalid_argument(std::string(who) + ": p must be finite and > 1");
}

double safe_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

int max_depth(const std::vector<int>& depths, const char* who) {
  if (depths.empty()) throw std::invalid_argument(std::string(who) + ": no depths");
  for (int d : depths) {
    if (d < 1) throw std::invalid_argument(std::string(who) + ": depths must be >= 1");
  }
  return *std::max_element(depths.begin(), depths.end());
}

// Ratio of the main-inequality sum to E|F_N| at each requested depth.
void add_main_rows(EmbeddingReport& r, const Martingale& f, double p, int trial) {
  const auto terms = main_inequality_terms(f, p);
  for (int n : r.depths) {
    CompensatedSum lhs;
    for (int k = 0; k < n; ++k) lhs += terms[static_cast<std::size_t>(k)];
    const double rhs = lp_norm(evaluate(f, n), 1.0);
    r.rows.push_back({n, trial, lhs.value(), rhs, safe_ratio(lhs.value(), rhs)});
  }
}

}  // namespace

Martingale riesz_potential(const Martingale& f, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("riesz_potential: alpha must be >= 0");
  const auto& s = f.spec();
  std::vector<double> data = f.data();
  const auto ell = static_cast<std::size_t>(s.ell);
  for (int n = 1; n <= s.depth; ++n) {
    const double scale = std::pow(static_cast<double>(s.m), -alpha * n);
    const std::size_t lo = s.level_offset(n) * ell, hi = s.level_offset(n + 1) * ell;
    for (std::size_t k = lo; k < hi; ++k) data[k] *= scale;
  }
  return {s, std::move(data)};
}

Martingale delta_martingale(const FiltrationSpec& spec, int j, std::vector<double> a) {
  if (j < 0 || j >= spec.m) throw std::invalid_argument("delta_martingale: j out of range");
  if (a.empty()) {
    a.assign(static_cast<std::size_t>(spec.ell), 0.0);
    a[0] = 1.0;
  }
  if (a.size() != static_cast<std::size_t>(spec.ell)) throw std::invalid_argument("delta_martingale: a has wrong size");
  const auto ell = static_cast<std::size_t>(spec.ell);
  const auto m = static_cast<std::size_t>(spec.m);
  std::vector<double> data(spec.total_atoms() * ell, 0.0);
  std::size_t active = 0;
  double g = 1.0;
  for (int n = 0; n < spec.depth; ++n) {
    for (std::size_t c = 0; c < m; ++c) {
      const double h = c == static_cast<std::size_t>(j) ? static_cast<double>(m) - 1.0 : -1.0;
      double* out = data.data() + (spec.level_offset(n + 1) + active * m + c) * ell;
      for (std::size_t k = 0; k < ell; ++k) out[k] = h * g * a[k];
    }
    active = active * m + static_cast<std::size_t>(j);
    g *= static_cast<double>(m);
  }
  return {spec, std::move(data)};
}

std::vector<double> main_inequality_terms(const Martingale& f, double p) {
  check_p(p, "main_inequality_terms");
  const auto& s = f.spec();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(s.depth));
  for (int n = 1; n <= s.depth; ++n) {
    const double w = std::pow(static_cast<double>(s.m), -((p - 1.0) / p) * n);
    out.push_back(w * lorentz_p1_norm(f.difference(n), p));
  }
  return out;
}

double main_inequality_lhs(const Martingale& f, double p) {
  CompensatedSum s;
  for (double t : main_inequality_terms(f, p)) s += t;
  return s.value();
}

double besov_potential_norm(const Martingale& f, double p) {
  check_p(p, "besov_potential_norm");
  return besov_norm(riesz_potential(f, (p - 1.0) / p), 0.0, p);
}

const char* to_string(Verdict v) noexcept { return v == Verdict::Growing ? "GROWING" : "BOUNDED"; }

std::vector<double> running_max(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = best = std::max(best, x[i]);
  return out;
}

void finalize_report(EmbeddingReport& r) {
  const std::size_t k = r.depths.size();
  r.lhs.assign(k, 0.0);
  r.rhs.assign(k, 0.0);
  r.ratio.assign(k, -1.0);
  for (const auto& row : r.rows) {
    const auto it = std::find(r.depths.begin(), r.depths.end(), row.depth);
    if (it == r.depths.end()) continue;
    const auto i = static_cast<std::size_t>(it - r.depths.begin());
    if (row.ratio > r.ratio[i]) {
      r.ratio[i] = row.ratio;
      r.lhs[i] = row.lhs;
      r.rhs[i] = row.rhs;
    }
  }
  std::vector<double> x, logr, logn;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(r.ratio[i] > 0.0) || std::isinf(r.ratio[i])) continue;
    x.push_back(r.depths[i]);
    logr.push_back(std::log(r.ratio[i]));
    logn.push_back(std::log(static_cast<double>(r.depths[i])));
  }
  r.slope = x.size() >= 2 ? least_squares_slope(x, logr) : 0.0;
  r.predicted_rate = x.size() >= 2 ? least_squares_slope(x, logn) : 0.0;
  r.verdict = x.size() >= kMinTrendDepths && r.slope > 0.5 * r.predicted_rate ? Verdict::Growing : Verdict::Bounded;
}

EmbeddingReport hls_experiment(double p, double q, int m, const std::vector<int>& depths, int trials,
                               std::uint64_t seed) {
  check_p(p, "hls_experiment");
  if (!(q > p) || std::isinf(q)) throw std::invalid_argument("hls_experiment: need 1 < p < q < infinity");
  if (trials < 1) throw std::invalid_argument("hls_experiment: trials must be >= 1");
  const FiltrationSpec spec(m, max_depth(depths, "hls_experiment"), 1);
  const double alpha = (q - p) / (q * p);
  const SubspaceW full = SubspaceW::full(m, 1);
  EmbeddingReport r;
  r.depths = depths;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(t));
    Rng rng(s);
    const Martingale f = random_w_martingale(full, spec, {}, s + 1, {standard_normal(rng)});
    const Martingale g = riesz_potential(f, alpha);
    for (int n : depths) {
      const double lhs = lp_norm(evaluate(g, n), q);
      const double rhs = lp_norm(evaluate(f, n), p);
      r.rows.push_back({n, t, lhs, rhs, safe_ratio(lhs, rhs)});
    }
  }
  finalize_report(r);
  return r;
}

DeltaReport delta_counterexample(double p, int m, const std::vector<int>& depths) {
  check_p(p, "delta_counterexample");
  const FiltrationSpec spec(m, max_depth(depths, "delta_counterexample"), 1);
  const Martingale f = delta_martingale(spec);
  const Martingale g = riesz_potential(f, (p - 1.0) / p);
  DeltaReport d;
  d.level_constant = std::pow(static_cast<double>(m), -p) * (std::pow(m - 1.0, p) + (m - 1.0));
  for (int n = 1; n <= spec.depth; ++n) {
    d.level_terms.push_back(std::pow(lp_norm(g.difference(n), p), p));
  }
  d.report.depths = depths;
  for (int n : depths) {
    CompensatedSum s;
    for (int k = 0; k < n; ++k) s += d.level_terms[static_cast<std::size_t>(k)];
    d.power_sum.push_back(s.value());
    d.l1.push_back(lp_norm(evaluate(f, n), 1.0));
    d.potential_power.push_back(std::pow(lp_norm(evaluate(g, n), p), p));
    d.report.rows.push_back({n, 0, s.value(), d.l1.back(), safe_ratio(s.value(), d.l1.back())});
  }
  std::vector<double> x(depths.begin(), depths.end());
  d.power_slope = least_squares_slope(x, d.power_sum);
  finalize_report(d.report);
  return d;
}

EmbeddingReport main_inequality_experiment(const SubspaceW& w, double p, const std::vector<int>& depths, int trials,
                                           std::uint64_t seed) {
  check_p(p, "main_inequality_experiment");
  if (trials < 1) throw std::invalid_argument("main_inequality_experiment: trials must be >= 1");
  const FiltrationSpec spec(w.m(), max_depth(depths, "main_inequality_experiment"), w.ell());
  EmbeddingReport r;
  r.depths = depths;
  for (int t = 0; t < trials; ++t) {
    const Martingale f = random_w_martingale(w, spec, {}, derive_seed(seed, static_cast<std::uint64_t>(t)));
    add_main_rows(r, f, p, t);
  }
  finalize_report(r);
  return r;
}

EmbeddingReport main_inequality_delta(const SubspaceW& w, double p, const std::vector<int>& depths) {
  check_p(p, "main_inequality_delta");
  const auto sc = check_second_condition(w);
  if (!sc.violated) throw std::invalid_argument("main_inequality_delta: W satisfies the second structural condition");
  const FiltrationSpec spec(w.m(), max_depth(depths, "main_inequality_delta"), w.ell());
  const std::vector<double> a(sc.a.data(), sc.a.data() + sc.a.size());
  EmbeddingReport r;
  r.depths = depths;
  add_main_rows(r, delta_martingale(spec, sc.j, a), p, 0);
  finalize_report(r);
  return r;
}

}  // namespace martlab
