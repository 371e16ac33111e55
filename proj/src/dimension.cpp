#include "martlab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "martlab/kappa.hpp"

namespace martlab {

namespace {

std::vector<double> atom_weights(const TreeMeasure& mu) {
  const auto& s = mu.spec();
  if (s.ell == 1) {
    for (double x : mu.leaf_mass()) {
      if (x < 0.0) throw std::invalid_argument("antichain_max: signed scalar measure");
    }
  }
  const AtomTable t = mu.atom_masses();
  std::vector<double> out(s.total_atoms());
  for (int n = 0; n <= s.depth; ++n) {
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) out[s.level_offset(n) + i] = t.norm_at(n, i);
  }
  return out;
}

// Bottom-up pass shared by antichain_max and the certificate, reusing buffers.
struct AntichainSolver {
  FiltrationSpec spec;
  std::vector<double> weight, level_cost;
  std::vector<double> val, mass, cost;
  std::vector<char> take;

  AntichainSolver(const TreeMeasure& mu, double beta) : spec(mu.spec()), weight(atom_weights(mu)) {
    for (int n = 0; n <= spec.depth; ++n) level_cost.push_back(std::pow(static_cast<double>(spec.m), -beta * n));
    val.resize(weight.size());
    mass.resize(weight.size());
    cost.resize(weight.size());
    take.resize(weight.size());
  }

  AntichainResult run(double lambda, bool witness) {
    const auto m = static_cast<std::size_t>(spec.m);
    for (int n = spec.depth; n >= 0; --n) {
      const std::size_t off = spec.level_offset(n), next = spec.level_offset(n + 1);
      const double c = level_cost[static_cast<std::size_t>(n)];
      for (std::size_t i = 0; i < spec.atoms_at(n); ++i) {
        const std::size_t g = off + i;
        double s = 0.0, sm = 0.0, sc = 0.0;
        if (n < spec.depth) {
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t h = next + i * m + j;
            if (val[h] > 0.0) s += val[h], sm += mass[h], sc += cost[h];
          }
        }
        const double here = weight[g] - lambda * c;
        if (here >= s && weight[g] > 0.0) {
          val[g] = here, mass[g] = weight[g], cost[g] = c, take[g] = 1;
        } else {
          val[g] = s, mass[g] = sm, cost[g] = sc, take[g] = 0;
        }
      }
    }
    AntichainResult r;
    r.value = std::max(val[0], 0.0);
    if (val[0] > 0.0) r.mass = mass[0], r.cost = cost[0];
    if (witness && val[0] > 0.0) {
      std::vector<AtomId> stack{{0, 0}};
      while (!stack.empty()) {
        const AtomId a = stack.back();
        stack.pop_back();
        const std::size_t g = a.global(spec);
        if (take[g]) {
          r.atoms.push_back(a);
          continue;
        }
        if (a.level == spec.depth) continue;
        for (int j = spec.m - 1; j >= 0; --j) {
          const AtomId c = a.child(spec.m, j);
          if (val[c.global(spec)] > 0.0) stack.push_back(c);
        }
      }
    }
    return r;
  }
};

struct HullPoint {
  double cost, mass, lambda;
  bool single;  // found by the single-atom scan; lambda unused
  AtomId atom;
};

// Upper hull of points sorted by cost, keeping only the increasing part.
std::vector<HullPoint> upper_hull(std::vector<HullPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const HullPoint& a, const HullPoint& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.mass > b.mass);
  });
  std::vector<HullPoint> h;
  for (const auto& p : pts) {
    if (!h.empty() && p.cost == h.back().cost) continue;
    if (!h.empty() && p.mass <= h.back().mass) continue;
    while (h.size() >= 2) {
      const auto& a = h[h.size() - 2];
      const auto& b = h.back();
      // drop b if it lies on or below the chord a -> p
      if ((b.mass - a.mass) * (p.cost - a.cost) <= (p.mass - a.mass) * (b.cost - a.cost)) {
        h.pop_back();
      } else {
        break;
      }
    }
    h.push_back(p);
  }
  return h;
}

struct DepthHull {
  std::vector<HullPoint> hull;
  std::vector<double> grid, grid_value;
};

DepthHull depth_hull(AntichainSolver& solver, double beta, const FrostmanOptions& o) {
  const auto& s = solver.spec;
  DepthHull out;
  std::vector<HullPoint> pts;
  double total = 0.0;
  for (double w : solver.weight) total = std::max(total, w);
  const double tol = 1e-13 * std::max(total, 1e-300);
  // the atom with the largest mass / cost ratio starts the hull next to the origin
  HullPoint best{0.0, 0.0, 0.0, true, {0, 0}};
  double best_ratio = -1.0;
  for (int n = 0; n <= s.depth; ++n) {
    const double c = solver.level_cost[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < s.atoms_at(n); ++i) {
      const double w = solver.weight[s.level_offset(n) + i];
      if (w > 0.0 && w / c > best_ratio) best_ratio = w / c, best = {c, w, 0.0, true, {n, i}};
    }
  }
  if (best_ratio <= 0.0) return out;
  pts.push_back(best);
  const double span = std::abs(beta) * s.depth * std::log(static_cast<double>(s.m));
  for (int k = 0; k < o.lambda_points; ++k) {
    const double t = o.lambda_points == 1 ? 0.0 : -span + 2.0 * span * k / (o.lambda_points - 1);
    const double lambda = std::exp(t);
    const auto r = solver.run(lambda, false);
    out.grid.push_back(lambda);
    out.grid_value.push_back(r.value);
    if (r.mass > 0.0) pts.push_back({r.cost, r.mass, lambda, false, {}});
  }
  {
    const auto r = solver.run(0.0, false);
    if (r.mass > 0.0) pts.push_back({r.cost, r.mass, 0.0, false, {}});
  }
  auto hull = upper_hull(pts);
  // Chord refinement: a DP at the chord slope either finds a point above the
  // chord (a new vertex) or certifies the edge.
  int calls = 0;
  bool changed = true;
  std::vector<std::pair<double, double>> done;  // certified edges by cost
  while (changed && calls < o.max_refinements) {
    changed = false;
    for (std::size_t i = 0; i + 1 < hull.size() && calls < o.max_refinements; ++i) {
      const auto& p = hull[i];
      const auto& q = hull[i + 1];
      const auto key = std::make_pair(p.cost, q.cost);
      if (std::find(done.begin(), done.end(), key) != done.end()) continue;
      const double lambda = (q.mass - p.mass) / (q.cost - p.cost);
      const auto r = solver.run(lambda, false);
      ++calls;
      if (r.value > p.mass - lambda * p.cost + tol && r.mass > 0.0) {
        pts.push_back({r.cost, r.mass, lambda, false, {}});
        changed = true;
      } else {
        done.push_back(key);
      }
    }
    if (changed) hull = upper_hull(pts);
  }
  out.hull = std::move(hull);
  return out;
}

}  // namespace

AntichainResult antichain_max(const TreeMeasure& mu, double beta, double lambda, bool witness) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("antichain_max: lambda must be >= 0");
  if (!std::isfinite(beta)) throw std::invalid_argument("antichain_max: beta must be finite");
  AntichainSolver solver(mu, beta);
  return solver.run(lambda, witness);
}

const char* to_string(FrostmanVerdict v) noexcept {
  return v == FrostmanVerdict::Violated ? "VIOLATED" : "CERTIFIED";
}

FrostmanCertificate frostman_certify(const TreeMeasure& mu, double beta, double gamma, FrostmanOptions options) {
  if (!std::isfinite(beta)) throw std::invalid_argument("frostman_certify: beta must be finite");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("frostman_certify: gamma must lie in (0, 1]");
  if (options.lambda_points < 1) throw std::invalid_argument("frostman_certify: need at least one lambda");
  const auto& s = mu.spec();
  FrostmanCertificate cert;
  cert.beta = beta;
  cert.gamma = gamma;
  for (int d = 1; d <= s.depth; ++d) {
    const TreeMeasure md = d == s.depth ? mu : mu.aggregated(d);
    AntichainSolver solver(md, beta);
    auto dh = depth_hull(solver, beta, options);
    double k = 0.0;
    const HullPoint* arg = nullptr;
    for (const auto& p : dh.hull) {
      const double r = p.mass / std::pow(p.cost, gamma);
      if (r > k) k = r, arg = &p;
    }
    cert.depths.push_back(d);
    cert.constant.push_back(k);
    if (d == s.depth) {
      cert.lambda_grid = dh.grid;
      cert.best_value = dh.grid_value;
      for (const auto& p : dh.hull) cert.hull.push_back({p.cost, p.mass});
      if (arg != nullptr) {
        if (arg->single) {
          cert.witness = {arg->atom};
        } else {
          cert.witness = solver.run(arg->lambda, true).atoms;
        }
      }
    }
  }
  std::vector<double> x, y;
  const double logm = std::log(static_cast<double>(s.m));
  for (std::size_t i = cert.depths.size() / 2; i < cert.depths.size(); ++i) {
    if (!(cert.constant[i] > 0.0)) continue;
    x.push_back(cert.depths[i]);
    y.push_back(std::log(cert.constant[i]) / logm);
  }
  cert.growth = x.size() >= 2 ? least_squares_slope(x, y) : 0.0;
  cert.verdict = cert.growth > options.growth_threshold ? FrostmanVerdict::Violated : FrostmanVerdict::Certified;
  return cert;
}

double eggleston_dimension(const std::vector<double>& p) {
  if (p.size() < 2) throw std::invalid_argument("eggleston_dimension: need at least two weights");
  double total = 0.0, h = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw std::invalid_argument("eggleston_dimension: negative weight");
    total += x;
    if (x > 0.0) h -= x * std::log(x);
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("eggleston_dimension: weights must sum to 1");
  return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

MultiplicativeMeasure multiplicative_measure(const Eigen::VectorXd& v, const FiltrationSpec& spec) {
  if (v.size() != spec.m) throw std::invalid_argument("multiplicative_measure: v has wrong size");
  if (std::abs(v.sum()) > 1e-9 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("multiplicative_measure: v must have zero sum");
  }
  if ((v.array() < -1.0 - 1e-12).any()) throw std::invalid_argument("multiplicative_measure: v_j < -1");
  MultiplicativeMeasure out{v, {}, TreeMeasure::uniform(FiltrationSpec(spec.m, spec.depth, 1))};
  const auto m = static_cast<std::size_t>(spec.m);
  for (Eigen::Index j = 0; j < v.size(); ++j) out.weights.push_back(std::max(0.0, (1.0 + v(j)) / spec.m));
  double total = 0.0;
  for (double p : out.weights) total += p;
  for (double& p : out.weights) p /= total;
  std::vector<double> mass{1.0};
  for (int n = 0; n < spec.depth; ++n) {
    std::vector<double> next(mass.size() * m);
    for (std::size_t i = 0; i < mass.size(); ++i) {
      for (std::size_t j = 0; j < m; ++j) next[i * m + j] = mass[i] * out.weights[j];
    }
    mass.swap(next);
  }
  out.measure = TreeMeasure(FiltrationSpec(spec.m, spec.depth, 1), std::move(mass));
  return out;
}

SharpnessMeasure build_sharpness_measure(const SubspaceW& w, const FiltrationSpec& spec) {
  if (spec.m != w.m() || spec.ell != w.ell()) throw std::invalid_argument("build_sharpness_measure: W does not match the filtration");
  const KappaSolver solver(w);
  const auto wit = solver.kappa_prime_one();
  Eigen::VectorXd v = wit.v;
  Eigen::VectorXd a = wit.a.size() == spec.ell ? wit.a.normalized() : Eigen::VectorXd::Unit(spec.ell, 0);
  SharpnessMeasure out{multiplicative_measure(v, spec), Martingale::zero(spec), a, 1.0, solver.dimension_bound()};
  out.dimension = eggleston_dimension(out.measure.weights);
  // Lift the scalar density F_n = prod (1 + h_i) to F (x) a.
  const Martingale scalar = measure_to_martingale(out.measure.measure);
  const auto ell = static_cast<std::size_t>(spec.ell);
  std::vector<double> data(scalar.data().size() * ell);
  for (std::size_t k = 0; k < scalar.data().size(); ++k) {
    for (std::size_t c = 0; c < ell; ++c) data[k * ell + c] = scalar.data()[k] * a(static_cast<Eigen::Index>(c));
  }
  out.lift = Martingale(spec, std::move(data));
  return out;
}

DigitFrequencyReport digit_frequency_test(const std::vector<double>& weights, int samples, int digits,
                                          std::uint64_t seed) {
  if (samples < 1 || digits < 1) throw std::invalid_argument("digit_frequency_test: samples and digits must be >= 1");
  (void)eggleston_dimension(weights);
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) cdf[j] = acc += weights[j];
  std::vector<std::uint64_t> count(weights.size(), 0);
  for (int s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    for (int d = 0; d < digits; ++d) {
      const double u = uniform01(rng) * acc;
      std::size_t j = 0;
      while (j + 1 < cdf.size() && u >= cdf[j]) ++j;
      while (weights[j] == 0.0 && j > 0) --j;
      ++count[j];
    }
  }
  DigitFrequencyReport r;
  const double total = static_cast<double>(samples) * digits;
  double worst_var = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    r.frequencies.push_back(static_cast<double>(count[j]) / total);
    r.max_deviation = std::max(r.max_deviation, std::abs(r.frequencies[j] - weights[j]));
    worst_var = std::max(worst_var, weights[j] * (1.0 - weights[j]));
  }
  r.bound = 4.0 * std::sqrt(worst_var / total);
  r.within = r.max_deviation <= r.bound;
  return r;
}

}  // namespace martlab
