#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "martlab/decomp.hpp"
#include "martlab/dimension.hpp"
#include "martlab/groupfourier.hpp"
#include "martlab/io.hpp"
#include "martlab/kappa.hpp"
#include "martlab/norms.hpp"
#include "martlab/riesz.hpp"
#include "martlab/spacew.hpp"
#include "martlab/trace.hpp"

namespace martlab::cli {

using nlohmann::json;

namespace {

// A JSON object whose keys must all be read; anything left over is a typo.
class Config {
 public:
  Config(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument(where_ + ": expected a JSON object");
  }

  [[nodiscard]] bool has(const std::string& k) const { return j_.contains(k); }

  template <class T>
  T get(const std::string& k) {
    used_.insert(k);
    if (!has(k)) throw std::invalid_argument(where_ + ": missing '" + k + "'");
    try {
      return j_.at(k).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where_ + ": '" + k + "' has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& k, T fallback) {
    used_.insert(k);
    return has(k) ? get<T>(k) : fallback;
  }

  const json& raw(const std::string& k) {
    used_.insert(k);
    if (!has(k)) throw std::invalid_argument(where_ + ": missing '" + k + "'");
    return j_.at(k);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw std::invalid_argument(where_ + ": unknown key '" + item.key() + "'");
    }
  }

  [[nodiscard]] const json& all() const { return j_; }

 private:
  json j_;
  std::string where_;
  std::set<std::string> used_;
};

std::uint64_t seed_of(Config& c) { return c.get<std::uint64_t>("seed", 1); }

std::vector<int> parse_depths(const json& v) {
  std::vector<int> out;
  if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw std::invalid_argument("depths: expected integers");
      out.push_back(x.get<int>());
    }
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto dots = s.find("..");
    try {
      if (dots != std::string::npos) {
        const int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
        for (int n = a; n <= b; ++n) out.push_back(n);
      } else {
        std::istringstream in(s);
        std::string tok;
        while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("depths: cannot parse '" + s + "'");
    }
  } else {
    throw std::invalid_argument("depths: expected a list or a string like \"4..10\"");
  }
  if (out.empty()) throw std::invalid_argument("depths: empty");
  for (int n : out) {
    if (n < 1) throw std::invalid_argument("depths must be >= 1");
  }
  return out;
}

SubspaceW w_source(const json& v, std::uint64_t seed) {
  if (v.is_string()) return read_w(v.get<std::string>());
  Config c(v, "w");
  const auto gen = c.get<std::string>("generator");
  SubspaceW out = SubspaceW::zero(3, 1);
  if (gen == "span") {
    out = SubspaceW(3, 2, {rank_one_block(Eigen::Vector3d(1.0, -1.0, 0.0), Eigen::VectorXd::Unit(2, 0))});
  } else {
    const int m = c.get<int>("m"), ell = c.get<int>("ell", 1);
    if (m < 3 || ell < 1) throw std::invalid_argument("w: need m >= 3 and ell >= 1");
    if (gen == "zero") {
      out = SubspaceW::zero(m, ell);
    } else if (gen == "full") {
      out = SubspaceW::full(m, ell);
    } else if (gen == "delta") {
      const int j = c.get<int>("j", 0);
      if (j < 0 || j >= m) throw std::invalid_argument("w: j out of range");
      out = SubspaceW(m, ell, {rank_one_block(delta_vector(m, j), Eigen::VectorXd::Unit(ell, 0))});
    } else if (gen == "random") {
      out = random_subspace(m, ell, c.get<int>("dim"), c.get<std::uint64_t>("seed", seed));
    } else {
      throw std::invalid_argument("w: unknown generator '" + gen + "'");
    }
  }
  c.finish();
  return out;
}

TreeMeasure measure_source(const json& v, std::uint64_t seed) {
  if (v.is_string()) return read_measure(v.get<std::string>());
  Config c(v, "measure");
  const auto gen = c.get<std::string>("generator");
  const FiltrationSpec s(c.get<int>("m"), c.get<int>("N"));
  TreeMeasure out = TreeMeasure::uniform(s);
  if (gen == "uniform") {
  } else if (gen == "point") {
    const auto leaf = c.get<std::size_t>("leaf", 0);
    if (leaf >= s.atoms_at(s.depth)) throw std::invalid_argument("measure: leaf out of range");
    out = TreeMeasure::point_mass(s, leaf);
  } else if (gen == "cascade") {
    out = capped_cascade(s, c.get<double>("alpha"), c.get<double>("p", 1.0), c.get<std::uint64_t>("seed", seed));
  } else if (gen == "multiplicative") {
    const auto v = c.get<std::vector<double>>("v");
    if (static_cast<int>(v.size()) != s.m) throw std::invalid_argument("measure: v must have m entries");
    out = multiplicative_measure(Eigen::Map<const Eigen::VectorXd>(v.data(), s.m), s).measure;
  } else {
    throw std::invalid_argument("measure: unknown generator '" + gen + "'");
  }
  c.finish();
  return out;
}

Martingale martingale_source(const json& v, std::uint64_t seed) {
  if (v.is_string()) return read_martingale(v.get<std::string>());
  Config c(v, "f");
  const auto gen = c.get<std::string>("generator");
  Martingale out = Martingale::zero(FiltrationSpec(3, 1));
  if (gen == "random") {
    const SubspaceW w = w_source(c.raw("w"), c.get<std::uint64_t>("seed", seed));
    const FiltrationSpec s(w.m(), c.get<int>("N"), w.ell());
    std::vector<double> f0 = c.get<std::vector<double>>("f0", {});
    out = random_w_martingale(w, s, {}, c.get<std::uint64_t>("seed", seed), f0);
  } else if (gen == "delta") {
    const FiltrationSpec s(c.get<int>("m"), c.get<int>("N"), c.get<int>("ell", 1));
    out = delta_martingale(s, c.get<int>("j", 0));
  } else {
    throw std::invalid_argument("f: unknown generator '" + gen + "'");
  }
  c.finish();
  return out;
}

std::pair<FiniteAbelianGroup, FiberFamily> fiber_source(const json& v, std::uint64_t seed) {
  if (v.is_string()) return read_fibers(v.get<std::string>());
  Config c(v, "fibers");
  if (c.get<std::string>("generator") != "random") throw std::invalid_argument("fibers: unknown generator");
  FiniteAbelianGroup g(c.get<std::vector<int>>("factors"));
  const int ell = c.get<int>("ell");
  const auto dims = c.get<std::vector<int>>("dims");
  if (static_cast<int>(dims.size()) != g.order() - 1) throw std::invalid_argument("fibers: need one dimension per nonzero gamma");
  auto fam = random_fibers(ell, dims, c.get<std::uint64_t>("seed", seed));
  c.finish();
  return {g, fam};
}

std::string num(double x) { return format_double(x); }

std::string vec(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? ";" : "") + num(v(k));
  return s;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json cvec_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back({v(k).real(), v(k).imag()});
  return out;
}

// Canonical config text (sorted keys, output path dropped) and its hash.
std::string config_header(const json& cfg) {
  json c = cfg;
  c.erase("out");
  const std::string text = c.dump();
  return std::string("# martlab ") + kVersion + " config=" + hex64(fnv1a(text)) + " " + text + "\n";
}

// JSON artifacts carry the same stamp as the CSV header.
void stamp(json& out, const json& cfg) {
  json c = cfg;
  c.erase("out");
  out["martlab"] = kVersion;
  out["config_hash"] = hex64(fnv1a(c.dump()));
  out["config"] = c;
}

void write_embedding(std::ostream& os, const EmbeddingReport& r, json& summary) {
  os << "depth,trial,lhs,rhs,ratio\n";
  for (const auto& row : r.rows) {
    os << row.depth << ',' << row.trial << ',' << num(row.lhs) << ',' << num(row.rhs) << ',' << num(row.ratio) << '\n';
  }
  summary["verdict"] = to_string(r.verdict);
  summary["slope"] = r.slope;
  summary["predicted_rate"] = r.predicted_rate;
  summary["max_ratio"] = r.ratio;
}

void write_summary(std::ostream& os, const json& summary) { os << "# summary " << summary.dump() << '\n'; }

void run_norm(Config& c, std::ostream& os) {
  const Martingale f = martingale_source(c.raw("f"), seed_of(c));
  const auto name = c.get<std::string>("norm");
  const double p = c.get<double>("p", 1.0);
  const double beta = c.get<double>("beta", 0.0);
  const int level = c.get<int>("level", f.spec().depth);
  c.get<std::uint64_t>("seed", 1);
  c.finish();
  if (level < 0 || level > f.spec().depth) throw std::invalid_argument("norm: level out of range");
  const SimpleFunction g = evaluate(f, level);
  double value = 0.0;
  if (name == "lp") {
    value = lp_norm(g, p);
  } else if (name == "lorentz") {
    value = lorentz_p1_norm(g, p);
  } else if (name == "weak") {
    value = weak_lp_norm(g, p);
  } else if (name == "besov") {
    value = besov_norm(f, beta, p);
  } else if (name == "h1") {
    value = h1_norm(f);
  } else if (name == "l1") {
    value = l1_norm(f);
  } else {
    throw std::invalid_argument("norm: unknown norm '" + name + "'");
  }
  os << num(value) << '\n';
}

void run_check_w(Config& c, std::ostream& os) {
  const SubspaceW w = w_source(c.raw("w"), seed_of(c));
  const auto seed = c.get<std::uint64_t>("seed", 1);
  c.finish();
  const auto r = check_structure(w, seed);
  json out;
  stamp(out, c.all());
  out["m"] = w.m();
  out["ell"] = w.ell();
  out["dim"] = w.dim();
  out["first"] = {{"status", to_string(r.first.status)},
                  {"objective", r.first.objective},
                  {"v", vec_json(r.first.v)},
                  {"a", vec_json(r.first.a)},
                  {"witness_residual", r.first.witness_residual},
                  {"starts", r.first.starts}};
  out["second"] = {{"violated", r.second.violated},
                   {"j", r.second.j},
                   {"a", vec_json(r.second.a)},
                   {"min_singular", r.second.min_singular}};
  os << out.dump(2) << '\n';
}

void run_kappa(Config& c, std::ostream& os) {
  const SubspaceW w = w_source(c.raw("w"), seed_of(c));
  const int grid = c.get<int>("grid", 21);
  const auto seed = c.get<std::uint64_t>("seed", 1);
  c.finish();
  KappaOptions opt;
  opt.seed = seed;
  const KappaSolver ks(w, opt);
  const auto prof = ks.profile(theta_grid(grid));
  os << config_header(c.all()) << "quantity,theta,value,v,a\n";
  for (std::size_t k = 0; k < prof.theta.size(); ++k) {
    const auto& wit = prof.values[k];
    os << "kappa," << num(prof.theta[k]) << ',' << num(wit.value) << ',' << vec(wit.v) << ',' << vec(wit.a) << '\n';
  }
  os << "kappa_prime_one,1," << num(prof.kappa_prime_one.value) << ',' << vec(prof.kappa_prime_one.v) << ','
     << vec(prof.kappa_prime_one.a) << '\n';
  os << "dimension_bound,," << num(prof.dimension_bound) << ",,\n";
}

void run_embed(Config& c, std::ostream& os, std::string mode) {
  if (mode.empty()) mode = c.get<std::string>("mode");
  const double p = c.get<double>("p", 2.0);
  const auto depths = parse_depths(c.raw("depths"));
  const auto seed = c.get<std::uint64_t>("seed", 1);
  json summary;
  std::ostringstream body;
  if (mode == "hls") {
    const double q = c.get<double>("q");
    const int m = c.get<int>("m", 3), trials = c.get<int>("trials", 10);
    c.finish();
    write_embedding(body, hls_experiment(p, q, m, depths, trials, seed), summary);
  } else if (mode == "delta") {
    if (c.has("w") || c.has("ell")) {
      if (c.has("w") && c.has("ell")) throw std::invalid_argument("embed: give either w or ell");
      const SubspaceW w = c.has("w") ? w_source(c.raw("w"), seed_of(c))
                                     : w_source(json{{"generator", "delta"}, {"m", c.get<int>("m", 3)}, {"ell", c.get<int>("ell")}}, seed);
      c.finish();
      write_embedding(body, main_inequality_delta(w, p, depths), summary);
    } else {
      const int m = c.get<int>("m", 3);
      c.finish();
      const auto d = delta_counterexample(p, m, depths);
      write_embedding(body, d.report, summary);
      summary["l1"] = d.l1;
      summary["power_sum"] = d.power_sum;
      summary["level_constant"] = d.level_constant;
      summary["power_slope"] = d.power_slope;
    }
  } else if (mode == "main") {
    const SubspaceW w = w_source(c.raw("w"), seed_of(c));
    const int trials = c.get<int>("trials", 10);
    c.finish();
    write_embedding(body, main_inequality_experiment(w, p, depths, trials, seed), summary);
  } else {
    throw std::invalid_argument("embed: unknown mode '" + mode + "'");
  }
  os << config_header(c.all()) << body.str();
  write_summary(os, summary);
}

json run_length(const FlatForest& forest) {
  json out = json::array();
  for (std::size_t k = 0; k < forest.labels.size();) {
    std::size_t e = k;
    while (e < forest.labels.size() && forest.labels[e] == forest.labels[k]) ++e;
    out.push_back({forest.labels[k] == AtomLabel::Convex ? "C" : "F", e - k});
    k = e;
  }
  return out;
}

void run_decompose(Config& c, std::ostream& os, std::ostream* reports) {
  const Martingale f = martingale_source(c.raw("f"), seed_of(c));
  const double eps = c.get<double>("eps", 0.1);
  const double p = c.get<double>("p", 2.0);
  c.get<std::uint64_t>("seed", 1);
  c.finish();
  const auto forest = classify_atoms(f, eps);
  const auto step = verify_stepwise_identity(f);
  const auto lemma = verify_convex_lemma(f, forest);
  const auto sum = verify_tree_summation(f, forest, p);
  json out;
  stamp(out, c.all());
  out["epsilon"] = eps;
  out["labels"] = run_length(forest);
  out["convex_count"] = forest.convex_count();
  json trees = json::array();
  for (const auto& t : forest.trees) {
    trees.push_back({{"root", {t.root.level, t.root.index}},
                     {"members", t.members.size()},
                     {"fruits", t.fruits.size()},
                     {"leaves", t.leaves.size()}});
  }
  out["trees"] = trees;
  out["stepwise"] = {{"increments", step.increments}, {"telescoped", step.telescoped}, {"l1", step.l1},
                     {"defect", step.defect}, {"ok", step.ok}};
  out["convex_lemma"] = {{"constant", lemma.constant}, {"worst_atom_ratio", lemma.worst_atom_ratio},
                         {"per_atom_ok", lemma.per_atom_ok}, {"convex_besov", lemma.convex_besov},
                         {"l1", lemma.l1}, {"aggregate_ok", lemma.aggregate_ok}};
  out["tree_summation"] = {{"p", p}, {"max_ratio", sum.max_ratio}, {"flat_l1", sum.flat_l1},
                           {"max_tree_constant", sum.max_tree_constant}};
  os << out.dump(2) << '\n';
  if (reports) {
    *reports << config_header(c.all()) << "report,tree,lhs,rhs,ratio,tree_l1\n";
    *reports << "stepwise,," << num(step.increments) << ',' << num(step.telescoped) << ',' << num(step.defect) << ','
             << num(step.l1) << '\n';
    *reports << "convex_lemma,," << num(lemma.convex_besov) << ',' << num(lemma.constant * step.telescoped)
             << ',' << num(lemma.worst_atom_ratio) << ',' << num(lemma.l1) << '\n';
    for (const auto& row : sum.rows) {
      *reports << "tree_summation," << row.tree << ',' << num(row.lhs) << ',' << num(row.rhs) << ',' << num(row.ratio)
               << ',' << num(row.tree_l1) << '\n';
    }
  }
}

void run_dimension(Config& c, std::ostream& os) {
  if (c.get<bool>("sharpness", false)) {
    const SubspaceW w = w_source(c.raw("w"), seed_of(c));
    const int depth = c.get<int>("depth", 8);
    const double gamma = c.get<double>("gamma", 0.5);
    c.get<std::uint64_t>("seed", 1);
    c.finish();
    const auto s = build_sharpness_measure(w, FiltrationSpec(w.m(), depth, w.ell()));
    json out;
    stamp(out, c.all());
    out["v"] = vec_json(s.measure.v);
    out["a"] = vec_json(s.a);
    out["weights"] = s.measure.weights;
    out["dimension"] = s.dimension;
    out["dimension_bound"] = s.dimension_bound;
    json flips = json::array();
    for (double beta : {s.dimension_bound - 0.05, s.dimension_bound + 0.05}) {
      const auto cert = frostman_certify(s.measure.measure, beta, gamma);
      flips.push_back({{"beta", beta}, {"gamma", gamma}, {"growth", cert.growth}, {"verdict", to_string(cert.verdict)}});
    }
    out["frostman"] = flips;
    os << out.dump(2) << '\n';
    return;
  }
  const TreeMeasure mu = measure_source(c.raw("measure"), seed_of(c));
  const double beta = c.get<double>("beta"), gamma = c.get<double>("gamma", 1.0);
  FrostmanOptions opt;
  opt.growth_threshold = c.get<double>("threshold", opt.growth_threshold);
  c.get<std::uint64_t>("seed", 1);
  c.finish();
  const auto cert = frostman_certify(mu, beta, gamma, opt);
  os << config_header(c.all()) << "depth,constant\n";
  for (std::size_t k = 0; k < cert.depths.size(); ++k) os << cert.depths[k] << ',' << num(cert.constant[k]) << '\n';
  write_summary(os, {{"verdict", to_string(cert.verdict)}, {"growth", cert.growth}, {"hull_vertices", cert.hull.size()}});
}

void run_group(Config& c, std::ostream& os, std::string action) {
  if (action.empty()) action = c.get<std::string>("action");
  const auto [g, fibers] = fiber_source(c.raw("fibers"), seed_of(c));
  const auto budget = c.get<std::size_t>("budget", std::size_t{1} << 22);
  c.finish();
  json out;
  stamp(out, c.all());
  out["action"] = action;
  if (action == "check-cancel") {
    const auto r = check_cancellation_fibers(fibers);
    out["holds"] = r.holds;
    out["witness"] = cvec_json(r.a);
    out["second_condition_violated"] = check_second_condition(realify(build_shift_invariant_w(g, fibers))).violated;
  } else if (action == "check-antisym") {
    const auto r = check_antisymmetry_fibers(g, fibers);
    out["holds"] = r.holds;
    out["gamma"] = r.gamma;
    out["witness"] = cvec_json(r.a);
  } else if (action == "subgroup-bound") {
    const auto r = antisymmetry_subgroup_bound(g, fibers, budget);
    out["k"] = r.k;
    out["subgroup"] = r.subgroup;
    out["bound"] = r.bound;
  } else {
    throw std::invalid_argument("group: unknown action '" + action + "'");
  }
  os << out.dump(2) << '\n';
}

void run_trace(Config& c, std::ostream& os, std::string action) {
  if (action.empty()) action = c.get<std::string>("action");
  const auto seed = c.get<std::uint64_t>("seed", 1);
  std::ostringstream body;
  json summary;
  if (action == "constant") {
    const TreeMeasure nu = measure_source(c.raw("measure"), seed_of(c));
    const double alpha = c.get<double>("alpha"), p = c.get<double>("p", 1.0);
    c.finish();
    const auto lv = frostman_level_maxima(nu, alpha, p);
    body << "level,value\n";
    for (std::size_t n = 0; n < lv.size(); ++n) body << n << ',' << num(lv[n]) << '\n';
    summary["constant"] = *std::max_element(lv.begin(), lv.end());
  } else if (action == "embed-p" || action == "embed-l1") {
    const TreeMeasure nu = measure_source(c.raw("measure"), seed_of(c));
    const SubspaceW w = w_source(c.raw("w"), seed_of(c));
    const double alpha = c.get<double>("alpha");
    const auto depths = parse_depths(c.raw("depths"));
    const int trials = c.get<int>("trials", 10);
    if (action == "embed-p") {
      const double p = c.get<double>("p");
      c.finish();
      const auto r = trace_experiment_p(nu, w, alpha, p, depths, trials, seed);
      write_embedding(body, r.embedding, summary);
      summary["frostman_constant"] = r.frostman_constant;
    } else {
      const double eps = c.get<double>("eps", 0.1);
      c.finish();
      const auto r = trace_experiment_l1(nu, w, alpha, depths, trials, seed, eps);
      write_embedding(body, r.trace.embedding, summary);
      summary["frostman_constant"] = r.trace.frostman_constant;
      summary["max_tree_ratio"] = r.max_tree_ratio;
      summary["split_slack"] = r.split_slack;
      summary["convex_slack"] = r.convex_slack;
    }
  } else if (action == "sharpness") {
    const SubspaceW w = w_source(c.raw("w"), seed_of(c));
    const double gamma = c.get<double>("gamma");
    const int depth = c.get<int>("depth", 10);
    c.finish();
    const auto r = build_sharpness_trace_measure(w, gamma, FiltrationSpec(w.m(), depth, w.ell()));
    body << "depth,frostman,level_term,partial_sum,trace_norm\n";
    for (std::size_t k = 0; k < r.depths.size(); ++k) {
      body << r.depths[k] << ',' << num(r.frostman[k]) << ',' << num(r.level_terms[k]) << ',' << num(r.partial_sums[k])
           << ',' << num(r.trace_norm[k]) << '\n';
    }
    summary = {{"alpha", r.alpha}, {"gamma", r.gamma}, {"level_constant", r.level_constant},
               {"partial_slope", r.partial_slope}, {"norm_slope", r.norm_slope},
               {"linearity_defect", r.linearity_defect}};
  } else {
    throw std::invalid_argument("trace: unknown action '" + action + "'");
  }
  os << config_header(c.all()) << body.str();
  write_summary(os, summary);
}

void dispatch(Config& c, std::ostream& os, std::ostream* reports) {
  const auto kind = c.get<std::string>("kind");
  c.get<std::string>("out", "");
  if (kind == "norm") {
    run_norm(c, os);
  } else if (kind == "check-w") {
    run_check_w(c, os);
  } else if (kind == "kappa") {
    run_kappa(c, os);
  } else if (kind == "embed") {
    run_embed(c, os, "");
  } else if (kind == "delta-counterexample") {
    run_embed(c, os, "delta");
  } else if (kind == "decompose") {
    run_decompose(c, os, reports);
  } else if (kind == "dimension") {
    run_dimension(c, os);
  } else if (kind == "group") {
    run_group(c, os, "");
  } else if (kind == "trace") {
    run_trace(c, os, "");
  } else {
    throw std::invalid_argument("unknown experiment kind '" + kind + "'");
  }
}

json parse_config_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
}

// A flag value that is either a file path or an inline JSON object.
json source_arg(const std::string& s) {
  if (!s.empty() && s.front() == '{') return parse_config_text(s);
  return s;
}

}  // namespace

void run_config(const std::string& config_json, std::ostream& out, std::ostream* reports) {
  Config c(parse_config_text(config_json), "config");
  dispatch(c, out, reports);
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Martingale Sobolev-space experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  std::string out_path;
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  app.add_option("--out", out_path, "Output file (default: stdout)");

  json cfg;
  auto opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    return sub->add_option_function<std::string>(
        flag,
        [&cfg, key](const std::string& v) {
          if (key == "depths" || key == "w" || key == "measure" || key == "f" || key == "fibers") {
            cfg[key] = key == "depths" ? json(v) : source_arg(v);
          } else if (key == "mode" || key == "norm" || key == "action") {
            cfg[key] = v;
          } else {
            // Numbers stay numbers so the config echo is typed.
            try {
              std::size_t used = 0;
              const double x = std::stod(v, &used);
              if (used != v.size()) throw std::invalid_argument(v);
              if (x == std::floor(x) && v.find_first_of(".eE") == std::string::npos) {
                cfg[key] = static_cast<long long>(x);
              } else {
                cfg[key] = x;
              }
            } catch (const std::logic_error&) {
              throw CLI::ValidationError(key, "expected a number, got '" + v + "'");
            }
          }
        },
        help);
  };

  auto* norm = app.add_subcommand("norm", "Norm of a martingale file");
  opt(norm, "--f", "f", "Martingale file or inline generator JSON")->required();
  opt(norm, "--norm", "norm", "lp | lorentz | weak | besov | h1 | l1")->required();
  opt(norm, "--p", "p", "Exponent");
  opt(norm, "--beta", "beta", "Besov smoothness");
  opt(norm, "--level", "level", "Level of F_n for lp/lorentz/weak (default N)");

  auto* checkw = app.add_subcommand("check-w", "Structural conditions of W as JSON");
  opt(checkw, "--w", "w", "W file or inline generator JSON")->required();

  auto* kappa = app.add_subcommand("kappa", "kappa profile as CSV");
  opt(kappa, "--w", "w", "W file or inline generator JSON")->required();
  opt(kappa, "--grid", "grid", "Number of theta points");

  auto* embed = app.add_subcommand("embed", "Embedding experiments as CSV");
  opt(embed, "--mode", "mode", "hls | delta | main")->required();
  opt(embed, "--p", "p", "p");
  opt(embed, "--q", "q", "q (hls)");
  opt(embed, "--m", "m", "Branching factor");
  opt(embed, "--depths", "depths", "e.g. 4..10 or 4,6,8")->required();
  opt(embed, "--ell", "ell", "Fiber dimension (delta)");
  opt(embed, "--trials", "trials", "Trials");
  opt(embed, "--w", "w", "W file or inline generator JSON");

  auto* decompose = app.add_subcommand("decompose", "Convex/flat forest and checks as JSON");
  opt(decompose, "--f", "f", "Martingale file or inline generator JSON")->required();
  opt(decompose, "--eps", "eps", "epsilon");
  opt(decompose, "--p", "p", "p for the tree summation check");

  auto* dimension = app.add_subcommand("dimension", "Frostman certificate or sharpness measure");
  opt(dimension, "--measure", "measure", "Measure file or inline generator JSON");
  opt(dimension, "--beta", "beta", "beta");
  opt(dimension, "--gamma", "gamma", "gamma");
  opt(dimension, "--threshold", "threshold", "Growth threshold");
  opt(dimension, "--w", "w", "W file or inline generator JSON (with --sharpness)");
  opt(dimension, "--depth", "depth", "Depth of the sharpness measure");
  bool sharpness = false;
  dimension->add_flag("--sharpness", sharpness, "Build the extremal measure of W");

  auto* group = app.add_subcommand("group", "Shift-invariant fiber checks as JSON");
  group->require_subcommand(1);
  for (const char* action : {"check-cancel", "check-antisym", "subgroup-bound"}) {
    auto* sub = group->add_subcommand(action, action);
    opt(sub, "--fibers", "fibers", "Fiber file or inline generator JSON")->required();
    if (std::string(action) == "subgroup-bound") opt(sub, "--budget", "budget", "Enumeration budget");
  }

  auto* trace = app.add_subcommand("trace", "Trace experiments as CSV");
  trace->require_subcommand(1);
  auto* tconst = trace->add_subcommand("constant", "Frostman constant per level");
  opt(tconst, "--measure", "measure", "Measure")->required();
  opt(tconst, "--alpha", "alpha", "alpha")->required();
  opt(tconst, "--p", "p", "p");
  for (const char* action : {"embed-p", "embed-l1"}) {
    auto* sub = trace->add_subcommand(action, action);
    opt(sub, "--measure", "measure", "Measure")->required();
    opt(sub, "--w", "w", "W")->required();
    opt(sub, "--alpha", "alpha", "alpha")->required();
    opt(sub, "--depths", "depths", "Depths")->required();
    opt(sub, "--trials", "trials", "Trials");
    if (std::string(action) == "embed-p") {
      opt(sub, "--p", "p", "p")->required();
    } else {
      opt(sub, "--eps", "eps", "epsilon");
    }
  }
  auto* tsharp = trace->add_subcommand("sharpness", "Extremal trace measure");
  opt(tsharp, "--w", "w", "W")->required();
  opt(tsharp, "--gamma", "gamma", "gamma")->required();
  opt(tsharp, "--depth", "depth", "Depth");

  auto* run = app.add_subcommand("run", "Run a JSON config");
  std::string config_path;
  run->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? kOk : kInvalid;
  }

  try {
    std::string text;
    if (run->parsed()) {
      text = read_file(config_path);
      const json j = parse_config_text(text);
      if (j.is_object() && j.contains("out") && out_path.empty()) out_path = j["out"].get<std::string>();
    } else {
      CLI::App* sub = app.get_subcommands().front();
      cfg["kind"] = sub->get_name();
      if (!sub->get_subcommands().empty()) cfg["action"] = sub->get_subcommands().front()->get_name();
      if (sharpness) cfg["sharpness"] = true;
      cfg["seed"] = seed;
      text = cfg.dump();
    }
    std::ostringstream buffer, reports;
    run_config(text, buffer, &reports);
    if (out_path.empty() || out_path == "-") {
      out << buffer.str();
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw std::invalid_argument("cannot write '" + out_path + "'");
      f << buffer.str();
      if (!reports.str().empty()) {
        std::ofstream r(out_path + ".reports.csv", std::ios::binary);
        r << reports.str();
      }
    }
    return kOk;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
}

}  // namespace martlab::cli
