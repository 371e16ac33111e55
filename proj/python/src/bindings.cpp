#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "martlab/dimension.hpp"
#include "martlab/groupfourier.hpp"
#include "martlab/io.hpp"
#include "martlab/kappa.hpp"
#include "martlab/norms.hpp"
#include "martlab/riesz.hpp"
#include "martlab/spacew.hpp"
#include "martlab/trace.hpp"

namespace py = pybind11;
using namespace martlab;

namespace {

py::dict embedding_dict(const EmbeddingReport& r) {
  py::dict d;
  d["depths"] = r.depths;
  d["lhs"] = r.lhs;
  d["rhs"] = r.rhs;
  d["ratio"] = r.ratio;
  d["slope"] = r.slope;
  d["predicted_rate"] = r.predicted_rate;
  d["verdict"] = to_string(r.verdict);
  return d;
}

std::vector<double> flat(const SimpleFunction& g) { return g.values; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Martingales on regular trees: norms, kappa, embeddings, Frostman certificates";
  m.attr("__version__") = cli::kVersion;

  py::class_<FiltrationSpec>(m, "FiltrationSpec")
      .def(py::init<int, int, int>(), py::arg("m"), py::arg("depth"), py::arg("ell") = 1)
      .def_readonly("m", &FiltrationSpec::m)
      .def_readonly("depth", &FiltrationSpec::depth)
      .def_readonly("ell", &FiltrationSpec::ell)
      .def("atoms_at", &FiltrationSpec::atoms_at)
      .def("total_atoms", &FiltrationSpec::total_atoms)
      .def("__repr__", [](const FiltrationSpec& s) {
        std::ostringstream os;
        os << "FiltrationSpec(m=" << s.m << ", depth=" << s.depth << ", ell=" << s.ell << ")";
        return os.str();
      });

  py::class_<Martingale>(m, "Martingale")
      .def(py::init<FiltrationSpec, std::vector<double>>(), py::arg("spec"), py::arg("values"),
           "Level-order values: F_0, then the m*ell block under every atom.")
      .def_static("zero", &Martingale::zero)
      .def_property_readonly("spec", &Martingale::spec)
      .def_property_readonly("data", &Martingale::data)
      .def("evaluate", [](const Martingale& f, int level) { return flat(evaluate(f, level)); }, py::arg("level"))
      .def("to_csv", [](const Martingale& f) {
        std::ostringstream os;
        write_martingale_csv(os, f);
        return os.str();
      });
  m.def("parse_martingale", &parse_martingale);
  m.def("random_w_martingale", &random_w_martingale, py::arg("w"), py::arg("spec"), py::arg("profile") = std::vector<double>{},
        py::arg("seed") = 1, py::arg("f0") = std::vector<double>{});
  m.def("delta_martingale", &delta_martingale, py::arg("spec"), py::arg("j") = 0, py::arg("a") = std::vector<double>{});
  m.def("riesz_potential", &riesz_potential, py::arg("f"), py::arg("alpha"));

  py::class_<TreeMeasure>(m, "TreeMeasure")
      .def(py::init<FiltrationSpec, std::vector<double>>(), py::arg("spec"), py::arg("leaf_mass"))
      .def_static("uniform", &TreeMeasure::uniform)
      .def_static("point_mass", &TreeMeasure::point_mass)
      .def_property_readonly("spec", &TreeMeasure::spec)
      .def_property_readonly("leaf_mass", &TreeMeasure::leaf_mass);
  m.def("measure_to_martingale", &measure_to_martingale);
  m.def("martingale_to_measure", &martingale_to_measure);

  m.def("lp_norm", [](const Martingale& f, double p, int level) { return lp_norm(evaluate(f, level), p); },
        py::arg("f"), py::arg("p"), py::arg("level"));
  m.def("lorentz_norm", [](const Martingale& f, double p, int level) { return lorentz_p1_norm(evaluate(f, level), p); },
        py::arg("f"), py::arg("p"), py::arg("level"));
  m.def("weak_norm", [](const Martingale& f, double p, int level) { return weak_lp_norm(evaluate(f, level), p); },
        py::arg("f"), py::arg("p"), py::arg("level"));
  m.def("besov_norm", &besov_norm, py::arg("f"), py::arg("beta"), py::arg("p"));
  m.def("h1_norm", &h1_norm);
  m.def("l1_norm", &l1_norm);

  py::class_<SubspaceW>(m, "SubspaceW")
      .def(py::init<int, int, const std::vector<Eigen::VectorXd>&>(), py::arg("m"), py::arg("ell"), py::arg("blocks"))
      .def_static("zero", &SubspaceW::zero)
      .def_static("full", &SubspaceW::full)
      .def_property_readonly("m", &SubspaceW::m)
      .def_property_readonly("ell", &SubspaceW::ell)
      .def_property_readonly("dim", &SubspaceW::dim)
      .def_property_readonly("basis", &SubspaceW::basis)
      .def("distance", &SubspaceW::distance);
  m.def("rank_one_block", &rank_one_block, py::arg("v"), py::arg("a"));
  m.def("random_subspace", &random_subspace, py::arg("m"), py::arg("ell"), py::arg("k"), py::arg("seed"));
  m.def("check_structure", [](const SubspaceW& w, std::uint64_t seed) {
    const auto r = check_structure(w, seed);
    py::dict d;
    d["first"] = to_string(r.first.status);
    d["first_objective"] = r.first.objective;
    d["second_violated"] = r.second.violated;
    d["second_j"] = r.second.j;
    return d;
  }, py::arg("w"), py::arg("seed") = 1);

  py::class_<KappaSolver>(m, "KappaSolver")
      .def(py::init([](const SubspaceW& w) { return KappaSolver(w); }))
      .def("kappa", [](const KappaSolver& k, double theta) { return k.kappa(theta).value; })
      .def("kappa_witness", [](const KappaSolver& k, double theta) {
        const auto w = k.kappa(theta);
        return py::make_tuple(w.value, w.v, w.a);
      })
      .def("kappa_prime_one", [](const KappaSolver& k) { return k.kappa_prime_one().value; })
      .def("dimension_bound", &KappaSolver::dimension_bound);

  m.def("delta_counterexample", [](double p, int mm, const std::vector<int>& depths) {
    const auto r = delta_counterexample(p, mm, depths);
    py::dict d = embedding_dict(r.report);
    d["l1"] = r.l1;
    d["power_sum"] = r.power_sum;
    d["level_constant"] = r.level_constant;
    d["power_slope"] = r.power_slope;
    return d;
  }, py::arg("p"), py::arg("m"), py::arg("depths"));
  m.def("main_inequality_experiment", [](const SubspaceW& w, double p, const std::vector<int>& depths, int trials,
                                         std::uint64_t seed) {
    return embedding_dict(main_inequality_experiment(w, p, depths, trials, seed));
  }, py::arg("w"), py::arg("p"), py::arg("depths"), py::arg("trials"), py::arg("seed") = 1);

  m.def("frostman_certify", [](const TreeMeasure& mu, double beta, double gamma) {
    const auto c = frostman_certify(mu, beta, gamma);
    py::dict d;
    d["depths"] = c.depths;
    d["constant"] = c.constant;
    d["growth"] = c.growth;
    d["verdict"] = to_string(c.verdict);
    return d;
  }, py::arg("mu"), py::arg("beta"), py::arg("gamma") = 1.0);
  m.def("eggleston_dimension", &eggleston_dimension);
  m.def("sharpness_measure", [](const SubspaceW& w, int depth) {
    auto s = build_sharpness_measure(w, FiltrationSpec(w.m(), depth, w.ell()));
    py::dict d;
    d["weights"] = s.measure.weights;
    d["dimension"] = s.dimension;
    d["dimension_bound"] = s.dimension_bound;
    d["measure"] = s.measure.measure;
    return d;
  }, py::arg("w"), py::arg("depth"));
  m.def("frostman_constant", &frostman_constant, py::arg("nu"), py::arg("alpha"), py::arg("p") = 1.0);
  m.def("capped_cascade", &capped_cascade, py::arg("spec"), py::arg("alpha"), py::arg("p") = 1.0, py::arg("seed") = 1);

  py::class_<FiniteAbelianGroup>(m, "FiniteAbelianGroup")
      .def(py::init<std::vector<int>>(), py::arg("factors"))
      .def_property_readonly("order", &FiniteAbelianGroup::order)
      .def("add", &FiniteAbelianGroup::add)
      .def("negate", &FiniteAbelianGroup::negate)
      .def("characters", &FiniteAbelianGroup::characters)
      .def("dft", &FiniteAbelianGroup::dft)
      .def("inverse_dft", &FiniteAbelianGroup::inverse_dft);

  m.def("run_config", [](const std::string& config) {
    std::ostringstream os;
    cli::run_config(config, os);
    return os.str();
  }, py::arg("config"), "Run one experiment from a JSON config and return its primary artifact as text.");
}
