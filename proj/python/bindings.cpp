#include "steinw/clt.hpp"
#include "steinw/graph_walk.hpp"
#include "steinw/hermite.hpp"
#include "steinw/lmc.hpp"
#include "steinw/stein_bounds.hpp"
#include "steinw/transport.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace steinw;

namespace {

GroundMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return GroundMetric::euclidean;
  if (name == "torus") return GroundMetric::torus;
  throw InvalidArgument("metric", "expected 'euclidean' or 'torus'");
}

EmpiricalMeasure measure(const PointCloud& points, std::optional<std::vector<double>> weights) {
  if (!weights) return EmpiricalMeasure::uniform(points);
  EmpiricalMeasure m;
  m.points = points;
  m.weights = std::move(*weights);
  return m;
}

py::dict as_dict(const KnnResult& r) {
  py::dict d;
  d["n"] = r.n;
  d["k"] = r.k;
  d["distance"] = r.w2;
  d["distance_uniform"] = r.w2_uniform;
  d["bound_shape"] = r.bound_shape;
  d["step_scale"] = r.step_scale;
  d["residual"] = r.residual;
  d["iterations"] = r.iterations;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_steinw, m) {
  m.doc() = "Stein-method Wasserstein bounds, exact transport and companion experiments";
  m.attr("__version__") = kVersion;

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SizeLimitError>(m, "SizeLimitError", PyExc_MemoryError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);
  py::register_exception<IntegrabilityError>(m, "IntegrabilityError", PyExc_ArithmeticError);
  py::register_exception<TruncationError>(m, "TruncationError", PyExc_ArithmeticError);

  m.def("hermite_eval", py::overload_cast<int, double>(&hermite_eval), py::arg("k"), py::arg("x"));
  m.def(
      "hermite_sq_norm", [](std::vector<int> coords, int dim) { return hermite_sq_norm(MultiIndex(std::move(coords), dim)); },
      py::arg("coords"), py::arg("dim"), "Squared Gaussian norm of H_i; coords are 0-based coordinate labels.");
  m.def("hermite_lp_norm", &hermite_lp_norm, py::arg("k"), py::arg("p"), py::arg("quad_points") = 64);
  m.def(
      "tensor_h_norm",
      [](const std::vector<double>& entries, int order, int dim) {
        Tensor t(order, dim);
        if (entries.size() != t.size()) throw InvalidArgument("entries", "expected dim**order values");
        std::copy(entries.begin(), entries.end(), t.data().begin());
        return tensor_h_norm(t);
      },
      py::arg("entries"), py::arg("order"), py::arg("dim"));

  m.def(
      "wasserstein_1d",
      [](const std::vector<double>& a, const std::vector<double>& b, double p) { return wasserstein_1d(a, b, p); },
      py::arg("a"), py::arg("b"), py::arg("p") = 2.0);
  m.def(
      "wasserstein_exact",
      [](const PointCloud& a, const PointCloud& b, double p, std::optional<std::vector<double>> wa,
         std::optional<std::vector<double>> wb, const std::string& metric) {
        return wasserstein_exact(measure(a, std::move(wa)), measure(b, std::move(wb)), p, parse_metric(metric));
      },
      py::arg("a"), py::arg("b"), py::arg("p") = 2.0, py::arg("weights_a") = py::none(), py::arg("weights_b") = py::none(),
      py::arg("metric") = "euclidean");
  m.def("gaussian_w2_closed_form", &gaussian_w2_closed_form, py::arg("mean"), py::arg("diag_cov"));

  py::class_<PairSampler, std::shared_ptr<PairSampler>>(m, "PairSampler")
      .def_property_readonly("dimension", &PairSampler::dimension)
      .def_property_readonly("exchangeable", &PairSampler::exchangeable)
      .def_property_readonly("name", &PairSampler::name);
  m.def("ou_pair", [](int dim) -> std::shared_ptr<PairSampler> { return std::make_shared<OuPairSampler>(dim); },
        py::arg("dim") = 1);
  m.def(
      "clt_pair",
      [](const std::string& summand, int dim, int n) -> std::shared_ptr<PairSampler> {
        return clt_pair_sampler(SummandDistribution(parse_summand_kind(summand), dim), n);
      },
      py::arg("summand") = "rademacher", py::arg("dim") = 1, py::arg("n") = 16);
  m.def("point_mass_pair", [](const Vector& x) -> std::shared_ptr<PairSampler> { return ConstantPairSampler::point_mass(x); },
        py::arg("x"));

  py::class_<BoundConfig>(m, "BoundConfig")
      .def(py::init<>())
      .def_readwrite("s", &BoundConfig::s)
      .def_readwrite("t_grid", &BoundConfig::t_grid)
      .def_readwrite("k_max", &BoundConfig::k_max)
      .def_readwrite("n_outer", &BoundConfig::n_outer)
      .def_readwrite("replicates", &BoundConfig::replicates)
      .def_readwrite("seed", &BoundConfig::seed)
      .def_readwrite("threads", &BoundConfig::threads)
      .def_readwrite("tail_tolerance", &BoundConfig::tail_tolerance)
      .def("validate", &BoundConfig::validate);
  m.def("geometric_grid", &geometric_grid, py::arg("t_min"), py::arg("t_max"), py::arg("nodes"));

  py::class_<TermSeries>(m, "TermSeries")
      .def_readonly("order", &TermSeries::order)
      .def_readonly("raw", &TermSeries::raw)
      .def_readonly("se", &TermSeries::se)
      .def_readonly("weighted", &TermSeries::weighted)
      .def_readonly("contribution", &TermSeries::contribution);
  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("kind", &BoundReport::kind)
      .def_readonly("sampler", &BoundReport::sampler)
      .def_readonly("total", &BoundReport::total)
      .def_readonly("total_se", &BoundReport::total_se)
      .def_readonly("t_grid", &BoundReport::t_grid)
      .def_readonly("integrand", &BoundReport::integrand)
      .def_readonly("integrand_se", &BoundReport::integrand_se)
      .def_readonly("terms", &BoundReport::terms)
      .def_readonly("tail_diagnostic", &BoundReport::tail_diagnostic)
      .def_readonly("clamp_events", &BoundReport::clamp_events)
      .def_readonly("significant_clamps", &BoundReport::significant_clamps)
      .def_readonly("evaluations", &BoundReport::evaluations)
      .def_readonly("final_bound", &BoundReport::final_bound)
      .def_readonly("squared_final_bound", &BoundReport::squared_final_bound)
      .def_readonly("notes", &BoundReport::notes);

  m.def("gauss_w2_bound", &gauss_w2_bound, py::arg("sampler"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("wp_gauss_1d_bound", &wp_gauss_1d_bound, py::arg("sampler"), py::arg("p"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("wp_gauss_exch_bound", &wp_gauss_exch_bound, py::arg("sampler"), py::arg("p"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "general_w2_bound_ou",
      [](const PairSampler& sampler, double horizon, const BoundConfig& cfg) {
        return general_w2_bound(sampler, DiffusionSpec::ornstein_uhlenbeck(sampler.dimension()), horizon, cfg);
      },
      py::arg("sampler"), py::arg("horizon"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("curvature_weight_fk", &curvature_weight_fk, py::arg("k"), py::arg("t"), py::arg("rho"), py::arg("dim"));
  m.def("corollary_constant", &corollary_constant, py::arg("rho"), py::arg("k"));

  m.def(
      "clt_rate_expression",
      [](const std::string& summand, int dim, double n, double p, double q) {
        const auto r = clt_rate_expression(
            CltRateInputs::from_distribution(SummandDistribution(parse_summand_kind(summand), dim), n, p, q));
        py::dict d;
        d["value"] = r.value;
        d["leading"] = r.leading;
        d["second"] = r.second;
        d["remainder"] = r.remainder;
        d["remainder_uncomputable"] = r.remainder_uncomputable;
        return d;
      },
      py::arg("summand"), py::arg("dim"), py::arg("n"), py::arg("p") = 2.0, py::arg("q") = 2.0);
  m.def(
      "clt_empirical_wp",
      [](const std::string& summand, int dim, int n, double p, int n_samples, std::uint64_t seed) {
        const auto e = clt_empirical_wp(SummandDistribution(parse_summand_kind(summand), dim), n, p, n_samples, seed);
        return py::make_tuple(e.distance, e.se);
      },
      py::arg("summand"), py::arg("dim"), py::arg("n"), py::arg("p") = 2.0, py::arg("n_samples") = 2000,
      py::arg("seed") = 0);
  m.def(
      "clt_rate_fit",
      [](const std::vector<double>& ns, const std::vector<double>& d) {
        const auto f = clt_rate_fit(ns, d);
        return py::make_tuple(f.slope, f.r2);
      },
      py::arg("ns"), py::arg("distances"));

  m.def(
      "knn_experiment",
      [](int n, int k, std::uint64_t seed, int dim, double amplitude) {
        const auto f = amplitude == 0.0 ? TorusDensity::uniform(dim) : TorusDensity::cosine(dim, amplitude);
        py::gil_scoped_release release;
        const auto r = knn_experiment(f, n, k, seed);
        py::gil_scoped_acquire acquire;
        return as_dict(r);
      },
      py::arg("n"), py::arg("k"), py::arg("seed") = 0, py::arg("dim") = 1, py::arg("amplitude") = 0.0);
  m.def("knn_step_scale", &knn_step_scale, py::arg("k"), py::arg("n"), py::arg("dim"));
  m.def("knn_bound_shape", &knn_bound_shape, py::arg("n"), py::arg("k"), py::arg("dim"));

  m.def("stationary_second_moment_bound", &stationary_second_moment_bound, py::arg("dim"), py::arg("h"), py::arg("rho"),
        py::arg("lipschitz"));
  m.def(
      "sup_norm_bound",
      [](double h, double rho, double lipschitz) {
        const auto b = sup_norm_bound(h, rho, lipschitz);
        return py::make_tuple(b.exact, b.simplified);
      },
      py::arg("h"), py::arg("rho"), py::arg("lipschitz"));
  m.def("contraction_factor", &contraction_factor, py::arg("dim"), py::arg("h"), py::arg("rho"), py::arg("lipschitz"));
  m.def(
      "lmc_second_moment",
      [](const std::string& potential, int dim, double h, int chains, std::uint64_t steps, std::uint64_t seed,
         const std::string& scheme) {
        const auto u = Potential::by_name(potential, dim);
        py::gil_scoped_release release;
        const auto r = stationary_second_moment(u, h, chains, steps, seed, parse_scheme(scheme));
        py::gil_scoped_acquire acquire;
        return py::make_tuple(r.mean_sq_norm, r.se);
      },
      py::arg("potential"), py::arg("dim"), py::arg("h"), py::arg("chains") = 8, py::arg("steps") = 100000,
      py::arg("seed") = 0, py::arg("scheme") = "coordinate");
}
