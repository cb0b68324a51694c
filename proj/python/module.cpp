#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "bmameta/bma.hpp"
#include "bmameta/errors.hpp"
#include "bmameta/prior_fitting.hpp"
#include "bmameta/prior_registry.hpp"
#include "bmameta/report.hpp"

namespace py = pybind11;
using namespace bmameta;

namespace {

std::string analyze_json(const Dataset& data, const std::string& prior_mu, const std::string& prior_tau,
                         const std::string& output_scale, double ci, double beta_bound) {
  const auto dm = data.has_tables() ? DataModel::BinomialNormal : DataModel::NormalNormal;
  const auto space =
      build_space(data.measure, parse_prior(prior_mu), parse_prior(prior_tau), dm, std::nullopt, beta_bound);
  py::gil_scoped_release release;
  const auto r = run_bma(data, space, QuadratureConfig{}, ci, parse_output_scale(output_scale));
  return result_json(r).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian model-averaged meta-analysis core";

  static py::exception<Error> base(m, "BmaMetaError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.def("normalize_prior", [](const std::string& text) { return to_string(parse_prior(text)); },
        "Parse a prior and return its canonical text form.");
  m.def("prior_cdf", [](const std::string& text, double x) { return cdf(parse_prior(text), x); });
  m.def("prior_quantile", [](const std::string& text, double p) { return quantile(parse_prior(text), p); });

  m.def("registry_json", [](std::optional<std::string> measure) {
    return measure ? registry_json(parse_measure(*measure)) : registry_json();
  }, py::arg("measure") = py::none());
  m.def("lookup", [](const std::string& measure, const std::string& topic) {
    const auto& row = lookup(parse_measure(measure), topic);
    return std::make_tuple(row.topic, row.prior_mu_text, row.prior_tau_text);
  });

  m.def("effect_from_table",
        [](const std::string& measure, std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d,
           const std::string& zero_cell) {
          const auto e = effect_from_table(parse_measure(measure), ContingencyTable{a, b, c, d},
                                           ZeroCellPolicy::parse(zero_cell));
          return std::make_pair(e.y, e.se);
        },
        py::arg("measure"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"),
        py::arg("zero_cell") = "none");

  m.def("analyze_tables_json",
        [](const std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>>& rows,
           const std::string& prior_mu, const std::string& prior_tau, const std::string& output_scale,
           double ci, double beta_bound) {
          std::vector<ContingencyTable> tables;
          for (const auto& [a, b, c, d] : rows) tables.push_back({a, b, c, d});
          return analyze_json(Dataset::from_tables(Measure::LogOR, tables), prior_mu, prior_tau,
                              output_scale, ci, beta_bound);
        },
        py::arg("tables"), py::arg("prior_mu"), py::arg("prior_tau"), py::arg("output_scale") = "log",
        py::arg("ci") = 0.95, py::arg("beta_bound") = 10.0);

  m.def("analyze_estimates_json",
        [](const std::string& measure, const std::vector<double>& y, const std::vector<double>& se,
           const std::string& prior_mu, const std::string& prior_tau, const std::string& output_scale,
           double ci) {
          if (y.size() != se.size()) throw InvalidEstimateError("y and se differ in length");
          const Measure ms = parse_measure(measure);
          std::vector<EffectEstimate> est;
          for (std::size_t i = 0; i < y.size(); ++i)
            est.push_back(validate_estimate(y[i], se[i], ms, "Study " + std::to_string(i + 1)));
          return analyze_json(Dataset::from_estimates(ms, est), prior_mu, prior_tau, output_scale, ci,
                              10.0);
        },
        py::arg("measure"), py::arg("y"), py::arg("se"), py::arg("prior_mu"), py::arg("prior_tau"),
        py::arg("output_scale") = "log", py::arg("ci") = 0.95);

  m.def("fit_prior",
        [](const std::vector<double>& values, const std::string& target, const std::string& family) {
          const auto t = parse_fit_target(target);
          FitInput in;
          if (t == FitTarget::HeterogeneityFamily) {
            in = filter_tau_estimates(values);
          } else {
            in.values = values;
          }
          Family f;
          if (family == "normal") f = Family::Normal;
          else if (family == "student-t") f = Family::StudentT;
          else if (family == "halfnormal") f = Family::HalfNormal;
          else if (family == "gamma") f = Family::Gamma;
          else if (family == "invgamma") f = Family::InvGamma;
          else throw InvalidPriorError("unknown family '" + family + "'");
          const auto r = fit_family(in, f);
          return std::make_pair(to_string(r.spec), r.converged);
        });
}
