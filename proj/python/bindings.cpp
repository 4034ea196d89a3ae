#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qci/distributions.hpp"
#include "qci/errors.hpp"
#include "qci/estimators.hpp"
#include "qci/gld.hpp"
#include "qci/intervals.hpp"
#include "qci/io.hpp"
#include "qci/simulation.hpp"

namespace py = pybind11;
using namespace qci;

namespace {

py::dict ci_dict(const QuantileCI& ci)
{
  py::dict d;
  d["method"] = ci.method;
  d["u"] = ci.u;
  d["estimate"] = ci.estimate;
  d["lower"] = ci.lower;
  d["upper"] = ci.upper;
  d["level"] = ci.level;
  d["bandwidth"] = ci.bandwidth_used ? py::cast(*ci.bandwidth_used) : py::none();
  d["std_width"] = ci.standardized_width;
  d["n"] = ci.n;
  d["degenerate"] = ci.degenerate;
  d["fallback"] = ci.fallback;
  d["floored"] = ci.floored;
  return d;
}

GldParams gld_params(const std::vector<double>& lambda, const std::string& param)
{
  if (lambda.size() != 4)
    fail(ErrorCode::invalid_params, "lambda must have four entries");
  return { lambda[0], lambda[1], lambda[2], lambda[3],
           parse_parameterization(param) };
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Quantile confidence intervals driven by the quantile optimality "
            "ratio";

  static py::exception<Error> exc(m, "QciError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const Error& e) {
      exc(e.what());
    }
  });

  m.def("family_catalog", &family_catalog);
  m.def(
    "quantile",
    [](const std::string& family, double u) {
      return quantile(parse_family(family), u);
    },
    py::arg("family"), py::arg("u"));
  m.def(
    "quantile_density",
    [](const std::string& family, double u) {
      return quantile_density(parse_family(family), u);
    },
    py::arg("family"), py::arg("u"));
  m.def(
    "qor",
    [](const std::string& family, double u) {
      return qor(parse_family(family), u).qor;
    },
    py::arg("family"), py::arg("u"));
  m.def(
    "optimal_bandwidth",
    [](const std::string& family,
       double u,
       std::size_t n,
       const std::string& kernel,
       const std::optional<std::string>& correction) {
      const auto model = parse_family(family);
      const BandwidthRule rule{ FixedFamilyQor{ model },
                                parse_kernel(kernel),
                                correction ? parse_correction(*correction)
                                           : default_correction(model) };
      return optimal_bandwidth(rule, u, n);
    },
    py::arg("family"), py::arg("u"), py::arg("n"),
    py::arg("kernel") = "epanechnikov", py::arg("correction") = py::none());
  m.def(
    "sample",
    [](const std::string& family, std::size_t n, std::uint64_t seed,
       std::uint64_t stream) {
      return sample(parse_family(family), n, RngStream{ seed, stream });
    },
    py::arg("family"), py::arg("n"), py::arg("seed") = 1,
    py::arg("stream") = 0);
  m.def(
    "sample_quantile",
    [](std::vector<double> data, double u) {
      return sample_quantile_type8(SortedSample(std::move(data)), u);
    },
    py::arg("data"), py::arg("u"));
  m.def(
    "qdens_direct",
    [](std::vector<double> data, double u, double b, const std::string& kernel) {
      return qdens_direct(SortedSample(std::move(data)), u, b,
                          parse_kernel(kernel))
        .value;
    },
    py::arg("data"), py::arg("u"), py::arg("b"),
    py::arg("kernel") = "epanechnikov");

  m.def(
    "gld_quantile",
    [](const std::vector<double>& lambda, double u, const std::string& param) {
      return gld_quantile(gld_params(lambda, param), u);
    },
    py::arg("lambda_"), py::arg("u"), py::arg("param") = "fkml");
  m.def(
    "fit_gld",
    [](std::vector<double> data, const std::string& param) {
      const auto fit =
        fit_gld_mle(SortedSample(std::move(data)), parse_parameterization(param));
      py::dict d;
      d["parameterization"] = to_string(fit.params.parameterization);
      d["lambda"] = std::vector<double>{ fit.params.lambda1, fit.params.lambda2,
                                         fit.params.lambda3, fit.params.lambda4 };
      d["loglik"] = fit.log_likelihood;
      d["converged"] = fit.converged;
      d["n"] = fit.n;
      return d;
    },
    py::arg("data"), py::arg("param") = "fkml");

  m.def(
    "ci",
    [](std::vector<double> data, double u, const std::string& method,
       double level, const std::string& kernel, std::size_t min_n) {
      auto spec = parse_method(method);
      spec.kernel = parse_kernel(kernel);
      spec.min_n = min_n;
      return ci_dict(compute_ci(SortedSample(std::move(data)), u, level, spec));
    },
    py::arg("data"), py::arg("u"), py::arg("method") = "A:cauchy",
    py::arg("level") = 0.95, py::arg("kernel") = "epanechnikov",
    py::arg("min_n") = 0);
  m.def(
    "ci_diff",
    [](std::vector<double> x, std::vector<double> y, double u,
       std::optional<double> p, const std::string& method, double level) {
      const auto spec = parse_method(method);
      const auto ci =
        ci_two_sample(SortedSample(std::move(x)), SortedSample(std::move(y)), u,
                      p.value_or(u), level, spec, spec);
      py::dict d;
      d["method"] = ci.method;
      d["u"] = ci.u;
      d["p"] = ci.p;
      d["estimate"] = ci.estimate;
      d["lower"] = ci.lower;
      d["upper"] = ci.upper;
      d["level"] = ci.level;
      d["n"] = ci.n;
      d["m"] = ci.m;
      return d;
    },
    py::arg("x"), py::arg("y"), py::arg("u"), py::arg("p") = py::none(),
    py::arg("method") = "E", py::arg("level") = 0.95);

  m.def(
    "simulate",
    [](const std::string& config_json, unsigned workers) {
      const auto specs = parse_experiments(config_json);
      py::dict out;
      for (const auto& spec : specs) {
        const RunOptions opts{ workers };
        py::gil_scoped_release release;
        std::string csv;
        switch (spec.type) {
          case ExperimentType::coverage:
            csv = coverage_csv(run_coverage(spec, opts), false);
            break;
          case ExperimentType::two_sample_coverage:
            csv = coverage_csv(run_two_sample_coverage(spec, opts), true);
            break;
          case ExperimentType::mse:
            csv = mse_csv(run_mse(spec, opts));
            break;
          case ExperimentType::gld_bias:
            csv = gld_bias_csv(run_gld_bias(spec, opts));
            break;
        }
        py::gil_scoped_acquire acquire;
        out[py::str(spec.name)] = csv;
      }
      return out;
    },
    py::arg("config_json"), py::arg("workers") = 1,
    "Runs the experiments in a JSON config; returns {name: csv text}.");
}
