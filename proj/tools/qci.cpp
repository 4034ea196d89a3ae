// qci: quantile confidence intervals from the command line.

#include "qci/distributions.hpp"
#include "qci/errors.hpp"
#include "qci/estimators.hpp"
#include "qci/gld.hpp"
#include "qci/intervals.hpp"
#include "qci/io.hpp"
#include "qci/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using nlohmann::json;
using namespace qci;

constexpr int exit_usage = 2;
constexpr int exit_data = 3;
constexpr int exit_numerical = 4;
constexpr const char* version = "1.0.0";

//! Bad flags or arguments, reported with exit code 2.
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct Globals
{
  int precision = 6;
  std::string format = "csv";
};

std::uint64_t env_seed()
{
  const char* s = std::getenv("QCI_SEED");
  if (s == nullptr || *s == '\0')
    return 1;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == std::string(s).size())
      return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("QCI_SEED='") + s + "' is not an integer");
}

// Runs f, turning library parse errors into usage errors.
template<class F>
auto parse_arg(const std::string& flag, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const Error& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::vector<double> probabilities(const std::string& flag,
                                  const std::string& text)
{
  auto grid = parse_arg(flag, [&] { return parse_grid(text); });
  for (double u : grid)
    if (!(u > 0.0 && u < 1.0))
      throw UsageError(flag + ": probabilities must lie in (0,1), got " +
                       format_real(u));
  return grid;
}

void check_level(double level)
{
  if (!(level > 0.5 && level < 1.0))
    throw UsageError("--level must lie in (0.5, 1)");
}

std::vector<double> load_data(const std::string& path)
{
  if (path == "-")
    return parse_data(std::cin, "<stdin>");
  return read_data_file(path);
}

json number(double v)
{
  if (std::isfinite(v))
    return v;
  return std::isnan(v) ? json("NA") : json(v > 0 ? "inf" : "-inf");
}

std::string hint(ErrorCode code)
{
  switch (code) {
    case ErrorCode::zero_density:
      return "hint: the kernel window holds no observations; increase "
             "--bandwidth or use method A, B or E";
    case ErrorCode::nonpositive_data:
      return "hint: method B needs positive observations; use A:<family> or E";
    case ErrorCode::fit_failure:
      return "hint: try --param rs, or a kernel method (A, B, G)";
    case ErrorCode::too_few_observations:
      return "hint: methods A/B need n >= 30 (override with --min-n), C/D/E "
             "n >= 20";
    case ErrorCode::degenerate_data:
      return "hint: the data are constant; no spread to estimate";
    case ErrorCode::incompatible_method:
      return "hint: quantile differences need a method with a standard error "
             "(A, B, C, E, F, G, H)";
    default:
      return {};
  }
}

int exit_code_for(const Error& e)
{
  switch (e.code()) {
    case ErrorCode::incompatible_method:
    case ErrorCode::spec_validation:
    case ErrorCode::unknown_family:
      return exit_usage;
    default:
      return e.is_data_error() ? exit_data : exit_numerical;
  }
}

// Prints rows as CSV (with a "# config:" line) or as one JSON document.
void emit(const Globals& g,
          const json& config,
          const std::string& header,
          const std::vector<std::string>& csv_rows,
          const json& json_rows)
{
  if (g.format == "json") {
    std::cout << json{ { "config", config }, { "rows", json_rows } }.dump(2)
              << "\n";
    return;
  }
  std::cout << "# config: " << config.dump() << "\n" << header << "\n";
  for (const auto& r : csv_rows)
    std::cout << r << "\n";
}

json ci_json(const QuantileCI& ci)
{
  return { { "method", ci.method },
           { "u", ci.u },
           { "estimate", number(ci.estimate) },
           { "lower", number(ci.lower) },
           { "upper", number(ci.upper) },
           { "level", ci.level },
           { "bandwidth",
             ci.bandwidth_used ? number(*ci.bandwidth_used) : json("NA") },
           { "std_width", number(ci.standardized_width) },
           { "degenerate", ci.degenerate },
           { "fallback", ci.fallback },
           { "floored", ci.floored } };
}

// ---- subcommands ----

struct QorArgs
{
  std::string family;
  std::string u = "0.1:0.9:0.1";
  std::size_t n = 0;
  std::string kernel = "epanechnikov";
  std::string correction;
};

int cmd_qor(const Globals& g, const QorArgs& a)
{
  const auto model = parse_arg("--family", [&] { return parse_family(a.family); });
  const auto grid = probabilities("--u", a.u);
  const auto kernel = parse_arg("--kernel", [&] { return parse_kernel(a.kernel); });
  const auto correction =
    a.correction.empty()
      ? default_correction(model)
      : parse_arg("--correction", [&] { return parse_correction(a.correction); });

  json config{ { "command", "qor" },
               { "family", to_string(model) },
               { "u", grid },
               { "n", a.n > 0 ? json(a.n) : json("NA") },
               { "kernel", to_string(kernel.name) },
               { "correction", to_string(correction) },
               { "version", version } };
  std::vector<std::string> rows;
  json jrows = json::array();
  for (double u : grid) {
    const auto ev = qor(model, u);
    const double a_u =
      std::isinf(ev.qor)
        ? std::nan("")
        : kernel.bandwidth_constant() * std::pow(std::fabs(ev.qor), 0.4);
    std::optional<double> b;
    if (a.n > 0)
      b = optimal_bandwidth(
        BandwidthRule{ FixedFamilyQor{ model }, kernel, correction }, u, a.n);
    rows.push_back(format_real(u, g.precision) + "," +
                   format_real(ev.qor, g.precision) + "," +
                   format_real(a_u, g.precision) + "," +
                   (b ? format_real(*b, g.precision) : "NA"));
    jrows.push_back({ { "u", u },
                      { "qor", number(ev.qor) },
                      { "A_u", number(a_u) },
                      { "bandwidth", b ? number(*b) : json("NA") } });
  }
  emit(g, config, "u,qor,A_u,bandwidth", rows, jrows);
  return 0;
}

struct CiArgs
{
  std::string data;
  std::string method = "A:cauchy";
  std::string u = "0.5";
  double level = 0.95;
  std::string kernel = "epanechnikov";
  std::string param;
  std::optional<double> bandwidth;
  std::size_t min_n = 0;
};

MethodSpec resolve_method(const std::string& text,
                          const std::string& kernel,
                          const std::string& param,
                          const std::optional<double>& bandwidth,
                          std::size_t min_n)
{
  auto spec = parse_arg("--method", [&] { return parse_method(text); });
  if (spec.kind == MethodKind::oracle)
    throw UsageError("--method: the oracle method needs the true model and "
                     "is only available in simulations");
  spec.kernel = parse_arg("--kernel", [&] { return parse_kernel(kernel); });
  if (!param.empty()) {
    if (spec.kind != MethodKind::C && spec.kind != MethodKind::D &&
        spec.kind != MethodKind::E)
      throw UsageError("--param applies to methods C, D and E only");
    spec.parameterization =
      parse_arg("--param", [&] { return parse_parameterization(param); });
  }
  if (bandwidth) {
    if (spec.kind != MethodKind::F && spec.kind != MethodKind::G &&
        spec.kind != MethodKind::H)
      throw UsageError("--bandwidth applies to methods F, G and H only");
    if (!(*bandwidth > 0.0 && *bandwidth < 1.0))
      throw UsageError("--bandwidth must lie in (0,1)");
    spec.bandwidth = *bandwidth;
    spec.model.reset();
  }
  spec.min_n = min_n;
  return spec;
}

int cmd_ci(const Globals& g, const CiArgs& a)
{
  const auto spec =
    resolve_method(a.method, a.kernel, a.param, a.bandwidth, a.min_n);
  const auto grid = probabilities("--u", a.u);
  check_level(a.level);
  const SortedSample data(load_data(a.data));

  json config{ { "command", "ci" },
               { "data", a.data },
               { "n", data.size() },
               { "method", method_label(spec) },
               { "u", grid },
               { "level", a.level },
               { "kernel", to_string(spec.kernel.name) },
               { "version", version } };
  GldFitCache cache(data);
  std::vector<std::string> rows;
  json jrows = json::array();
  for (double u : grid) {
    const auto ci = compute_ci(data, u, a.level, spec, &cache);
    if (ci.fallback)
      std::cerr << "warning: GLD fit failed at u=" << u
                << "; fell back to method A:cauchy\n";
    if (ci.degenerate)
      std::cerr << "warning: zero standard error at u=" << u
                << "; interval collapsed to the estimate\n";
    rows.push_back(ci_csv_row(ci, g.precision));
    jrows.push_back(ci_json(ci));
  }
  emit(g, config, ci_csv_header(), rows, jrows);
  return 0;
}

struct CiDiffArgs
{
  std::string data1;
  std::string data2;
  double u = 0.5;
  std::optional<double> p;
  std::string method = "E";
  double level = 0.95;
  std::string kernel = "epanechnikov";
  std::string param;
  std::optional<double> bandwidth;
  std::size_t min_n = 0;
};

int cmd_ci_diff(const Globals& g, const CiDiffArgs& a)
{
  const auto spec =
    resolve_method(a.method, a.kernel, a.param, a.bandwidth, a.min_n);
  const double p = a.p.value_or(a.u);
  if (!(a.u > 0.0 && a.u < 1.0) || !(p > 0.0 && p < 1.0))
    throw UsageError("--u and --p must lie in (0,1)");
  check_level(a.level);
  const SortedSample x(load_data(a.data1));
  const SortedSample y(load_data(a.data2));
  const auto ci = ci_two_sample(x, y, a.u, p, a.level, spec, spec);

  json config{ { "command", "ci-diff" },
               { "data1", a.data1 },
               { "data2", a.data2 },
               { "method", method_label(spec) },
               { "u", a.u },
               { "p", p },
               { "level", a.level },
               { "kernel", to_string(spec.kernel.name) },
               { "version", version } };
  json row{ { "method", ci.method },   { "u", ci.u },
            { "p", ci.p },             { "estimate", number(ci.estimate) },
            { "lower", number(ci.lower) }, { "upper", number(ci.upper) },
            { "level", ci.level },     { "n", ci.n },
            { "m", ci.m } };
  emit(g, config, two_sample_csv_header(),
       { two_sample_csv_row(ci, g.precision) }, json::array({ row }));
  return 0;
}

struct FitArgs
{
  std::string data;
  std::string param = "fkml";
};

int cmd_fit_gld(const FitArgs& a)
{
  const auto param =
    parse_arg("--param", [&] { return parse_parameterization(a.param); });
  const SortedSample data(load_data(a.data));
  const auto fit = fit_gld_mle(data, param);
  if (!fit.converged)
    std::cerr << "warning: the optimizer did not converge; the estimates may "
                 "be inaccurate\n";
  json out{ { "parameterization", to_string(param) },
            { "lambda",
              { fit.params.lambda1, fit.params.lambda2, fit.params.lambda3,
                fit.params.lambda4 } },
            { "loglik", fit.log_likelihood },
            { "converged", fit.converged },
            { "n", fit.n },
            { "config",
              { { "command", "fit-gld" },
                { "data", a.data },
                { "param", to_string(param) },
                { "version", version } } } };
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SimArgs
{
  std::string config;
  std::string out;
  unsigned workers = 0;
};

int cmd_simulate(const Globals& g, const SimArgs& a)
{
  std::ifstream in(a.config);
  if (!in)
    throw UsageError("--config: cannot open '" + a.config + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto specs = parse_experiments(buf.str(), env_seed());
  const unsigned workers =
    a.workers > 0 ? a.workers
                  : std::max(1u, std::thread::hardware_concurrency());

  // everything is computed before anything is written
  std::vector<std::pair<std::string, std::string>> files;
  json meta_experiments = json::array();
  for (const auto& spec : specs) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunOptions opts{ workers };
    std::string csv;
    std::size_t failures = 0;
    bool unreliable = false;
    switch (spec.type) {
      case ExperimentType::coverage:
      case ExperimentType::two_sample_coverage: {
        const bool two = spec.type == ExperimentType::two_sample_coverage;
        const auto report =
          two ? run_two_sample_coverage(spec, opts) : run_coverage(spec, opts);
        csv = coverage_csv(report, two, g.precision);
        failures = report.failures;
        unreliable = report.unreliable;
        break;
      }
      case ExperimentType::mse: {
        const auto report = run_mse(spec, opts);
        csv = mse_csv(report, g.precision);
        failures = report.failures;
        unreliable = report.unreliable;
        break;
      }
      case ExperimentType::gld_bias: {
        const auto report = run_gld_bias(spec, opts);
        csv = gld_bias_csv(report, g.precision);
        failures = report.failures;
        unreliable = report.unreliable;
        break;
      }
    }
    const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
    if (unreliable)
      std::cerr << "warning: experiment '" << spec.name << "' had " << failures
                << " failed computations (more than 2%); marked unreliable\n";
    files.emplace_back(spec.name + ".csv", csv);
    meta_experiments.push_back({ { "spec", json::parse(spec_to_json(spec)) },
                                 { "file", spec.name + ".csv" },
                                 { "failures", failures },
                                 { "unreliable", unreliable },
                                 { "wall_time_s", seconds } });
  }
  json meta{ { "command", "simulate" },
             { "config", a.config },
             { "workers", workers },
             { "precision", g.precision },
             { "version", version },
             { "experiments", meta_experiments } };
  files.emplace_back("metadata.json", meta.dump(2) + "\n");

  std::filesystem::create_directories(a.out);
  for (const auto& [name, content] : files)
    write_file_atomic((std::filesystem::path(a.out) / name).string(), content);
  for (const auto& [name, content] : files)
    std::cout << (std::filesystem::path(a.out) / name).string() << "\n";
  return 0;
}

struct SampleArgs
{
  std::string family;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::string out = "-";
};

int cmd_sample(const SampleArgs& a)
{
  const auto model =
    parse_arg("--family", [&] { return parse_family(a.family); });
  if (a.n == 0)
    throw UsageError("--n must be positive");
  const std::uint64_t seed = a.seed ? *a.seed : env_seed();
  const auto xs = sample(model, a.n, RngStream{ seed, 0 });
  std::string text;
  text.reserve(a.n * 24);
  for (double x : xs)
    text += format_real(x, 17) + "\n";
  if (a.out == "-")
    std::cout << text;
  else
    write_file_atomic(a.out, text);
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Quantile confidence intervals driven by the quantile "
                "optimality ratio" };
  app.set_version_flag("--version", version);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--precision", g.precision, "significant digits in output")
    ->check(CLI::Range(1, 17))
    ->capture_default_str();
  app.add_option("--format", g.format, "output format")
    ->check(CLI::IsMember({ "csv", "json" }))
    ->capture_default_str();

  QorArgs qa;
  auto* qor_cmd =
    app.add_subcommand("qor", "QOR, A(u) and optimal bandwidth for a family");
  qor_cmd->add_option("--family", qa.family, "family, e.g. pareto2:a=1")
    ->required();
  qor_cmd->add_option("--u", qa.u, "list or start:stop:step")
    ->capture_default_str();
  qor_cmd->add_option("--n", qa.n, "sample size for the bandwidth column");
  qor_cmd->add_option("--kernel", qa.kernel)->capture_default_str();
  qor_cmd->add_option("--correction", qa.correction,
                      "none|lower|both (default from the support)");

  CiArgs ca;
  auto* ci_cmd = app.add_subcommand("ci", "confidence intervals for quantiles");
  ci_cmd->add_option("--data", ca.data, "data file ('-' for stdin)")
    ->required();
  ci_cmd
    ->add_option("--method", ca.method,
                 "A:<family>|B|C|D|E|F|G|H (F/G/H accept :<b> or "
                 ":optimal:<family>)")
    ->capture_default_str();
  ci_cmd->add_option("--u", ca.u, "list or start:stop:step")
    ->capture_default_str();
  ci_cmd->add_option("--level", ca.level)->capture_default_str();
  ci_cmd->add_option("--kernel", ca.kernel)->capture_default_str();
  ci_cmd->add_option("--param", ca.param, "fkml|rs (methods C, D, E)");
  ci_cmd->add_option("--bandwidth", ca.bandwidth, "constant b (F, G, H)");
  ci_cmd->add_option("--min-n", ca.min_n, "override the minimum sample size");

  CiDiffArgs da;
  auto* diff_cmd = app.add_subcommand(
    "ci-diff", "confidence interval for a difference of quantiles");
  diff_cmd->add_option("--data1", da.data1)->required();
  diff_cmd->add_option("--data2", da.data2)->required();
  diff_cmd->add_option("--u", da.u)->capture_default_str();
  diff_cmd->add_option("--p", da.p, "probability for data2 (default u)");
  diff_cmd->add_option("--method", da.method)->capture_default_str();
  diff_cmd->add_option("--level", da.level)->capture_default_str();
  diff_cmd->add_option("--kernel", da.kernel)->capture_default_str();
  diff_cmd->add_option("--param", da.param, "fkml|rs (methods C, E)");
  diff_cmd->add_option("--bandwidth", da.bandwidth, "constant b (F, G, H)");
  diff_cmd->add_option("--min-n", da.min_n);

  FitArgs fa;
  auto* fit_cmd =
    app.add_subcommand("fit-gld", "maximum-likelihood GLD fit (JSON)");
  fit_cmd->add_option("--data", fa.data)->required();
  fit_cmd->add_option("--param", fa.param)->capture_default_str();

  SimArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo studies");
  sim_cmd->add_option("--config", sa.config, "experiment JSON")->required();
  sim_cmd->add_option("--out", sa.out, "output directory")->required();
  sim_cmd->add_option("--workers", sa.workers,
                      "worker threads (default: all cores)");

  SampleArgs pa;
  auto* sample_cmd =
    app.add_subcommand("sample", "draw a reproducible sample");
  sample_cmd->add_option("--family", pa.family)->required();
  sample_cmd->add_option("--n", pa.n)->required();
  sample_cmd->add_option("--seed", pa.seed, "default: $QCI_SEED or 1");
  sample_cmd->add_option("--out", pa.out, "output file ('-' for stdout)")
    ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_usage;
  }

  try {
    if (*qor_cmd)
      return cmd_qor(g, qa);
    if (*ci_cmd)
      return cmd_ci(g, ca);
    if (*diff_cmd)
      return cmd_ci_diff(g, da);
    if (*fit_cmd)
      return cmd_fit_gld(fa);
    if (*sim_cmd)
      return cmd_simulate(g, sa);
    if (*sample_cmd)
      return cmd_sample(pa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (const auto h = hint(e.code()); !h.empty())
      std::cerr << h << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_usage;
}
