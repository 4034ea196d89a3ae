#include "qci/simulation.hpp"
#include "qci/errors.hpp"
#include "qci/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace qci {

namespace {

using nlohmann::json;

constexpr double failure_threshold = 0.02;

// Runs fn(r) for r in [0, count) on a worker pool; slot r of the result
// holds replicate r whatever the scheduling.
template<class T, class F>
std::vector<T> run_replicates(std::size_t count, unsigned workers, F&& fn)
{
  std::vector<T> out(count);
  unsigned w = workers > 0 ? workers : std::thread::hardware_concurrency();
  w = static_cast<unsigned>(
    std::clamp<std::size_t>(w, 1, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= count)
        return;
      try {
        out[r] = fn(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next.store(count);
      }
    }
  };
  if (w == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned i = 0; i < w; ++i)
      pool.emplace_back(body);
    for (auto& t : pool)
      t.join();
  }
  if (error)
    std::rethrow_exception(error);
  return out;
}

std::vector<MethodSpec> resolved_methods(const ExperimentSpec& spec)
{
  auto methods = spec.methods;
  for (auto& m : methods)
    if (m.kind == MethodKind::oracle && !m.model)
      m.model = spec.generator;
  return methods;
}

std::vector<std::size_t> sizes(const ExperimentSpec& spec)
{
  return spec.n_list.empty() ? std::vector<std::size_t>{ spec.n }
                             : spec.n_list;
}

enum class Outcome : unsigned char
{
  failed,
  missed,
  covered
};

struct Trial
{
  Outcome outcome = Outcome::failed;
  double std_width = 0.0;
};

bool is_failure(const std::exception& e)
{
  return dynamic_cast<const Error*>(&e) != nullptr;
}

CoverageReport summarize(const std::vector<std::vector<Trial>>& trials,
                         const std::vector<MethodSpec>& methods,
                         const std::vector<double>& us,
                         const std::vector<double>& ps)
{
  CoverageReport report;
  report.replicates = trials.size();
  const std::size_t nu = us.size();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    for (std::size_t j = 0; j < nu; ++j) {
      CoverageCell cell;
      cell.method = method_label(methods[k]);
      cell.u = us[j];
      cell.p = ps[j];
      double width_sum = 0.0;
      for (const auto& rep : trials) {
        const Trial& t = rep[k * nu + j];
        if (t.outcome == Outcome::failed) {
          ++cell.failures;
          continue;
        }
        ++cell.effective;
        if (t.outcome == Outcome::covered)
          ++cell.covered;
        width_sum += t.std_width;
      }
      if (cell.effective > 0) {
        const double eff = static_cast<double>(cell.effective);
        cell.coverage = static_cast<double>(cell.covered) / eff;
        cell.mc_error = std::sqrt(cell.coverage * (1.0 - cell.coverage) / eff);
        cell.mean_std_width = width_sum / eff;
      } else {
        cell.coverage = cell.mc_error = cell.mean_std_width = std::nan("");
      }
      report.failures += cell.failures;
      report.cells.push_back(cell);
    }
  }
  const double attempts =
    static_cast<double>(report.replicates * methods.size() * nu);
  report.unreliable =
    attempts > 0 &&
    static_cast<double>(report.failures) / attempts > failure_threshold;
  return report;
}

// ---- JSON config ----

[[noreturn]] void invalid(const std::string& path, const std::string& what)
{
  fail(ErrorCode::spec_validation, (path.empty() ? "/" : path) + ": " + what);
}

double get_number(const json& j, const std::string& path)
{
  if (!j.is_number())
    invalid(path, "expected a number");
  return j.get<double>();
}

std::size_t get_count(const json& j, const std::string& path)
{
  if (!j.is_number_integer() || j.get<long long>() < 1)
    invalid(path, "expected a positive integer");
  return j.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& path)
{
  if (!j.is_string())
    invalid(path, "expected a string");
  return j.get<std::string>();
}

template<class F>
auto rethrow_at(const std::string& path, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::spec_validation)
      throw;
    invalid(path, e.what());
  }
}

std::vector<double> get_grid(const json& j, const std::string& path)
{
  std::vector<double> out;
  if (j.is_string())
    out = rethrow_at(path, [&] { return parse_grid(j.get<std::string>()); });
  else if (j.is_number())
    out.push_back(j.get<double>());
  else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(get_number(j[i], path + "/" + std::to_string(i)));
  } else
    invalid(path, "expected a list of probabilities or \"start:stop:step\"");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(out[i] > 0.0 && out[i] < 1.0))
      invalid(j.is_array() ? path + "/" + std::to_string(i) : path,
              "probabilities must lie in (0,1)");
  if (out.empty())
    invalid(path, "empty grid");
  return out;
}

ExperimentSpec parse_one(const json& j,
                         const std::string& path,
                         std::uint64_t default_seed,
                         std::size_t index)
{
  if (!j.is_object())
    invalid(path, "expected an object");
  ExperimentSpec spec;
  spec.name = "experiment" + std::to_string(index);
  spec.seed = default_seed;
  std::optional<std::size_t> replicates;
  std::optional<KernelSpec> kernel;

  for (const auto& [key, value] : j.items()) {
    const std::string at = path + "/" + key;
    if (key == "name") {
      spec.name = get_string(value, at);
      if (spec.name.empty() ||
          spec.name.find_first_of("/\\") != std::string::npos)
        invalid(at, "name must be a non-empty file-name-safe string");
    } else if (key == "type") {
      const auto t = get_string(value, at);
      if (t == "coverage")
        spec.type = ExperimentType::coverage;
      else if (t == "two_sample_coverage")
        spec.type = ExperimentType::two_sample_coverage;
      else if (t == "mse")
        spec.type = ExperimentType::mse;
      else if (t == "gld_bias")
        spec.type = ExperimentType::gld_bias;
      else
        invalid(at,
                "unknown type '" + t +
                  "' (expected coverage, two_sample_coverage, mse, gld_bias)");
    } else if (key == "generator") {
      spec.generator =
        rethrow_at(at, [&] { return parse_family(get_string(value, at)); });
    } else if (key == "generator_y") {
      spec.generator_y =
        rethrow_at(at, [&] { return parse_family(get_string(value, at)); });
    } else if (key == "n") {
      spec.n = get_count(value, at);
    } else if (key == "m") {
      spec.m = get_count(value, at);
    } else if (key == "n_list") {
      if (!value.is_array() || value.empty())
        invalid(at, "expected a non-empty list of sample sizes");
      spec.n_list.clear();
      for (std::size_t i = 0; i < value.size(); ++i)
        spec.n_list.push_back(
          get_count(value[i], at + "/" + std::to_string(i)));
    } else if (key == "u") {
      spec.u_grid = get_grid(value, at);
    } else if (key == "p") {
      spec.p_grid = get_grid(value, at);
    } else if (key == "methods") {
      if (!value.is_array())
        invalid(at, "expected a list of method strings");
      spec.methods.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string mp = at + "/" + std::to_string(i);
        spec.methods.push_back(
          rethrow_at(mp, [&] { return parse_method(get_string(value[i], mp)); }));
      }
    } else if (key == "kernel") {
      kernel = rethrow_at(at, [&] { return parse_kernel(get_string(value, at)); });
    } else if (key == "level") {
      spec.level = get_number(value, at);
      if (!(spec.level > 0.5 && spec.level < 1.0))
        invalid(at, "level must lie in (0.5, 1)");
    } else if (key == "replicates") {
      replicates = get_count(value, at);
    } else if (key == "seed") {
      if (value.is_number_unsigned())
        spec.seed = value.get<std::uint64_t>();
      else if (value.is_string())
        spec.seed = rethrow_at(at, [&] {
          const auto s = value.get<std::string>();
          std::size_t pos = 0;
          const auto v = std::stoull(s, &pos);
          if (pos != s.size())
            fail(ErrorCode::parse, "invalid seed");
          return static_cast<std::uint64_t>(v);
        });
      else
        invalid(at, "expected a non-negative integer");
    } else if (key == "param") {
      spec.parameterization = rethrow_at(
        at, [&] { return parse_parameterization(get_string(value, at)); });
    } else {
      invalid(at, "unknown key");
    }
  }

  if (kernel)
    for (auto& m : spec.methods)
      m.kernel = *kernel;
  const bool uses_gld =
    spec.type == ExperimentType::gld_bias ||
    std::any_of(spec.methods.begin(), spec.methods.end(), [](const auto& m) {
      return m.kind == MethodKind::C || m.kind == MethodKind::D ||
             m.kind == MethodKind::E;
    });
  spec.replicates = replicates.value_or(uses_gld ? 1000 : 2000);

  if (spec.type != ExperimentType::gld_bias && spec.methods.empty())
    invalid(path + "/methods", "at least one method is required");
  if (spec.type == ExperimentType::two_sample_coverage) {
    for (std::size_t i = 0; i < spec.methods.size(); ++i)
      if (spec.methods[i].kind == MethodKind::D)
        invalid(path + "/methods/" + std::to_string(i),
                "method D cannot be used for a quantile difference");
    if (!spec.p_grid.empty() && spec.p_grid.size() != spec.u_grid.size())
      invalid(path + "/p", "p must pair with u element by element");
  }
  if (spec.type == ExperimentType::mse)
    for (std::size_t i = 0; i < spec.methods.size(); ++i)
      if (spec.methods[i].kind == MethodKind::D)
        invalid(path + "/methods/" + std::to_string(i),
                "method D has no quantile density estimate");
  rethrow_at(path, [&] {
    validate(spec);
    return 0;
  });
  return spec;
}

} // namespace

std::string to_string(ExperimentType t)
{
  switch (t) {
    case ExperimentType::coverage:
      return "coverage";
    case ExperimentType::two_sample_coverage:
      return "two_sample_coverage";
    case ExperimentType::mse:
      return "mse";
    case ExperimentType::gld_bias:
      return "gld_bias";
  }
  return "coverage";
}

void validate(const ExperimentSpec& spec)
{
  auto bad = [](const std::string& field, const std::string& what) {
    fail(ErrorCode::spec_validation, field + ": " + what);
  };
  if (spec.replicates < 1)
    bad("replicates", "must be at least 1");
  if (spec.n < 1)
    bad("n", "must be at least 1");
  if (!(spec.level > 0.5 && spec.level < 1.0))
    bad("level", "must lie in (0.5, 1)");
  if (spec.u_grid.empty())
    bad("u", "empty grid");
  for (double u : spec.u_grid)
    if (!(u > 0.0 && u < 1.0))
      bad("u", "probabilities must lie in (0,1)");
  for (double p : spec.p_grid)
    if (!(p > 0.0 && p < 1.0))
      bad("p", "probabilities must lie in (0,1)");
  if (!spec.p_grid.empty() && spec.p_grid.size() != spec.u_grid.size())
    bad("p", "must have the same length as u");
  if (spec.type == ExperimentType::gld_bias) {
    for (std::size_t n : sizes(spec))
      if (n < 20)
        bad("n", "GLD fitting needs n >= 20");
  } else if (spec.methods.empty()) {
    bad("methods", "at least one method is required");
  }

  if (spec.type != ExperimentType::gld_bias) {
    std::vector<std::size_t> ns = sizes(spec);
    if (spec.type == ExperimentType::two_sample_coverage)
      ns.push_back(spec.m > 0 ? spec.m : spec.n);
    for (const auto& m : spec.methods) {
      const std::size_t need = minimum_sample_size(m);
      for (std::size_t n : ns)
        if (n < need)
          bad("methods", "method " + method_label(m) + " needs n >= " +
                           std::to_string(need) + ", got " + std::to_string(n));
      if (m.kind == MethodKind::D &&
          spec.type != ExperimentType::coverage)
        bad("methods", "method D has no standard error; it supports only "
                       "one-sample coverage");
    }
  }

  // method B needs nonnegative data
  const double lo = support(spec.generator).first;
  for (const auto& m : spec.methods) {
    if (m.kind == MethodKind::B && !(lo >= 0.0))
      bad("methods", "method B needs a generator with nonnegative support");
    if (m.kind == MethodKind::B && spec.generator_y &&
        !(support(*spec.generator_y).first >= 0.0))
      bad("methods", "method B needs a generator with nonnegative support");
  }
}

std::vector<ExperimentSpec> parse_experiments(const std::string& json_text,
                                              std::uint64_t default_seed)
{
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::spec_validation, std::string("/: malformed JSON: ") + e.what());
  }
  if (!root.is_object())
    invalid("", "expected a JSON object");
  std::vector<ExperimentSpec> out;
  if (!root.contains("experiments")) {
    out.push_back(parse_one(root, "", default_seed, 0));
    return out;
  }
  const json& list = root["experiments"];
  if (!list.is_array() || list.empty())
    invalid("/experiments", "expected a non-empty array");
  json defaults = root;
  defaults.erase("experiments");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "/experiments/" + std::to_string(i);
    if (!list[i].is_object())
      invalid(path, "expected an object");
    json merged = defaults;
    for (const auto& [key, value] : list[i].items())
      merged[key] = value;
    // keys inherited from the top level report their own location
    try {
      out.push_back(parse_one(merged, path, default_seed, i));
    } catch (const Error& e) {
      std::string msg = e.what();
      for (const auto& [key, value] : defaults.items()) {
        (void)value;
        const std::string inherited = path + "/" + key;
        if (!list[i].contains(key) && msg.rfind(inherited, 0) == 0) {
          msg = "/" + key + msg.substr(inherited.size());
          break;
        }
      }
      fail(e.code(), msg);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (out[i].name == out[k].name)
        invalid("/experiments/" + std::to_string(i) + "/name",
                "duplicate experiment name '" + out[i].name + "'");
  return out;
}

std::string spec_to_json(const ExperimentSpec& spec)
{
  json j;
  j["name"] = spec.name;
  j["type"] = to_string(spec.type);
  j["generator"] = to_string(spec.generator);
  if (spec.type == ExperimentType::two_sample_coverage) {
    j["generator_y"] = to_string(spec.generator_y.value_or(spec.generator));
    j["m"] = spec.m > 0 ? spec.m : spec.n;
    j["p"] = spec.p_grid.empty() ? spec.u_grid : spec.p_grid;
  }
  j["n"] = spec.n;
  if (spec.type == ExperimentType::mse || spec.type == ExperimentType::gld_bias)
    j["n_list"] = sizes(spec);
  j["u"] = spec.u_grid;
  json methods = json::array();
  for (const auto& m : spec.methods)
    methods.push_back(method_label(m));
  j["methods"] = methods;
  if (!spec.methods.empty())
    j["kernel"] = to_string(spec.methods.front().kernel.name);
  j["level"] = spec.level;
  j["replicates"] = spec.replicates;
  j["seed"] = spec.seed;
  j["param"] = to_string(spec.parameterization);
  return j.dump();
}

CoverageReport run_coverage(const ExperimentSpec& spec,
                            const RunOptions& options)
{
  validate(spec);
  const auto methods = resolved_methods(spec);
  const auto& us = spec.u_grid;
  std::vector<double> truth;
  for (double u : us)
    truth.push_back(quantile(spec.generator, u));

  auto trials = run_replicates<std::vector<Trial>>(
    spec.replicates, options.workers, [&](std::size_t r) {
      const SortedSample data(
        sample(spec.generator, spec.n, RngStream{ spec.seed, r }));
      GldFitCache cache(data);
      std::vector<Trial> out(methods.size() * us.size());
      for (std::size_t k = 0; k < methods.size(); ++k) {
        for (std::size_t j = 0; j < us.size(); ++j) {
          Trial& t = out[k * us.size() + j];
          try {
            const auto ci =
              compute_ci(data, us[j], spec.level, methods[k], &cache);
            if (!std::isfinite(ci.lower) || !std::isfinite(ci.upper))
              continue;
            t.outcome = ci.lower <= truth[j] && truth[j] <= ci.upper
                          ? Outcome::covered
                          : Outcome::missed;
            t.std_width = ci.standardized_width;
          } catch (const std::exception& e) {
            if (!is_failure(e))
              throw;
          }
        }
      }
      return out;
    });
  return summarize(trials, methods, us, us);
}

CoverageReport run_two_sample_coverage(const ExperimentSpec& spec,
                                       const RunOptions& options)
{
  validate(spec);
  const auto methods = resolved_methods(spec);
  const auto& us = spec.u_grid;
  const auto& ps = spec.p_grid.empty() ? spec.u_grid : spec.p_grid;
  const DistributionModel gen_y = spec.generator_y.value_or(spec.generator);
  const std::size_t n = spec.n;
  const std::size_t m = spec.m > 0 ? spec.m : spec.n;
  std::vector<double> truth;
  for (std::size_t j = 0; j < us.size(); ++j)
    truth.push_back(quantile(spec.generator, us[j]) - quantile(gen_y, ps[j]));

  auto trials = run_replicates<std::vector<Trial>>(
    spec.replicates, options.workers, [&](std::size_t r) {
      // one stream per replicate: the first n uniforms drive x, the rest y
      const auto uniforms = rng_uniform(RngStream{ spec.seed, r }, n + m);
      std::vector<double> xs(n), ys(m);
      for (std::size_t i = 0; i < n; ++i)
        xs[i] = quantile(spec.generator, uniforms[i]);
      for (std::size_t i = 0; i < m; ++i)
        ys[i] = quantile(gen_y, uniforms[n + i]);
      const SortedSample data_x(std::move(xs));
      const SortedSample data_y(std::move(ys));
      std::vector<Trial> out(methods.size() * us.size());
      for (std::size_t k = 0; k < methods.size(); ++k) {
        for (std::size_t j = 0; j < us.size(); ++j) {
          Trial& t = out[k * us.size() + j];
          try {
            const auto ci = ci_two_sample(data_x, data_y, us[j], ps[j],
                                          spec.level, methods[k], methods[k]);
            if (!std::isfinite(ci.lower) || !std::isfinite(ci.upper))
              continue;
            t.outcome = ci.lower <= truth[j] && truth[j] <= ci.upper
                          ? Outcome::covered
                          : Outcome::missed;
            t.std_width =
              std::sqrt(static_cast<double>(n)) * (ci.upper - ci.lower);
          } catch (const std::exception& e) {
            if (!is_failure(e))
              throw;
          }
        }
      }
      return out;
    });
  return summarize(trials, methods, us, ps);
}

MseReport run_mse(const ExperimentSpec& spec, const RunOptions& options)
{
  validate(spec);
  const auto methods = resolved_methods(spec);
  const auto& us = spec.u_grid;
  const auto ns = sizes(spec);
  const std::size_t per_n = methods.size() * us.size();
  MseReport report;
  report.replicates = spec.replicates;

  // NaN marks a failed estimate
  auto estimates = run_replicates<std::vector<double>>(
    spec.replicates, options.workers, [&](std::size_t r) {
      std::vector<double> out(ns.size() * per_n, std::nan(""));
      for (std::size_t a = 0; a < ns.size(); ++a) {
        const SortedSample data(
          sample(spec.generator, ns[a], RngStream{ spec.seed, r }));
        GldFitCache cache(data);
        for (std::size_t k = 0; k < methods.size(); ++k)
          for (std::size_t j = 0; j < us.size(); ++j) {
            try {
              const auto se = standard_error(data, us[j], methods[k], &cache);
              out[a * per_n + k * us.size() + j] =
                se.tau / std::sqrt(us[j] * (1.0 - us[j]));
            } catch (const std::exception& e) {
              if (!is_failure(e))
                throw;
            }
          }
      }
      return out;
    });

  for (std::size_t a = 0; a < ns.size(); ++a)
    for (std::size_t k = 0; k < methods.size(); ++k)
      for (std::size_t j = 0; j < us.size(); ++j) {
        const std::size_t idx = a * per_n + k * us.size() + j;
        MseCell cell{ method_label(methods[k]),
                      ns[a],
                      us[j],
                      quantile_density(spec.generator, us[j]) };
        double sum = 0.0;
        for (const auto& rep : estimates) {
          if (std::isnan(rep[idx])) {
            ++cell.failures;
            continue;
          }
          ++cell.effective;
          sum += rep[idx];
        }
        if (cell.effective > 0) {
          const double eff = static_cast<double>(cell.effective);
          cell.mean = sum / eff;
          double ss = 0.0;
          for (const auto& rep : estimates)
            if (!std::isnan(rep[idx]))
              ss += (rep[idx] - cell.mean) * (rep[idx] - cell.mean);
          cell.variance = ss / eff;
          cell.bias = cell.mean - cell.q_true;
          cell.mse = cell.bias * cell.bias + cell.variance;
        } else {
          cell.mean = cell.bias = cell.variance = cell.mse = std::nan("");
        }
        report.failures += cell.failures;
        report.cells.push_back(cell);
      }
  const double attempts =
    static_cast<double>(spec.replicates * ns.size() * per_n);
  report.unreliable = static_cast<double>(report.failures) / attempts >
                      failure_threshold;
  return report;
}

GldBiasReport run_gld_bias(const ExperimentSpec& spec,
                           const RunOptions& options)
{
  validate(spec);
  const auto& us = spec.u_grid;
  const auto ns = sizes(spec);
  GldBiasReport report;
  report.replicates = spec.replicates;

  // per replicate: fitted quantiles for every (n, u); NaN on fit failure
  auto fitted = run_replicates<std::vector<double>>(
    spec.replicates, options.workers, [&](std::size_t r) {
      std::vector<double> out(ns.size() * us.size(), std::nan(""));
      for (std::size_t a = 0; a < ns.size(); ++a) {
        try {
          const SortedSample data(
            sample(spec.generator, ns[a], RngStream{ spec.seed, r }));
          const auto fit = fit_gld_mle(data, spec.parameterization);
          for (std::size_t j = 0; j < us.size(); ++j)
            out[a * us.size() + j] = gld_quantile(fit.params, us[j]);
        } catch (const std::exception& e) {
          if (!is_failure(e))
            throw;
        }
      }
      return out;
    });

  for (std::size_t a = 0; a < ns.size(); ++a)
    for (std::size_t j = 0; j < us.size(); ++j) {
      const std::size_t idx = a * us.size() + j;
      GldBiasCell cell{ ns[a], us[j], quantile(spec.generator, us[j]) };
      double sum = 0.0;
      for (const auto& rep : fitted) {
        if (std::isnan(rep[idx])) {
          ++cell.failures;
          continue;
        }
        ++cell.effective;
        sum += rep[idx];
      }
      cell.mean_fitted =
        cell.effective > 0 ? sum / static_cast<double>(cell.effective)
                           : std::nan("");
      const double diff = cell.mean_fitted - cell.true_quantile;
      if (std::fabs(cell.true_quantile) < 1e-12) {
        cell.absolute = true;
        cell.percent_difference = diff;
      } else {
        cell.percent_difference = 100.0 * diff / cell.true_quantile;
      }
      report.cells.push_back(cell);
    }
  // a failed fit loses every u at that n; count fits, not cells
  for (std::size_t a = 0; a < ns.size(); ++a)
    for (const auto& rep : fitted)
      if (std::isnan(rep[a * us.size()]))
        ++report.failures;
  report.unreliable = static_cast<double>(report.failures) /
                        static_cast<double>(spec.replicates * ns.size()) >
                      failure_threshold;
  return report;
}

} // namespace qci
