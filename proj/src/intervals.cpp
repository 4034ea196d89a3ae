#include "qci/intervals.hpp"
#include "qci/errors.hpp"
#include "qci/numerics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace qci {

namespace {

std::size_t default_min_n(MethodKind kind)
{
  switch (kind) {
    case MethodKind::A:
    case MethodKind::B:
      return 30;
    case MethodKind::C:
    case MethodKind::D:
    case MethodKind::E:
      return 20;
    case MethodKind::F:
    case MethodKind::G:
    case MethodKind::H:
      return 2;
    case MethodKind::oracle:
      return 1;
  }
  return 2;
}

char kind_letter(MethodKind kind)
{
  static constexpr char letters[] = "ABCDEFGH";
  return letters[static_cast<int>(kind)];
}

void check_inputs(const SortedSample& data,
                  double u,
                  const MethodSpec& spec)
{
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "u must lie in (0,1)");
  const std::size_t floor_n = minimum_sample_size(spec);
  if (data.size() < floor_n)
    fail(ErrorCode::too_few_observations,
         "method " + method_label(spec) + " needs at least " +
           std::to_string(floor_n) + " observations, got " +
           std::to_string(data.size()));
}

void check_level(double level)
{
  if (!(level > 0.5 && level < 1.0))
    fail(ErrorCode::domain, "confidence level must lie in (0.5, 1)");
}

double parse_number(const std::string& text, const std::string& what)
{
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    fail(ErrorCode::parse, "invalid " + what + " '" + text + "'");
  return v;
}

std::string format_number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const GldFit& fit_for(const SortedSample& data,
                      GldParameterization param,
                      GldFitCache* cache,
                      std::optional<GldFitCache>& local)
{
  if (cache != nullptr)
    return cache->get(param);
  local.emplace(data);
  return local->get(param);
}

// tau from the direct estimator. A negative kernel sum is retried with
// the bandwidth cut back to the boundary distance.
StandardError direct_standard_error(const SortedSample& data,
                                    double u,
                                    double b,
                                    const KernelSpec& kernel)
{
  const double root = std::sqrt(u * (1.0 - u));
  auto est = qdens_direct(data, u, b, kernel);
  StandardError se{ sample_quantile_type8(data, u), 0.0, b };
  if (est.floored) {
    se.floored = true;
    const double edge = std::min(u, 1.0 - u);
    if (edge < b) {
      est = qdens_direct(data, u, edge, kernel);
      se.bandwidth = edge;
    }
  }
  se.tau = root * est.value;
  se.degenerate = !(se.tau > 0.0);
  return se;
}

BoundaryCorrection gld_correction(const GldParams& params)
{
  const auto [lo, hi] = gld_support(params);
  if (std::isfinite(lo))
    return BoundaryCorrection::lower_only;
  if (std::isfinite(hi))
    return BoundaryCorrection::both;
  return BoundaryCorrection::none;
}

} // namespace

std::size_t minimum_sample_size(const MethodSpec& spec)
{
  return spec.min_n > 0 ? spec.min_n : default_min_n(spec.kind);
}

const GldFit& GldFitCache::get(GldParameterization param)
{
  const auto i = static_cast<std::size_t>(param);
  if (errors_[i])
    throw *errors_[i];
  if (!fits_[i]) {
    try {
      fits_[i] = fit_gld_mle(data_, param);
    } catch (const Error& e) {
      errors_[i] = e;
      throw;
    }
  }
  return *fits_[i];
}

MethodSpec parse_method(const std::string& text)
{
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest =
    colon == std::string::npos ? std::string{} : text.substr(colon + 1);

  MethodSpec spec;
  if (head == "oracle") {
    spec.kind = MethodKind::oracle;
    if (!rest.empty())
      spec.model = parse_family(rest);
    return spec;
  }
  if (head.size() != 1 || head[0] < 'A' || head[0] > 'H')
    fail(ErrorCode::parse,
         "unknown method '" + text +
           "' (expected A:<family>, B, C, D, E, F, G, H, optionally with "
           ":fkml|:rs for C/D/E or :<bandwidth>|:optimal:<family> for F/G/H)");
  spec.kind = static_cast<MethodKind>(head[0] - 'A');

  switch (spec.kind) {
    case MethodKind::A:
      spec.model = parse_family(rest.empty() ? "cauchy" : rest);
      break;
    case MethodKind::B:
      if (!rest.empty())
        fail(ErrorCode::parse, "method B takes no argument");
      break;
    case MethodKind::C:
    case MethodKind::D:
    case MethodKind::E:
      if (!rest.empty())
        spec.parameterization = parse_parameterization(rest);
      break;
    default:
      if (rest.rfind("optimal:", 0) == 0)
        spec.model = parse_family(rest.substr(8));
      else if (!rest.empty())
        spec.bandwidth = parse_number(rest, "bandwidth");
      break;
  }
  return spec;
}

std::string method_label(const MethodSpec& spec)
{
  switch (spec.kind) {
    case MethodKind::A:
      return "A:" + (spec.model ? to_string(*spec.model) : "cauchy");
    case MethodKind::B:
      return "B";
    case MethodKind::C:
    case MethodKind::D:
    case MethodKind::E:
      return std::string(1, kind_letter(spec.kind)) + ":" +
             to_string(spec.parameterization);
    case MethodKind::oracle:
      return spec.model ? "oracle:" + to_string(*spec.model) : "oracle";
    default:
      return std::string(1, kind_letter(spec.kind)) + ":" +
             (spec.model ? "optimal:" + to_string(*spec.model)
                         : format_number(spec.bandwidth));
  }
}

StandardError standard_error(const SortedSample& data,
                             double u,
                             const MethodSpec& spec,
                             GldFitCache* cache)
{
  check_inputs(data, u, spec);
  const std::size_t n = data.size();
  const double root = std::sqrt(u * (1.0 - u));
  std::optional<GldFitCache> local;

  switch (spec.kind) {
    case MethodKind::A: {
      if (!spec.model)
        fail(ErrorCode::parse, "method A needs a representative family");
      const BandwidthRule rule{ FixedFamilyQor{ *spec.model },
                                spec.kernel,
                                spec.correction.value_or(
                                  default_correction(*spec.model)) };
      return direct_standard_error(
        data, u, optimal_bandwidth(rule, u, n), spec.kernel);
    }
    case MethodKind::B: {
      if (!(data.min() > 0.0))
        fail(ErrorCode::nonpositive_data,
             "method B needs positive data; smallest value is " +
               std::to_string(data.min()));
      const BandwidthRule rule{ AdaptiveParetoQor{},
                                spec.kernel,
                                spec.correction.value_or(
                                  BoundaryCorrection::lower_only) };
      return direct_standard_error(
        data, u, optimal_bandwidth(rule, u, n, &data), spec.kernel);
    }
    case MethodKind::C: {
      const auto& fit = fit_for(data, spec.parameterization, cache, local);
      StandardError se{ gld_quantile(fit.params, u),
                        root * gld_quantile_density(fit.params, u),
                        std::nullopt };
      se.degenerate = !(se.tau > 0.0);
      return se;
    }
    case MethodKind::D:
      fail(ErrorCode::incompatible_method,
           "method D has no standard error; use A, B, C, E, F, G or H");
    case MethodKind::E: {
      GldParams params;
      try {
        params = fit_for(data, spec.parameterization, cache, local).params;
      } catch (const Error&) {
        MethodSpec fallback;
        fallback.kind = MethodKind::A;
        fallback.model = DistributionModel{ Cauchy{} };
        fallback.kernel = spec.kernel;
        fallback.min_n = 1;
        auto se = standard_error(data, u, fallback);
        se.fallback = true;
        return se;
      }
      const BandwidthRule rule{ FittedGldQor{ params },
                                spec.kernel,
                                spec.correction.value_or(
                                  gld_correction(params)) };
      return direct_standard_error(
        data, u, optimal_bandwidth(rule, u, n), spec.kernel);
    }
    case MethodKind::F:
    case MethodKind::G:
    case MethodKind::H: {
      double b = spec.bandwidth;
      if (spec.model) {
        const BandwidthRule rule{ FixedFamilyQor{ *spec.model },
                                  spec.kernel,
                                  spec.correction.value_or(
                                    default_correction(*spec.model)) };
        b = optimal_bandwidth(rule, u, n);
      }
      if (spec.kind == MethodKind::G)
        return direct_standard_error(data, u, b, spec.kernel);
      const auto est = spec.kind == MethodKind::F
                         ? qdens_reciprocal(data, u, b, spec.kernel)
                         : qdens_soni(data, u, b, spec.kernel);
      StandardError se{ sample_quantile_type8(data, u), root * est.value, b };
      se.degenerate = !(se.tau > 0.0);
      return se;
    }
    case MethodKind::oracle: {
      if (!spec.model)
        fail(ErrorCode::parse, "the oracle method needs the true model");
      return { sample_quantile_type8(data, u),
               root * quantile_density(*spec.model, u),
               std::nullopt };
    }
  }
  fail(ErrorCode::parse, "unknown method");
}

std::pair<double, double> normal_interval(double center,
                                          double tau,
                                          std::size_t n,
                                          double level)
{
  check_level(level);
  const double z = std_normal_quantile(0.5 + 0.5 * level);
  const double half = z * tau / std::sqrt(static_cast<double>(n));
  return { center - half, center + half };
}

std::pair<double, double> beta_calibrated_interval(const GldParams& params,
                                                   std::size_t n,
                                                   double u,
                                                   double level)
{
  check_level(level);
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "u must lie in (0,1)");
  const double nn = static_cast<double>(n);
  const double m = std::floor(nn * u);
  if (!(m + 1.0 > 0.0 && nn - m > 0.0))
    fail(ErrorCode::degenerate_beta,
         "beta calibration needs m+1 > 0 and n-m > 0");
  const double alpha = 1.0 - level;
  return { gld_quantile(params, beta_quantile(0.5 * alpha, m + 1.0, nn - m)),
           gld_quantile(params,
                        beta_quantile(1.0 - 0.5 * alpha, m + 1.0, nn - m)) };
}

QuantileCI compute_ci(const SortedSample& data,
                      double u,
                      double level,
                      const MethodSpec& spec,
                      GldFitCache* cache)
{
  check_level(level);
  const std::size_t n = data.size();
  const double root_n = std::sqrt(static_cast<double>(n));
  QuantileCI ci{};
  ci.u = u;
  ci.level = level;
  ci.method = method_label(spec);
  ci.n = n;

  if (spec.kind == MethodKind::D) {
    check_inputs(data, u, spec);
    std::optional<GldFitCache> local;
    const auto& fit = fit_for(data, spec.parameterization, cache, local);
    ci.estimate = gld_quantile(fit.params, u);
    std::tie(ci.lower, ci.upper) =
      beta_calibrated_interval(fit.params, n, u, level);
    ci.standardized_width = root_n * (ci.upper - ci.lower);
    return ci;
  }

  const auto se = standard_error(data, u, spec, cache);
  const auto [lo, hi] = normal_interval(se.center, se.tau, n, level);
  ci.estimate = se.center;
  ci.lower = se.degenerate ? se.center : lo;
  ci.upper = se.degenerate ? se.center : hi;
  ci.bandwidth_used = se.bandwidth;
  ci.standardized_width = root_n * (ci.upper - ci.lower);
  ci.degenerate = se.degenerate;
  ci.fallback = se.fallback;
  ci.floored = se.floored;
  if (se.fallback)
    ci.method += "(fallback A:cauchy)";
  return ci;
}

QuantileCI ci_method_a(const SortedSample& data,
                       double u,
                       double level,
                       const DistributionModel& qor_model,
                       const KernelSpec& kernel)
{
  MethodSpec spec;
  spec.kind = MethodKind::A;
  spec.model = qor_model;
  spec.kernel = kernel;
  return compute_ci(data, u, level, spec);
}

QuantileCI ci_method_b_pareto(const SortedSample& data,
                              double u,
                              double level,
                              const KernelSpec& kernel)
{
  MethodSpec spec;
  spec.kind = MethodKind::B;
  spec.kernel = kernel;
  return compute_ci(data, u, level, spec);
}

QuantileCI ci_method_c(const SortedSample& data,
                       double u,
                       double level,
                       GldParameterization param)
{
  MethodSpec spec;
  spec.kind = MethodKind::C;
  spec.parameterization = param;
  return compute_ci(data, u, level, spec);
}

QuantileCI ci_method_d(const SortedSample& data,
                       double u,
                       double level,
                       GldParameterization param)
{
  MethodSpec spec;
  spec.kind = MethodKind::D;
  spec.parameterization = param;
  return compute_ci(data, u, level, spec);
}

QuantileCI ci_method_e(const SortedSample& data,
                       double u,
                       double level,
                       const KernelSpec& kernel,
                       GldParameterization param)
{
  MethodSpec spec;
  spec.kind = MethodKind::E;
  spec.kernel = kernel;
  spec.parameterization = param;
  return compute_ci(data, u, level, spec);
}

QuantileCI ci_methods_fgh(const SortedSample& data,
                          double u,
                          double level,
                          MethodKind estimator,
                          double b,
                          const KernelSpec& kernel)
{
  if (estimator != MethodKind::F && estimator != MethodKind::G &&
      estimator != MethodKind::H)
    fail(ErrorCode::incompatible_method, "estimator must be F, G or H");
  MethodSpec spec;
  spec.kind = estimator;
  spec.bandwidth = b;
  spec.kernel = kernel;
  return compute_ci(data, u, level, spec);
}

TwoSampleCI ci_two_sample(const SortedSample& data_x,
                          const SortedSample& data_y,
                          double u,
                          double p,
                          double level,
                          const MethodSpec& method_x,
                          const MethodSpec& method_y)
{
  check_level(level);
  if (method_x.kind == MethodKind::D || method_y.kind == MethodKind::D)
    fail(ErrorCode::incompatible_method,
         "method D produces no standard error and cannot be used for a "
         "quantile difference; use A, B, C, E, F, G or H");
  const auto sx = standard_error(data_x, u, method_x);
  const auto sy = standard_error(data_y, p, method_y);
  const double n = static_cast<double>(data_x.size());
  const double m = static_cast<double>(data_y.size());
  const double z = std_normal_quantile(0.5 + 0.5 * level);
  const double estimate =
    sample_quantile_type8(data_x, u) - sample_quantile_type8(data_y, p);
  const double half = z * std::sqrt(sx.tau * sx.tau / n + sy.tau * sy.tau / m);

  TwoSampleCI ci{};
  ci.u = u;
  ci.p = p;
  ci.estimate = estimate;
  ci.lower = estimate - half;
  ci.upper = estimate + half;
  ci.level = level;
  ci.method = method_label(method_x) == method_label(method_y)
                ? method_label(method_x)
                : method_label(method_x) + "|" + method_label(method_y);
  ci.n = data_x.size();
  ci.m = data_y.size();
  return ci;
}

} // namespace qci
