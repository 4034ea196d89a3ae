#include "qci/estimators.hpp"
#include "qci/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qci {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

template<class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template<class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_args(const SortedSample& data, double u, double b)
{
  if (data.size() < 2)
    fail(ErrorCode::too_few_observations,
         "quantile density estimation needs at least 2 observations");
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "u must lie in (0,1)");
  if (!(b > 0.0 && b < 1.0))
    fail(ErrorCode::domain, "bandwidth must lie in (0,1)");
}

// 1-based index range [first, last] of order statistics whose kernel
// terms can be nonzero at u.
std::pair<std::size_t, std::size_t> active_range(std::size_t n, double u, double b)
{
  const double nn = static_cast<double>(n);
  const double lo = std::floor(nn * (u - b));
  const double hi = std::ceil(nn * (u + b)) + 1.0;
  const auto first = static_cast<std::size_t>(std::max(1.0, lo));
  const auto last = static_cast<std::size_t>(std::min(nn, std::max(hi, 1.0)));
  return { first, last };
}

} // namespace

double KernelSpec::evaluate(double x) const
{
  const double ax = std::fabs(x);
  if (ax >= 1.0)
    return 0.0;
  if (name == KernelName::epanechnikov)
    return 0.75 * (1.0 - x * x);
  return 1.0 - ax;
}

double KernelSpec::antiderivative(double x) const
{
  if (x <= -1.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  if (name == KernelName::epanechnikov)
    return 0.5 + 0.75 * x - 0.25 * x * x * x;
  if (x < 0.0)
    return 0.5 * (1.0 + x) * (1.0 + x);
  return 1.0 - 0.5 * (1.0 - x) * (1.0 - x);
}

double KernelSpec::bandwidth_constant() const
{
  return std::pow(kappa / (sigma_k_sq * sigma_k_sq), 0.2);
}

KernelSpec epanechnikov()
{
  return { KernelName::epanechnikov, 1.0 / 5.0, 3.0 / 5.0 };
}

KernelSpec triangular()
{
  return { KernelName::triangular, 1.0 / 6.0, 2.0 / 3.0 };
}

KernelSpec parse_kernel(const std::string& name)
{
  if (name == "epanechnikov" || name == "epan")
    return epanechnikov();
  if (name == "triangular" || name == "tri")
    return triangular();
  fail(ErrorCode::parse,
       "unknown kernel '" + name + "' (expected epanechnikov or triangular)");
}

std::string to_string(KernelName name)
{
  return name == KernelName::epanechnikov ? "epanechnikov" : "triangular";
}

std::string to_string(BoundaryCorrection c)
{
  switch (c) {
    case BoundaryCorrection::none:
      return "none";
    case BoundaryCorrection::lower_only:
      return "lower";
    case BoundaryCorrection::both:
      return "both";
  }
  return "none";
}

BoundaryCorrection parse_correction(const std::string& s)
{
  if (s == "none")
    return BoundaryCorrection::none;
  if (s == "lower" || s == "lower_only")
    return BoundaryCorrection::lower_only;
  if (s == "both")
    return BoundaryCorrection::both;
  fail(ErrorCode::parse,
       "unknown boundary correction '" + s + "' (expected none, lower, both)");
}

BoundaryCorrection default_correction(const DistributionModel& model)
{
  return std::isfinite(support(model).first) ? BoundaryCorrection::lower_only
                                             : BoundaryCorrection::none;
}

double pareto_shape_mle(const SortedSample& data)
{
  if (data.min() <= -1.0)
    fail(ErrorCode::nonpositive_data,
         "adaptive Pareto bandwidth needs every observation > -1");
  double sum = 0.0;
  for (double x : data.values())
    sum += std::log1p(x);
  if (!(sum > 0.0))
    return inf;
  return static_cast<double>(data.size()) / sum;
}

double pareto_qor(double a, double u)
{
  const double v = 1.0 - u;
  if (std::isinf(a))
    return 0.5 * v * v;
  return a * a * v * v / ((1.0 + a) * (1.0 + 2.0 * a));
}

double optimal_bandwidth(const BandwidthRule& rule,
                         double u,
                         std::size_t n,
                         const SortedSample* data)
{
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "u must lie in (0,1)");
  if (n < 2)
    fail(ErrorCode::too_few_observations, "bandwidth needs n >= 2");

  const double edge = std::min(u, 1.0 - u);
  double b = std::visit(
    overloaded{
      [&](const ConstantBandwidth& c) {
        if (!(c.value > 0.0 && c.value < 1.0))
          fail(ErrorCode::domain, "constant bandwidth must lie in (0,1)");
        return c.value;
      },
      [&](const auto& src) {
        double ratio = 0.0;
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, FixedFamilyQor>)
          ratio = qor(src.model, u).qor;
        else if constexpr (std::is_same_v<T, FittedGldQor>)
          ratio = gld_qor(src.params, u);
        else {
          if (data == nullptr)
            fail(ErrorCode::data_required,
                 "adaptive Pareto bandwidth needs the data");
          ratio = pareto_qor(pareto_shape_mle(*data), u);
        }
        if (std::isinf(ratio))
          return edge;
        // only |q''| enters the asymptotic MSE
        return rule.kernel.bandwidth_constant() *
               std::pow(std::fabs(ratio), 0.4) /
               std::pow(static_cast<double>(n), 0.2);
      },
    },
    rule.source);

  switch (rule.boundary_correction) {
    case BoundaryCorrection::lower_only:
      b = std::min(b, u);
      break;
    case BoundaryCorrection::both:
      b = std::min(b, edge);
      break;
    case BoundaryCorrection::none:
      break;
  }
  b = std::min(b, std::max(u, 1.0 - u));
  if (!(b > 0.0) || std::isnan(b))
    fail(ErrorCode::domain, "optimal bandwidth is not positive");
  return b;
}

QuantileDensityEstimate qdens_direct(const SortedSample& data,
                                     double u,
                                     double b,
                                     const KernelSpec& kernel)
{
  check_args(data, u, b);
  const std::size_t n = data.size();
  const double nn = static_cast<double>(n);
  // Summed by parts: X_(1) k_b(u) - X_(n) k_b(u-1)
  //   + sum_{i<n} (X_(i+1) - X_(i)) k_b(u - i/n).
  // Inside [b, 1-b] only the non-negative spacing terms remain.
  const auto [first, last] = active_range(n, u, b);
  double sum = data.order_stat(1) * kernel.scaled(u, b) -
               data.order_stat(n) * kernel.scaled(u - 1.0, b);
  for (std::size_t i = first; i <= std::min(last, n - 1); ++i) {
    const double spacing = data.order_stat(i + 1) - data.order_stat(i);
    if (spacing != 0.0)
      sum += spacing * kernel.scaled(u - static_cast<double>(i) / nn, b);
  }
  QuantileDensityEstimate est{ u, sum, b, DensityEstimator::direct_g };
  if (sum < 0.0) {
    est.value = 0.0;
    est.floored = true;
  }
  return est;
}

double kernel_quantile_estimate(const SortedSample& data,
                                double u,
                                double b,
                                const KernelSpec& kernel)
{
  check_args(data, u, b);
  const std::size_t n = data.size();
  const double nn = static_cast<double>(n);
  const auto [first, last] = active_range(n, u, b);
  double sum = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double w =
      kernel.antiderivative((u - static_cast<double>(i - 1) / nn) / b) -
      kernel.antiderivative((u - static_cast<double>(i) / nn) / b);
    sum += data.order_stat(i) * w;
  }
  return sum;
}

double kernel_quantile_weight_sum(double u, double b, const KernelSpec& kernel)
{
  return kernel.antiderivative(u / b) - kernel.antiderivative((u - 1.0) / b);
}

double kernel_density(const SortedSample& data,
                      double x,
                      double h,
                      const KernelSpec& kernel)
{
  if (!(h > 0.0))
    fail(ErrorCode::zero_density, "density bandwidth is zero");
  const auto xs = data.values();
  auto it = std::lower_bound(xs.begin(), xs.end(), x - h);
  double sum = 0.0;
  for (; it != xs.end() && *it <= x + h; ++it)
    sum += kernel.evaluate((*it - x) / h);
  return sum / (static_cast<double>(xs.size()) * h);
}

double density_bandwidth(const SortedSample& data, double b)
{
  return b * data.sd();
}

QuantileDensityEstimate qdens_reciprocal(const SortedSample& data,
                                         double u,
                                         double b,
                                         const KernelSpec& kernel)
{
  check_args(data, u, b);
  const double h = density_bandwidth(data, b);
  if (!(h > 0.0))
    fail(ErrorCode::zero_density,
         "reciprocal estimator: data are constant, density undefined");
  const double center = kernel_quantile_estimate(data, u, b, kernel);
  const double f = kernel_density(data, center, h, kernel);
  if (!(f > 0.0))
    fail(ErrorCode::zero_density,
         "reciprocal estimator: no observation within kernel reach of the "
         "quantile estimate; increase the bandwidth");
  return { u, 1.0 / f, b, DensityEstimator::reciprocal_f };
}

QuantileDensityEstimate qdens_soni(const SortedSample& data,
                                   double u,
                                   double b,
                                   const KernelSpec& kernel)
{
  check_args(data, u, b);
  const double h = density_bandwidth(data, b);
  if (!(h > 0.0))
    fail(ErrorCode::zero_density,
         "Soni estimator: data are constant, density undefined");
  const auto xs = data.values();
  const std::size_t n = xs.size();
  const double nn = static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // S_i counts observations <= X_(i), so ties share the largest rank
    const auto last_tie = std::upper_bound(xs.begin() + i, xs.end(), xs[i]);
    const double s = static_cast<double>(last_tie - xs.begin()) / nn;
    const double w = kernel.scaled(s - u, b);
    if (w == 0.0)
      continue;
    const double f = kernel_density(data, xs[i], h, kernel);
    if (!(f > 0.0))
      fail(ErrorCode::zero_density, "Soni estimator: zero density estimate");
    sum += w / f;
  }
  return { u, sum / nn, b, DensityEstimator::soni_h };
}

} // namespace qci
