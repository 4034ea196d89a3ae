#include "qci/sample.hpp"
#include "qci/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qci {

SortedSample::SortedSample(std::span<const double> values)
  : SortedSample(std::vector<double>(values.begin(), values.end()))
{}

SortedSample::SortedSample(std::vector<double> values)
  : values_(std::move(values))
{
  if (values_.empty())
    fail(ErrorCode::empty_data, "data vector is empty");
  for (double x : values_)
    if (!std::isfinite(x))
      fail(ErrorCode::parse, "data vector contains a non-finite value");
  std::sort(values_.begin(), values_.end());

  const double n = static_cast<double>(values_.size());
  double sum = 0.0;
  for (double x : values_)
    sum += x;
  mean_ = sum / n;
  if (values_.size() > 1) {
    double ss = 0.0;
    for (double x : values_)
      ss += (x - mean_) * (x - mean_);
    sd_ = std::sqrt(ss / (n - 1.0));
  }
}

double sample_quantile_type8(const SortedSample& data, double u)
{
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "sample quantile: u must lie in (0,1)");
  const double n = static_cast<double>(data.size());
  const double h = std::clamp((n + 1.0 / 3.0) * u + 1.0 / 3.0, 1.0, n);
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  const auto j = static_cast<std::size_t>(std::ceil(h));
  const double xi = data.order_stat(i);
  return xi + (h - lo) * (data.order_stat(j) - xi);
}

double sample_quantile_type8(std::span<const double> data, double u)
{
  return sample_quantile_type8(SortedSample(data), u);
}

} // namespace qci
