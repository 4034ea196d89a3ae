#pragma once

#include <span>
#include <vector>

namespace qci {

//! An immutable, ascending-sorted data vector with its summary moments.
//! Every estimator works on order statistics, so the sort happens once.
class SortedSample
{
public:
  //! Throws ErrorCode::empty_data for an empty vector and ErrorCode::parse
  //! for non-finite values.
  explicit SortedSample(std::vector<double> values);
  explicit SortedSample(std::span<const double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  //! i-th order statistic, 1-based as in X_(i)
  double order_stat(std::size_t i) const { return values_[i - 1]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double mean() const { return mean_; }
  //! sample standard deviation (n - 1 denominator; 0 when n == 1)
  double sd() const { return sd_; }
  bool is_constant() const { return values_.front() == values_.back(); }

private:
  std::vector<double> values_;
  double mean_ = 0.0;
  double sd_ = 0.0;
};

//! Hyndman-Fan type 8: h = (n + 1/3) u + 1/3 clamped to [1, n], linear
//! interpolation between X_(floor h) and X_(ceil h).
double sample_quantile_type8(const SortedSample& data, double u);
double sample_quantile_type8(std::span<const double> data, double u);

} // namespace qci
