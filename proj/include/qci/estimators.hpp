#pragma once

#include "qci/distributions.hpp"
#include "qci/gld.hpp"
#include "qci/sample.hpp"

#include <optional>
#include <string>
#include <variant>

namespace qci {

enum class KernelName
{
  epanechnikov,
  triangular
};

//! Even kernel on [-1, 1] with its variance and roughness constants.
struct KernelSpec
{
  KernelName name = KernelName::epanechnikov;
  double sigma_k_sq = 0.2;
  double kappa = 0.6;

  double evaluate(double x) const;
  //! integral of the kernel from -1 to x
  double antiderivative(double x) const;
  //! k_b(t) = k(t/b)/b
  double scaled(double t, double b) const { return evaluate(t / b) / b; }
  //! (kappa / sigma_k^4)^(1/5), the kernel factor of the optimal bandwidth
  double bandwidth_constant() const;
};

KernelSpec epanechnikov();
KernelSpec triangular();
KernelSpec parse_kernel(const std::string& name);
std::string to_string(KernelName name);

enum class BoundaryCorrection
{
  none,
  lower_only, //!< b <- min(u, b)
  both        //!< b <- min(u, 1 - u, b)
};

std::string to_string(BoundaryCorrection c);
BoundaryCorrection parse_correction(const std::string& s);
//! lower_only when the model has a finite lower support bound, else none.
BoundaryCorrection default_correction(const DistributionModel& model);

struct FixedFamilyQor { DistributionModel model; };
struct FittedGldQor { GldParams params; };
//! Pareto II with unit scale and shape a = n / sum log(1 + x_i)
struct AdaptiveParetoQor {};
struct ConstantBandwidth { double value; };

using BandwidthSource =
  std::variant<FixedFamilyQor, FittedGldQor, AdaptiveParetoQor, ConstantBandwidth>;

struct BandwidthRule
{
  BandwidthSource source;
  KernelSpec kernel = epanechnikov();
  BoundaryCorrection boundary_correction = BoundaryCorrection::none;
};

//! MLE of the Pareto II shape with unit scale; ErrorCode::nonpositive_data
//! when some x <= -1.
double pareto_shape_mle(const SortedSample& data);
//! a^2 (1-u)^2 / ((1+a)(1+2a)); the a -> infinity limit (1-u)^2/2 for
//! infinite a.
double pareto_qor(double a, double u);

//! b = (kappa/sigma_k^4)^(1/5) |QOR(u)|^(2/5) / n^(1/5), then the boundary
//! correction. Infinite QOR gives b = min(u, 1-u). The result lies in (0, 1).
double optimal_bandwidth(const BandwidthRule& rule,
                         double u,
                         std::size_t n,
                         const SortedSample* data = nullptr);

enum class DensityEstimator
{
  direct_g,
  reciprocal_f,
  soni_h
};

struct QuantileDensityEstimate
{
  double u;
  double value;
  double bandwidth_used;
  DensityEstimator estimator;
  //! the raw kernel sum was negative and has been floored at zero
  bool floored = false;
};

//! sum_i X_(i) {k_b(u - (i-1)/n) - k_b(u - i/n)}
QuantileDensityEstimate qdens_direct(const SortedSample& data,
                                     double u,
                                     double b,
                                     const KernelSpec& kernel = epanechnikov());

//! sum_i X_(i) int_{(i-1)/n}^{i/n} k_b(u - y) dy
double kernel_quantile_estimate(const SortedSample& data,
                                double u,
                                double b,
                                const KernelSpec& kernel = epanechnikov());
//! sum of the weights above, int_0^1 k_b(u - y) dy
double kernel_quantile_weight_sum(double u,
                                  double b,
                                  const KernelSpec& kernel = epanechnikov());

//! Kernel density estimate on the data scale: sum_i k_h(X_i - x)/n.
double kernel_density(const SortedSample& data,
                      double x,
                      double h,
                      const KernelSpec& kernel = epanechnikov());

//! Probability-scale bandwidth b converted to the data scale for the
//! density estimate: b times the sample standard deviation.
double density_bandwidth(const SortedSample& data, double b);

//! 1 / fhat(Qhat(u)); ErrorCode::zero_density when no observation is within
//! kernel reach of Qhat(u).
QuantileDensityEstimate qdens_reciprocal(const SortedSample& data,
                                         double u,
                                         double b,
                                         const KernelSpec& kernel =
                                           epanechnikov());

//! (1/n) sum_i k_b(S_i - u) / fhat(X_(i)), S_i = #{X_j <= X_(i)} / n.
QuantileDensityEstimate qdens_soni(const SortedSample& data,
                                   double u,
                                   double b = 0.19,
                                   const KernelSpec& kernel = epanechnikov());

} // namespace qci
