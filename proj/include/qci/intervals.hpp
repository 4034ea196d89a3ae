#pragma once

#include "qci/distributions.hpp"
#include "qci/errors.hpp"
#include "qci/estimators.hpp"
#include "qci/gld.hpp"
#include "qci/sample.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>

namespace qci {

//! Interval constructions:
//!  A  representative-family QOR bandwidth
//!  B  adaptive Pareto II QOR bandwidth
//!  C  normal approximation with the fitted GLD quantile density
//!  D  beta-calibrated fitted-GLD quantiles
//!  E  fitted-GLD QOR bandwidth, kernel estimate on the data
//!  F/G/H  reciprocal / direct / Soni kernel estimates at a given bandwidth
//!  oracle  true quantile density of a known model (harness self-test)
enum class MethodKind
{
  A,
  B,
  C,
  D,
  E,
  F,
  G,
  H,
  oracle
};

struct MethodSpec
{
  MethodKind kind = MethodKind::A;
  //! A: the representative family. F/G/H: when set, the bandwidth is the
  //! optimal one for this family instead of a constant. oracle: the truth.
  std::optional<DistributionModel> model{};
  //! F/G/H constant bandwidth
  double bandwidth = 0.19;
  KernelSpec kernel = epanechnikov();
  GldParameterization parameterization = GldParameterization::fkml;
  //! overrides the support-derived boundary correction
  std::optional<BoundaryCorrection> correction{};
  //! minimum sample size; 0 selects the method default (A/B: 30, C/D/E: 20)
  std::size_t min_n = 0;
};

//! "A:cauchy", "A:pareto2:a=1", "B", "C", "D:rs", "E", "G", "G:0.15",
//! "G:optimal:exponential", "oracle:normal".
MethodSpec parse_method(const std::string& text);
std::string method_label(const MethodSpec& spec);
//! spec.min_n, or the method default when it is 0
std::size_t minimum_sample_size(const MethodSpec& spec);

struct QuantileCI
{
  double u;
  double estimate;
  double lower;
  double upper;
  double level;
  std::string method;
  std::optional<double> bandwidth_used;
  double standardized_width; //!< sqrt(n) (upper - lower)
  std::size_t n;
  bool degenerate = false; //!< zero standard error, interval collapsed
  bool fallback = false;   //!< Method E fell back to Method A (Cauchy QOR)
  bool floored = false;    //!< negative kernel sum, re-estimated
};

struct TwoSampleCI
{
  double u;
  double p;
  double estimate;
  double lower;
  double upper;
  double level;
  std::string method;
  std::size_t n;
  std::size_t m;
};

//! Lazily fits and memoizes the GLD for one sample, so C, D and E share a
//! fit. Fit errors are memoized as well and rethrown on every access.
class GldFitCache
{
public:
  explicit GldFitCache(const SortedSample& data)
    : data_(data)
  {}
  const GldFit& get(GldParameterization param);

private:
  const SortedSample& data_;
  std::array<std::optional<GldFit>, 2> fits_{};
  std::array<std::optional<Error>, 2> errors_{};
};

//! The pieces of center +- z tau / sqrt(n).
struct StandardError
{
  double center;
  double tau;
  std::optional<double> bandwidth;
  bool degenerate = false;
  bool fallback = false;
  bool floored = false;
};

//! center and tau_hat = sqrt(u(1-u)) qhat(u) for every method but D.
StandardError standard_error(const SortedSample& data,
                             double u,
                             const MethodSpec& spec,
                             GldFitCache* cache = nullptr);

//! center +- z_{1-alpha/2} tau / sqrt(n)
std::pair<double, double> normal_interval(double center,
                                          double tau,
                                          std::size_t n,
                                          double level);

//! [Q(B^-1(alpha/2)), Q(B^-1(1-alpha/2))] with B the Beta(m+1, n-m)
//! distribution, m = floor(n u), Q the GLD quantile function.
std::pair<double, double> beta_calibrated_interval(const GldParams& params,
                                                   std::size_t n,
                                                   double u,
                                                   double level);

QuantileCI compute_ci(const SortedSample& data,
                      double u,
                      double level,
                      const MethodSpec& spec,
                      GldFitCache* cache = nullptr);

QuantileCI ci_method_a(const SortedSample& data,
                       double u,
                       double level,
                       const DistributionModel& qor_model,
                       const KernelSpec& kernel = epanechnikov());
QuantileCI ci_method_b_pareto(const SortedSample& data,
                              double u,
                              double level,
                              const KernelSpec& kernel = epanechnikov());
QuantileCI ci_method_c(const SortedSample& data,
                       double u,
                       double level,
                       GldParameterization param = GldParameterization::fkml);
QuantileCI ci_method_d(const SortedSample& data,
                       double u,
                       double level,
                       GldParameterization param = GldParameterization::fkml);
QuantileCI ci_method_e(const SortedSample& data,
                       double u,
                       double level,
                       const KernelSpec& kernel = epanechnikov(),
                       GldParameterization param = GldParameterization::fkml);
//! estimator must be F, G or H
QuantileCI ci_methods_fgh(const SortedSample& data,
                          double u,
                          double level,
                          MethodKind estimator,
                          double b = 0.19,
                          const KernelSpec& kernel = epanechnikov());

//! (x_u - y_p) +- z sqrt(tau^2/n + nu^2/m), centred on the type-8
//! estimates. Method D has no standard error and is rejected.
TwoSampleCI ci_two_sample(const SortedSample& data_x,
                          const SortedSample& data_y,
                          double u,
                          double p,
                          double level,
                          const MethodSpec& method_x,
                          const MethodSpec& method_y);

} // namespace qci
