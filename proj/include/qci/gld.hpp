#pragma once

#include "qci/sample.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>

//! Generalized lambda distribution in the FKML and RS parameterizations.
//!
//! FKML: Q(u) = l1 + ((u^l3 - 1)/l3 - ((1-u)^l4 - 1)/l4) / l2, with the
//!       logarithmic limit for |l3| or |l4| below 1e-8; requires l2 > 0.
//! RS:   Q(u) = l1 + (u^l3 - (1-u)^l4) / l2; valid when q(u) >= 0 on a
//!       512-point grid (l2 may be negative when l3, l4 < 0).
namespace qci {

enum class GldParameterization
{
  fkml,
  rs
};

std::string to_string(GldParameterization p);
GldParameterization parse_parameterization(const std::string& s);

struct GldParams
{
  double lambda1 = 0.0;
  double lambda2 = 1.0;
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  GldParameterization parameterization = GldParameterization::fkml;
};

bool gld_is_valid(const GldParams& p);
//! Throws ErrorCode::invalid_params when !gld_is_valid(p).
void gld_validate(const GldParams& p);

double gld_quantile(const GldParams& p, double u);
double gld_quantile_density(const GldParams& p, double u);
double gld_quantile_density_first(const GldParams& p, double u);
double gld_quantile_density_second(const GldParams& p, double u);
//! q(u)/q''(u); +infinity where q'' vanishes (e.g. the uniform members).
double gld_qor(const GldParams& p, double u);

//! (Q(0+), Q(1-)); infinite ends are +-infinity.
std::pair<double, double> gld_support(const GldParams& p);

//! u with Q(u) = x, found on (1e-12, 1 - 1e-12); 0/1 outside the support.
double gld_cdf(const GldParams& p, double x);
//! 1 / q(F(x)) inside the support, 0 outside.
double gld_pdf(const GldParams& p, double x);

//! sum_i log f(x_i); -infinity when a point is outside the support or the
//! parameters are invalid.
double gld_log_likelihood(const GldParams& p, const SortedSample& data);

struct GldFit
{
  GldParams params;
  double log_likelihood;
  bool converged;
  int iterations;
  std::size_t n;
};

//! Maximum-likelihood fit by multistart Nelder-Mead. Requires n >= 20;
//! constant data raises ErrorCode::degenerate_data.
GldFit fit_gld_mle(const SortedSample& data,
                   GldParameterization parameterization =
                     GldParameterization::fkml);
GldFit fit_gld_mle(std::span<const double> data,
                   GldParameterization parameterization =
                     GldParameterization::fkml);

} // namespace qci
