#pragma once

// Finite-difference check of the closed-form QOR over the catalog. Shared by
// the distribution unit tests and the acceptance binary.

#include "oracles.hpp"
#include "qci/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace oracle {

//! Every family with a closed-form QOR, over shape grids where the family
//! has a shape parameter.
inline std::vector<std::string> qor_catalog()
{
  return {
    "normal",
    "lognormal",
    "cauchy",
    "laplace",
    "logistic",
    "exponential",
    "pareto2:a=0.5",
    "pareto2:a=1",
    "pareto2:a=2",
    "pareto2:a=5",
    "gamma:alpha=0.6",
    "gamma:alpha=1",
    "gamma:alpha=2",
    "gamma:alpha=5",
    "weibull:beta=0.5",
    "weibull:beta=1",
    "weibull:beta=2",
    "weibull:beta=3.5",
    "tukey:lambda=-0.5",
    "tukey:lambda=0",
    "tukey:lambda=0.14",
    "tukey:lambda=0.5",
    "tukey:lambda=2.5",
    "bimodal",
    "gld-fkml:l1=0,l2=1,l3=0.2,l4=0.2",
    "gld-fkml:l1=1,l2=2,l3=-0.1,l4=0.3",
    "gld-fkml:l1=0,l2=0.5,l3=1.5,l4=0.5",
    "gld-rs:l1=0,l2=1,l3=0.5,l4=0.2",
    "gld-rs:l1=0,l2=-1,l3=-0.1,l4=-0.2",
    "gld-rs:l1=0,l2=0.2,l3=0.13,l4=0.13",
  };
}

//! Points where q has a kink, so central differences straddle two branches.
inline bool qor_kink(const std::string& name, double u)
{
  return (name == "laplace" || name == "bimodal") && std::fabs(u - 0.5) < 1e-12;
}

struct QorOracleResult
{
  double closed_form;
  double fd2;            //!< q / second-order central difference, h = 1e-4
  double fd4;            //!< q / fourth-order central difference, h = 5e-4
  double rel2;
  double rel4;
  bool well_conditioned; //!< rounding in the fourth-order stencil below 1e-9
};

inline QorOracleResult qor_oracle(const std::string& name, double u)
{
  const auto model = qci::parse_family(name);
  const auto q = [&](double v) { return qci::quantile_density(model, v); };
  const double qu = q(u);
  QorOracleResult r{};
  r.closed_form = qci::qor(model, u).qor;
  double q2, q4, h4 = 5e-4;
  if (qor_kink(name, u)) {
    // q is smooth on [u, 1), so a one-sided stencil is valid there
    q2 = d2_right(q, u, 1e-4);
    q4 = d2_right(q, u, 1e-5);
    h4 = 1e-5;
  } else {
    q2 = d2(q, u, 1e-4);
    q4 = d2_4(q, u, h4);
  }
  r.fd2 = qu / q2;
  r.fd4 = qu / q4;
  r.rel2 = std::fabs(r.fd2 - r.closed_form) / std::fabs(r.closed_form);
  r.rel4 = std::fabs(r.fd4 - r.closed_form) / std::fabs(r.closed_form);
  // the stencil weights sum to 64/12 in absolute value
  const double rounding = 64.0 / 12.0 * std::numeric_limits<double>::epsilon() *
                          std::fabs(qu) / (h4 * h4 * std::fabs(q4));
  r.well_conditioned = !qor_kink(name, u) && rounding < 1e-9;
  return r;
}

} // namespace oracle
