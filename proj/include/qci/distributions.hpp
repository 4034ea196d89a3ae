#pragma once

#include "qci/gld.hpp"
#include "qci/numerics.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qci {

// Families. Shape parameters live on the family; location and scale on
// DistributionModel.
struct Uniform {};
struct Normal {};
struct Lognormal {};
struct Cauchy {};
struct Laplace {};
struct Logistic {};
struct Exponential {};
struct ParetoII { double a = 1.0; };
struct Gamma { double alpha = 1.0; };
struct Weibull { double beta = 1.0; };
struct TukeyLambda { double lambda = 0.0; };
//! f(x) = 1/(2(e - |x|)) on |x| < e - 1; QOR is identically 1/4.
struct BimodalConstantQor {};
//! Tukey g-and-h: Q(u) = (exp(g z) - 1)/g * exp(h z^2 / 2), z = Phi^{-1}(u).
struct GH { double g = 0.0; double h = 0.0; };
struct GldFkml { GldParams params; };
struct GldRs { GldParams params; };

using Family = std::variant<Uniform,
                            Normal,
                            Lognormal,
                            Cauchy,
                            Laplace,
                            Logistic,
                            Exponential,
                            ParetoII,
                            Gamma,
                            Weibull,
                            TukeyLambda,
                            BimodalConstantQor,
                            GH,
                            GldFkml,
                            GldRs>;

struct DistributionModel
{
  Family family;
  double location = 0.0;
  double scale = 1.0;
};

struct QorEvaluation
{
  double u;
  double qor; //!< +infinity exactly when q_second == 0
  double q;
  double q_second;
};

//! Parses `name[:key=value,...]`, e.g. `pareto2:a=1`, `gamma:alpha=2`,
//! `gld-fkml:l1=0,l2=1,l3=0.2,l4=0.2`, `gh:g=0.2,h=0.2`, `normal:loc=1,scale=2`.
//! Throws ErrorCode::unknown_family with the catalog listing.
DistributionModel parse_family(const std::string& spec);
//! Canonical spelling accepted by parse_family.
std::string to_string(const DistributionModel& model);
std::string family_catalog();

double quantile(const DistributionModel& model, double u);
double quantile_density(const DistributionModel& model, double u);
double quantile_density_first(const DistributionModel& model, double u);
double quantile_density_second(const DistributionModel& model, double u);
QorEvaluation qor(const DistributionModel& model, double u);

std::pair<double, double> support(const DistributionModel& model);

std::vector<double> sample(const DistributionModel& model,
                           std::size_t n,
                           const RngStream& stream);

} // namespace qci
