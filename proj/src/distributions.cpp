#include "qci/distributions.hpp"
#include "qci/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace qci {

namespace {

template<class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template<class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double pi = std::numbers::pi;
constexpr double e = std::numbers::e;

//! Q and its first three derivatives for the standard (location 0, scale 1)
//! member.
struct Derivs
{
  double Q;
  double q;
  double q1;
  double q2;
};

void check_u(double u)
{
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "u must lie in (0,1)");
}

// Normal chain used by the normal, lognormal and g-and-h families.
struct NormalChain
{
  double z, q, q1, q2;
};

NormalChain normal_chain(double u)
{
  const double z = std_normal_quantile(u);
  const double q = 1.0 / std_normal_pdf(z);
  return { z, q, z * q * q, q * q * q * (1.0 + 2.0 * z * z) };
}

// f'(x) = g(x) f(x) families: q' = -g q^2, q'' = (2g^2 - g') q^3.
Derivs from_score(double x, double f, double g, double g_prime)
{
  const double q = 1.0 / f;
  return { x, q, -g * q * q, (2.0 * g * g - g_prime) * q * q * q };
}

double gh_quantile(const GH& d, double u)
{
  const double z = std_normal_quantile(u);
  const double tail = std::exp(0.5 * d.h * z * z);
  if (d.g == 0.0)
    return z * tail;
  return std::expm1(d.g * z) / d.g * tail;
}

// z-derivatives of Q(z) = A(z) T(z), A = (e^{gz} - 1)/g, T = e^{hz^2/2}.
struct GhZ
{
  double q1, q2, q3;
};

GhZ gh_z_derivs(const GH& d, double z)
{
  const double t = std::exp(0.5 * d.h * z * z);
  const double egz = std::exp(d.g * z);
  const double a = d.g == 0.0 ? z : std::expm1(d.g * z) / d.g;
  const double a1 = egz, a2 = d.g * egz, a3 = d.g * d.g * egz;
  const double t1 = d.h * z * t;
  const double t2 = (d.h + d.h * d.h * z * z) * t;
  const double t3 = (3.0 * d.h * d.h * z + d.h * d.h * d.h * z * z * z) * t;
  return { a1 * t + a * t1,
           a2 * t + 2.0 * a1 * t1 + a * t2,
           a3 * t + 3.0 * a2 * t1 + 3.0 * a1 * t2 + a * t3 };
}

double gh_quantile_density(const GH& d, double u)
{
  const double z = std_normal_quantile(u);
  return gh_z_derivs(d, z).q1 / std_normal_pdf(z);
}

Derivs gh_derivs(const GH& d, double u)
{
  // chain rule through z(u): z' = 1/phi, z'' = z/phi^2, z''' = (1+2z^2)/phi^3
  const double z = std_normal_quantile(u);
  const auto qz = gh_z_derivs(d, z);
  const double z1 = 1.0 / std_normal_pdf(z);
  const double z2 = z * z1 * z1;
  const double z3 = (1.0 + 2.0 * z * z) * z1 * z1 * z1;
  return { gh_quantile(d, u),
           qz.q1 * z1,
           qz.q2 * z1 * z1 + qz.q1 * z2,
           qz.q3 * z1 * z1 * z1 + 3.0 * qz.q2 * z1 * z2 + qz.q1 * z3 };
}

Derivs gld_derivs(const GldParams& p, double u)
{
  return { gld_quantile(p, u),
           gld_quantile_density(p, u),
           gld_quantile_density_first(p, u),
           gld_quantile_density_second(p, u) };
}

GldParams tukey_params(const TukeyLambda& t)
{
  return { 0.0, 1.0, t.lambda, t.lambda, GldParameterization::fkml };
}

Derivs standard_derivs(const Family& family, double u)
{
  return std::visit(
    overloaded{
      [&](const Uniform&) { return Derivs{ u, 1.0, 0.0, 0.0 }; },
      [&](const Normal&) {
        const auto n = normal_chain(u);
        return Derivs{ n.z, n.q, n.q1, n.q2 };
      },
      [&](const Lognormal&) {
        const auto n = normal_chain(u);
        const double Q = std::exp(n.z);
        const double q = Q * n.q;
        const double q1 = q * n.q + Q * n.q1;
        const double q2 = q1 * n.q + 2.0 * q * n.q1 + Q * n.q2;
        return Derivs{ Q, q, q1, q2 };
      },
      [&](const Cauchy&) {
        const double t = std::tan(pi * (u - 0.5));
        const double sec2 = 1.0 + t * t;
        return Derivs{ t,
                       pi * sec2,
                       2.0 * pi * pi * (t + t * t * t),
                       2.0 * pi * pi * pi * sec2 * (1.0 + 3.0 * t * t) };
      },
      [&](const Laplace&) {
        if (u < 0.5)
          return Derivs{ std::log(2.0 * u), 1.0 / u, -1.0 / (u * u),
                         2.0 / (u * u * u) };
        const double v = 1.0 - u;
        return Derivs{ -std::log(2.0 * v), 1.0 / v, 1.0 / (v * v),
                       2.0 / (v * v * v) };
      },
      [&](const Logistic&) {
        const double v = 1.0 - u;
        return Derivs{ std::log(u) - std::log1p(-u),
                       1.0 / (u * v),
                       (2.0 * u - 1.0) / (u * u * v * v),
                       2.0 * (u * u * u + v * v * v) / (u * u * u * v * v * v) };
      },
      [&](const Exponential&) {
        const double v = 1.0 - u;
        return Derivs{ -std::log1p(-u), 1.0 / v, 1.0 / (v * v),
                       2.0 / (v * v * v) };
      },
      [&](const ParetoII& d) {
        const double lv = std::log1p(-u), r = 1.0 / d.a;
        return Derivs{ std::expm1(-r * lv),
                       r * std::exp((-r - 1.0) * lv),
                       r * (r + 1.0) * std::exp((-r - 2.0) * lv),
                       r * (r + 1.0) * (r + 2.0) * std::exp((-r - 3.0) * lv) };
      },
      [&](const Gamma& d) {
        const double a = d.alpha;
        const double x = gamma_quantile(u, a);
        const double f = std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
        return from_score(x, f, (a - 1.0) / x - 1.0, -(a - 1.0) / (x * x));
      },
      [&](const Weibull& d) {
        const double b = d.beta;
        const double x = std::pow(-std::log1p(-u), 1.0 / b);
        const double f = b * std::pow(x, b - 1.0) * (1.0 - u);
        const double g = (b - 1.0) / x - b * std::pow(x, b - 1.0);
        const double g1 =
          -(b - 1.0) / (x * x) - b * (b - 1.0) * std::pow(x, b - 2.0);
        return from_score(x, f, g, g1);
      },
      [&](const TukeyLambda& d) { return gld_derivs(tukey_params(d), u); },
      [&](const BimodalConstantQor&) {
        if (u < 0.5) {
          const double t = std::exp(2.0 * u);
          return Derivs{ t - e, 2.0 * t, 4.0 * t, 8.0 * t };
        }
        const double t = std::exp(2.0 - 2.0 * u);
        return Derivs{ e - t, 2.0 * t, -4.0 * t, 8.0 * t };
      },
      [&](const GH& d) { return gh_derivs(d, u); },
      [&](const GldFkml& d) { return gld_derivs(d.params, u); },
      [&](const GldRs& d) { return gld_derivs(d.params, u); },
    },
    family);
}

// Cheaper path for quantile() alone (sampling calls it n times).
double standard_quantile(const Family& family, double u)
{
  return std::visit(
    overloaded{
      [&](const Cauchy&) { return std::tan(pi * (u - 0.5)); },
      [&](const Normal&) { return std_normal_quantile(u); },
      [&](const Lognormal&) { return std::exp(std_normal_quantile(u)); },
      [&](const Gamma& d) { return gamma_quantile(u, d.alpha); },
      [&](const GH& d) { return gh_quantile(d, u); },
      [&](const TukeyLambda& d) { return gld_quantile(tukey_params(d), u); },
      [&](const GldFkml& d) { return gld_quantile(d.params, u); },
      [&](const GldRs& d) { return gld_quantile(d.params, u); },
      [&](const auto&) { return standard_derivs(family, u).Q; },
    },
    family);
}

void validate(const DistributionModel& m)
{
  if (!(m.scale > 0.0) || !std::isfinite(m.scale) || !std::isfinite(m.location))
    fail(ErrorCode::invalid_params, "scale must be positive and finite");
  std::visit(
    overloaded{
      [](const ParetoII& d) {
        if (!(d.a > 0.0))
          fail(ErrorCode::invalid_params, "pareto2 needs a > 0");
      },
      [](const Gamma& d) {
        if (!(d.alpha > 0.0))
          fail(ErrorCode::invalid_params, "gamma needs alpha > 0");
      },
      [](const Weibull& d) {
        if (!(d.beta > 0.0))
          fail(ErrorCode::invalid_params, "weibull needs beta > 0");
      },
      [](const GH& d) {
        if (!(d.h >= 0.0) || !std::isfinite(d.g))
          fail(ErrorCode::invalid_params, "gh needs h >= 0");
      },
      [](const GldFkml& d) {
        if (d.params.parameterization != GldParameterization::fkml)
          fail(ErrorCode::invalid_params, "gld-fkml with RS parameters");
        gld_validate(d.params);
      },
      [](const GldRs& d) {
        if (d.params.parameterization != GldParameterization::rs)
          fail(ErrorCode::invalid_params, "gld-rs with FKML parameters");
        gld_validate(d.params);
      },
      [](const auto&) {},
    },
    m.family);
}

std::string num(double x)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

} // namespace

double quantile(const DistributionModel& model, double u)
{
  check_u(u);
  validate(model);
  return model.location + model.scale * standard_quantile(model.family, u);
}

double quantile_density(const DistributionModel& model, double u)
{
  check_u(u);
  validate(model);
  if (auto* gh = std::get_if<GH>(&model.family))
    return model.scale * gh_quantile_density(*gh, u);
  return model.scale * standard_derivs(model.family, u).q;
}

double quantile_density_first(const DistributionModel& model, double u)
{
  check_u(u);
  validate(model);
  return model.scale * standard_derivs(model.family, u).q1;
}

double quantile_density_second(const DistributionModel& model, double u)
{
  check_u(u);
  validate(model);
  return model.scale * standard_derivs(model.family, u).q2;
}

QorEvaluation qor(const DistributionModel& model, double u)
{
  check_u(u);
  validate(model);
  const Derivs d = standard_derivs(model.family, u);
  const double q = model.scale * d.q, q2 = model.scale * d.q2;
  // the scale cancels; dividing the standard-member values keeps the ratio
  // bit-identical across (location, scale)
  const double ratio = d.q2 == 0.0 ? inf : d.q / d.q2;
  return { u, ratio, q, q2 };
}

std::pair<double, double> support(const DistributionModel& model)
{
  validate(model);
  const auto [lo, hi] = std::visit(
    overloaded{
      [](const Uniform&) { return std::pair{ 0.0, 1.0 }; },
      [](const Lognormal&) { return std::pair{ 0.0, inf }; },
      [](const Exponential&) { return std::pair{ 0.0, inf }; },
      [](const ParetoII&) { return std::pair{ 0.0, inf }; },
      [](const Gamma&) { return std::pair{ 0.0, inf }; },
      [](const Weibull&) { return std::pair{ 0.0, inf }; },
      [](const BimodalConstantQor&) { return std::pair{ 1.0 - e, e - 1.0 }; },
      [](const TukeyLambda& d) { return gld_support(tukey_params(d)); },
      [](const GH& d) {
        if (d.h > 0.0 || d.g == 0.0)
          return std::pair{ -inf, inf };
        return d.g > 0.0 ? std::pair{ -1.0 / d.g, inf }
                         : std::pair{ -inf, -1.0 / d.g };
      },
      [](const GldFkml& d) { return gld_support(d.params); },
      [](const GldRs& d) { return gld_support(d.params); },
      [](const auto&) { return std::pair{ -inf, inf }; },
    },
    model.family);
  return { model.location + model.scale * lo, model.location + model.scale * hi };
}

std::vector<double> sample(const DistributionModel& model,
                           std::size_t n,
                           const RngStream& stream)
{
  if (n == 0)
    fail(ErrorCode::domain, "sample size must be positive");
  validate(model);
  std::vector<double> xs = rng_uniform(stream, n);
  for (double& x : xs)
    x = model.location + model.scale * standard_quantile(model.family, x);
  return xs;
}

namespace {

using Params = std::map<std::string, double>;

Params parse_params(const std::string& text, const std::string& spec)
{
  Params out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::parse,
           "family '" + spec + "': expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    double v = 0.0;
    const auto res = std::from_chars(val.data(), val.data() + val.size(), v);
    if (res.ec != std::errc() || res.ptr != val.data() + val.size())
      fail(ErrorCode::parse,
           "family '" + spec + "': '" + val + "' is not a number");
    out[key] = v;
  }
  return out;
}

double take(Params& p, const std::string& key, double fallback)
{
  const auto it = p.find(key);
  if (it == p.end())
    return fallback;
  const double v = it->second;
  p.erase(it);
  return v;
}

} // namespace

std::string family_catalog()
{
  return "uniform, normal, lognormal, cauchy, laplace, logistic, exponential, "
         "pareto2:a=, gamma:alpha=, weibull:beta=, tukey:lambda=, bimodal, "
         "gh:g=,h=, gld-fkml:l1=,l2=,l3=,l4=, gld-rs:l1=,l2=,l3=,l4= "
         "(all accept loc= and scale=)";
}

DistributionModel parse_family(const std::string& spec)
{
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  Params p = parse_params(
    colon == std::string::npos ? std::string() : spec.substr(colon + 1), spec);

  DistributionModel m;
  m.location = take(p, "loc", 0.0);
  m.scale = take(p, "scale", 1.0);
  auto gld = [&](GldParameterization param) {
    return GldParams{ take(p, "l1", 0.0), take(p, "l2", 1.0),
                      take(p, "l3", 0.0), take(p, "l4", 0.0), param };
  };

  if (name == "uniform")
    m.family = Uniform{};
  else if (name == "normal")
    m.family = Normal{};
  else if (name == "lognormal" || name == "ln")
    m.family = Lognormal{};
  else if (name == "cauchy")
    m.family = Cauchy{};
  else if (name == "laplace")
    m.family = Laplace{};
  else if (name == "logistic")
    m.family = Logistic{};
  else if (name == "exponential" || name == "exp")
    m.family = Exponential{};
  else if (name == "pareto2" || name == "pareto")
    m.family = ParetoII{ take(p, "a", 1.0) };
  else if (name == "gamma")
    m.family = Gamma{ take(p, "alpha", 1.0) };
  else if (name == "weibull")
    m.family = Weibull{ take(p, "beta", 1.0) };
  else if (name == "tukey")
    m.family = TukeyLambda{ take(p, "lambda", 0.0) };
  else if (name == "bimodal")
    m.family = BimodalConstantQor{};
  else if (name == "gh") {
    const double g = take(p, "g", 0.0);
    m.family = GH{ g, take(p, "h", 0.0) };
  } else if (name == "gld-fkml" || name == "gld")
    m.family = GldFkml{ gld(GldParameterization::fkml) };
  else if (name == "gld-rs")
    m.family = GldRs{ gld(GldParameterization::rs) };
  else
    fail(ErrorCode::unknown_family,
         "unknown family '" + name + "'; known families: " + family_catalog());

  if (!p.empty())
    fail(ErrorCode::parse, "family '" + spec + "': unexpected parameter '" +
                             p.begin()->first + "'");
  validate(m);
  return m;
}

std::string to_string(const DistributionModel& m)
{
  std::string base = std::visit(
    overloaded{
      [](const Uniform&) { return std::string("uniform"); },
      [](const Normal&) { return std::string("normal"); },
      [](const Lognormal&) { return std::string("lognormal"); },
      [](const Cauchy&) { return std::string("cauchy"); },
      [](const Laplace&) { return std::string("laplace"); },
      [](const Logistic&) { return std::string("logistic"); },
      [](const Exponential&) { return std::string("exponential"); },
      [](const ParetoII& d) { return "pareto2:a=" + num(d.a); },
      [](const Gamma& d) { return "gamma:alpha=" + num(d.alpha); },
      [](const Weibull& d) { return "weibull:beta=" + num(d.beta); },
      [](const TukeyLambda& d) { return "tukey:lambda=" + num(d.lambda); },
      [](const BimodalConstantQor&) { return std::string("bimodal"); },
      [](const GH& d) { return "gh:g=" + num(d.g) + ",h=" + num(d.h); },
      [](const GldFkml& d) {
        return "gld-fkml:l1=" + num(d.params.lambda1) + ",l2=" +
               num(d.params.lambda2) + ",l3=" + num(d.params.lambda3) +
               ",l4=" + num(d.params.lambda4);
      },
      [](const GldRs& d) {
        return "gld-rs:l1=" + num(d.params.lambda1) + ",l2=" +
               num(d.params.lambda2) + ",l3=" + num(d.params.lambda3) +
               ",l4=" + num(d.params.lambda4);
      },
    },
    m.family);
  if (m.location != 0.0 || m.scale != 1.0) {
    base += base.find(':') == std::string::npos ? ":" : ",";
    base += "loc=" + num(m.location) + ",scale=" + num(m.scale);
  }
  return base;
}

} // namespace qci
