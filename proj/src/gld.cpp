#include "qci/gld.hpp"
#include "qci/errors.hpp"
#include "qci/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace qci {

namespace {

constexpr double log_limit_threshold = 1e-8;
constexpr double cdf_eps = 1e-12;
constexpr int rs_grid_points = 512;
constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double screening_tolerance = 1e-4;
constexpr int max_polish_passes = 8;
constexpr double polish_gain = 1e-6;

bool is_fkml(const GldParams& p)
{
  return p.parameterization == GldParameterization::fkml;
}

// (u^lambda - 1)/lambda given log u, continuous through lambda = 0
double box_cox(double log_u, double lambda)
{
  if (std::fabs(lambda) < log_limit_threshold)
    return log_u;
  return std::expm1(lambda * log_u) / lambda;
}

// Q, q evaluated together from shared logs; used by the hot inversion loop.
struct QuantilePair
{
  double Q;
  double q;
  double dq; //!< q'
};

QuantilePair quantile_pair(const GldParams& p, double u)
{
  const double lu = std::log(u), lv = std::log1p(-u);
  const double a = std::exp((p.lambda3 - 1.0) * lu);
  const double b = std::exp((p.lambda4 - 1.0) * lv);
  if (is_fkml(p)) {
    // u^l = a u reuses the power already taken; expm1 only where the
    // subtraction would cancel
    auto bc = [](double log_w, double w, double pw, double lambda) {
      return std::fabs(lambda) > 1e-3 ? (pw * w - 1.0) / lambda
                                      : box_cox(log_w, lambda);
    };
    const double Q = p.lambda1 + (bc(lu, u, a, p.lambda3) -
                                  bc(lv, 1.0 - u, b, p.lambda4)) /
                                   p.lambda2;
    const double dq =
      ((p.lambda3 - 1.0) * a / u - (p.lambda4 - 1.0) * b / (1.0 - u)) /
      p.lambda2;
    return { Q, (a + b) / p.lambda2, dq };
  }
  const double Q = p.lambda1 + (a * u - b * (1.0 - u)) / p.lambda2;
  const double dq = (p.lambda3 * (p.lambda3 - 1.0) * a / u -
                     p.lambda4 * (p.lambda4 - 1.0) * b / (1.0 - u)) /
                    p.lambda2;
  return { Q, (p.lambda3 * a + p.lambda4 * b) / p.lambda2, dq };
}

double rs_density_raw(const GldParams& p, double u)
{
  return (p.lambda3 * std::pow(u, p.lambda3 - 1.0) +
          p.lambda4 * std::pow(1.0 - u, p.lambda4 - 1.0)) /
         p.lambda2;
}

void check_u(double u)
{
  if (!(u > 0.0 && u < 1.0))
    fail(ErrorCode::domain, "GLD: u must lie in (0,1)");
}

} // namespace

std::string to_string(GldParameterization p)
{
  return p == GldParameterization::fkml ? "fkml" : "rs";
}

GldParameterization parse_parameterization(const std::string& s)
{
  if (s == "fkml" || s == "fmkl" || s == "FKML" || s == "FMKL")
    return GldParameterization::fkml;
  if (s == "rs" || s == "RS")
    return GldParameterization::rs;
  fail(ErrorCode::parse, "unknown GLD parameterization '" + s +
                           "' (expected fkml or rs)");
}

bool gld_is_valid(const GldParams& p)
{
  if (!std::isfinite(p.lambda1) || !std::isfinite(p.lambda2) ||
      !std::isfinite(p.lambda3) || !std::isfinite(p.lambda4))
    return false;
  if (is_fkml(p))
    return p.lambda2 > 0.0;
  if (p.lambda2 == 0.0)
    return false;
  for (int k = 0; k < rs_grid_points; ++k) {
    const double u = (k + 0.5) / rs_grid_points;
    if (!(rs_density_raw(p, u) >= 0.0))
      return false;
  }
  return true;
}

void gld_validate(const GldParams& p)
{
  if (!gld_is_valid(p))
    fail(ErrorCode::invalid_params,
         "invalid " + to_string(p.parameterization) + " GLD parameters");
}

double gld_quantile(const GldParams& p, double u)
{
  check_u(u);
  gld_validate(p);
  return quantile_pair(p, u).Q;
}

double gld_quantile_density(const GldParams& p, double u)
{
  check_u(u);
  gld_validate(p);
  return quantile_pair(p, u).q;
}

double gld_quantile_density_first(const GldParams& p, double u)
{
  check_u(u);
  gld_validate(p);
  const double lu = std::log(u), lv = std::log1p(-u);
  const double c3 = p.lambda3 - 1.0, c4 = p.lambda4 - 1.0;
  double t3 = c3 * std::exp((p.lambda3 - 2.0) * lu);
  double t4 = c4 * std::exp((p.lambda4 - 2.0) * lv);
  if (!is_fkml(p)) {
    t3 *= p.lambda3;
    t4 *= p.lambda4;
  }
  return (t3 - t4) / p.lambda2;
}

double gld_quantile_density_second(const GldParams& p, double u)
{
  check_u(u);
  gld_validate(p);
  const double lu = std::log(u), lv = std::log1p(-u);
  double c3 = (p.lambda3 - 1.0) * (p.lambda3 - 2.0);
  double c4 = (p.lambda4 - 1.0) * (p.lambda4 - 2.0);
  if (!is_fkml(p)) {
    c3 *= p.lambda3;
    c4 *= p.lambda4;
  }
  const double t3 = c3 == 0.0 ? 0.0 : c3 * std::exp((p.lambda3 - 3.0) * lu);
  const double t4 = c4 == 0.0 ? 0.0 : c4 * std::exp((p.lambda4 - 3.0) * lv);
  return (t3 + t4) / p.lambda2;
}

double gld_qor(const GldParams& p, double u)
{
  const double q2 = gld_quantile_density_second(p, u);
  if (q2 == 0.0)
    return inf;
  return gld_quantile_density(p, u) / q2;
}

std::pair<double, double> gld_support(const GldParams& p)
{
  gld_validate(p);
  double lo = -inf, hi = inf;
  if (is_fkml(p)) {
    if (p.lambda3 > 0.0)
      lo = p.lambda1 - 1.0 / (p.lambda2 * p.lambda3);
    if (p.lambda4 > 0.0)
      hi = p.lambda1 + 1.0 / (p.lambda2 * p.lambda4);
    return { lo, hi };
  }
  // RS: Q(0+) = l1 + (0^l3 - 1)/l2, Q(1-) = l1 + (1 - 0^l4)/l2
  if (p.lambda3 > 0.0)
    lo = p.lambda1 - 1.0 / p.lambda2;
  else if (p.lambda3 == 0.0)
    lo = p.lambda1;
  if (p.lambda4 > 0.0)
    hi = p.lambda1 + 1.0 / p.lambda2;
  else if (p.lambda4 == 0.0)
    hi = p.lambda1;
  return { lo, hi };
}

double gld_cdf(const GldParams& p, double x)
{
  const auto [lo, hi] = gld_support(p);
  if (x <= lo)
    return 0.0;
  if (x >= hi)
    return 1.0;
  auto f = [&](double u) { return quantile_pair(p, u).Q - x; };
  const double f_lo = f(cdf_eps), f_hi = f(1.0 - cdf_eps);
  if (f_lo >= 0.0)
    return cdf_eps;
  if (f_hi <= 0.0)
    return 1.0 - cdf_eps;
  return brent_root(f, { cdf_eps, 1.0 - cdf_eps, f_lo, f_hi }, 1e-15);
}

double gld_pdf(const GldParams& p, double x)
{
  const auto [lo, hi] = gld_support(p);
  if (x < lo || x > hi)
    return 0.0;
  const double u = gld_cdf(p, x);
  if (u <= 0.0 || u >= 1.0)
    return 0.0;
  const double q = quantile_pair(p, u).q;
  return q > 0.0 ? 1.0 / q : 0.0;
}

namespace {

// Inverts Q at every (ascending) data point with a bracketed Newton
// iteration. The bracket starts at the previous point's solution; the
// initial guess comes from `guess` when given (the solutions of the last
// call, which the optimizer keeps close), and is updated in place.
// Returns the sum of log q(u_i), or +infinity if a point is outside the
// support.
double sum_log_quantile_density(const GldParams& p,
                                std::span<const double> xs,
                                double support_lo,
                                double support_hi,
                                std::span<double> guess = {})
{
  const QuantilePair at_lo = quantile_pair(p, cdf_eps);
  const QuantilePair at_hi = quantile_pair(p, 1.0 - cdf_eps);
  const double n = static_cast<double>(xs.size());
  double prev_u = cdf_eps;
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    if (x < support_lo || x > support_hi)
      return inf;
    double u;
    double q;
    double log_q;
    if (x <= at_lo.Q) {
      u = cdf_eps;
      q = at_lo.q;
      log_q = std::log(q);
    } else if (x >= at_hi.Q) {
      u = 1.0 - cdf_eps;
      q = at_hi.q;
      log_q = std::log(q);
    } else {
      double a = prev_u, b = 1.0 - cdf_eps;
      u = guess.empty() ? (static_cast<double>(i) + 0.5) / n : guess[i];
      if (!(u > a && u < b))
        u = std::clamp((static_cast<double>(i) + 0.5) / n, a, b);
      if (u <= a || u >= b)
        u = 0.5 * (a + b);
      QuantilePair qp{};
      log_q = 0.0;
      for (int it = 0; it < 200; ++it) {
        qp = quantile_pair(p, u);
        log_q = std::log(qp.q);
        const double f = qp.Q - x;
        if (f == 0.0)
          break;
        if (f > 0.0)
          b = u;
        else
          a = u;
        double next = u - f / qp.q;
        const bool newton = next > a && next < b;
        if (!newton)
          next = 0.5 * (a + b);
        // tolerances relative to the distance from the nearer end, so tail
        // points are resolved as finely as central ones
        const double scale = std::min(next, 1.0 - next);
        const double step = next - u;
        if (newton && std::fabs(step) <= 1e-5 * scale) {
          // the step leaves an error of order step^2 in u; carry log q to
          // the new point to first order instead of evaluating again
          log_q += step * qp.dq / qp.q;
          u = next;
          break;
        }
        if ((b - a) <= 1e-10 * scale)
          break;
        u = next;
      }
      q = qp.q;
    }
    if (!(q > 0.0) || !std::isfinite(q))
      return inf;
    total += log_q;
    prev_u = u;
    if (!guess.empty())
      guess[i] = u;
  }
  return total;
}

} // namespace

double gld_log_likelihood(const GldParams& p, const SortedSample& data)
{
  if (!gld_is_valid(p))
    return -inf;
  const auto [lo, hi] = gld_support(p);
  const double s = sum_log_quantile_density(p, data.values(), lo, hi);
  return std::isfinite(s) ? -s : -inf;
}

namespace {

struct Start
{
  double lambda1, lambda2, lambda3, lambda4;
};

// Member with shapes (s3, s4) whose median and interquartile range match the
// sample, widened until its support covers the data with some room.
Start make_start(const SortedSample& data,
                 GldParameterization param,
                 double s3,
                 double s4,
                 double median,
                 double iqr)
{
  const double base =
    param == GldParameterization::rs && s3 < 0.0 ? -1.0 : 1.0;
  const GldParams unit{ 0.0, base, s3, s4, param };
  const double q25 = gld_quantile(unit, 0.25), q50 = gld_quantile(unit, 0.5),
               q75 = gld_quantile(unit, 0.75);
  // the sample is k * (unit member) shifted to the median
  double k = iqr / (q75 - q25);
  const auto [lo, hi] = gld_support(unit);
  if (std::isfinite(lo))
    k = std::max(k, 1.1 * (median - data.min()) / (q50 - lo));
  if (std::isfinite(hi))
    k = std::max(k, 1.1 * (data.max() - median) / (hi - q50));
  return { median - k * q50, base / k, s3, s4 };
}

// Shapes whose percentile ratios (left over right half of the 10-90% range,
// and IQR over that range) match the sample's.
std::pair<double, double> percentile_shapes(const SortedSample& data,
                                            GldParameterization param)
{
  const auto sq = [&](double u) { return sample_quantile_type8(data, u); };
  const double range = sq(0.9) - sq(0.1);
  if (!(range > 0.0))
    return { 0.1, 0.1 };
  const double left = sq(0.5) - sq(0.1), right = sq(0.9) - sq(0.5);
  const double balance = std::log(std::max(left, 1e-12 * range) /
                                  std::max(right, 1e-12 * range));
  const double weight = (sq(0.75) - sq(0.25)) / range;

  const Objective mismatch = [&](std::span<const double> s) {
    const double base =
      param == GldParameterization::rs && s[0] < 0.0 ? -1.0 : 1.0;
    const GldParams unit{ 0.0, base, s[0], s[1], param };
    if (!gld_is_valid(unit) || std::fabs(s[0]) > 20.0 || std::fabs(s[1]) > 20.0)
      return inf;
    const double u10 = gld_quantile(unit, 0.1), u90 = gld_quantile(unit, 0.9);
    const double l = gld_quantile(unit, 0.5) - u10, r = u90 - gld_quantile(unit, 0.5);
    if (!(l > 0.0 && r > 0.0))
      return inf;
    const double b = std::log(l / r) - balance;
    const double w = (gld_quantile(unit, 0.75) - gld_quantile(unit, 0.25)) /
                       (u90 - u10) -
                     weight;
    return b * b + 25.0 * w * w;
  };
  std::vector<double> best{ 0.1, 0.1 };
  double best_value = mismatch(best);
  for (const auto& s : { std::vector<double>{ 0.1, 0.1 },
                         std::vector<double>{ 1.0, 0.1 },
                         std::vector<double>{ 0.1, 1.0 } }) {
    if (!std::isfinite(mismatch(s)))
      continue;
    NelderMeadOptions opt;
    opt.tolerance = 1e-10;
    opt.initial_step = { 0.2, 0.2 };
    const auto res = nelder_mead(mismatch, s, opt);
    if (res.value < best_value) {
      best = res.argmin;
      best_value = res.value;
    }
  }
  return { best[0], best[1] };
}

struct Candidate
{
  GldParams params;
  double loglik;
  bool converged;
  int iterations;
};

} // namespace

GldFit fit_gld_mle(std::span<const double> data, GldParameterization param)
{
  return fit_gld_mle(SortedSample(data), param);
}

GldFit fit_gld_mle(const SortedSample& data, GldParameterization param)
{
  if (data.size() < 20)
    fail(ErrorCode::too_few_observations,
         "GLD fit needs at least 20 observations (got " +
           std::to_string(data.size()) +
           "); four parameters are not identifiable below that");
  if (data.is_constant())
    fail(ErrorCode::degenerate_data, "GLD fit: all observations are equal");

  const double median = sample_quantile_type8(data, 0.5);
  double iqr =
    sample_quantile_type8(data, 0.75) - sample_quantile_type8(data, 0.25);
  if (!(iqr > 0.0))
    iqr = 1.349 * data.sd();
  if (!(iqr > 0.0))
    iqr = data.max() - data.min();

  const bool fkml = param == GldParameterization::fkml;
  auto to_params = [&](std::span<const double> t) {
    return GldParams{ t[0], fkml ? std::exp(t[1]) : t[1], t[2], t[3], param };
  };
  const auto xs = data.values();
  std::vector<double> guess(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    guess[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(xs.size());
  const Objective objective = [&](std::span<const double> t) {
    const GldParams p = to_params(t);
    if (!(p.lambda2 != 0.0) || !gld_is_valid(p))
      return inf;
    const auto [lo, hi] = gld_support(p);
    const double s = sum_log_quantile_density(p, xs, lo, hi, guess);
    return std::isfinite(s) ? s : inf;
  };

  // screening runs stop at a coarse tolerance; only the winner is
  // refined to the default one
  auto run = [&](const std::vector<double>& theta,
                 double lambda2,
                 double tolerance) {
    NelderMeadOptions opt;
    opt.tolerance = tolerance;
    opt.initial_step = { 0.1 * iqr,
                         fkml ? 0.25 : 0.25 * std::fabs(lambda2),
                         0.1,
                         0.1 };
    const auto res = nelder_mead(objective, theta, opt);
    return Candidate{ to_params(res.argmin),
                      -res.value,
                      res.converged,
                      res.iterations };
  };

  // symmetric shapes from heavy- to short-tailed, plus an asymmetric shape
  // matched to the sample's percentiles
  const auto [p3, p4] = percentile_shapes(data, param);
  const std::array<std::pair<double, double>, 5> shapes{
    { { -0.2, -0.2 }, { 0.1, 0.1 }, { 0.5, 0.5 }, { 1.5, 1.5 }, { p3, p4 } }
  };
  std::vector<Candidate> candidates;
  int total_iterations = 0;
  for (const auto& [s3, s4] : shapes) {
    const Start st = make_start(data, param, s3, s4, median, iqr);
    const std::vector<double> theta{
      st.lambda1, fkml ? std::log(st.lambda2) : st.lambda2, st.lambda3,
      st.lambda4
    };
    if (!std::isfinite(objective(theta)))
      continue;
    candidates.push_back(run(theta, st.lambda2, screening_tolerance));
    total_iterations += candidates.back().iterations;
  }
  if (candidates.empty())
    fail(ErrorCode::fit_failure, "GLD fit: no feasible starting point");

  auto score_better = [](const Candidate& a, const Candidate& b) {
    const double tol = 1e-9 * (1.0 + std::fabs(b.loglik));
    if (a.loglik > b.loglik + tol)
      return true;
    if (a.loglik < b.loglik - tol)
      return false;
    return std::fabs(a.params.lambda3) + std::fabs(a.params.lambda4) <
           std::fabs(b.params.lambda3) + std::fabs(b.params.lambda4);
  };
  Candidate best = candidates.front();
  for (std::size_t k = 1; k < candidates.size(); ++k)
    if (score_better(candidates[k], best))
      best = candidates[k];

  // refine the winner; a fresh simplex escapes early collapse, so restart
  // until a pass stops improving the likelihood
  const NelderMeadOptions defaults;
  for (int pass = 0; pass < max_polish_passes; ++pass) {
    const std::vector<double> theta{ best.params.lambda1,
                                     fkml ? std::log(best.params.lambda2)
                                          : best.params.lambda2,
                                     best.params.lambda3,
                                     best.params.lambda4 };
    Candidate polished = run(theta, best.params.lambda2, defaults.tolerance);
    total_iterations += polished.iterations;
    const double gain = polished.loglik - best.loglik;
    if (gain >= 0.0)
      best = polished;
    else
      best.converged = polished.converged;
    if (pass >= 1 && !(gain > polish_gain))
      break;
  }

  if (!std::isfinite(best.loglik))
    fail(ErrorCode::fit_failure, "GLD fit: likelihood is not finite");
  return { best.params, best.loglik, best.converged, total_iterations,
           data.size() };
}

} // namespace qci
