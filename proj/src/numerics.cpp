#include "qci/numerics.hpp"
#include "qci/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace qci {

namespace {

bool open_unit(double p)
{
  return p > 0.0 && p < 1.0;
}

std::string fmt_num(double x)
{
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

} // namespace

double std_normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double z)
{
  if (std::isnan(z))
    fail(ErrorCode::domain, "std_normal_cdf: z is NaN");
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_quantile(double p)
{
  if (!open_unit(p))
    fail(ErrorCode::domain,
         "std_normal_quantile: p must lie in (0,1), got " + fmt_num(p));
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double regularized_incomplete_beta(double x, double a, double b)
{
  if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0))
    fail(ErrorCode::domain,
         "regularized_incomplete_beta: need 0<=x<=1, a>0, b>0");
  return boost::math::ibeta(a, b, x);
}

double beta_quantile(double p, double a, double b)
{
  if (!open_unit(p) || !(a > 0.0) || !(b > 0.0))
    fail(ErrorCode::domain, "beta_quantile: need 0<p<1, a>0, b>0");
  return boost::math::ibeta_inv(a, b, p);
}

double regularized_incomplete_gamma(double x, double shape)
{
  if (!(x >= 0.0) || !(shape > 0.0))
    fail(ErrorCode::domain,
         "regularized_incomplete_gamma: need x>=0 and shape>0");
  if (std::isinf(x))
    return 1.0;
  return boost::math::gamma_p(shape, x);
}

double gamma_quantile(double p, double shape)
{
  if (!open_unit(p) || !(shape > 0.0))
    fail(ErrorCode::domain, "gamma_quantile: need 0<p<1 and shape>0");
  return boost::math::gamma_p_inv(shape, p);
}

RootBracket RootBracket::make(const std::function<double(double)>& f,
                              double lo,
                              double hi)
{
  if (!(lo < hi))
    fail(ErrorCode::invalid_bracket, "root bracket needs lo < hi");
  RootBracket br{ lo, hi, f(lo), f(hi) };
  if (std::isnan(br.f_lo) || std::isnan(br.f_hi) ||
      (br.f_lo > 0.0 && br.f_hi > 0.0) || (br.f_lo < 0.0 && br.f_hi < 0.0))
    fail(ErrorCode::invalid_bracket,
         "root bracket [" + fmt_num(lo) + ", " + fmt_num(hi) +
           "] does not change sign");
  return br;
}

double brent_root(const std::function<double(double)>& f,
                  const RootBracket& bracket,
                  double tol)
{
  double a = bracket.lo, b = bracket.hi;
  double fa = bracket.f_lo, fb = bracket.f_hi;
  if (!(a < b) || (fa > 0.0 && fb > 0.0) || (fa < 0.0 && fb < 0.0))
    fail(ErrorCode::invalid_bracket, "brent_root: invalid bracket");
  if (fa == 0.0)
    return a;
  if (fb == 0.0)
    return b;

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int iter = 0; iter < 500; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0)
      return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0)
        q = -q;
      p = std::fabs(p);
      const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      const double min2 = std::fabs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

namespace {

// Non-finite ranks after everything finite; among non-finite values the
// order is irrelevant.
bool better(double lhs, double rhs)
{
  const bool lf = std::isfinite(lhs), rf = std::isfinite(rhs);
  if (lf && rf)
    return lhs < rhs;
  return lf && !rf;
}

double sanitize(double v)
{
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

} // namespace

NelderMeadResult nelder_mead(const Objective& objective,
                             std::vector<double> start,
                             const NelderMeadOptions& opt)
{
  const std::size_t dim = start.size();
  if (dim == 0)
    fail(ErrorCode::domain, "nelder_mead: empty start vector");
  if (!opt.initial_step.empty() && opt.initial_step.size() != dim)
    fail(ErrorCode::domain, "nelder_mead: initial_step has wrong size");

  int evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    return sanitize(objective(std::span<const double>(x)));
  };

  std::vector<std::vector<double>> simplex(dim + 1, start);
  std::vector<double> values(dim + 1);
  for (std::size_t i = 0; i < dim; ++i) {
    double step = 0.0;
    if (!opt.initial_step.empty())
      step = opt.initial_step[i];
    else
      step = start[i] != 0.0 ? 0.05 * start[i] : 0.00025;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= dim; ++i)
    values[i] = eval(simplex[i]);
  if (!std::isfinite(values[0]))
    fail(ErrorCode::domain, "nelder_mead: objective not finite at start");

  std::vector<std::size_t> order(dim + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
      return better(values[i], values[j]);
    });
    std::vector<std::vector<double>> s2(dim + 1);
    std::vector<double> v2(dim + 1);
    for (std::size_t k = 0; k <= dim; ++k) {
      s2[k] = std::move(simplex[order[k]]);
      v2[k] = values[order[k]];
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  auto converged = [&] {
    if (!std::isfinite(values[dim]))
      return false;
    const double spread = values[dim] - values[0];
    if (spread > opt.tolerance * (1.0 + std::fabs(values[0])))
      return false;
    double diameter = 0.0, scale = 0.0;
    for (std::size_t k = 1; k <= dim; ++k)
      for (std::size_t c = 0; c < dim; ++c)
        diameter =
          std::max(diameter, std::fabs(simplex[k][c] - simplex[0][c]));
    for (std::size_t c = 0; c < dim; ++c)
      scale = std::max(scale, std::fabs(simplex[0][c]));
    return diameter <= opt.tolerance * (1.0 + scale);
  };

  auto along = [&](const std::vector<double>& centroid,
                   const std::vector<double>& from,
                   double t) {
    std::vector<double> x(dim);
    for (std::size_t c = 0; c < dim; ++c)
      x[c] = centroid[c] + t * (from[c] - centroid[c]);
    return x;
  };

  sort_simplex();
  int iter = 0;
  bool done = converged();
  while (!done && iter < opt.max_iterations) {
    ++iter;
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k)
      for (std::size_t c = 0; c < dim; ++c)
        centroid[c] += simplex[k][c];
    for (auto& c : centroid)
      c /= static_cast<double>(dim);

    auto xr = along(centroid, simplex[dim], -opt.reflection);
    const double fr = eval(xr);
    if (better(fr, values[0])) {
      auto xe = along(centroid, simplex[dim], -opt.reflection * opt.expansion);
      const double fe = eval(xe);
      if (better(fe, fr)) {
        simplex[dim] = std::move(xe);
        values[dim] = fe;
      } else {
        simplex[dim] = std::move(xr);
        values[dim] = fr;
      }
    } else if (better(fr, values[dim - 1])) {
      simplex[dim] = std::move(xr);
      values[dim] = fr;
    } else {
      bool shrink = false;
      if (better(fr, values[dim])) {
        auto xc =
          along(centroid, simplex[dim], -opt.reflection * opt.contraction);
        const double fc = eval(xc);
        if (!better(fr, fc)) {
          simplex[dim] = std::move(xc);
          values[dim] = fc;
        } else {
          shrink = true;
        }
      } else {
        auto xc = along(centroid, simplex[dim], opt.contraction);
        const double fc = eval(xc);
        if (better(fc, values[dim])) {
          simplex[dim] = std::move(xc);
          values[dim] = fc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (std::size_t k = 1; k <= dim; ++k) {
          simplex[k] = along(simplex[0], simplex[k], opt.shrink);
          values[k] = eval(simplex[k]);
        }
      }
    }
    sort_simplex();
    done = converged();
  }

  return { simplex[0], values[0], done, iter, evaluations };
}

std::vector<double> rng_uniform(const RngStream& stream, std::size_t count)
{
  // seed_seq and mt19937_64 are fully specified by the standard; the
  // double conversion below avoids the implementation-defined
  // uniform_real_distribution.
  std::seed_seq seq{
    static_cast<std::uint32_t>(stream.seed),
    static_cast<std::uint32_t>(stream.seed >> 32),
    static_cast<std::uint32_t>(stream.stream_index),
    static_cast<std::uint32_t>(stream.stream_index >> 32),
  };
  std::mt19937_64 gen(seq);
  std::vector<double> out(count);
  constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
  for (auto& u : out)
    u = (static_cast<double>(gen() >> 11) + 0.5) * scale;
  return out;
}

} // namespace qci
