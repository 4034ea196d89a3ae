#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

//! Special functions, root finding, derivative-free minimization and
//! reproducible uniform streams.
namespace qci {

// ---- special functions ------------------------------------------------------

double std_normal_pdf(double z);
double std_normal_cdf(double z);
//! Inverse of std_normal_cdf; throws ErrorCode::domain unless 0 < p < 1.
double std_normal_quantile(double p);

//! I_x(a, b), the Beta(a, b) distribution function.
double regularized_incomplete_beta(double x, double a, double b);
double beta_quantile(double p, double a, double b);

//! P(shape, x), the Gamma(shape, 1) distribution function.
double regularized_incomplete_gamma(double x, double shape);
double gamma_quantile(double p, double shape);

// ---- root finding -----------------------------------------------------------

struct RootBracket
{
  double lo;
  double hi;
  double f_lo;
  double f_hi;

  //! Evaluates f at both ends; throws ErrorCode::invalid_bracket when the
  //! signs agree or lo >= hi.
  static RootBracket make(const std::function<double(double)>& f,
                          double lo,
                          double hi);
};

//! Brent's method (inverse quadratic interpolation guarded by bisection).
double brent_root(const std::function<double(double)>& f,
                  const RootBracket& bracket,
                  double tol = 1e-12);

// ---- Nelder-Mead ------------------------------------------------------------

struct NelderMeadOptions
{
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double tolerance = 1e-8;
  int max_iterations = 2000;
  //! per-coordinate initial simplex offsets; empty means 5% of |x| (or
  //! 0.00025 for zero coordinates)
  std::vector<double> initial_step{};
};

struct NelderMeadResult
{
  std::vector<double> argmin;
  double value;
  bool converged;
  int iterations;
  int evaluations;
};

using Objective = std::function<double(std::span<const double>)>;

//! Minimizes `objective`. Non-finite values (including NaN) rank worse than
//! every finite value, so an infinite penalty keeps the search out of a
//! region without a constrained method.
NelderMeadResult nelder_mead(const Objective& objective,
                             std::vector<double> start,
                             const NelderMeadOptions& options = {});

// ---- random streams ---------------------------------------------------------

struct RngStream
{
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
};

//! Uniforms strictly inside (0, 1). Identical (seed, stream_index) give
//! identical sequences on every platform.
std::vector<double> rng_uniform(const RngStream& stream, std::size_t count);

} // namespace qci
