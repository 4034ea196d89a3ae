#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../oracles.hpp"
#include "qci/distributions.hpp"
#include "qci/errors.hpp"
#include "qci/intervals.hpp"

#include <cmath>
#include <numbers>

using namespace qci;
using doctest::Approx;

namespace {

const double z975 = 1.959963984540054;

SortedSample draw(const std::string& family, std::size_t n, std::uint64_t seed)
{
  return SortedSample(sample(parse_family(family), n, { seed, 0 }));
}

ErrorCode code_of(const std::function<void()>& f)
{
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::domain;
}

const std::vector<std::string> tau_methods{ "A:cauchy", "A:lognormal", "B", "C",
                                            "C:rs",     "E",           "F",
                                            "G",        "G:0.1",       "H" };

} // namespace

TEST_CASE("normal interval arithmetic")
{
  const auto [lo, hi] = normal_interval(0.0, 1.0, 100, 0.95);
  CHECK(hi == Approx(0.19600).epsilon(1e-4));
  CHECK(-lo == Approx(hi));
  CHECK(hi == Approx(z975 / 10.0).epsilon(1e-12));
  CHECK_THROWS_AS(normal_interval(0.0, 1.0, 100, 0.4), Error);
  CHECK_THROWS_AS(normal_interval(0.0, 1.0, 100, 1.0), Error);
}

TEST_CASE("method A")
{
  const auto data = draw("cauchy", 400, 3);
  const auto ci = ci_method_a(data, 0.5, 0.95, parse_family("cauchy"));
  CHECK(ci.method == "A:cauchy");
  CHECK(ci.estimate == sample_quantile_type8(data, 0.5));
  CHECK(ci.lower < ci.estimate);
  CHECK(ci.estimate < ci.upper);
  const BandwidthRule rule{ FixedFamilyQor{ parse_family("cauchy") } };
  const double b = optimal_bandwidth(rule, 0.5, 400);
  REQUIRE(ci.bandwidth_used.has_value());
  CHECK(*ci.bandwidth_used == b);
  const double tau = 0.5 * qdens_direct(data, 0.5, b).value;
  CHECK(ci.upper - ci.lower == Approx(2 * z975 * tau / 20.0).epsilon(1e-12));
  CHECK(ci.standardized_width == Approx(2 * z975 * tau).epsilon(1e-12));
  CHECK(ci.n == 400);

  // a lower-bounded representative family applies min{u, b}
  const auto exp_data = draw("exponential", 400, 4);
  const auto edge = ci_method_a(exp_data, 0.05, 0.95, parse_family("lognormal"));
  CHECK(*edge.bandwidth_used <= 0.05);

  CHECK(code_of([&] { ci_method_a(draw("normal", 29, 1), 0.5, 0.95, parse_family("normal")); }) ==
        ErrorCode::too_few_observations);
  MethodSpec spec = parse_method("A:normal");
  spec.min_n = 10;
  CHECK_NOTHROW(compute_ci(draw("normal", 29, 1), 0.5, 0.95, spec));
}

TEST_CASE("degenerate intervals on constant data")
{
  const SortedSample constant(std::vector<double>(50, 7.0));
  for (const std::string m : { "A:cauchy", "G", "E" }) {
    CAPTURE(m);
    const auto ci = compute_ci(constant, 0.5, 0.95, parse_method(m));
    CHECK(ci.degenerate);
    CHECK(ci.lower == 7.0);
    CHECK(ci.upper == 7.0);
    CHECK(ci.estimate == 7.0);
  }
  // E cannot fit constant data and falls back to A with the Cauchy QOR
  const auto e = compute_ci(constant, 0.5, 0.95, parse_method("E"));
  CHECK(e.fallback);
  CHECK(e.method.find("fallback") != std::string::npos);
  CHECK(code_of([&] { compute_ci(constant, 0.5, 0.95, parse_method("F")); }) ==
        ErrorCode::zero_density);
  CHECK(code_of([&] { compute_ci(constant, 0.5, 0.95, parse_method("H")); }) ==
        ErrorCode::zero_density);
  CHECK(code_of([&] { compute_ci(constant, 0.5, 0.95, parse_method("C")); }) ==
        ErrorCode::degenerate_data);
}

TEST_CASE("method B")
{
  // sum log(1 + x) = n gives a = 1
  const SortedSample data(std::vector<double>(40, std::numbers::e - 1.0));
  CHECK(pareto_qor(pareto_shape_mle(data), 0.5) == Approx(0.25 / 6).epsilon(1e-12));
  CHECK(pareto_qor(1.0, 0.5) == Approx(0.041667).epsilon(1e-5));

  std::vector<double> spread;
  for (int i = 0; i < 40; ++i)
    spread.push_back(std::expm1(0.5 + (i % 2)));
  const SortedSample s(spread);
  const auto ci = ci_method_b_pareto(s, 0.5, 0.95);
  const double b = std::min(
    0.5, std::pow(15.0, 0.2) * std::pow(0.25 / 6, 0.4) / std::pow(40.0, 0.2));
  CHECK(*ci.bandwidth_used == Approx(b).epsilon(1e-12));
  CHECK(ci.method == "B");

  for (double a : { 0.01, 0.5, 1.0, 10.0, 1e6 })
    for (double u : { 0.05, 0.5, 0.95 })
      CHECK(pareto_qor(a, u) < (1 - u) * (1 - u) / 2);

  CHECK(code_of([] {
          std::vector<double> neg(40, 1.0);
          neg[0] = -2.0;
          ci_method_b_pareto(SortedSample(neg), 0.5, 0.95);
        }) == ErrorCode::nonpositive_data);
  for (double bad : { -0.5, 0.0 })
    CHECK(code_of([bad] {
            std::vector<double> v(40, 1.0);
            v[7] = bad;
            ci_method_b_pareto(SortedSample(v), 0.5, 0.95);
          }) == ErrorCode::nonpositive_data);
}

TEST_CASE("method C on a large logistic-member sample")
{
  const auto u = rng_uniform({ 8, 0 }, 5000);
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::log(u[i] / (1 - u[i]));
  const SortedSample data(x);
  const auto ci = ci_method_c(data, 0.5, 0.95);
  CHECK(std::fabs(ci.estimate) < 0.1);
  const double tau = ci.standardized_width / (2 * z975);
  CHECK(tau == Approx(2.0).epsilon(0.1));
  CHECK(ci.method == "C:fkml");
  CHECK_FALSE(ci.bandwidth_used.has_value());
  CHECK(code_of([&] { ci_method_c(data, 1.0, 0.95); }) == ErrorCode::domain);
  CHECK(code_of([&] { ci_method_c(draw("normal", 19, 2), 0.5, 0.95); }) ==
        ErrorCode::too_few_observations);
}

TEST_CASE("method D beta calibration")
{
  const double lo = beta_quantile(0.025, 51, 50), hi = beta_quantile(0.975, 51, 50);
  CHECK(regularized_incomplete_beta(lo, 51, 50) == Approx(0.025).epsilon(1e-9));
  CHECK(regularized_incomplete_beta(hi, 51, 50) == Approx(0.975).epsilon(1e-9));

  const GldParams uniform{ 0, 1, 1, 1 };
  const auto [l, u] = beta_calibrated_interval(uniform, 100, 0.5, 0.95);
  CHECK(l == Approx(2 * lo - 1).epsilon(1e-12));
  CHECK(u == Approx(2 * hi - 1).epsilon(1e-12));

  for (std::size_t n : { 20, 57, 300 })
    for (double p : { 0.01, 0.3, 0.5, 0.99 }) {
      const auto [a, b] = beta_calibrated_interval(GldParams{ 0, 1, 0.1, -0.2 }, n, p, 0.9);
      CHECK(a < b);
    }

  // compute_ci uses the same construction on the fitted parameters
  const auto data = draw("exponential", 100, 5);
  GldFitCache cache(data);
  const auto ci = compute_ci(data, 0.5, 0.95, parse_method("D"), &cache);
  const auto& fit = cache.get(GldParameterization::fkml);
  const auto [fl, fu] = beta_calibrated_interval(fit.params, 100, 0.5, 0.95);
  CHECK(ci.lower == fl);
  CHECK(ci.upper == fu);
  CHECK(ci.estimate == gld_quantile(fit.params, 0.5));
  CHECK(ci.lower < ci.upper);
  CHECK(ci.standardized_width == Approx(10.0 * (fu - fl)).epsilon(1e-12));
  CHECK(code_of([&] { standard_error(data, 0.5, parse_method("D")); }) ==
        ErrorCode::incompatible_method);
}

TEST_CASE("level monotonicity")
{
  const auto data = draw("lognormal", 120, 6);
  for (const std::string m : { "A:cauchy", "B", "C", "D", "E", "F", "G", "H" }) {
    CAPTURE(m);
    GldFitCache cache(data);
    for (double u : { 0.1, 0.5, 0.9 }) {
      const auto narrow = compute_ci(data, u, 0.95, parse_method(m), &cache);
      const auto wide = compute_ci(data, u, 0.99, parse_method(m), &cache);
      CHECK(wide.lower < narrow.lower);
      CHECK(wide.upper > narrow.upper);
    }
  }
}

TEST_CASE("Eq 1 structure and centering")
{
  const auto data = draw("lognormal", 150, 7);
  GldFitCache cache(data);
  for (const auto& m : tau_methods) {
    CAPTURE(m);
    const auto spec = parse_method(m);
    for (double u : { 0.1, 0.3, 0.5, 0.8 }) {
      const auto se = standard_error(data, u, spec, &cache);
      const auto ci = compute_ci(data, u, 0.9, spec, &cache);
      const double z = std_normal_quantile(0.95);
      CHECK(ci.upper - ci.lower ==
            Approx(2 * z * se.tau / std::sqrt(150.0)).epsilon(1e-12));
      CHECK(ci.standardized_width == Approx(2 * z * se.tau).epsilon(1e-12));
      CHECK(0.5 * (ci.lower + ci.upper) == Approx(se.center).epsilon(1e-12));
      if (spec.kind != MethodKind::C) {
        CHECK(ci.estimate == sample_quantile_type8(data, u));
        CHECK(ci.lower <= ci.estimate);
        CHECK(ci.estimate <= ci.upper);
      }
    }
  }
}

TEST_CASE("method E")
{
  const auto data = draw("lognormal", 100, 8);
  const auto a = ci_method_e(data, 0.3, 0.95);
  const auto b = ci_method_e(data, 0.3, 0.95);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.bandwidth_used == b.bandwidth_used);
  CHECK_FALSE(a.fallback);

  // bandwidth from the fitted QOR, density from the data
  const auto fit = fit_gld_mle(data);
  const auto [lo, hi] = gld_support(fit.params);
  const auto corr = std::isfinite(lo)   ? BoundaryCorrection::lower_only
                    : std::isfinite(hi) ? BoundaryCorrection::both
                                        : BoundaryCorrection::none;
  const double bw =
    optimal_bandwidth(BandwidthRule{ FittedGldQor{ fit.params }, epanechnikov(), corr },
                      0.3, 100);
  CHECK(*a.bandwidth_used == bw);
  const double tau = std::sqrt(0.21) * qdens_direct(data, 0.3, bw).value;
  CHECK(a.standardized_width == Approx(2 * z975 * tau).epsilon(1e-12));

  // an infinite fitted QOR engages the min{u, 1-u} clamp
  const BandwidthRule uni{ FittedGldQor{ GldParams{ 0, 1, 1, 1 } } };
  CHECK(optimal_bandwidth(uni, 0.3, 100) == Approx(0.3));
  CHECK(optimal_bandwidth(uni, 0.8, 100) == Approx(0.2));
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i)
    grid.push_back(2.0 * (i - 0.5) / 200.0 - 1.0);
  for (double u : { 0.1, 0.5, 0.9 }) {
    const auto ci = ci_method_e(SortedSample(grid), u, 0.95);
    CHECK(std::isfinite(ci.lower));
    CHECK(std::isfinite(ci.upper));
    CHECK(*ci.bandwidth_used <= std::max(u, 1 - u));
  }
}

TEST_CASE("methods F, G, H")
{
  const auto data = draw("exponential", 200, 9);
  auto g = parse_method("G:optimal:exponential");
  const auto a = compute_ci(data, 0.4, 0.95, parse_method("A:exponential"));
  const auto gi = compute_ci(data, 0.4, 0.95, g);
  CHECK(a.lower == gi.lower);
  CHECK(a.upper == gi.upper);
  CHECK(gi.method == "G:optimal:exponential");

  const auto g19 = ci_methods_fgh(data, 0.4, 0.95, MethodKind::G);
  CHECK(*g19.bandwidth_used == 0.19);
  CHECK(g19.method == "G:0.19");

  // n = 10 brute force of the Soni estimate
  std::vector<double> ten{ 0.31, -1.2, 2.7, 0.05, 0.31, 1.9, -0.4, 3.3, 0.88, 1.1 };
  const SortedSample small(ten);
  std::sort(ten.begin(), ten.end());
  const double qh = oracle::soni_sum(ten, 0.4, 0.19);
  const auto h = ci_methods_fgh(small, 0.4, 0.95, MethodKind::H);
  CHECK(h.upper - h.lower ==
        Approx(2 * z975 * std::sqrt(0.24) * qh / std::sqrt(10.0)).epsilon(1e-12));

  const double qf = 1.0 / oracle::kde(ten, kernel_quantile_estimate(small, 0.4, 0.19),
                                      0.19 * oracle::sd(ten));
  const auto f = ci_methods_fgh(small, 0.4, 0.95, MethodKind::F);
  CHECK(f.upper - f.lower ==
        Approx(2 * z975 * std::sqrt(0.24) * qf / std::sqrt(10.0)).epsilon(1e-12));
  CHECK_THROWS_AS(ci_methods_fgh(small, 0.4, 0.95, MethodKind::C), Error);
}

TEST_CASE("affine equivariance")
{
  const auto base = sample(parse_family("gamma:alpha=2"), 150, { 10, 0 });
  for (const auto& [a, s] : { std::pair{ 3.0, 2.0 }, std::pair{ -50.0, 0.25 } }) {
    std::vector<double> moved(base);
    for (auto& x : moved)
      x = a + s * x;
    const SortedSample d0(base), d1(moved);
    for (const std::string m : { "A:cauchy", "A:lognormal", "F", "G", "H" })
      for (double u : { 0.2, 0.5, 0.8 }) {
        CAPTURE(m);
        CAPTURE(u);
        const auto c0 = compute_ci(d0, u, 0.95, parse_method(m));
        const auto c1 = compute_ci(d1, u, 0.95, parse_method(m));
        const double tol = 1e-10 * (std::fabs(a) + s * std::fabs(c0.upper));
        CHECK(std::fabs(c1.lower - (a + s * c0.lower)) <= tol);
        CHECK(std::fabs(c1.upper - (a + s * c0.upper)) <= tol);
      }
    // GLD-based methods go through a numerical fit
    GldFitCache k0(d0), k1(d1);
    for (const std::string m : { "C", "D", "E" })
      for (double u : { 0.2, 0.5, 0.8 }) {
        CAPTURE(m);
        CAPTURE(u);
        const auto c0 = compute_ci(d0, u, 0.95, parse_method(m), &k0);
        const auto c1 = compute_ci(d1, u, 0.95, parse_method(m), &k1);
        const double tol =
          1e-2 * s * (std::fabs(c0.lower) + std::fabs(c0.upper) + (c0.upper - c0.lower));
        CHECK(std::fabs(c1.lower - (a + s * c0.lower)) <= tol);
        CHECK(std::fabs(c1.upper - (a + s * c0.upper)) <= tol);
      }
  }
}

TEST_CASE("two-sample intervals")
{
  const auto x = draw("lognormal", 100, 11);
  const auto same = compute_ci(x, 0.5, 0.95, parse_method("G"));
  const auto t = ci_two_sample(x, x, 0.5, 0.5, 0.95, parse_method("G"), parse_method("G"));
  CHECK(t.estimate == 0.0);
  CHECK(t.lower == -t.upper);
  CHECK(t.upper == Approx(std::sqrt(2.0) * (same.upper - same.estimate)).epsilon(1e-12));

  const auto unit = parse_method("oracle:uniform:scale=2");
  const auto arith = ci_two_sample(x, x, 0.5, 0.5, 0.95, unit, unit);
  CHECK(arith.upper - arith.estimate == Approx(0.27718).epsilon(1e-5));
  CHECK(arith.upper - arith.estimate ==
        Approx(z975 * std::sqrt(0.02)).epsilon(1e-12));

  // a zero-spread second sample reduces to the one-sample interval
  const SortedSample zeros(std::vector<double>(60, 0.0));
  for (const std::string m : { "A:cauchy", "G", "E" }) {
    CAPTURE(m);
    const auto one = compute_ci(x, 0.3, 0.95, parse_method(m));
    const auto two = ci_two_sample(x, zeros, 0.3, 0.6, 0.95, parse_method(m),
                                   parse_method("G"));
    CHECK(two.lower == Approx(one.lower).epsilon(1e-12));
    CHECK(two.upper == Approx(one.upper).epsilon(1e-12));
  }
  const SortedSample shifted(std::vector<double>(60, 4.0));
  const auto one = compute_ci(x, 0.3, 0.95, parse_method("G"));
  const auto two = ci_two_sample(x, shifted, 0.3, 0.6, 0.95, parse_method("G"),
                                 parse_method("G"));
  CHECK(two.lower == Approx(one.lower - 4.0).epsilon(1e-12));
  CHECK(two.upper == Approx(one.upper - 4.0).epsilon(1e-12));

  const auto y = draw("lognormal", 80, 12);
  const auto mixed = ci_two_sample(x, y, 0.25, 0.75, 0.9, parse_method("E"), parse_method("C"));
  CHECK(mixed.method == "E:fkml|C:fkml");
  CHECK(mixed.n == 100);
  CHECK(mixed.m == 80);
  CHECK(mixed.estimate ==
        Approx(sample_quantile_type8(x, 0.25) - sample_quantile_type8(y, 0.75)));
  CHECK(mixed.lower < mixed.upper);

  CHECK(code_of([&] {
          ci_two_sample(x, y, 0.5, 0.5, 0.95, parse_method("D"), parse_method("E"));
        }) == ErrorCode::incompatible_method);
  CHECK(code_of([&] {
          ci_two_sample(x, y, 0.5, 0.5, 0.95, parse_method("E"), parse_method("D"));
        }) == ErrorCode::incompatible_method);
}

TEST_CASE("floored kernel sums are re-estimated at the boundary distance")
{
  // a single large gap just above u makes the raw sum negative near the edge
  int floored = 0;
  for (std::uint64_t r = 0; r < 300; ++r) {
    const auto data = SortedSample(sample(parse_family("cauchy"), 30, { 13, r }));
    const auto ci = ci_methods_fgh(data, 0.08, 0.95, MethodKind::G, 0.3);
    if (ci.floored) {
      ++floored;
      CHECK(*ci.bandwidth_used == Approx(0.08));
    }
    CHECK(ci.lower <= ci.upper);
  }
  CHECK(floored > 0);
}

TEST_CASE("method parsing")
{
  for (const std::string m : { "A:cauchy", "A:pareto2:a=2", "B", "C:fkml", "D:rs",
                               "E:fkml", "F:0.19", "G:0.15", "H:0.19",
                               "G:optimal:exponential", "oracle:normal" })
    CHECK(method_label(parse_method(m)) == m);
  CHECK(method_label(parse_method("A")) == "A:cauchy");
  CHECK(method_label(parse_method("C")) == "C:fkml");
  CHECK(method_label(parse_method("G")) == "G:0.19");
  CHECK(parse_method("D:rs").parameterization == GldParameterization::rs);
  CHECK(code_of([] { parse_method("Z"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_method("G:abc"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_method("A:nosuch"); }) == ErrorCode::unknown_family);
  CHECK(code_of([] { parse_method("B:1"); }) == ErrorCode::parse);
}
