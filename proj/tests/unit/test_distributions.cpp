#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../qor_oracle.hpp"
#include "qci/distributions.hpp"
#include "qci/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace qci;
using doctest::Approx;

namespace {

const std::vector<std::string> all_members = [] {
  auto v = oracle::qor_catalog();
  v.push_back("uniform");
  v.push_back("gh:g=0.2,h=0.2");
  v.push_back("gh:g=0,h=0.1");
  v.push_back("gh:g=0.5,h=0");
  return v;
}();

double q_at(const std::string& name, double u)
{
  return quantile(parse_family(name), u);
}

} // namespace

TEST_CASE("quantile examples")
{
  CHECK(q_at("cauchy", 0.5) == Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(q_at("exponential", 0.5) == Approx(0.6931472).epsilon(1e-7));
  CHECK(q_at("pareto2:a=1", 0.75) == Approx(3.0).epsilon(1e-14));
  CHECK(q_at("logistic", 0.75) == Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(q_at("laplace", 0.25) == Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(q_at("laplace", 0.75) == Approx(-std::log(0.5)).epsilon(1e-14));
  CHECK(q_at("lognormal", 0.5) == Approx(1.0).epsilon(1e-14));
  CHECK(q_at("weibull:beta=2", 0.5) ==
        Approx(std::sqrt(std::log(2.0))).epsilon(1e-14));
  CHECK(q_at("uniform", 0.3) == Approx(0.3).epsilon(1e-14));
  CHECK(q_at("normal:loc=3,scale=2", 0.5) == Approx(3.0).epsilon(1e-14));
  CHECK(q_at("gld-fkml:l1=0,l2=1,l3=1,l4=1", 0.75) == Approx(0.5).epsilon(1e-14));
  // gamma quantile inverts the gamma distribution function
  const double g = q_at("gamma:alpha=2", 0.4);
  CHECK(regularized_incomplete_gamma(g, 2.0) == Approx(0.4).epsilon(1e-10));
  // bimodal: F(x) = 1/2 + log(e / (e - x)) / 2 for x >= 0
  const double x = q_at("bimodal", 0.8);
  CHECK(0.5 + 0.5 * std::log(std::numbers::e / (std::numbers::e - x)) ==
        Approx(0.8).epsilon(1e-13));
  for (double u : { 0.0, 1.0, -0.5, 1.5 })
    CHECK_THROWS_AS(q_at("normal", u), Error);
}

TEST_CASE("quantile is strictly increasing")
{
  for (const auto& name : all_members) {
    CAPTURE(name);
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < 1000; ++i) {
      const double v = q_at(name, i / 1000.0);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("quantile density examples")
{
  CHECK(quantile_density(parse_family("logistic"), 0.5) == Approx(4.0));
  CHECK(quantile_density(parse_family("normal"), 0.5) ==
        Approx(2.5066283).epsilon(1e-7));
  CHECK(quantile_density(parse_family("cauchy"), 0.5) ==
        Approx(std::numbers::pi).epsilon(1e-14));
  CHECK(quantile_density(parse_family("uniform:scale=3"), 0.2) ==
        Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(quantile_density(parse_family("normal"), 1.0), Error);
}

TEST_CASE("quantile density matches a difference of the quantile")
{
  for (const auto& name : all_members) {
    CAPTURE(name);
    const auto model = parse_family(name);
    const double fd = oracle::d1(
      [&](double u) { return quantile(model, u); }, 0.3, 1e-5);
    CHECK(quantile_density(model, 0.3) == Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("q' and q'' match differences of q")
{
  for (const auto& name : all_members) {
    if (name == "uniform")
      continue;
    CAPTURE(name);
    const auto model = parse_family(name);
    const auto q = [&](double u) { return quantile_density(model, u); };
    for (double u : { 0.1, 0.3, 0.55, 0.8 }) {
      CAPTURE(u);
      const double d1 = oracle::d1(q, u, 1e-5);
      const double d2 = oracle::d2_4(q, u, 5e-4);
      CHECK(quantile_density_first(model, u) ==
            Approx(d1).epsilon(1e-6).scale(1e-6 * q(u)));
      CHECK(quantile_density_second(model, u) ==
            Approx(d2).epsilon(1e-5).scale(1e-5 * q(u)));
    }
  }
}

TEST_CASE("QOR examples")
{
  const auto r = [](const std::string& name, double u) {
    return qor(parse_family(name), u).qor;
  };
  CHECK(r("laplace", 0.25) == Approx(0.03125).epsilon(1e-14));
  for (double u : { 0.05, 0.3, 0.5, 0.77 })
    CHECK(r("bimodal", u) == Approx(0.25).epsilon(1e-12));
  CHECK(r("exponential", 0.5) == Approx(0.125).epsilon(1e-14));
  CHECK(r("normal", 0.5) == Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(r("normal", 0.5) == Approx(0.1591549).epsilon(1e-7));
  // the coarse approximation 0.4 phi(6 (u - 1/2)) at the median
  CHECK(std::fabs(r("normal", 0.5) - 0.4 * std_normal_pdf(0.0)) < 0.001);
  CHECK(r("cauchy", 0.5) ==
        Approx(1.0 / (2 * std::numbers::pi * std::numbers::pi)).epsilon(1e-12));
  CHECK(r("cauchy", 0.5) == Approx(0.0506606).epsilon(1e-6));
  CHECK(r("tukey:lambda=2.5", 0.5) == Approx(1.0 / 3.0).epsilon(1e-12));
  for (double u : { 0.1, 0.5, 0.9 })
    CHECK(r("logistic", u) ==
          Approx(std::pow(u * (1 - u), 2) /
                 (2 * (std::pow(1 - u, 3) + std::pow(u, 3))))
            .epsilon(1e-12));
  for (double a : { 0.5, 1.0, 3.0 })
    for (double u : { 0.2, 0.7 })
      CHECK(r("pareto2:a=" + std::to_string(a), u) ==
            Approx(a * a * (1 - u) * (1 - u) / ((1 + a) * (1 + 2 * a)))
              .epsilon(1e-12));
  const double g = oracle::qor_oracle("gamma:alpha=2", 0.5).fd4;
  CHECK(r("gamma:alpha=2", 0.5) == Approx(g).epsilon(1e-6));

  const auto uni = qor(parse_family("uniform"), 0.4);
  CHECK(std::isinf(uni.qor));
  CHECK(uni.q_second == 0.0);
  CHECK(std::isinf(r("gld-fkml:l1=0,l2=1,l3=1,l4=1", 0.3)));
  CHECK(std::isinf(r("tukey:lambda=1", 0.3)));
  CHECK_THROWS_AS(r("normal", 0.0), Error);
}

TEST_CASE("QOR structure")
{
  for (const auto& name : all_members) {
    CAPTURE(name);
    const auto model = parse_family(name);
    for (double u : { 0.1, 0.4, 0.65 }) {
      const auto e = qor(model, u);
      CHECK(e.u == u);
      CHECK(e.q == Approx(quantile_density(model, u)).epsilon(1e-14));
      if (e.q_second == 0.0)
        CHECK(std::isinf(e.qor));
      else
        CHECK(e.qor == Approx(e.q / e.q_second).epsilon(1e-12));
    }
  }
}

TEST_CASE("QOR matches finite differences of q over the catalog")
{
  int conditioned = 0;
  for (const auto& name : oracle::qor_catalog())
    for (int k = 1; k <= 19; ++k) {
      const double u = k / 20.0;
      CAPTURE(name);
      CAPTURE(u);
      const auto r = oracle::qor_oracle(name, u);
      CHECK(r.rel2 <= 1e-4);
      if (r.well_conditioned) {
        ++conditioned;
        CHECK(r.rel4 <= 1e-6);
      }
    }
  // the fourth-order check is not vacuous
  CHECK(conditioned > 450);
}

TEST_CASE("GH QOR agrees with differences of q")
{
  const auto model = parse_family("gh:g=0.2,h=0.2");
  for (double u : { 0.1, 0.5, 0.9 }) {
    const auto q = [&](double v) { return quantile_density(model, v); };
    const double ref = q(u) / oracle::d2_4(q, u, 5e-4);
    CHECK(qor(model, u).qor == Approx(ref).epsilon(1e-4));
  }
}

TEST_CASE("symmetric families have symmetric QOR")
{
  for (const std::string name :
       { "normal", "cauchy", "laplace", "logistic", "tukey:lambda=-0.5",
         "tukey:lambda=0.14", "tukey:lambda=2.5", "bimodal", "gh:g=0,h=0.1",
         "gld-fkml:l1=0,l2=1,l3=0.2,l4=0.2" }) {
    CAPTURE(name);
    const auto model = parse_family(name);
    for (int k = 1; k <= 19; ++k) {
      const double u = k / 40.0;
      CHECK(qor(model, u).qor == Approx(qor(model, 1.0 - u).qor).epsilon(1e-12));
    }
  }
}

TEST_CASE("location and scale")
{
  const auto unit = rng_uniform({ 2024, 0 }, 40);
  for (const auto& name : all_members) {
    CAPTURE(name);
    const auto standard = parse_family(name);
    for (int i = 0; i < 20; ++i) {
      auto moved = standard;
      moved.location = 20.0 * (unit[2 * i] - 0.5);
      moved.scale = std::exp(4.0 * (unit[2 * i + 1] - 0.5));
      for (double u : { 0.1, 0.5, 0.85 }) {
        const auto a = qor(standard, u).qor, b = qor(moved, u).qor;
        if (std::isinf(a))
          CHECK(std::isinf(b));
        else
          CHECK(b == Approx(a).epsilon(1e-13));
        CHECK(quantile_density(moved, u) ==
              Approx(moved.scale * quantile_density(standard, u))
                .epsilon(1e-15));
        CHECK(quantile(moved, u) ==
              Approx(moved.location + moved.scale * quantile(standard, u))
                .epsilon(1e-13)
                .scale(1.0));
      }
    }
  }
}

TEST_CASE("q' equals -f'(x) q^3")
{
  struct Case
  {
    std::string name;
    std::function<double(double)> fprime;
  };
  const double a = 2.5;
  const std::vector<Case> cases{
    { "normal", [](double x) { return -x * std_normal_pdf(x); } },
    { "exponential", [](double x) { return -std::exp(-x); } },
    { "logistic",
      [](double x) {
        const double f = std::exp(-x) / std::pow(1 + std::exp(-x), 2);
        return -f * std::tanh(x / 2);
      } },
    { "pareto2:a=2.5",
      [a](double x) { return -a * (a + 1) * std::pow(1 + x, -a - 2); } },
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto model = parse_family(c.name);
    for (int k = 1; k <= 19; ++k) {
      const double u = k / 20.0;
      const double q = quantile_density(model, u);
      const double expect = -c.fprime(quantile(model, u)) * q * q * q;
      CHECK(quantile_density_first(model, u) ==
            Approx(expect).epsilon(1e-6).scale(1e-12));
    }
  }
}

TEST_CASE("special cases collapse")
{
  const auto r = [](const std::string& name, double u) {
    return qor(parse_family(name), u).qor;
  };
  for (int k = 1; k <= 19; ++k) {
    const double u = k / 20.0;
    CHECK(r("weibull:beta=1", u) == Approx(r("exponential", u)).epsilon(1e-10));
    CHECK(r("gamma:alpha=1", u) == Approx((1 - u) * (1 - u) / 2).epsilon(1e-10));
    for (double l : { -0.3, 0.14, 0.5 }) {
      const std::string s = std::to_string(l);
      CHECK(r("gld-fkml:l1=0,l2=1,l3=" + s + ",l4=" + s, u) ==
            Approx(r("tukey:lambda=" + s, u)).epsilon(1e-10));
    }
  }
}

TEST_CASE("gamma QOR changes sign for shape between 1/2 and 1")
{
  const auto model = parse_family("gamma:alpha=0.6");
  bool negative = false;
  for (int k = 1; k < 100; ++k)
    negative = negative || qor(model, k / 100.0).qor < 0.0;
  CHECK(negative);
}

TEST_CASE("support")
{
  const auto s = [](const std::string& name) {
    return support(parse_family(name));
  };
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(s("exponential") == std::pair{ 0.0, inf });
  CHECK(s("cauchy") == std::pair{ -inf, inf });
  CHECK(s("normal") == std::pair{ -inf, inf });
  CHECK(s("pareto2:a=2").first == 0.0);
  CHECK(s("gamma:alpha=2").first == 0.0);
  CHECK(s("weibull:beta=2").first == 0.0);
  CHECK(s("lognormal").first == 0.0);
  const auto g = s("gld-fkml:l1=0,l2=1,l3=1,l4=1");
  CHECK(g.first == Approx(-1.0));
  CHECK(g.second == Approx(1.0));
  const auto b = s("bimodal");
  CHECK(b.first == Approx(-(std::numbers::e - 1)));
  CHECK(b.second == Approx(std::numbers::e - 1));
  const auto u = s("uniform:loc=2,scale=3");
  CHECK(u.first == Approx(2.0));
  CHECK(u.second == Approx(5.0));
  CHECK(s("exponential:loc=1,scale=2").first == Approx(1.0));
  const auto one_sided = s("gld-fkml:l1=0,l2=1,l3=0.5,l4=-0.2");
  CHECK(std::isfinite(one_sided.first));
  CHECK(std::isinf(one_sided.second));
}

TEST_CASE("sampling")
{
  const auto model = parse_family("exponential");
  auto xs = sample(model, 100000, { 11, 0 });
  CHECK(xs.size() == 100000);
  std::nth_element(xs.begin(), xs.begin() + 50000, xs.end());
  CHECK(std::fabs(xs[50000] - std::log(2.0)) < 0.02);

  CHECK(sample(model, 50, { 3, 9 }) == sample(model, 50, { 3, 9 }));
  CHECK(sample(model, 50, { 3, 9 }) != sample(model, 50, { 3, 10 }));

  const auto u = rng_uniform({ 5, 2 }, 20);
  const auto moved = parse_family("cauchy:loc=1,scale=3");
  const auto ys = sample(moved, 20, { 5, 2 });
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(ys[i] == Approx(1.0 + 3.0 * quantile(parse_family("cauchy"), u[i]))
                     .epsilon(1e-12));
}

TEST_CASE("family parsing")
{
  for (const auto& name : all_members) {
    const auto model = parse_family(name);
    const auto again = parse_family(to_string(model));
    for (double u : { 0.2, 0.7 })
      CHECK(quantile(again, u) == quantile(model, u));
  }
  try {
    parse_family("weird");
    FAIL("expected an unknown family error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_family);
    CHECK(std::string(e.what()).find("cauchy") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_family("normal:scale=-1"), Error);
  CHECK_THROWS_AS(parse_family("pareto2:a=0"), Error);
  CHECK_THROWS_AS(parse_family("pareto2:b=1"), Error);
  CHECK_THROWS_AS(parse_family("gld-fkml:l1=0,l2=-1,l3=0.1,l4=0.1"), Error);
  CHECK(family_catalog().find("gld-rs") != std::string::npos);
}
