#include <doctest.h>

#include <cmath>
#include <vector>

#include "hyperilf/ratefn.hpp"
#include "hyperilf/rng.hpp"

using ratefn::RateProfile;

namespace {

// Direct long-double recursion, kept independent of the library path.
long double rho_oracle(const std::vector<double>& alphas, int level, long double t) {
  long double v = alphas[0] * t;
  for (int i = 1; i <= level; ++i) v = alphas[i] * (expl(v) - 1.0L);
  return v;
}

}  // namespace

TEST_CASE("rho examples and recursion oracle") {
  CHECK(ratefn::rho(RateProfile({1, 1, 1}), 0, 2.0) == doctest::Approx(2.0));
  for (int level = 0; level <= 2; ++level)
    CHECK(ratefn::rho(RateProfile({0.4, 1.7, 0.9}), level, 0.0) == 0.0);
  CHECK(ratefn::rho(RateProfile({1, 1}), 1, 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));

  const std::vector<double> alphas{0.7, 1.3, 0.5};
  const RateProfile p(alphas);
  for (double t : {0.1, 0.5, 0.9, 1.4}) {
    const double expect = static_cast<double>(rho_oracle(alphas, 2, t));
    CHECK(ratefn::rho(p, 2, t) == doctest::Approx(expect).epsilon(1e-13));
  }

  CHECK_THROWS_AS(ratefn::rho(p, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ratefn::rho(p, -1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RateProfile({1.0, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(RateProfile({}), std::invalid_argument);
}

TEST_CASE("rho is strictly increasing in t") {
  rng::Rng gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = static_cast<int>(gen.uniform() * 3);
    std::vector<double> alphas(r + 1);
    for (auto& a : alphas) a = gen.uniform(0.3, 1.8);
    const RateProfile p(alphas);
    const double t1 = gen.uniform(0.0, 1.0);
    const double t2 = t1 + gen.uniform(0.01, 1.0);
    CHECK(ratefn::rho(p, r, t2) > ratefn::rho(p, r, t1));
  }
}

TEST_CASE("sigma examples") {
  const RateProfile p3({0.8, 1.1, 0.6});  // r = 2
  CHECK(ratefn::sigma(p3, 1, 1.0) == doctest::Approx(0.6).epsilon(1e-14));   // alpha_r
  CHECK(ratefn::sigma(p3, 2, 1.0) == doctest::Approx(1.1).epsilon(1e-14));   // alpha_{r-1}

  const RateProfile phalf({1.0, 1.0, 0.5});
  CHECK(ratefn::sigma(phalf, 1, 0.1) ==
        doctest::Approx(-std::log(0.1) + 0.5).epsilon(1e-14));

  // direct scalar recursion as oracle: sigma_2(0.1) = ln(sigma_1(0.1)/1) + 1
  const RateProfile ones({1, 1, 1});
  const double expect = std::log(std::log(10.0) + 1.0) + 1.0;
  CHECK(ratefn::sigma(ones, 2, 0.1) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(ratefn::sigma(ones, 2, 0.1) == doctest::Approx(2.1947055).epsilon(1e-6));

  CHECK_THROWS_AS(ratefn::sigma(ones, 1, 0.0), std::domain_error);
  CHECK_THROWS_AS(ratefn::sigma(ones, 1, 1.5), std::domain_error);
  CHECK_THROWS_AS(ratefn::sigma(ones, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ratefn::sigma(ones, 3, 0.5), std::invalid_argument);

  CHECK(ratefn::sigma(ones, 1, 1e-305) > 0.0);  // deep but representable
}

TEST_CASE("sigma is nonincreasing in s and bounded below by sigma(1)") {
  rng::Rng gen(22);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 1 + static_cast<int>(gen.uniform() * 3);
    std::vector<double> alphas(r + 1);
    for (auto& a : alphas) a = gen.uniform(0.3, 1.8);
    const RateProfile p(alphas);
    const int level = 1 + static_cast<int>(gen.uniform() * r);
    const double s1 = gen.uniform(1e-6, 1.0);
    const double s2 = gen.uniform(s1, 1.0);
    const double v1 = ratefn::sigma(p, level, s1);
    const double v2 = ratefn::sigma(p, level, s2);
    CHECK(v1 >= v2);
    CHECK(v2 >= ratefn::sigma(p, level, 1.0) - 1e-12);
    CHECK(v1 > 0.0);
  }
}

TEST_CASE("envelope examples") {
  CHECK(ratefn::envelope(RateProfile({1.0}), 1.0, 1.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(ratefn::envelope(RateProfile({0.9, 1.2}), 3.7, 0.0) == doctest::Approx(3.7));
  CHECK(ratefn::envelope(RateProfile({1, 1}), 1.0, 1.0) ==
        doctest::Approx(std::exp(-(std::exp(1.0) - 1.0))).epsilon(1e-13));
  CHECK_THROWS_AS(ratefn::envelope(RateProfile({1.0}), -1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(ratefn::envelope(RateProfile({1.0}), 1.0, -0.1), std::domain_error);
}

TEST_CASE("chain identity: d/dt envelope equals the sigma-product field") {
  // d/dt [y0 e^{-rho_r(t)}] = -alpha_0 y(t) prod_i sigma_i(y/y0)
  rng::Rng gen(23);
  int checked = 0;
  while (checked < 120) {
    const int r = static_cast<int>(gen.uniform() * 4);
    std::vector<double> alphas(r + 1);
    for (auto& a : alphas) a = gen.uniform(0.3, 1.6);
    const RateProfile p(alphas);
    const double y0 = gen.uniform(0.2, 4.0);

    // keep rho moderate so central differences stay accurate
    double t_hi = 2.0;
    while (ratefn::rho(p, r, t_hi) > 30.0) t_hi *= 0.5;
    const double t = gen.uniform(0.05, t_hi);
    if (ratefn::rho(p, r, t) > 30.0) continue;

    const double h = 1e-6;
    const double fd =
        (ratefn::envelope(p, y0, t + h) - ratefn::envelope(p, y0, t - h)) / (2.0 * h);
    const double y = ratefn::envelope(p, y0, t);
    double rhs = -alphas[0] * y;
    for (int i = 1; i <= r; ++i) rhs *= ratefn::sigma(p, i, y / y0);
    CHECK(std::fabs(fd - rhs) <= 1e-5 * std::max(1.0, std::fabs(rhs)));
    ++checked;
  }
}

TEST_CASE("comparison ODE matches the closed form") {
  {
    const auto s = ratefn::integrate_comparison(RateProfile({1.0}), 1.0, 1.0, 1e-3);
    for (size_t i = 0; i < s.times.size(); ++i)
      CHECK(s.values[i] == doctest::Approx(std::exp(-s.times[i])).epsilon(1e-9));
  }
  {
    const auto s = ratefn::integrate_comparison(RateProfile({2.0}), 5.0, 1.0, 1e-3);
    for (size_t i = 0; i < s.times.size(); ++i)
      CHECK(s.values[i] == doctest::Approx(5.0 * std::exp(-2.0 * s.times[i])).epsilon(1e-9));
  }
  {
    const auto s = ratefn::integrate_comparison(RateProfile({1, 1}), 1.0, 2.0, 1e-4);
    double worst = 0.0;
    for (size_t i = 0; i < s.times.size(); ++i) {
      const double exact = std::exp(-(std::exp(s.times[i]) - 1.0));
      worst = std::max(worst, std::fabs(s.values[i] - exact) / exact);
    }
    CHECK(worst < 1e-8);
    for (size_t i = 1; i < s.values.size(); ++i) {
      CHECK(s.values[i] > 0.0);
      CHECK(s.values[i] < s.values[i - 1]);
    }
  }
  CHECK_THROWS_AS(ratefn::integrate_comparison(RateProfile({1.0}), -1.0, 1.0, 1e-3),
                  std::domain_error);
}

TEST_CASE("classify_decay on known series") {
  std::vector<double> t, pure_exp, hyper, flat;
  for (int k = 0; k <= 1000; ++k) {
    const double tk = 0.01 * k;
    t.push_back(tk);
    pure_exp.push_back(std::exp(-3.0 * tk));
    flat.push_back(2.0);
  }
  std::vector<double> th;
  for (int k = 0; k <= 300; ++k) {
    const double tk = 0.01 * k;
    th.push_back(tk);
    hyper.push_back(std::exp(-(std::exp(tk) - 1.0)));
  }

  const auto rexp = ratefn::classify_decay(t, pure_exp, 1.0);
  CHECK(rexp.classification == ratefn::Decay::Exponential);
  for (double r : rexp.instantaneous_rates) CHECK(r == doctest::Approx(3.0).epsilon(1e-6));

  const auto rhyp = ratefn::classify_decay(th, hyper, 0.5);
  CHECK(rhyp.classification == ratefn::Decay::Hyperexponential);
  CHECK(rhyp.monotone_fraction == doctest::Approx(1.0));
  for (size_t i = 0; i + 1 < rhyp.instantaneous_rates.size(); ++i)
    CHECK(rhyp.instantaneous_rates[i + 1] > rhyp.instantaneous_rates[i]);

  const auto rflat = ratefn::classify_decay(t, flat, 1.0);
  CHECK(rflat.classification == ratefn::Decay::Exponential);
  CHECK(std::fabs(rflat.instantaneous_rates.front()) < 1e-9);
  CHECK(rflat.monotone_fraction == doctest::Approx(0.5));

  // scale invariance
  std::vector<double> scaled = hyper;
  for (auto& v : scaled) v *= 7.3;
  const auto rs = ratefn::classify_decay(th, scaled, 0.5);
  CHECK(rs.classification == rhyp.classification);
  for (size_t i = 0; i < rs.instantaneous_rates.size(); ++i)
    CHECK(rs.instantaneous_rates[i] ==
          doctest::Approx(rhyp.instantaneous_rates[i]).epsilon(1e-9));

  CHECK_THROWS_AS(ratefn::classify_decay({0.0, 0.1}, {1.0, 0.9}, 0.05),
                  ratefn::InsufficientData);
}

TEST_CASE("reference curves") {
  const auto c = ratefn::reference_curves({0.0, 1.0, 1.25, 1.3, 2.0});
  CHECK(c.es[0] == 1.0);
  CHECK(c.hes1[0] == 1.0);
  CHECK(c.hes2[0] == 1.0);
  CHECK(c.fts[0] == 1.0);
  CHECK(c.es[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(c.fts[2] == 0.0);
  CHECK(c.fts[3] == 0.0);
  CHECK(c.fts[4] == 0.0);
  for (size_t i = 0; i < c.t.size(); ++i) {
    CHECK(c.hes2[i] <= c.hes1[i] + 1e-15);
    CHECK(c.hes1[i] <= c.es[i] + 1e-15);
  }
  CHECK_THROWS_AS(ratefn::reference_curves({0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(ratefn::reference_curves({-1.0, 0.0}), std::invalid_argument);
}
