#include <catch2/catch_amalgamated.hpp>

#include "ergosim/analysis.hpp"
#include "ergosim/rng.hpp"

using namespace ergosim;

namespace {

EnsembleSeries constant_series(double c, int reps, int nt) {
  EnsembleSeries s;
  for (int i = 0; i < nt; ++i) s.times.push_back(i);
  s.values.assign(reps, std::vector<double>(nt, c));
  return s;
}

}  // namespace

TEST_CASE("long_time_average") {
  SECTION("constant series returns the constant exactly") {
    const auto s = constant_series(3.25, 7, 50);
    const auto avg = long_time_average(s, 10.0, 40.0);
    REQUIRE(avg.value == 3.25);
    REQUIRE(avg.std_error == 0.0);
  }
  SECTION("sinusoid over integer periods averages to its offset") {
    EnsembleSeries s;
    const int nt = 400;
    std::vector<double> row(nt);
    for (int i = 0; i < nt; ++i) {
      s.times.push_back(0.25 * i);
      row[static_cast<std::size_t>(i)] =
          5.0 + std::sin(2.0 * M_PI * 0.25 * i);  // period 1, grid step 1/4
    }
    s.values.push_back(row);
    const auto avg = long_time_average(s, 0.0, 99.75);  // exactly 100 periods
    REQUIRE(avg.value == Catch::Approx(5.0).margin(1e-12));
  }
  SECTION("1/t tail recovers the plateau within the analytic bias bound") {
    EnsembleSeries s;
    const double plateau = 10.0, a = 2.0;
    for (int i = 1; i <= 2000; ++i) {
      s.times.push_back(i);
    }
    std::vector<double> row;
    for (double t : s.times) row.push_back(plateau - a / t);
    s.values.push_back(row);
    const auto avg = long_time_average(s, 1000.0, 2000.0);
    REQUIRE(plateau - avg.value < a / 1000.0);
    REQUIRE(plateau - avg.value > 0.0);
  }
  SECTION("window outside the grid throws") {
    const auto s = constant_series(1.0, 2, 10);
    REQUIRE_THROWS_AS(long_time_average(s, 100.0, 200.0), std::invalid_argument);
  }
}

TEST_CASE("deviation_series") {
  EnsembleSeries s;
  s.times = {0, 1, 2};
  s.values = {{1.0, 2.0, 3.0}, {2.0, 2.0, 2.0}};
  const auto d = deviation_series(s, 3.0);
  REQUIRE(d.values[0] == std::vector<double>{2.0, 1.0, 0.0});
  REQUIRE(d.values[1] == std::vector<double>{1.0, 1.0, 1.0});
  SECTION("monotone input gives monotone deviations") {
    for (std::size_t i = 1; i < 3; ++i)
      REQUIRE(d.values[0][i] <= d.values[0][i - 1]);
  }
}

TEST_CASE("exponential fits") {
  std::vector<double> ts, ds;
  for (int i = 0; i <= 40; ++i) {
    ts.push_back(i);
    ds.push_back(3.0 * std::exp(-0.28 * i));
  }
  SECTION("noiseless synthetic data is recovered exactly") {
    const auto fit = fit_exponential(ts, ds, 5.0, 40.0);
    REQUIRE(fit.rate_or_exponent == Catch::Approx(0.28).margin(1e-10));
    REQUIRE(fit.amplitude == Catch::Approx(3.0).margin(1e-9));
    REQUIRE(fit.residual_rms < 1e-12);
  }
  SECTION("1% multiplicative noise: alpha within 3 standard errors") {
    Rng rng = make_rng(201);
    int hits = 0;
    for (int mc = 0; mc < 40; ++mc) {
      std::vector<double> noisy = ds;
      for (auto& v : noisy) v *= 1.0 + 0.01 * gaussian(rng);
      const auto fit = fit_exponential(ts, noisy, 5.0, 40.0);
      if (std::abs(fit.rate_or_exponent - 0.28) <= 3.0 * fit.rate_std_error) ++hits;
    }
    REQUIRE(hits >= 36);  // ~99.7% per trial
  }
  SECTION("nonpositive delta in the window throws") {
    std::vector<double> bad = ds;
    bad[20] = 0.0;
    REQUIRE_THROWS_AS(fit_exponential(ts, bad, 5.0, 40.0), std::invalid_argument);
  }
  SECTION("power-law input is flagged by larger residuals") {
    std::vector<double> pl;
    for (double t : ts) pl.push_back(t < 1 ? 2.0 : 2.0 * std::pow(t, -1.5));
    const auto exp_on_pl = fit_exponential(ts, pl, 5.0, 40.0);
    const auto pow_on_pl = fit_powerlaw(ts, pl, 5.0, 40.0);
    REQUIRE(pow_on_pl.residual_rms < exp_on_pl.residual_rms);
    const auto exp_on_exp = fit_exponential(ts, ds, 5.0, 40.0);
    const auto pow_on_exp = fit_powerlaw(ts, ds, 5.0, 40.0);
    REQUIRE(exp_on_exp.residual_rms < pow_on_exp.residual_rms);
  }
}

TEST_CASE("power-law fits") {
  std::vector<double> ts, ds;
  for (int i = 1; i <= 100; ++i) {
    ts.push_back(i);
    ds.push_back(2.0 * std::pow(i, -1.5));
  }
  SECTION("noiseless recovery is exact") {
    const auto fit = fit_powerlaw(ts, ds, 1.0, 100.0);
    REQUIRE(fit.rate_or_exponent == Catch::Approx(1.5).margin(1e-10));
    REQUIRE(fit.amplitude == Catch::Approx(2.0).margin(1e-9));
  }
  SECTION("noisy recovery within 3 sigma") {
    Rng rng = make_rng(202);
    int hits = 0;
    for (int mc = 0; mc < 40; ++mc) {
      std::vector<double> noisy = ds;
      for (auto& v : noisy) v *= 1.0 + 0.02 * gaussian(rng);
      const auto fit = fit_powerlaw(ts, noisy, 1.0, 100.0);
      if (std::abs(fit.rate_or_exponent - 1.5) <= 3.0 * fit.rate_std_error) ++hits;
    }
    REQUIRE(hits >= 36);
  }
}

TEST_CASE("fit_window_end finds the noise crossing") {
  std::vector<double> ts, ds, errs;
  for (int i = 0; i <= 30; ++i) {
    ts.push_back(i);
    ds.push_back(std::exp(-0.5 * i));
    errs.push_back(0.01);
  }
  // exp(-0.5 t) < 0.03 for t > ~7
  const double end = fit_window_end(ts, ds, errs, 5.0);
  REQUIRE(end == 7.0);
}

TEST_CASE("saturation_time") {
  SECTION("analytic exponential crossing") {
    std::vector<double> ts, ds;
    for (int i = 0; i <= 20; ++i) {
      ts.push_back(i);
      ds.push_back(std::exp(-static_cast<double>(i)));
    }
    const auto sat = saturation_time(ts, ds, std::exp(-5.0) * 1.0000001, 5);
    REQUIRE(sat.defined);
    REQUIRE(sat.t_sat == Catch::Approx(5.0).margin(1.0));
  }
  SECTION("power-law crossing at t = 100") {
    std::vector<double> ts, ds;
    for (int i = 1; i <= 200; ++i) {
      ts.push_back(i);
      ds.push_back(1.0 / i);
    }
    const auto sat = saturation_time(ts, ds, 0.01000001, 5);
    REQUIRE(sat.defined);
    REQUIRE(sat.t_sat == Catch::Approx(100.0).margin(1.0));
  }
  SECTION("transient dips are rejected until persistence holds") {
    std::vector<double> ts, ds;
    for (int i = 0; i < 30; ++i) {
      ts.push_back(i);
      ds.push_back(1.0);
    }
    ds[5] = 0.001;             // single dip
    for (int i = 20; i < 30; ++i) ds[static_cast<std::size_t>(i)] = 0.001;
    const auto sat = saturation_time(ts, ds, 0.01, 5);
    REQUIRE(sat.defined);
    REQUIRE(sat.t_sat == 20.0);
  }
  SECTION("never-crossing series is undefined, not an error") {
    std::vector<double> ts{0, 1, 2}, ds{1.0, 1.0, 1.0};
    const auto sat = saturation_time(ts, ds, 0.5, 2);
    REQUIRE_FALSE(sat.defined);
  }
}

TEST_CASE("scaling_fit distinguishes log from linear growth") {
  SECTION("exact logarithmic input") {
    std::map<int, double> tsat;
    for (int n : {8, 12, 16, 20}) tsat[n] = 2.0 * std::log2(n) + 1.0;
    const auto fit = scaling_fit(tsat);
    REQUIRE(fit.log_residual_rms < 1e-12);
    REQUIRE(fit.log_residual_rms < fit.linear_residual_rms);
    REQUIRE(fit.log_slope == Catch::Approx(2.0));
  }
  SECTION("exact linear input") {
    std::map<int, double> tsat;
    for (int n : {8, 12, 16, 20}) tsat[n] = 0.7 * n + 2.0;
    const auto fit = scaling_fit(tsat);
    REQUIRE(fit.linear_residual_rms < 1e-12);
    REQUIRE(fit.linear_residual_rms < fit.log_residual_rms);
    REQUIRE(fit.linear_slope == Catch::Approx(0.7));
  }
  SECTION("paper-like KIM numbers favor the log model") {
    // synthesize t_sat = ln(A/eps)/alpha with A proportional to N
    std::map<int, double> tsat;
    const double alpha = 0.28, eps = 0.2;
    for (int n : {8, 12, 16, 20})
      tsat[n] = std::log(0.25 * n / eps) / alpha;
    const auto fit = scaling_fit(tsat);
    REQUIRE(fit.log_residual_rms < fit.linear_residual_rms);
  }
  SECTION("t_sat spacing between N and 2N equals ln2/alpha for A propto N") {
    const double alpha = 0.4, eps = 0.1;
    const auto tsat = [&](int n) { return std::log(0.3 * n / eps) / alpha; };
    REQUIRE(tsat(16) - tsat(8) == Catch::Approx(std::log(2.0) / alpha).margin(1e-12));
  }
  SECTION("fewer than 4 sizes throws") {
    std::map<int, double> tsat{{8, 1.0}, {12, 2.0}, {16, 3.0}};
    REQUIRE_THROWS_AS(scaling_fit(tsat), std::invalid_argument);
  }
}

TEST_CASE("ensemble reductions") {
  SECTION("percentiles are monotone in rank and stable under relabeling") {
    Rng rng = make_rng(203);
    EnsembleSeries s;
    s.times = {0, 1, 2, 3};
    for (int r = 0; r < 37; ++r) {
      std::vector<double> row;
      for (int i = 0; i < 4; ++i) row.push_back(gaussian(rng));
      s.values.push_back(row);
    }
    EnsembleSeries shuffled = s;
    std::shuffle(shuffled.values.begin(), shuffled.values.end(), rng);
    for (std::size_t i = 0; i < 4; ++i) {
      double prev = -1e300;
      for (double q : {20.0, 33.0, 50.0, 66.0, 80.0}) {
        const double v = s.percentile(q, i);
        REQUIRE(v >= prev);
        prev = v;
        REQUIRE(v == shuffled.percentile(q, i));
      }
      REQUIRE(s.mean(i) == Catch::Approx(shuffled.mean(i)).margin(1e-12));
    }
  }
  SECTION("t_sat from the exponential law matches ln(A/eps)/alpha on synthetic data") {
    const double alpha = 0.35, amp = 4.0, eps = 0.05;
    std::vector<double> ts, ds;
    for (int i = 0; i <= 60; ++i) {
      ts.push_back(i);
      ds.push_back(amp * std::exp(-alpha * i));
    }
    const auto sat = saturation_time(ts, ds, eps, 5);
    REQUIRE(sat.defined);
    REQUIRE(std::abs(sat.t_sat - std::log(amp / eps) / alpha) <= 1.0);
  }
}
