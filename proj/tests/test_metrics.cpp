#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ctal/errors.hpp"
#include "ctal/metrics.hpp"
#include "ctal/rng.hpp"

using namespace ctal;

namespace {

// Independent sweep reference: naive counting at every distinct score, linear
// interpolation between the operating points that bracket FAR == FRR.
double eer_reference(const std::vector<double>& same, const std::vector<double>& diff) {
  std::vector<double> thresholds;
  thresholds.insert(thresholds.end(), same.begin(), same.end());
  thresholds.insert(thresholds.end(), diff.begin(), diff.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  auto rates = [&](double theta) {
    long fa = 0, fr = 0;
    for (double d : diff)
      if (d >= theta) ++fa;
    for (double s : same)
      if (s < theta) ++fr;
    return std::pair<double, double>(static_cast<double>(fa) / diff.size(),
                                     static_cast<double>(fr) / same.size());
  };
  double f_prev = 1.0, r_prev = 0.0;
  for (double theta : thresholds) {
    auto [f, r] = rates(theta);
    if (f <= r) {
      const double d0 = f_prev - r_prev, d1 = f - r;
      if (d0 - d1 == 0.0) return (f + r) / 2.0;
      const double t = d0 / (d0 - d1);
      return r_prev + t * (r - r_prev);
    }
    f_prev = f;
    r_prev = r;
  }
  const double d0 = f_prev - r_prev, d1 = -1.0;
  const double t = d0 / (d0 - d1);
  return r_prev + t * (1.0 - r_prev);
}

}  // namespace

TEST_CASE("wa/ua: perfect predictions, hand-counted case, error on absent class") {
  auto [wa1, ua1] = metric_wa_ua({2, 0, 1, 3}, {2, 0, 1, 3}, 4);
  CHECK(wa1 == 1.0);
  CHECK(ua1 == 1.0);

  auto [wa2, ua2] = metric_wa_ua({0, 0, 0, 0}, {0, 0, 0, 1}, 2);
  CHECK(wa2 == doctest::Approx(0.75));
  CHECK(ua2 == doctest::Approx(0.5));

  CHECK_THROWS_AS(metric_wa_ua({0, 1}, {0, 0}, 2), MetricError);
}

TEST_CASE("wa/ua: uniform random predictions over balanced classes give UA near 1/C") {
  const int C = 4, n = 40000;
  Rng rng(17);
  std::vector<int> preds(n), golds(n);
  for (int i = 0; i < n; ++i) {
    golds[i] = i % C;
    preds[i] = uniform_int(rng, 0, C - 1);
  }
  auto [wa, ua] = metric_wa_ua(preds, golds, C);
  const double sigma = std::sqrt(0.25 * 0.75 / n) * 3;
  CHECK(std::abs(ua - 0.25) < 3 * sigma + 0.01);
  CHECK(std::abs(wa - 0.25) < 3 * sigma + 0.01);
}

TEST_CASE("acc2/f1: trivial and formula-derived values") {
  auto [a1, f1] = metric_acc2_f1({1.0, -2.0, 0.5, -0.1}, {2.0, -1.0, 0.2, -3.0});
  CHECK(a1 == 1.0);
  CHECK(f1 == 1.0);

  // all positive predictions, half the golds positive
  std::vector<double> preds(8, 1.0), golds = {1, 1, 1, 1, -1, -1, -1, -1};
  auto [a2, f2] = metric_acc2_f1(preds, golds);
  CHECK(a2 == doctest::Approx(0.5));
  CHECK(f2 == doctest::Approx(2.0 * 0.5 * 1.0 / 1.5));

  // gold zero counts as negative
  auto [a3, f3] = metric_acc2_f1({-1.0}, {0.0});
  CHECK(a3 == 1.0);
  (void)f3;
}

TEST_CASE("acc2/f1: sign flip tracked by direct recomputation") {
  Rng rng(23);
  std::vector<double> preds, golds;
  for (int i = 0; i < 500; ++i) {
    preds.push_back(normal(rng));
    golds.push_back(normal(rng));
  }
  auto flip = [](std::vector<double> v) {
    for (auto& x : v) x = -x;
    return v;
  };
  auto [a, f] = metric_acc2_f1(flip(preds), flip(golds));
  // oracle: recompute the flipped confusion directly
  long tp = 0, fp = 0, fn = 0, hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const bool p = -preds[i] > 0, g = -golds[i] > 0;
    hits += p == g;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  const double prec = tp + fp ? double(tp) / (tp + fp) : 0.0;
  const double rec = tp + fn ? double(tp) / (tp + fn) : 0.0;
  CHECK(a == doctest::Approx(double(hits) / preds.size()));
  CHECK(f == doctest::Approx(prec + rec ? 2 * prec * rec / (prec + rec) : 0.0));
}

TEST_CASE("mae/corr: exact agreement, anti-correlation, formula oracle, zero variance") {
  auto [m1, c1] = metric_mae_corr({1, 2, 3}, {1, 2, 3});
  CHECK(m1 == 0.0);
  CHECK(c1 == doctest::Approx(1.0));

  auto [m2, c2] = metric_mae_corr({-1, -2, -3}, {1, 2, 3});
  CHECK(c2 == doctest::Approx(-1.0));
  CHECK(m2 == doctest::Approx((2.0 + 4.0 + 6.0) / 3));

  Rng rng(29);
  std::vector<double> p, g;
  for (int i = 0; i < 300; ++i) {
    g.push_back(normal(rng));
    p.push_back(0.6 * g.back() + 0.4 * normal(rng));
  }
  auto [mae, corr] = metric_mae_corr(p, g);
  double mp = 0, mg = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    mp += p[i];
    mg += g[i];
  }
  mp /= p.size();
  mg /= g.size();
  double spp = 0, sgg = 0, spg = 0, mref = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    spp += (p[i] - mp) * (p[i] - mp);
    sgg += (g[i] - mg) * (g[i] - mg);
    spg += (p[i] - mp) * (g[i] - mg);
    mref += std::abs(p[i] - g[i]);
  }
  CHECK(mae == doctest::Approx(mref / p.size()).epsilon(1e-12));
  CHECK(corr == doctest::Approx(spg / std::sqrt(spp * sgg)).epsilon(1e-12));

  CHECK_THROWS_AS(metric_mae_corr({1, 1, 1}, {1, 2, 3}), MetricError);
  CHECK_THROWS_AS(metric_mae_corr({1}, {1}), MetricError);
}

TEST_CASE("eer: perfect separation gives zero") {
  CHECK(metric_eer({0.9, 0.8, 0.95}, {0.1, 0.2, 0.3}) == doctest::Approx(0.0));
}

TEST_CASE("eer: identical score distributions sit near one half") {
  Rng rng(31);
  std::vector<double> same(10000), diff(10000);
  for (int i = 0; i < 10000; ++i) {
    same[i] = normal(rng);
    diff[i] = normal(rng);
  }
  const double eer = metric_eer(same, diff);
  CHECK(std::abs(eer - 0.5) < 0.02);
}

TEST_CASE("eer: invariant under strictly monotone transforms") {
  Rng rng(37);
  std::vector<double> same, diff;
  for (int i = 0; i < 400; ++i) {
    same.push_back(normal(rng, 1.0, 1.0));
    diff.push_back(normal(rng, -1.0, 1.0));
  }
  const double base = metric_eer(same, diff);
  auto mono = [](std::vector<double> v) {
    for (auto& x : v) x = std::tanh(0.7 * x) * 3 + x * 0.001;
    return v;
  };
  CHECK(metric_eer(mono(same), mono(diff)) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("eer: matches the sweep reference on random sets, including swaps") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> same, diff;
    const int ns = uniform_int(rng, 2, 60), nd = uniform_int(rng, 2, 60);
    const double gap = uniform_real(rng, -1.0, 2.0);
    for (int i = 0; i < ns; ++i) same.push_back(normal(rng, gap, 1.0));
    for (int i = 0; i < nd; ++i) diff.push_back(normal(rng, 0.0, 1.0));
    CHECK(metric_eer(same, diff) == doctest::Approx(eer_reference(same, diff)).epsilon(1e-9));
    CHECK(metric_eer(diff, same) == doctest::Approx(eer_reference(diff, same)).epsilon(1e-9));
  }
}

TEST_CASE("metric preconditions") {
  CHECK_THROWS_AS(metric_eer({}, {0.1}), MetricError);
  CHECK_THROWS_AS(metric_wa_ua({}, {}, 2), MetricError);
  CHECK_THROWS_AS(metric_acc2_f1({}, {}), MetricError);
}
