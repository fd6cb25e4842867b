#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pmsm/error.hpp"
#include "pmsm/uq.hpp"

using pmsm::gpc_estimate;
using pmsm::mc_estimate;
using pmsm::RandomInputModel;
using pmsm::SampleInputs;
using pmsm::sobol_sensitivity;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("draws are a pure function of seed and sample id") {
  RandomInputModel model(0.5e-3, 2.0e-3);
  auto a = model.draw(42, 7);
  auto b = model.draw(42, 7);
  CHECK(a.r0 == b.r0);
  CHECK(a.theta0 == b.theta0);

  auto c = model.draw(42, 8);
  CHECK(a.r0 != c.r0);
  auto d = model.draw(43, 7);
  CHECK(a.r0 != d.r0);
}

TEST_CASE("truncation keeps every draw inside the bound and counts redraws") {
  RandomInputModel model(1.0, 0.5);  // aggressive truncation
  int rejections = 0;
  for (int i = 0; i < 2000; ++i) {
    auto s = model.draw(1, i, &rejections);
    CHECK(std::abs(s.r0) < 0.5);
    CHECK(s.theta0 >= 0.0);
    CHECK(s.theta0 < kPi);
  }
  CHECK(rejections > 0);  // N(0,1) beyond +-0.5 sigma gets redrawn often
}

TEST_CASE("draw moments match the input model") {
  const double sigma = 0.7;
  RandomInputModel model(sigma, 100.0);  // effectively untruncated
  const int n = 20000;
  double sr = 0.0, srr = 0.0, st = 0.0, stt = 0.0;
  for (int i = 0; i < n; ++i) {
    auto s = model.draw(9, i);
    sr += s.r0;
    srr += s.r0 * s.r0;
    st += s.theta0;
    stt += s.theta0 * s.theta0;
  }
  sr /= n;
  srr /= n;
  st /= n;
  stt /= n;
  CHECK(std::abs(sr) < 4.0 * sigma / std::sqrt(double(n)));
  CHECK(srr == doctest::Approx(sigma * sigma).epsilon(0.05));
  CHECK(st == doctest::Approx(kPi / 2.0).epsilon(0.02));
  CHECK(stt == doctest::Approx(kPi * kPi / 3.0).epsilon(0.03));
}

TEST_CASE("sample ids separate slots from retry attempts") {
  CHECK(pmsm::mc_sample_id(5, 0) != pmsm::mc_sample_id(5, 1));
  CHECK(pmsm::mc_sample_id(5, 0) != pmsm::mc_sample_id(6, 0));
  CHECK(pmsm::mc_sample_id(0, 1) != pmsm::mc_sample_id(1, 0));
}

TEST_CASE("Monte Carlo estimates E[R0^2] with a calibrated error bar") {
  const double sigma = 0.4;
  RandomInputModel model(sigma, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0 * s.r0};
  };

  const int n = 4000;
  auto res = mc_estimate(model, 123, n, 1, f);
  CHECK(res.n_requested == n);
  CHECK(res.n_used == n);
  CHECK(res.n_failed == 0);

  const double exact = sigma * sigma;
  CHECK(std::abs(res.mean[0] - exact) < 4.0 * res.mc_error[0]);
  // Var(R0^2) = 2 sigma^4, so the reported error bar is known too
  const double eps_exact = std::sqrt(2.0) * sigma * sigma / std::sqrt(double(n));
  CHECK(res.mc_error[0] == doctest::Approx(eps_exact).epsilon(0.25));
}

TEST_CASE("reported MC error tracks the replicate scatter and 1/sqrt(N)") {
  const double sigma = 1.0;
  RandomInputModel model(sigma, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0 * s.r0};
  };

  // replicate scatter vs the reported error bar at fixed N
  const int n = 500, reps = 30;
  std::vector<double> means;
  double eps_avg = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto res = mc_estimate(model, 1000 + r, n, 1, f);
    means.push_back(res.mean[0]);
    eps_avg += res.mc_error[0];
  }
  eps_avg /= reps;
  double m = 0.0;
  for (double v : means) m += v;
  m /= reps;
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  const double scatter = std::sqrt(var / (reps - 1));
  CHECK(eps_avg == doctest::Approx(scatter).epsilon(0.5));

  // error bar slope vs N is -1/2
  auto e1 = mc_estimate(model, 77, 200, 1, f);
  auto e2 = mc_estimate(model, 77, 3200, 1, f);
  const double slope = std::log(e2.mc_error[0] / e1.mc_error[0]) /
                       std::log(3200.0 / 200.0);
  CHECK(std::abs(slope + 0.5) < 0.15);
}

TEST_CASE("failed samples are redrawn deterministically") {
  RandomInputModel model(1.0, 100.0);
  const double cut = 1.2;
  auto f = [&](const SampleInputs& s) {
    if (s.r0 > cut) throw pmsm::Error(pmsm::ErrorCode::Solver, "synthetic");
    return std::vector<double>{s.r0};
  };

  auto res = mc_estimate(model, 5, 400, 1, f, 0.5);
  CHECK(res.n_used == 400);
  CHECK(res.n_failed > 0);

  // deterministic: the same call reproduces the estimate bit for bit
  auto res2 = mc_estimate(model, 5, 400, 1, f, 0.5);
  CHECK(res.mean[0] == res2.mean[0]);
  CHECK(res.n_failed == res2.n_failed);

  // a tight failure budget aborts
  CHECK_THROWS_AS(mc_estimate(model, 5, 400, 1, f, 0.01), pmsm::Error);
}

TEST_CASE("gPC tensor grid: normalized weights, bound checking") {
  RandomInputModel model(0.4, 100.0);
  std::vector<SampleInputs> pts;
  std::vector<double> w;
  pmsm::gpc_grid(model, 5, 5, &pts, &w);
  CHECK(pts.size() == 25);
  CHECK(w.size() == 25);
  double ws = 0.0;
  for (double x : w) ws += x;
  CHECK(ws == doctest::Approx(1.0).epsilon(1e-13));
  // r0 index runs fastest
  CHECK(pts[0].theta0 == pts[4].theta0);
  CHECK(pts[0].r0 == pts[5].r0);
  for (const auto& p : pts) {
    CHECK(p.theta0 > 0.0);
    CHECK(p.theta0 < kPi);
  }

  // a 5-node Hermite rule reaches 2.857 sigma: reject a tighter bound
  RandomInputModel narrow(1.0, 2.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0};
  };
  CHECK_THROWS_AS(gpc_estimate(narrow, 5, 5, 1, f), pmsm::Error);
}

TEST_CASE("gPC collocation integrates polynomial QoIs exactly") {
  const double sigma = 0.4;
  RandomInputModel model(sigma, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0 * s.r0, s.theta0, s.theta0 * s.theta0};
  };
  auto res = gpc_estimate(model, 5, 5, 3, f);
  CHECK(res.n_evals == 25);
  CHECK(res.mean[0] == doctest::Approx(sigma * sigma).epsilon(1e-12));
  CHECK(res.mean[1] == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  CHECK(res.mean[2] == doctest::Approx(kPi * kPi / 3.0).epsilon(1e-12));
  // Var(R0^2) = E[R0^4] - sigma^4 = 2 sigma^4, degree 4 is exact at 5 nodes
  CHECK(res.variance[0] ==
        doctest::Approx(2.0 * std::pow(sigma, 4)).epsilon(1e-11));
  CHECK(res.variance[1] ==
        doctest::Approx(kPi * kPi / 12.0).epsilon(1e-12));
}

TEST_CASE("gPC level refinement converges on a smooth non-polynomial") {
  RandomInputModel model(0.5, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{std::exp(s.r0) * std::sin(s.theta0)};
  };
  auto g3 = gpc_estimate(model, 3, 3, 1, f);
  auto g5 = gpc_estimate(model, 5, 5, 1, f);
  auto g7 = gpc_estimate(model, 7, 7, 1, f);
  // exact mean: e^{sigma^2/2} * (2/pi)
  const double exact = std::exp(0.125) * 2.0 / kPi;
  CHECK(std::abs(g7.mean[0] - exact) < 1e-6);
  CHECK(std::abs(g5.mean[0] - g7.mean[0]) <=
        std::abs(g3.mean[0] - g7.mean[0]) + 1e-15);
}

TEST_CASE("Sobol indices of an additive model") {
  const double sigma = 1.0;
  RandomInputModel model(sigma, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0 + s.theta0};
  };
  auto res = sobol_sensitivity(model, 31, 2000, 1, f);
  CHECK(res.n_used == 2000);

  const double v_r = sigma * sigma;
  const double v_t = kPi * kPi / 12.0;
  const double s_r = v_r / (v_r + v_t);
  CHECK(res.total_variance[0] == doctest::Approx(v_r + v_t).epsilon(0.08));
  CHECK(std::abs(res.first_r0[0] - s_r) < 0.05);
  CHECK(std::abs(res.first_theta0[0] - (1.0 - s_r)) < 0.05);
  // additive: no interaction, totals equal firsts
  CHECK(std::abs(res.total_r0[0] - res.first_r0[0]) < 0.03);
  CHECK(std::abs(res.total_theta0[0] - res.first_theta0[0]) < 0.03);
}

TEST_CASE("Sobol indices of a pure interaction") {
  RandomInputModel model(1.0, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0 * (s.theta0 - kPi / 2.0)};
  };
  auto res = sobol_sensitivity(model, 57, 4000, 1, f);
  CHECK(std::abs(res.first_r0[0]) < 0.05);
  CHECK(std::abs(res.first_theta0[0]) < 0.05);
  CHECK(res.total_r0[0] == doctest::Approx(1.0).epsilon(0.08));
  CHECK(res.total_theta0[0] == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("an inert input is detected exactly, not statistically") {
  RandomInputModel model(0.8, 100.0);
  auto f = [](const SampleInputs& s) {
    return std::vector<double>{s.r0 * s.r0};
  };
  auto res = sobol_sensitivity(model, 11, 500, 1, f);
  // swapping theta0 never changes the value, so its pick-freeze difference
  // is identically zero
  CHECK(res.first_theta0[0] == 0.0);
  CHECK(std::abs(res.total_theta0[0]) < 1e-12);
  CHECK(res.total_r0[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.first_r0[0] == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("method comparison flags disagreement beyond 3 sigma") {
  pmsm::McResult mc;
  mc.mean = {1.0, 2.0};
  mc.mc_error = {0.1, 0.001};
  pmsm::GpcResult gpc;
  gpc.mean = {1.25, 2.01};
  auto cmp = pmsm::compare_methods(mc, gpc);
  CHECK(cmp.abs_diff[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(cmp.within[0]);
  CHECK(cmp.abs_diff[1] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(!cmp.within[1]);
}
