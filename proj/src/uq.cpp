#include "pmsm/uq.hpp"

#include <cmath>
#include <random>

#include "pmsm/error.hpp"
#include "pmsm/quadrature.hpp"

namespace pmsm {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// uniform in [0,1) from the high 53 bits
double uniform53(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

void check_qoi(const std::vector<double>& v, int n_qoi) {
  if (static_cast<int>(v.size()) != n_qoi)
    fail(ErrorCode::Uq, "evaluator returned the wrong number of quantities");
}

}  // namespace

RandomInputModel::RandomInputModel(double sigma_r0, double r0_bound)
    : sigma_(sigma_r0), bound_(r0_bound) {
  if (!(sigma_ > 0.0) || !(bound_ > 0.0))
    fail(ErrorCode::Uq, "sigma and truncation bound must be positive");
}

SampleInputs RandomInputModel::draw(std::uint64_t seed,
                                    std::uint64_t sample_id,
                                    int* rejections) const {
  std::mt19937_64 gen(
      splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (sample_id + 1))));
  SampleInputs s;
  for (int tries = 0; tries < 1024; ++tries) {
    const double u1 = 1.0 - uniform53(gen);  // (0,1], keeps log() finite
    const double u2 = uniform53(gen);
    s.r0 = sigma_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    if (std::abs(s.r0) < bound_) {
      s.theta0 = kPi * uniform53(gen);
      return s;
    }
    if (rejections) ++*rejections;
  }
  fail(ErrorCode::Uq, "truncated normal rejected 1024 draws in a row");
}

std::uint64_t mc_sample_id(int slot, int attempt) {
  return static_cast<std::uint64_t>(slot) |
         (static_cast<std::uint64_t>(attempt) << 48);
}

std::array<SampleInputs, 4> sobol_quadruple(const RandomInputModel& inputs,
                                            std::uint64_t seed, int j) {
  const SampleInputs a = inputs.draw(seed, 2 * static_cast<std::uint64_t>(j));
  const SampleInputs b =
      inputs.draw(seed, 2 * static_cast<std::uint64_t>(j) + 1);
  return {a, b, SampleInputs{b.r0, a.theta0}, SampleInputs{a.r0, b.theta0}};
}

McResult mc_estimate(const RandomInputModel& inputs, std::uint64_t seed, int n,
                     int n_qoi, const Evaluator& f,
                     double max_failure_fraction) {
  if (n < 2) fail(ErrorCode::Uq, "Monte Carlo needs at least 2 samples");
  McResult res;
  res.n_requested = n;
  std::vector<std::vector<double>> values;
  values.reserve(n);
  const int max_failures = static_cast<int>(max_failure_fraction * n);
  for (int j = 0; j < n; ++j) {
    for (int attempt = 0;; ++attempt) {
      const SampleInputs s =
          inputs.draw(seed, mc_sample_id(j, attempt), &res.n_rejected_draws);
      try {
        auto v = f(s);
        check_qoi(v, n_qoi);
        values.push_back(std::move(v));
        break;
      } catch (const Error&) {
        if (++res.n_failed > max_failures)
          fail(ErrorCode::Uq,
               "Monte Carlo failure rate exceeded " +
                   std::to_string(int(max_failure_fraction * 100)) + "%");
      }
    }
  }
  res.n_used = static_cast<int>(values.size());
  if (res.n_used < 2) fail(ErrorCode::Uq, "not enough successful samples");

  res.mean.assign(n_qoi, 0.0);
  res.variance.assign(n_qoi, 0.0);
  res.mc_error.assign(n_qoi, 0.0);
  for (const auto& v : values)
    for (int q = 0; q < n_qoi; ++q) res.mean[q] += v[q];
  for (int q = 0; q < n_qoi; ++q) res.mean[q] /= res.n_used;
  for (const auto& v : values)
    for (int q = 0; q < n_qoi; ++q) {
      const double d = v[q] - res.mean[q];
      res.variance[q] += d * d;
    }
  for (int q = 0; q < n_qoi; ++q) {
    res.variance[q] /= (res.n_used - 1);
    res.mc_error[q] = std::sqrt(res.variance[q] / res.n_used);
  }
  return res;
}

void gpc_grid(const RandomInputModel& inputs, int n_hermite, int n_legendre,
              std::vector<SampleInputs>* points, std::vector<double>* weights) {
  if (n_hermite < 1 || n_legendre < 1)
    fail(ErrorCode::Uq, "collocation needs at least one node per input");
  const quad::Rule herm = quad::gauss_hermite(n_hermite);
  const quad::Rule leg = quad::gauss_legendre(n_legendre, 0.0, kPi);
  points->clear();
  weights->clear();
  for (int jt = 0; jt < n_legendre; ++jt) {
    for (int jr = 0; jr < n_hermite; ++jr) {
      SampleInputs s;
      s.r0 = inputs.sigma() * herm.nodes[jr];
      s.theta0 = leg.nodes[jt];
      if (std::abs(s.r0) >= inputs.bound())
        fail(ErrorCode::Uq,
             "collocation node exceeds the eccentricity bound; reduce "
             "sigma_r0 or the Hermite node count");
      points->push_back(s);
      weights->push_back(herm.weights[jr] * leg.weights[jt]);
    }
  }
}

GpcResult gpc_estimate(const RandomInputModel& inputs, int n_hermite,
                       int n_legendre, int n_qoi, const Evaluator& f) {
  GpcResult res;
  res.nodes_r0 = n_hermite;
  res.nodes_theta0 = n_legendre;
  gpc_grid(inputs, n_hermite, n_legendre, &res.grid, &res.weights);
  res.mean.assign(n_qoi, 0.0);
  res.variance.assign(n_qoi, 0.0);
  std::vector<double> second(n_qoi, 0.0);
  for (std::size_t g = 0; g < res.grid.size(); ++g) {
    auto v = f(res.grid[g]);  // any failure aborts via the evaluator throw
    check_qoi(v, n_qoi);
    ++res.n_evals;
    const double w = res.weights[g];
    for (int q = 0; q < n_qoi; ++q) {
      res.mean[q] += w * v[q];
      second[q] += w * v[q] * v[q];
    }
  }
  for (int q = 0; q < n_qoi; ++q)
    res.variance[q] = std::max(0.0, second[q] - res.mean[q] * res.mean[q]);
  return res;
}

SobolResult sobol_sensitivity(const RandomInputModel& inputs,
                              std::uint64_t seed, int n_base, int n_qoi,
                              const Evaluator& f,
                              double max_failure_fraction) {
  if (n_base < 4) fail(ErrorCode::Uq, "need at least 4 base samples");
  SobolResult res;
  res.n_base = n_base;

  // quadruple per base sample j: F_aa=f(A), F_bb=f(B), F_ba=f(A_B^{r0}),
  // F_ab=f(A_B^{theta0}); A draws use sample id 2j, B draws 2j+1
  struct Quad {
    std::vector<double> aa, bb, ba, ab;
  };
  std::vector<Quad> quads;
  quads.reserve(n_base);
  for (int j = 0; j < n_base; ++j) {
    const auto pts = sobol_quadruple(inputs, seed, j);
    try {
      Quad qd;
      qd.aa = f(pts[0]);
      qd.bb = f(pts[1]);
      qd.ba = f(pts[2]);
      qd.ab = f(pts[3]);
      check_qoi(qd.aa, n_qoi);
      check_qoi(qd.bb, n_qoi);
      check_qoi(qd.ba, n_qoi);
      check_qoi(qd.ab, n_qoi);
      quads.push_back(std::move(qd));
    } catch (const Error&) {
      ++res.n_failed;
    }
  }
  if (res.n_failed > max_failure_fraction * n_base)
    fail(ErrorCode::Uq, "too many failed pick-freeze quadruples");
  res.n_used = static_cast<int>(quads.size());
  if (res.n_used < 4) fail(ErrorCode::Uq, "not enough successful quadruples");
  const double N = res.n_used;

  res.total_variance.assign(n_qoi, 0.0);
  res.first_r0.assign(n_qoi, 0.0);
  res.first_theta0.assign(n_qoi, 0.0);
  res.total_r0.assign(n_qoi, 0.0);
  res.total_theta0.assign(n_qoi, 0.0);

  for (int q = 0; q < n_qoi; ++q) {
    // overall variance from the 2N independent values (A and B columns)
    double m = 0.0;
    for (const auto& qd : quads) m += qd.aa[q] + qd.bb[q];
    m /= 2.0 * N;
    double var = 0.0;
    for (const auto& qd : quads) {
      var += (qd.aa[q] - m) * (qd.aa[q] - m);
      var += (qd.bb[q] - m) * (qd.bb[q] - m);
    }
    var /= 2.0 * N - 1.0;

    // replicated pick-freeze differences: each variance component is the
    // mean product of its two independent replicates
    double v_r0 = 0.0, v_t0 = 0.0, v_int = 0.0;
    for (const auto& qd : quads) {
      // r0 effect: theta0 frozen in each factor
      v_r0 += (qd.aa[q] - qd.ba[q]) * (qd.ab[q] - qd.bb[q]);
      // theta0 effect: r0 frozen in each factor
      v_t0 += (qd.aa[q] - qd.ab[q]) * (qd.ba[q] - qd.bb[q]);
      const double d = qd.aa[q] - qd.ab[q] - qd.ba[q] + qd.bb[q];
      v_int += d * d;
    }
    v_r0 /= 2.0 * N;
    v_t0 /= 2.0 * N;
    v_int /= 4.0 * N;

    res.total_variance[q] = var;
    if (var > 0.0) {
      // small components are reported directly, large ones as complements,
      // so the estimator error stays on the scale of the small components
      if (v_r0 <= v_t0) {
        res.first_r0[q] = v_r0 / var;
        res.first_theta0[q] = 1.0 - (v_r0 + v_int) / var;
        res.total_theta0[q] = 1.0 - v_r0 / var;
        res.total_r0[q] = (v_r0 + v_int) / var;
      } else {
        res.first_theta0[q] = v_t0 / var;
        res.first_r0[q] = 1.0 - (v_t0 + v_int) / var;
        res.total_r0[q] = 1.0 - v_t0 / var;
        res.total_theta0[q] = (v_t0 + v_int) / var;
      }
    }
  }
  return res;
}

MethodComparison compare_methods(const McResult& mc, const GpcResult& gpc) {
  if (mc.mean.size() != gpc.mean.size())
    fail(ErrorCode::Uq, "method comparison needs matching quantity lists");
  MethodComparison cmp;
  for (std::size_t q = 0; q < mc.mean.size(); ++q) {
    cmp.mu_mc.push_back(mc.mean[q]);
    cmp.mu_gpc.push_back(gpc.mean[q]);
    cmp.eps_mc.push_back(mc.mc_error[q]);
    cmp.abs_diff.push_back(std::abs(mc.mean[q] - gpc.mean[q]));
    cmp.within.push_back(cmp.abs_diff.back() <= 3.0 * mc.mc_error[q]);
  }
  return cmp;
}

}  // namespace pmsm
