#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace pmsm {

// One draw of the random inputs: displacement magnitude (signed, m) and
// displacement direction (rad).
struct SampleInputs {
  double r0 = 0.0;
  double theta0 = 0.0;
};

// R0 ~ N(0, sigma^2) truncated to |R0| < bound (in-stream redraw),
// theta0 ~ U(0, pi). Draws are a pure function of (seed, sample_id): the
// generator is seeded per sample, so results do not depend on evaluation
// order or thread count.
class RandomInputModel {
 public:
  RandomInputModel(double sigma_r0, double r0_bound);

  // `rejections`, when non-null, is incremented by the number of truncated
  // (redrawn) normal draws consumed by this sample.
  SampleInputs draw(std::uint64_t seed, std::uint64_t sample_id,
                    int* rejections = nullptr) const;

  double sigma() const { return sigma_; }
  double bound() const { return bound_; }

 private:
  double sigma_;
  double bound_;
};

// Sample id of Monte Carlo slot j, attempt a (failed simulations are
// redrawn deterministically with the next attempt id).
std::uint64_t mc_sample_id(int slot, int attempt);

// The four pick-freeze points of base sample j, in evaluation order:
// [f(A), f(B), f(A_B^{r0}), f(A_B^{theta0})]. A uses sample id 2j, B 2j+1.
std::array<SampleInputs, 4> sobol_quadruple(const RandomInputModel& inputs,
                                            std::uint64_t seed, int j);

// Evaluates the quantities of interest for one input draw; throws on a
// failed simulation.
using Evaluator = std::function<std::vector<double>(const SampleInputs&)>;

struct McResult {
  int n_requested = 0;
  int n_used = 0;
  int n_failed = 0;          // failed simulations (each slot was redrawn)
  int n_rejected_draws = 0;  // truncated normals redrawn in-stream
  std::vector<double> mean;
  std::vector<double> variance;  // unbiased, 1/(n-1)
  std::vector<double> mc_error;  // sigma_hat / sqrt(n_used)
};

// Plain Monte Carlo over sample slots 0..n-1. A failed evaluation is logged
// and its slot redrawn with the next attempt id; a failure rate above
// `max_failure_fraction` aborts the estimate.
McResult mc_estimate(const RandomInputModel& inputs, std::uint64_t seed, int n,
                     int n_qoi, const Evaluator& f,
                     double max_failure_fraction = 0.05);

struct GpcResult {
  int nodes_r0 = 0;
  int nodes_theta0 = 0;
  int n_evals = 0;
  std::vector<double> mean;
  std::vector<double> variance;
  // tensor-grid nodes and weights actually used (row-major, r0 fastest)
  std::vector<SampleInputs> grid;
  std::vector<double> weights;
};

// The tensor collocation grid (r0 index fastest) with probability weights.
void gpc_grid(const RandomInputModel& inputs, int n_hermite, int n_legendre,
              std::vector<SampleInputs>* points, std::vector<double>* weights);

// Collocation on a tensor grid: Gauss-Hermite in R0 (exact normal weight,
// no truncation) x Gauss-Legendre in theta0 on (0, pi). Errors if a node
// falls outside the eccentricity bound; any evaluation failure aborts
// (quadrature cannot drop nodes).
GpcResult gpc_estimate(const RandomInputModel& inputs, int n_hermite,
                       int n_legendre, int n_qoi, const Evaluator& f);

struct SobolResult {
  int n_base = 0;
  int n_used = 0;   // quadruples that evaluated successfully
  int n_failed = 0;
  std::vector<double> total_variance;  // per QoI
  std::vector<double> first_r0, first_theta0;
  std::vector<double> total_r0, total_theta0;
};

// Saltelli pick-freeze sensitivity for the two inputs: matrices A, B and
// the column swaps A_B^(r0), A_B^(theta0) -- 4 evaluations per base sample.
// The variance decomposition {V_r0, V_theta0, V_int} is estimated from
// replicated pick-freeze differences, so each small component is measured
// directly (its estimator noise scales with the component itself, not with
// the total variance) and large indices are formed as complements.
SobolResult sobol_sensitivity(const RandomInputModel& inputs,
                              std::uint64_t seed, int n_base, int n_qoi,
                              const Evaluator& f,
                              double max_failure_fraction = 0.05);

struct MethodComparison {
  std::vector<double> mu_mc, mu_gpc, eps_mc, abs_diff;
  std::vector<bool> within;  // |mu_mc - mu_gpc| <= 3 eps_mc
};

MethodComparison compare_methods(const McResult& mc, const GpcResult& gpc);

}  // namespace pmsm
