#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

// Finite-difference gradient verification. All checks run in double precision:
// central differences with a per-coordinate step h = 1e-3 * max(1, |theta|),
// compared against the analytic gradient of a scalar objective
// J = sum(upstream .* output) by relative error
// |a - n| / max(|a|, |n|, 1e-8).

namespace vibcnn {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Perturbs theta in place, restoring each coordinate after probing it.
// `objective` must recompute J from the current contents of theta.
// `h_scale` tunes the probe step h = h_scale * max(1, |theta_i|); the default
// suits (piecewise-)linear ops, while ops with curvature (batch norm through
// its batch statistics, softmax) want a finer step so the O(h^2) truncation
// term stays below the comparison tolerance.
//
// Piecewise-linear ops (ReLU, max pooling) are non-differentiable on a
// measure-zero set, and a probe that happens to straddle such a point
// reports a spurious mismatch. That artifact disappears once the step drops
// below the distance to the crossing, whereas a genuine gradient bug
// persists at every step size — so coordinates over a trigger are retried
// with finer steps and keep their best estimate.
inline double fd_max_rel_error(std::span<double> theta,
                               std::span<const double> analytic,
                               const std::function<double()>& objective,
                               double h_scale = 1e-3) {
  const auto probe = [&](std::size_t i, double scale) {
    const double saved = theta[i];
    const double h = scale * std::max(1.0, std::abs(saved));
    theta[i] = saved + h;
    const double jp = objective();
    theta[i] = saved - h;
    const double jm = objective();
    theta[i] = saved;
    const double numeric = (jp - jm) / (2.0 * h);
    const double a = analytic[i];
    return std::abs(a - numeric) /
           std::max({std::abs(a), std::abs(numeric), 1e-8});
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double rel = probe(i, h_scale);
    for (const double shrink : {8.0, 64.0}) {
      if (rel <= 1e-5) break;
      rel = std::min(rel, probe(i, h_scale / shrink));
    }
    worst = std::max(worst, rel);
  }
  return worst;
}

// Full suites (implemented in gradcheck.cpp): one entry per kernel input
// slot, and one end-to-end check through a reduced network.
std::vector<GradCheckResult> kernel_gradchecks(std::uint64_t seed);
GradCheckResult tiny_model_gradcheck(std::uint64_t seed);

}  // namespace vibcnn
