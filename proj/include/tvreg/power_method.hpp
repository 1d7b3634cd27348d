#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "tvreg/random.hpp"

namespace tvreg {

struct SpectralEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration. `apply(x, out)` must write A·x into `out` (already sized).
///
/// The start vector is a seeded unit-norm Gaussian draw. Iteration stops when
/// two successive Rayleigh quotients agree to `tol` relatively and the
/// geometric tail Δ·r/(1−r), with r the ratio of the last two increments,
/// is below `tol` as well; the quotients increase monotonically for PSD
/// operators, so the tail bounds the remaining distance to the limit. If
/// `max_iter` is exhausted the last estimate is returned with
/// `converged == false`.
template <class ApplyOp>
SpectralEstimate power_iteration(ApplyOp&& apply, Eigen::Index dim,
                                 std::uint64_t seed, double tol = 1e-7,
                                 int max_iter = 10000) {
  SpectralEstimate est;
  if (dim == 0) {
    est.converged = true;
    return est;
  }
  auto eng = rnd::make_engine(seed);
  Eigen::VectorXd x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) x[i] = rnd::standard_normal(eng);
  x.normalize();
  Eigen::VectorXd ax(dim);

  double prev = 0.0;
  double prev_delta = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    apply(x, ax);
    const double rayleigh = x.dot(ax);
    const double nrm = ax.norm();
    est.value = rayleigh;
    est.iterations = it;
    if (nrm == 0.0) {
      // x lies in the kernel; for a random start this means A == 0.
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    if (it > 1) {
      const double delta = std::abs(rayleigh - prev);
      const double target = tol * std::abs(rayleigh);
      if (delta < target) {
        const double r = prev_delta > 0.0 ? delta / prev_delta : 0.0;
        if (delta == 0.0 || (r < 1.0 && delta * r / (1.0 - r) < target)) {
          est.converged = true;
          return est;
        }
      }
      prev_delta = delta;
    }
    prev = rayleigh;
    x = ax / nrm;
  }
  return est;
}

}  // namespace tvreg
