#pragma once

// ε-approximate proximity operator of λ·TV.
//
// The ROF problem  min_v ½‖v − w‖² + λ TV(v)  is solved through its dual
//   max_{z ∈ K} −‖div z + w/λ‖²,   K = {z : ‖z(ω)‖₂ ≤ 1 ∀ω},
// with FISTA (projected gradient ascent plus momentum), recovering the primal
// point as v = w + λ div z. Iteration stops once the duality gap of v drops
// below ε.

#include <cmath>

#include "tvreg/grid.hpp"

namespace tvreg {

/// Radial projection of each voxel's component triple onto the unit ball.
inline VectorField project_unit_ball(const VectorField& f) {
  VectorField out = f;
  auto& c = out.components();
  for (Index o = 0; o < c.rows(); ++o) {
    const double n = c.row(o).norm();
    if (n > 1.0) c.row(o) /= n;
  }
  return out;
}

namespace detail {

inline void project_unit_ball_inplace(VectorField::Storage& c) {
  for (Index o = 0; o < c.rows(); ++o) {
    const double n = c.row(o).norm();
    if (n > 1.0) c.row(o) /= n;
  }
}

inline double duality_gap_raw(const Mask& m, const Eigen::VectorXd& w,
                              const Eigen::VectorXd& v, double lambda,
                              VectorField::Storage& scratch) {
  detail::gradient_into(m, v, scratch);
  const double tv_v = lambda == 0.0 ? 0.0 : detail::tv_of(scratch);
  return 0.5 * (w - v).squaredNorm() + lambda * tv_v -
         0.5 * (w.squaredNorm() - v.squaredNorm());
}

}  // namespace detail

/// ½‖w − v‖² + λ·TV(v) − ½(‖w‖² − ‖v‖²). Nonnegative whenever
/// v = w + λ·div z for some z ∈ K, and zero exactly at the prox.
inline double duality_gap(const MaskedVolume& w, const MaskedVolume& v,
                          double lambda) {
  if (!same_domain(w.mask(), v.mask()))
    throw DimensionError("duality_gap: volumes on different masks");
  VectorField::Storage scratch;
  return detail::duality_gap_raw(*w.mask(), w.values(), v.values(), lambda,
                                 scratch);
}

struct ProxOptions {
  int max_inner = 2000;
  /// L̃ = laplacian_safety · ‖div∘grad‖.
  double laplacian_safety = 1.1;
  /// false replaces the FISTA schedule by t ≡ 1 (plain projected ascent).
  bool momentum = true;
};

struct ProxResult {
  MaskedVolume v;
  VectorField z;
  double gap = 0.0;
  int inner_iters = 0;
  bool converged = true;
};

/// ε-approximate prox_{λTV}(w). `warm_z`, when given, seeds the dual
/// variable (it is projected onto K first). If `max_inner` is exhausted the
/// last iterate is returned with `converged == false`.
inline ProxResult prox_tv(const MaskedVolume& w, double lambda, double epsilon,
                          const VectorField* warm_z = nullptr,
                          const ProxOptions& opts = {}) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("prox_tv: lambda must be finite and >= 0");
  if (!(epsilon >= 0.0))
    throw InvalidArgument("prox_tv: epsilon must be >= 0");
  const MaskPtr& mp = w.mask();
  const Mask& m = *mp;

  ProxResult res;
  if (warm_z) {
    if (!same_domain(warm_z->mask(), mp))
      throw DimensionError("prox_tv: warm start lives on a different mask");
    res.z = project_unit_ball(*warm_z);
  } else {
    res.z = VectorField(mp);
  }

  const double lap = lambda == 0.0 ? 0.0 : m.laplacian_norm();
  if (lambda == 0.0 || lap == 0.0) {
    // Zero penalty, or no edges in the mask so TV ≡ 0.
    res.v = w;
    res.gap = 0.0;
    return res;
  }

  const Eigen::VectorXd& wv = w.values();
  const double step = 1.0 / (lambda * opts.laplacian_safety * lap);

  VectorField::Storage& z = res.z.components();
  VectorField::Storage z_aux = z;
  VectorField::Storage z_old;
  VectorField::Storage g;
  Eigen::VectorXd div(m.size());
  Eigen::VectorXd v(m.size());

  auto primal_from = [&](const VectorField::Storage& dual) {
    detail::divergence_into(m, dual, div);
    v = wv + lambda * div;
  };

  primal_from(z);
  res.gap = detail::duality_gap_raw(m, wv, v, lambda, g);
  if (res.gap <= epsilon) {
    res.v = MaskedVolume(mp, v);
    return res;
  }

  double t = 1.0;
  res.converged = false;
  for (int it = 1; it <= opts.max_inner; ++it) {
    z_old = z;
    // ascent step on −‖div z + w/λ‖²: its gradient is (2/λ) grad(w + λ div z)
    primal_from(z_aux);
    detail::gradient_into(m, v, g);
    z = z_aux + step * g;
    detail::project_unit_ball_inplace(z);

    if (opts.momentum) {
      const double t_old = t;
      t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z_aux = z + ((t_old - 1.0) / t) * (z - z_old);
    } else {
      z_aux = z;
    }

    primal_from(z);
    res.gap = detail::duality_gap_raw(m, wv, v, lambda, g);
    res.inner_iters = it;
    if (res.gap <= epsilon) {
      res.converged = true;
      break;
    }
  }
  res.v = MaskedVolume(mp, v);
  return res;
}

}  // namespace tvreg
