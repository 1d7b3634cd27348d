#pragma once

// Synthetic benchmark: four constant-weight cubes on a 12³ grid, spatially
// smoothed Gaussian images, per-image random halving of the support and
// target noise calibrated to a signal-to-noise ratio in dB.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "tvreg/grid.hpp"
#include "tvreg/loss.hpp"
#include "tvreg/random.hpp"

namespace tvreg {

/// Normalized 1D Gaussian taps on [−ceil(4σ), ceil(4σ)].
inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int t = -radius; t <= radius; ++t)
    k[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * (t / sigma) * (t / sigma));
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& x : k) x /= s;
  return k;
}

/// Separable Gaussian smoothing. Taps falling outside the mask (or the grid)
/// are dropped and the remaining weights renormalized per axis, so constant
/// volumes are preserved. σ = 0 is the identity.
inline MaskedVolume gaussian_smooth(const MaskedVolume& v, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_smooth: sigma must be >= 0");
  if (sigma == 0.0) return v;
  const Mask& m = *v.mask();
  const std::vector<double> kern = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kern.size() / 2);
  const Dims d = m.dims();
  std::vector<double> cur = to_dense(v);
  std::vector<double> next(cur.size(), 0.0);
  const std::array<int, 3> extent = {d.ni, d.nj, d.nk};

  for (int axis = 0; axis < 3; ++axis) {
    for (Index o = 0; o < m.size(); ++o) {
      const Coord c = m.coords(o);
      const int pos = axis == 0 ? c.i : axis == 1 ? c.j : c.k;
      double num = 0.0;
      double den = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int q = pos + t;
        if (q < 0 || q >= extent[axis]) continue;
        const int qi = axis == 0 ? q : c.i;
        const int qj = axis == 1 ? q : c.j;
        const int qk = axis == 2 ? q : c.k;
        if (!m.contains(qi, qj, qk)) continue;
        const double wt = kern[static_cast<std::size_t>(t + radius)];
        num += wt * cur[m.flat_index(qi, qj, qk)];
        den += wt;
      }
      next[m.flat_of_ordinal(o)] = num / den;
    }
    std::swap(cur, next);
  }
  return from_dense(v.mask(), cur);
}

struct SimSpec {
  int n = 100;
  Dims dims{12, 12, 12};
  int roi_size = 2;
  std::vector<double> roi_weights{-0.5, 0.5, -0.5, 0.5};
  std::vector<Coord> roi_origins{{2, 2, 2}, {8, 2, 8}, {2, 8, 8}, {8, 8, 2}};
  double smooth_sigma = 2.0;
  /// +infinity means noiseless targets.
  double snr_db = 5.0;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  /// Draw noise on a grid padded by the kernel radius and crop after
  /// smoothing, so every voxel sees the full kernel.
  bool pad_border = true;
  /// Rescale smoothed noise by 1/‖k‖₂³ so each voxel is marginally N(0, 1).
  bool unit_variance = true;
  /// Targets use the smoothed images (the ones stored in the dataset); when
  /// false they use the raw draws.
  bool target_from_smoothed = true;

  void validate() const {
    if (n < 1) throw InvalidArgument("simulation needs n >= 1");
    if (dims.ni < 1 || dims.nj < 1 || dims.nk < 1)
      throw InvalidArgument("simulation grid dimensions must be positive");
    if (roi_size < 1) throw InvalidArgument("roi_size must be >= 1");
    if (roi_weights.size() != roi_origins.size())
      throw InvalidArgument("one weight per ROI origin is required");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw InvalidArgument("dropout must lie in [0, 1)");
    if (!(smooth_sigma >= 0.0)) throw InvalidArgument("smooth_sigma must be >= 0");
    if (std::isnan(snr_db)) throw InvalidArgument("snr_db is NaN");
    std::vector<int> owner(static_cast<std::size_t>(dims.volume()), -1);
    for (std::size_t r = 0; r < roi_origins.size(); ++r) {
      const Coord o = roi_origins[r];
      if (o.i < 0 || o.j < 0 || o.k < 0 || o.i + roi_size > dims.ni ||
          o.j + roi_size > dims.nj || o.k + roi_size > dims.nk)
        throw InvalidArgument("ROI " + std::to_string(r) + " leaves the grid");
      for (int k = o.k; k < o.k + roi_size; ++k)
        for (int j = o.j; j < o.j + roi_size; ++j)
          for (int i = o.i; i < o.i + roi_size; ++i) {
            auto& slot = owner[static_cast<std::size_t>(i + dims.ni * (j + dims.nj * k))];
            if (slot != -1) throw InvalidArgument("ROIs overlap");
            slot = static_cast<int>(r);
          }
    }
  }
};

struct SimOutput {
  Dataset dataset;           // full-grid mask, regression task
  MaskedVolume w_true;
  std::vector<Index> roi_support;                     // R, ascending ordinals
  std::vector<std::vector<Index>> per_image_support;  // R̃_l ⊂ R, ascending
  double gamma = 0.0;
  Eigen::VectorXd noiseless;  // Σ_{R̃_l} w·X
  Eigen::VectorXd noise;      // y − noiseless
};

inline SimOutput simulate(const SimSpec& spec) {
  spec.validate();
  const MaskPtr mask = make_full_mask(spec.dims);
  const Index p = mask->size();

  SimOutput out;
  out.w_true = MaskedVolume(mask);
  for (std::size_t r = 0; r < spec.roi_origins.size(); ++r) {
    const Coord o = spec.roi_origins[r];
    for (int k = o.k; k < o.k + spec.roi_size; ++k)
      for (int j = o.j; j < o.j + spec.roi_size; ++j)
        for (int i = o.i; i < o.i + spec.roi_size; ++i) {
          const Index ord = mask->ordinal(i, j, k);
          out.w_true[ord] = spec.roi_weights[r];
          out.roi_support.push_back(ord);
        }
  }
  std::sort(out.roi_support.begin(), out.roi_support.end());

  const auto keep = static_cast<std::size_t>(
      std::llround((1.0 - spec.dropout) * static_cast<double>(out.roi_support.size())));
  const int radius = spec.smooth_sigma > 0.0 && spec.pad_border
                         ? static_cast<int>(std::ceil(4.0 * spec.smooth_sigma))
                         : 0;
  const Dims padded{spec.dims.ni + 2 * radius, spec.dims.nj + 2 * radius,
                    spec.dims.nk + 2 * radius};
  const MaskPtr padded_mask = radius > 0 ? make_full_mask(padded) : mask;
  double scale = 1.0;
  if (spec.unit_variance && spec.smooth_sigma > 0.0) {
    double sq = 0.0;
    for (double t : gaussian_kernel(spec.smooth_sigma)) sq += t * t;
    scale = 1.0 / std::sqrt(sq * sq * sq);
  }

  out.dataset.mask = mask;
  out.dataset.task = Task::regression;
  out.dataset.X.resize(spec.n, p);
  out.dataset.y.resize(spec.n);
  out.noiseless.resize(spec.n);
  out.noise.resize(spec.n);
  out.per_image_support.resize(static_cast<std::size_t>(spec.n));
  Eigen::VectorXd xi(spec.n);

  for (int l = 0; l < spec.n; ++l) {
    auto eng = rnd::make_engine(spec.seed, static_cast<std::uint64_t>(l));
    MaskedVolume raw(padded_mask);
    for (Index o = 0; o < padded_mask->size(); ++o) raw[o] = rnd::standard_normal(eng);
    const MaskedVolume smooth = gaussian_smooth(raw, spec.smooth_sigma);

    Eigen::VectorXd raw_img(p);
    for (Index o = 0; o < p; ++o) {
      const Coord c = mask->coords(o);
      const Index src = padded_mask->ordinal(c.i + radius, c.j + radius, c.k + radius);
      out.dataset.X(l, o) = smooth[src] * scale;
      raw_img[o] = raw[src];
    }

    // partial Fisher–Yates over R
    std::vector<Index> pool = out.roi_support;
    for (std::size_t s = 0; s < keep; ++s) {
      const auto pick = s + rnd::uniform_below(eng, pool.size() - s);
      std::swap(pool[s], pool[pick]);
    }
    std::vector<Index> support(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(support.begin(), support.end());

    double y0 = 0.0;
    for (Index o : support)
      y0 += out.w_true[o] * (spec.target_from_smoothed ? out.dataset.X(l, o) : raw_img[o]);
    out.noiseless[l] = y0;
    out.per_image_support[static_cast<std::size_t>(l)] = std::move(support);
    xi[l] = rnd::standard_normal(eng);
  }

  if (std::isinf(spec.snr_db) && spec.snr_db > 0.0) {
    out.gamma = 0.0;
  } else {
    const double mean = out.noiseless.mean();
    const double var = (out.noiseless.array() - mean).square().mean();
    out.gamma = std::sqrt(var / std::pow(10.0, spec.snr_db / 10.0));
  }
  out.noise = out.gamma * xi;
  out.dataset.y = out.noiseless + out.noise;
  return out;
}

}  // namespace tvreg
