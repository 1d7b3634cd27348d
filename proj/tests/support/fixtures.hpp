#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "tvreg/grid.hpp"
#include "tvreg/loss.hpp"

namespace fixture {

using Rng = std::mt19937_64;

inline double gauss(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Eigen::VectorXd gauss_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

inline Eigen::MatrixXd gauss_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = gauss(rng);
  return m;
}

/// Random dims up to `max_edge` per axis and a mask keeping each site with
/// probability `keep` (at least one site is always kept).
inline tvreg::MaskPtr random_mask(Rng& rng, int max_edge = 6, double keep = 0.7) {
  const tvreg::Dims d{uniform_int(rng, 1, max_edge), uniform_int(rng, 1, max_edge),
                      uniform_int(rng, 1, max_edge)};
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(d.volume()));
  std::bernoulli_distribution coin(keep);
  for (auto& f : flags) f = coin(rng) ? 1 : 0;
  flags[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(flags.size()) - 1))] = 1;
  return tvreg::make_mask(d, std::move(flags));
}

inline tvreg::MaskedVolume random_volume(Rng& rng, const tvreg::MaskPtr& m, double scale = 1.0) {
  return tvreg::MaskedVolume(m, scale * gauss_vector(rng, m->size()));
}

inline tvreg::VectorField random_field(Rng& rng, const tvreg::MaskPtr& m) {
  tvreg::VectorField::Storage s(m->size(), 3);
  for (Eigen::Index o = 0; o < s.rows(); ++o)
    for (int a = 0; a < 3; ++a) s(o, a) = gauss(rng);
  return tvreg::VectorField(m, std::move(s));
}

inline tvreg::MaskPtr line_mask(int n) { return tvreg::make_full_mask({1, 1, n}); }

inline tvreg::MaskedVolume line_volume(const std::vector<double>& v) {
  return tvreg::MaskedVolume(line_mask(static_cast<int>(v.size())),
                             Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

/// Regression dataset with Gaussian design on a full mask.
inline tvreg::Dataset regression_data(Rng& rng, int n, tvreg::Dims dims, double noise = 0.1) {
  tvreg::Dataset d;
  d.mask = tvreg::make_full_mask(dims);
  d.task = tvreg::Task::regression;
  d.X = gauss_matrix(rng, n, d.mask->size());
  const Eigen::VectorXd w = gauss_vector(rng, d.mask->size());
  d.y = d.X * w + noise * gauss_vector(rng, n);
  d.y.array() += 0.7;
  return d;
}

/// Binary ±1 dataset drawn from a noisy linear rule.
inline tvreg::Dataset binary_data(Rng& rng, int n, tvreg::Dims dims) {
  tvreg::Dataset d;
  d.mask = tvreg::make_full_mask(dims);
  d.task = tvreg::Task::binary;
  d.X = gauss_matrix(rng, n, d.mask->size());
  const Eigen::VectorXd w = gauss_vector(rng, d.mask->size());
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y[i] = d.X.row(i).dot(w) + 0.5 * gauss(rng) >= 0.0 ? 1.0 : -1.0;
  return d;
}

/// Three well separated classes on a 4×4×1 grid; class c is high on voxels
/// v ≡ c (mod 3).
inline tvreg::Dataset three_blobs(Rng& rng, int per_class) {
  tvreg::Dataset d;
  d.mask = tvreg::make_full_mask({4, 4, 1});
  d.task = tvreg::Task::multiclass;
  d.X.resize(3 * per_class, 16);
  d.y.resize(3 * per_class);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(16);
    for (int v = 0; v < 16; ++v) center[v] = (v % 3 == c) ? 4.0 : -2.0;
    for (int r = 0; r < per_class; ++r) {
      const int row = c * per_class + r;
      d.X.row(row) = (center + 0.3 * gauss_vector(rng, 16)).transpose();
      d.y[row] = c;
    }
  }
  return d;
}

}  // namespace fixture
