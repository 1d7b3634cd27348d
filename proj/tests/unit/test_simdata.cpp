#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tvreg/simdata.hpp"

using namespace tvreg;

TEST(GaussianKernel, NormalizedSymmetricTruncated) {
  for (double sigma : {0.5, 1.0, 2.0, 3.3}) {
    const std::vector<double> k = gaussian_kernel(sigma);
    const auto radius = static_cast<std::size_t>(std::ceil(4.0 * sigma));
    ASSERT_EQ(k.size(), 2 * radius + 1);
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-15);
    for (std::size_t t = 0; t < k.size(); ++t) EXPECT_EQ(k[t], k[k.size() - 1 - t]);
  }
  EXPECT_EQ(gaussian_kernel(0.0), std::vector<double>{1.0});
}

TEST(GaussianSmooth, IdentityAndConstants) {
  const MaskPtr m = make_full_mask({5, 4, 3});
  MaskedVolume v(m);
  for (Index o = 0; o < m->size(); ++o) v[o] = std::sin(0.3 * static_cast<double>(o));
  EXPECT_EQ(gaussian_smooth(v, 0.0).values(), v.values());
  const MaskedVolume c = MaskedVolume::constant(m, 2.5);
  EXPECT_LT((gaussian_smooth(c, 1.5).values().array() - 2.5).abs().maxCoeff(), 1e-14);
  EXPECT_THROW(gaussian_smooth(v, -1.0), InvalidArgument);
}

TEST(GaussianSmooth, ImpulseMatchesDenseConvolution) {
  const MaskPtr m = make_full_mask({9, 9, 9});
  MaskedVolume v(m);
  v[m->ordinal(4, 4, 4)] = 1.0;
  const std::vector<double> k = gaussian_kernel(1.0);
  const std::vector<double> expect = oracle::convolve3d(to_dense(v), 9, 9, 9, k);
  const std::vector<double> got = to_dense(gaussian_smooth(v, 1.0));
  for (std::size_t s = 0; s < got.size(); ++s) EXPECT_NEAR(got[s], expect[s], 1e-12);
  const double c = k[k.size() / 2];
  EXPECT_NEAR(got[m->flat_index(4, 4, 4)], c * c * c, 1e-12);
}

TEST(GaussianSmooth, RandomVolumeMatchesDenseConvolutionAtBorders) {
  const MaskPtr m = make_full_mask({6, 5, 4});
  MaskedVolume v(m);
  for (Index o = 0; o < m->size(); ++o) v[o] = std::cos(1.7 * static_cast<double>(o * o % 17));
  const std::vector<double> expect = oracle::convolve3d(to_dense(v), 6, 5, 4, gaussian_kernel(1.2));
  const std::vector<double> got = to_dense(gaussian_smooth(v, 1.2));
  for (std::size_t s = 0; s < got.size(); ++s) EXPECT_NEAR(got[s], expect[s], 1e-12);
}

TEST(Simulate, DefaultsMatchBenchmarkShape) {
  SimSpec spec;
  spec.seed = 3;
  const SimOutput s = simulate(spec);
  EXPECT_EQ(s.dataset.n(), 100);
  EXPECT_EQ(s.dataset.p(), 12 * 12 * 12);
  EXPECT_EQ(s.dataset.task, Task::regression);
  EXPECT_EQ(s.roi_support.size(), 32u);
  for (const auto& r : s.per_image_support) EXPECT_EQ(r.size(), 16u);
  const double mean = s.noiseless.mean();
  const double var = (s.noiseless.array() - mean).square().mean();
  EXPECT_NEAR(10.0 * std::log10(var / (s.gamma * s.gamma)), 5.0, 0.01);
  EXPECT_EQ(s.w_true.values().cwiseAbs().sum(), 32 * 0.5);
}

TEST(Simulate, NoiselessFullSupportIsLinearFunctional) {
  SimSpec spec;
  spec.n = 20;
  spec.dropout = 0.0;
  spec.snr_db = std::numeric_limits<double>::infinity();
  const SimOutput s = simulate(spec);
  EXPECT_EQ(s.gamma, 0.0);
  for (const auto& r : s.per_image_support) EXPECT_EQ(r, s.roi_support);
  for (Index l = 0; l < s.dataset.n(); ++l) {
    double y = 0.0;
    for (Index o : s.roi_support) y += s.w_true[o] * s.dataset.X(l, o);
    EXPECT_EQ(s.dataset.y[l], y);
  }
}

TEST(Simulate, TargetsRecomputeFromStoredSupports) {
  SimSpec spec;
  spec.n = 30;
  spec.seed = 17;
  const SimOutput s = simulate(spec);
  for (Index l = 0; l < s.dataset.n(); ++l) {
    const auto& r = s.per_image_support[static_cast<std::size_t>(l)];
    EXPECT_TRUE(std::includes(s.roi_support.begin(), s.roi_support.end(), r.begin(), r.end()));
    double y0 = 0.0;
    for (Index o : r) y0 += s.w_true[o] * s.dataset.X(l, o);
    EXPECT_EQ(s.noiseless[l], y0);
    EXPECT_EQ(s.dataset.y[l], y0 + s.noise[l]);
  }
}

TEST(Simulate, Reproducible) {
  SimSpec spec;
  spec.n = 10;
  spec.seed = 99;
  const SimOutput a = simulate(spec);
  const SimOutput b = simulate(spec);
  EXPECT_EQ(a.dataset.X, b.dataset.X);
  EXPECT_EQ(a.dataset.y, b.dataset.y);
  EXPECT_EQ(a.per_image_support, b.per_image_support);
  spec.seed = 100;
  EXPECT_NE(simulate(spec).dataset.X, a.dataset.X);
}

TEST(Simulate, SupportInclusionFrequency) {
  SimSpec spec;
  spec.n = 1000;
  spec.smooth_sigma = 0.5;
  const SimOutput s = simulate(spec);
  std::vector<int> hits(static_cast<std::size_t>(s.dataset.p()), 0);
  for (const auto& r : s.per_image_support)
    for (Index o : r) ++hits[static_cast<std::size_t>(o)];
  for (Index o : s.roi_support) EXPECT_NEAR(hits[static_cast<std::size_t>(o)] / 1000.0, 0.5, 0.05);
}

TEST(Simulate, SmoothedImagesHaveUnitVariance) {
  SimSpec spec;
  spec.n = 400;
  const SimOutput s = simulate(spec);
  const Eigen::RowVectorXd mean = s.dataset.X.colwise().mean();
  const Eigen::RowVectorXd var =
      (s.dataset.X.rowwise() - mean).array().square().colwise().mean();
  EXPECT_NEAR(var.mean(), 1.0, 0.05);
  // corner and center voxels see the same kernel thanks to padding
  EXPECT_NEAR(var[0], 1.0, 0.3);
  EXPECT_NEAR(var[s.dataset.mask->ordinal(6, 6, 6)], 1.0, 0.3);
}

TEST(SimSpec, Validation) {
  SimSpec spec;
  spec.dropout = 1.0;
  EXPECT_THROW(simulate(spec), InvalidArgument);
  spec = {};
  spec.roi_origins[1] = spec.roi_origins[0];
  EXPECT_THROW(simulate(spec), InvalidArgument);
  spec = {};
  spec.roi_origins[0] = {11, 0, 0};
  EXPECT_THROW(simulate(spec), InvalidArgument);
  spec = {};
  spec.roi_weights.pop_back();
  EXPECT_THROW(simulate(spec), InvalidArgument);
}
