#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tvreg/loss.hpp"

using namespace tvreg;

namespace {

Dataset tiny_regression() {
  Dataset d;
  d.mask = make_full_mask({1, 1, 1});
  d.X = (Eigen::MatrixXd(2, 1) << 1, 2).finished();
  d.y = Eigen::Vector2d(1, 2);
  return d;
}

Dataset from_matrix(Eigen::MatrixXd X, Task task = Task::regression) {
  Dataset d;
  d.mask = make_full_mask({static_cast<int>(X.cols()), 1, 1});
  d.task = task;
  d.y = Eigen::VectorXd::Ones(X.rows());
  d.X = std::move(X);
  return d;
}

// Packs (w, b) so finite differences can treat the intercept as a coordinate.
double packed_loss(LossKind kind, const Dataset& d, const Eigen::VectorXd& wb) {
  const Index p = d.p();
  return evaluate_loss(kind, d, MaskedVolume(d.mask, wb.head(p)), wb[p]).value;
}

}  // namespace

TEST(SquaredLoss, Examples) {
  fixture::Rng rng(1);
  Dataset d = fixture::regression_data(rng, 9, {2, 2, 1});
  const LossEval zero = squared_loss(d, MaskedVolume(d.mask), 0.0);
  EXPECT_NEAR(zero.value, d.y.squaredNorm() / (2.0 * 9), 1e-14);

  const MaskedVolume w = fixture::random_volume(rng, d.mask);
  d.y = d.X * w.values();
  d.y.array() += 1.5;
  const LossEval exact = squared_loss(d, w, 1.5);
  EXPECT_NEAR(exact.value, 0.0, 1e-28);
  EXPECT_LT(exact.grad_w.values().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(exact.grad_b, 0.0, 1e-14);

  const LossEval hand = squared_loss(tiny_regression(), MaskedVolume(make_full_mask({1, 1, 1})), 0.0);
  EXPECT_DOUBLE_EQ(hand.value, 1.25);
  EXPECT_DOUBLE_EQ(hand.grad_w[0], -2.5);
  EXPECT_DOUBLE_EQ(hand.grad_b, -1.5);
}

TEST(LogisticLoss, Examples) {
  fixture::Rng rng(2);
  const Dataset d = fixture::binary_data(rng, 11, {3, 2, 1});
  EXPECT_NEAR(logistic_loss(d, MaskedVolume(d.mask), 0.0).value, std::log(2.0), 1e-15);
  EXPECT_NEAR(logistic_loss(d, MaskedVolume(d.mask), 0.0).value, 0.6931472, 1e-7);

  // margin +50 everywhere
  Dataset s = from_matrix(Eigen::MatrixXd::Zero(4, 2), Task::binary);
  s.y << 1, -1, 1, -1;
  s.X.col(0) = s.y;
  const LossEval e = logistic_loss(s, MaskedVolume(s.mask, Eigen::Vector2d(50, 0)), 0.0);
  EXPECT_LE(e.value, 1e-20);
  EXPECT_TRUE(std::isfinite(e.value));
  EXPECT_TRUE(e.grad_w.values().allFinite());

  // margin −800 must not overflow either
  const LossEval bad = logistic_loss(s, MaskedVolume(s.mask, Eigen::Vector2d(-800, 0)), 0.0);
  EXPECT_NEAR(bad.value, 800.0, 1e-9);
  EXPECT_TRUE(bad.grad_w.values().allFinite());
}

TEST(LogisticLoss, RejectsBadLabels) {
  Dataset d = from_matrix(Eigen::MatrixXd::Ones(2, 1), Task::binary);
  d.y << 1, 0;
  EXPECT_THROW(logistic_loss(d, MaskedVolume(d.mask), 0.0), InvalidArgument);
}

TEST(Losses, DimensionMismatch) {
  const Dataset d = tiny_regression();
  EXPECT_THROW(squared_loss(d, MaskedVolume(make_full_mask({2, 1, 1})), 0.0), DimensionError);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  fixture::Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const LossKind kind = t % 2 ? LossKind::logistic : LossKind::squared;
    const Dataset d = kind == LossKind::squared ? fixture::regression_data(rng, 7, {2, 2, 1})
                                                : fixture::binary_data(rng, 7, {2, 2, 1});
    Eigen::VectorXd wb = 0.5 * fixture::gauss_vector(rng, d.p() + 1);
    const LossEval e = evaluate_loss(kind, d, MaskedVolume(d.mask, wb.head(d.p())), wb[d.p()]);
    Eigen::VectorXd analytic(d.p() + 1);
    analytic << e.grad_w.values(), e.grad_b;
    Eigen::VectorXd numeric(d.p() + 1);
    for (Index i = 0; i <= d.p(); ++i)
      numeric[i] = oracle::central_diff([&](const Eigen::VectorXd& x) { return packed_loss(kind, d, x); }, wb, i);
    EXPECT_LT((analytic - numeric).norm(), 1e-5 * std::max(1.0, analytic.norm()));
  }
}

TEST(Losses, Convexity) {
  fixture::Rng rng(4);
  for (int t = 0; t < 40; ++t) {
    const LossKind kind = t % 2 ? LossKind::logistic : LossKind::squared;
    const Dataset d = kind == LossKind::squared ? fixture::regression_data(rng, 10, {3, 1, 1})
                                                : fixture::binary_data(rng, 10, {3, 1, 1});
    const Eigen::VectorXd a = fixture::gauss_vector(rng, 4), b = fixture::gauss_vector(rng, 4);
    const double theta = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const double mixed = packed_loss(kind, d, theta * a + (1 - theta) * b);
    EXPECT_LE(mixed, theta * packed_loss(kind, d, a) + (1 - theta) * packed_loss(kind, d, b) + 1e-12);
  }
}

TEST(Losses, GradientLipschitzBound) {
  fixture::Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const LossKind kind = t % 2 ? LossKind::logistic : LossKind::squared;
    const Dataset d = kind == LossKind::squared ? fixture::regression_data(rng, 12, {2, 3, 1})
                                                : fixture::binary_data(rng, 12, {2, 3, 1});
    const double L = lipschitz(kind, d, /*with_intercept=*/true).value;
    const Index p = d.p();
    auto grad = [&](const Eigen::VectorXd& wb) {
      const LossEval e = evaluate_loss(kind, d, MaskedVolume(d.mask, wb.head(p)), wb[p]);
      Eigen::VectorXd g(p + 1);
      g << e.grad_w.values(), e.grad_b;
      return g;
    };
    for (int s = 0; s < 5; ++s) {
      const Eigen::VectorXd a = 2.0 * fixture::gauss_vector(rng, p + 1);
      const Eigen::VectorXd b = 2.0 * fixture::gauss_vector(rng, p + 1);
      EXPECT_LE((grad(a) - grad(b)).norm(), (L + 1e-9) * (a - b).norm());
    }
  }
}

TEST(Lipschitz, Examples) {
  const Dataset eye = from_matrix(Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR(lipschitz_squared(eye).value, 0.5, 1e-12);
  EXPECT_NEAR(lipschitz_logistic(eye).value, 0.125, 1e-12);
  const Dataset ones = from_matrix(Eigen::MatrixXd::Ones(13, 1));
  EXPECT_NEAR(lipschitz_squared(ones).value, 1.0, 1e-12);
  EXPECT_NEAR(lipschitz_logistic(ones).value, 0.25, 1e-12);
}

TEST(Lipschitz, MatchesDenseSvd) {
  fixture::Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const int n = fixture::uniform_int(rng, 2, 30);
    const int p = fixture::uniform_int(rng, 1, 50);
    const Dataset d = from_matrix(fixture::gauss_matrix(rng, n, p));
    for (bool icpt : {false, true}) {
      const double s2 = oracle::spectral_norm_sq(d.X, icpt);
      EXPECT_NEAR(lipschitz_squared(d, icpt).value, s2 / n, 1e-6 * s2 / n);
      EXPECT_NEAR(lipschitz_logistic(d, icpt).value, s2 / (4.0 * n), 1e-6 * s2 / (4.0 * n));
    }
  }
}

TEST(Lipschitz, DeterministicPerSeed) {
  fixture::Rng rng(7);
  const Dataset d = from_matrix(fixture::gauss_matrix(rng, 10, 20));
  EXPECT_EQ(lipschitz_squared(d, true, 5).value, lipschitz_squared(d, true, 5).value);
}

TEST(Dataset, ValidateAndSubset) {
  Dataset d = from_matrix(Eigen::MatrixXd::Ones(3, 2), Task::multiclass);
  d.y << 0, 2, 1;
  EXPECT_NO_THROW(d.validate());
  d.y[1] = 1.5;
  EXPECT_THROW(d.validate(), InvalidArgument);
  d.y[1] = 2;
  d.X(2, 1) = 9.0;
  const Dataset s = d.subset({2, 0});
  EXPECT_EQ(s.n(), 2);
  EXPECT_EQ(s.X(0, 1), 9.0);
  EXPECT_EQ(s.y[0], 1.0);
  d.X.resize(3, 3);
  EXPECT_THROW(d.validate(), DimensionError);
}
