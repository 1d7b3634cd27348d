#pragma once

// Smooth data-fit terms for the proximal-gradient solver: value, gradient
// with respect to (w, b), and the Lipschitz constant of that gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tvreg/grid.hpp"
#include "tvreg/power_method.hpp"

namespace tvreg {

enum class Task : std::uint8_t { regression = 0, binary = 1, multiclass = 2 };
enum class LossKind : std::uint8_t { squared = 0, logistic = 1 };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::regression: return "regression";
    case Task::binary: return "binary";
    case Task::multiclass: return "multiclass";
  }
  return "?";
}

/// Design matrix over the active voxels of `mask` (one row per sample) and
/// the matching targets. For classification tasks the targets are stored as
/// doubles holding ±1 (binary) or class ids 0..k-1 (multiclass).
struct Dataset {
  MaskPtr mask;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Task task = Task::regression;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  void validate() const {
    if (!mask) throw InvalidArgument("dataset has no mask");
    if (X.cols() != mask->size())
      throw DimensionError("design matrix has " + std::to_string(X.cols()) +
                           " columns, mask has " +
                           std::to_string(mask->size()) + " voxels");
    if (X.rows() < 1) throw InvalidArgument("dataset has no samples");
    if (y.size() != X.rows())
      throw DimensionError("target count does not match sample count");
    if (!X.allFinite() || !y.allFinite())
      throw InvalidArgument("dataset contains non-finite values");
    for (Index i = 0; i < y.size(); ++i) {
      if (task == Task::binary && y[i] != 1.0 && y[i] != -1.0)
        throw InvalidArgument("binary labels must be exactly -1 or +1");
      if (task == Task::multiclass &&
          (y[i] < 0.0 || y[i] != std::floor(y[i])))
        throw InvalidArgument("multiclass labels must be non-negative integers");
    }
  }

  /// Rows selected by `rows`, in that order.
  Dataset subset(const std::vector<Index>& rows) const {
    Dataset out{mask, Eigen::MatrixXd(static_cast<Index>(rows.size()), p()),
                Eigen::VectorXd(static_cast<Index>(rows.size())), task};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.X.row(static_cast<Index>(r)) = X.row(rows[r]);
      out.y[static_cast<Index>(r)] = y[rows[r]];
    }
    return out;
  }
};

struct LossEval {
  double value = 0.0;
  MaskedVolume grad_w;
  double grad_b = 0.0;
};

namespace detail {

inline void check_weights(const Dataset& d, const MaskedVolume& w) {
  if (w.size() != d.X.cols())
    throw DimensionError("weight volume has " + std::to_string(w.size()) +
                         " voxels, design matrix has " +
                         std::to_string(d.X.cols()) + " columns");
}

// log(1 + e^m) without overflow.
inline double softplus(double m) {
  return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

// 1 / (1 + e^m)
inline double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace detail

/// (1/2n)‖y − Xw − b‖² and its gradient.
inline LossEval squared_loss(const Dataset& d, const MaskedVolume& w, double b) {
  detail::check_weights(d, w);
  if (d.y.size() != d.X.rows())
    throw DimensionError("target count does not match sample count");
  const double n = static_cast<double>(d.n());
  const Eigen::VectorXd r = d.y - d.X * w.values() - Eigen::VectorXd::Constant(d.n(), b);
  LossEval e;
  e.value = 0.5 * r.squaredNorm() / n;
  e.grad_w = MaskedVolume(w.mask(), -(d.X.transpose() * r) / n);
  e.grad_b = -r.sum() / n;
  return e;
}

/// (1/n) Σ log(1 + exp(−y_i(x_iᵀw + b))) for labels y_i ∈ {−1, +1}.
inline LossEval logistic_loss(const Dataset& d, const MaskedVolume& w, double b) {
  detail::check_weights(d, w);
  if (d.y.size() != d.X.rows())
    throw DimensionError("target count does not match sample count");
  for (Index i = 0; i < d.y.size(); ++i)
    if (d.y[i] != 1.0 && d.y[i] != -1.0)
      throw InvalidArgument("logistic loss needs labels in {-1, +1}");

  const double n = static_cast<double>(d.n());
  Eigen::VectorXd margin = d.X * w.values();
  margin.array() += b;
  margin = margin.cwiseProduct(d.y);
  Eigen::VectorXd coef(d.n());
  double value = 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    value += detail::softplus(-margin[i]);
    coef[i] = -d.y[i] * detail::sigmoid_neg(margin[i]);
  }
  LossEval e;
  e.value = value / n;
  e.grad_w = MaskedVolume(w.mask(), (d.X.transpose() * coef) / n);
  e.grad_b = coef.sum() / n;
  return e;
}

inline LossEval evaluate_loss(LossKind kind, const Dataset& d,
                              const MaskedVolume& w, double b) {
  return kind == LossKind::squared ? squared_loss(d, w, b)
                                   : logistic_loss(d, w, b);
}

/// ‖X‖²_spec (or ‖[X 1]‖²_spec with the intercept column) by power iteration
/// on XᵀX, using only products with X and Xᵀ.
inline SpectralEstimate squared_spectral_norm(const Eigen::MatrixXd& X,
                                              bool with_intercept,
                                              std::uint64_t seed = 0,
                                              double tol = 1e-7,
                                              int max_iter = 10000) {
  const Index p = X.cols();
  const Index dim = p + (with_intercept ? 1 : 0);
  Eigen::VectorXd xv(X.rows());
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    xv.noalias() = X * v.head(p);
    if (with_intercept) xv.array() += v[p];
    out.head(p).noalias() = X.transpose() * xv;
    if (with_intercept) out[p] = xv.sum();
  };
  return power_iteration(apply, dim, seed, tol, max_iter);
}

/// ‖XᵀX‖/n.
inline SpectralEstimate lipschitz_squared(const Dataset& d,
                                          bool with_intercept = false,
                                          std::uint64_t seed = 0) {
  SpectralEstimate e = squared_spectral_norm(d.X, with_intercept, seed);
  e.value /= static_cast<double>(d.n());
  return e;
}

/// ‖X‖²/(4n).
inline SpectralEstimate lipschitz_logistic(const Dataset& d,
                                           bool with_intercept = false,
                                           std::uint64_t seed = 0) {
  SpectralEstimate e = squared_spectral_norm(d.X, with_intercept, seed);
  e.value /= 4.0 * static_cast<double>(d.n());
  return e;
}

inline SpectralEstimate lipschitz(LossKind kind, const Dataset& d,
                                  bool with_intercept = false,
                                  std::uint64_t seed = 0) {
  return kind == LossKind::squared ? lipschitz_squared(d, with_intercept, seed)
                                   : lipschitz_logistic(d, with_intercept, seed);
}

}  // namespace tvreg
