#pragma once

// TV-regularized linear models: ISTA on  loss(w, b) + λ·TV(w)  with the TV
// prox solved inexactly by tvreg::prox_tv and its dual variable carried from
// one outer iteration to the next.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tvreg/grid.hpp"
#include "tvreg/loss.hpp"
#include "tvreg/tvprox.hpp"

namespace tvreg {

struct SolverConfig {
  double lambda = 0.05;
  /// Outer (ISTA) iteration cap K.
  int max_outer = 500;
  /// Each prox call stops at gap ≤ gap_factor·‖u‖².
  double gap_factor = 1e-4;
  /// Step 1/L with L = lipschitz_safety·L₀; the same factor scales L̃₀.
  double lipschitz_safety = 1.1;
  /// Stop once |F_k − F_{k−1}| < outer_tol·|F_{k−1}|.
  double outer_tol = 1e-7;
  int max_inner = 2000;
  std::uint32_t seed = 0;
  /// Reuse the dual variable across outer iterations. Not serialized.
  bool warm_restart = true;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw InvalidArgument("lambda must be finite and >= 0");
    if (max_outer < 1) throw InvalidArgument("max_outer must be >= 1");
    if (!(gap_factor > 0.0)) throw InvalidArgument("gap_factor must be > 0");
    if (!(lipschitz_safety > 1.0))
      throw InvalidArgument("lipschitz_safety must be > 1");
    if (!(outer_tol >= 0.0)) throw InvalidArgument("outer_tol must be >= 0");
    if (max_inner < 1) throw InvalidArgument("max_inner must be >= 1");
  }
};

struct FitStats {
  int outer_iters = 0;
  long total_inner_iters = 0;
  /// Prox calls that hit max_inner before reaching their gap target.
  int unconverged_prox = 0;
  /// Outer steps where the approximate prox point was worse than the
  /// current iterate even after tightening ε; w was kept.
  int rejected_steps = 0;
  /// True when the outer tolerance (not the iteration cap) ended the loop.
  bool converged = false;
  double lipschitz = 0.0;
};

struct Model {
  LossKind loss = LossKind::squared;
  MaskedVolume w;
  double b = 0.0;
  SolverConfig config;
  /// Objective loss + λ·TV at the starting point, then after every outer
  /// iteration.
  std::vector<double> trace;
  /// For a pair model inside an OvoModel: {class mapped to +1, class mapped
  /// to −1}. Empty otherwise.
  std::vector<int> classes;
  FitStats stats;
  /// Final dual variable of the TV prox (warm-start state).
  VectorField dual;
};

/// Optional starting point for fit().
struct FitStart {
  MaskedVolume w;
  double b = 0.0;
  VectorField dual;  // may be empty (null mask)
};

namespace detail {

inline void check_task(const Dataset& d, LossKind kind) {
  if (kind == LossKind::squared && d.task != Task::regression)
    throw InvalidArgument(std::string("squared loss needs a regression dataset, got ") +
                          to_string(d.task));
  if (kind == LossKind::logistic && d.task != Task::binary)
    throw InvalidArgument(std::string("logistic loss needs a binary dataset, got ") +
                          to_string(d.task));
}

inline void check_columns(const Model& m, const Eigen::MatrixXd& X) {
  if (X.cols() != m.w.size())
    throw DimensionError("X has " + std::to_string(X.cols()) +
                         " columns, model has " + std::to_string(m.w.size()) +
                         " weights");
}

}  // namespace detail

inline Model fit(const Dataset& d, LossKind kind, const SolverConfig& cfg,
                 const FitStart* start = nullptr) {
  cfg.validate();
  d.validate();
  detail::check_task(d, kind);

  const MaskPtr& mask = d.mask;
  Model model;
  model.loss = kind;
  model.config = cfg;

  const double lip0 = lipschitz(kind, d, /*with_intercept=*/true, cfg.seed).value;
  const double L = cfg.lipschitz_safety * lip0;
  model.stats.lipschitz = L;

  MaskedVolume w(mask);
  double b = kind == LossKind::squared ? d.y.mean() : 0.0;
  VectorField z(mask);
  if (start) {
    if (!same_domain(start->w.mask(), mask))
      throw DimensionError("fit: start point lives on a different mask");
    w = start->w;
    b = start->b;
    if (start->dual.mask()) {
      if (!same_domain(start->dual.mask(), mask))
        throw DimensionError("fit: start dual lives on a different mask");
      z = start->dual;
    }
  }

  ProxOptions popts;
  popts.max_inner = cfg.max_inner;
  popts.laplacian_safety = cfg.lipschitz_safety;

  LossEval ev = evaluate_loss(kind, d, w, b);
  double tv_w = tv(w);
  double objective = ev.value + cfg.lambda * tv_w;
  if (!std::isfinite(objective))
    throw NumericError("fit: non-finite objective at the starting point");
  model.trace.push_back(objective);

  const double mu = L > 0.0 ? cfg.lambda / L : 0.0;
  for (int k = 1; k <= cfg.max_outer; ++k) {
    Eigen::VectorXd u_vals = w.values();
    if (L > 0.0) {
      u_vals -= ev.grad_w.values() / L;
      b -= ev.grad_b / L;
    }
    const MaskedVolume u(mask, std::move(u_vals));
    double eps = cfg.gap_factor * u.values().squaredNorm();

    if (!cfg.warm_restart) z = VectorField(mask);
    ProxResult pr = prox_tv(u, mu, eps, &z, popts);
    model.stats.total_inner_iters += pr.inner_iters;

    // ½‖x − u‖² + μ TV(x): the candidate must not be worse than staying put,
    // otherwise the majorization argument for monotone descent breaks.
    const double stay = 0.5 * (w.values() - u.values()).squaredNorm() + mu * tv_w;
    auto prox_obj = [&](const MaskedVolume& x) {
      return 0.5 * (x.values() - u.values()).squaredNorm() + mu * tv(x);
    };
    double cand = prox_obj(pr.v);
    for (int refine = 0; refine < 6 && cand > stay && mu > 0.0; ++refine) {
      eps *= 0.1;
      pr = prox_tv(u, mu, eps, &pr.z, popts);
      model.stats.total_inner_iters += pr.inner_iters;
      cand = prox_obj(pr.v);
    }
    if (!pr.converged) ++model.stats.unconverged_prox;
    z = pr.z;
    if (cand > stay) {
      ++model.stats.rejected_steps;
    } else {
      w = std::move(pr.v);
      tv_w = tv(w);
    }

    ev = evaluate_loss(kind, d, w, b);
    const double next = ev.value + cfg.lambda * tv_w;
    if (!std::isfinite(next))
      throw NumericError("fit: objective became non-finite at outer iteration " +
                         std::to_string(k));
    model.trace.push_back(next);
    model.stats.outer_iters = k;
    const bool small_change =
        std::abs(objective - next) < cfg.outer_tol * std::abs(objective);
    objective = next;
    if (small_change) {
      model.stats.converged = true;
      break;
    }
  }

  model.w = std::move(w);
  model.b = b;
  model.dual = std::move(z);
  return model;
}

inline double objective(const Model& m, const Dataset& d) {
  return evaluate_loss(m.loss, d, m.w, m.b).value + m.config.lambda * tv(m.w);
}

/// Xw + b.
inline Eigen::VectorXd predict_regression(const Model& m, const Eigen::MatrixXd& X) {
  if (m.loss != LossKind::squared)
    throw InvalidArgument("predict_regression needs a squared-loss model");
  detail::check_columns(m, X);
  Eigen::VectorXd out = X * m.w.values();
  out.array() += m.b;
  return out;
}

inline Eigen::VectorXd margins(const Model& m, const Eigen::MatrixXd& X) {
  detail::check_columns(m, X);
  Eigen::VectorXd out = X * m.w.values();
  out.array() += m.b;
  return out;
}

/// p(+1 | x) = 1 / (1 + exp(−(xᵀw + b))).
inline Eigen::VectorXd predict_proba(const Model& m, const Eigen::MatrixXd& X) {
  if (m.loss != LossKind::logistic)
    throw InvalidArgument("predict_proba needs a logistic model");
  Eigen::VectorXd s = margins(m, X);
  for (Index i = 0; i < s.size(); ++i) s[i] = detail::sigmoid_neg(-s[i]);
  return s;
}

/// sign(xᵀw + b); a zero margin maps to +1.
inline std::vector<int> predict_binary(const Model& m, const Eigen::MatrixXd& X) {
  if (m.loss != LossKind::logistic)
    throw InvalidArgument("predict_binary needs a logistic model");
  const Eigen::VectorXd s = margins(m, X);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Index i = 0; i < s.size(); ++i) out[i] = s[i] >= 0.0 ? 1 : -1;
  return out;
}

struct OvoPair {
  int first = 0;   // labelled +1
  int second = 0;  // labelled −1
  Model model;
};

struct OvoModel {
  int k = 0;
  std::vector<OvoPair> pairs;  // (0,1), (0,2), ..., (k−2,k−1)
};

inline int class_count(const Dataset& d) {
  if (d.y.size() == 0) return 0;
  return static_cast<int>(d.y.maxCoeff()) + 1;
}

/// One binary TV-logistic model per unordered class pair i < j, trained on
/// the samples of those two classes with i ↦ +1 and j ↦ −1.
inline OvoModel fit_ovo(const Dataset& d, const SolverConfig& cfg) {
  d.validate();
  if (d.task != Task::multiclass)
    throw InvalidArgument("fit_ovo needs a multiclass dataset");
  OvoModel out;
  out.k = class_count(d);
  if (out.k < 2) throw InvalidArgument("fit_ovo needs at least two classes");

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(out.k));
  for (Index r = 0; r < d.n(); ++r)
    members[static_cast<std::size_t>(d.y[r])].push_back(r);
  for (int c = 0; c < out.k; ++c)
    if (members[c].empty())
      throw InvalidArgument("class " + std::to_string(c) + " has no samples");

  for (int i = 0; i < out.k; ++i) {
    for (int j = i + 1; j < out.k; ++j) {
      std::vector<Index> rows = members[i];
      rows.insert(rows.end(), members[j].begin(), members[j].end());
      std::sort(rows.begin(), rows.end());
      Dataset sub = d.subset(rows);
      for (Index r = 0; r < sub.n(); ++r) sub.y[r] = sub.y[r] == i ? 1.0 : -1.0;
      sub.task = Task::binary;
      OvoPair pair{i, j, fit(sub, LossKind::logistic, cfg)};
      pair.model.classes = {i, j};
      out.pairs.push_back(std::move(pair));
    }
  }
  return out;
}

/// Each pair (i, j) votes p for class i and 1 − p for class j; the class
/// attaining the single highest probability wins, ties going to the lowest
/// class id.
inline std::vector<int> predict_ovo(const OvoModel& m, const Eigen::MatrixXd& X) {
  const Index n = X.rows();
  std::vector<double> best(static_cast<std::size_t>(n), -1.0);
  std::vector<int> label(static_cast<std::size_t>(n), 0);
  auto offer = [&](Index r, int cls, double p) {
    if (p > best[r] || (p == best[r] && cls < label[r])) {
      best[r] = p;
      label[r] = cls;
    }
  };
  for (const auto& pair : m.pairs) {
    const Eigen::VectorXd p = predict_proba(pair.model, X);
    for (Index r = 0; r < n; ++r) {
      offer(r, pair.first, p[r]);
      offer(r, pair.second, 1.0 - p[r]);
    }
  }
  return label;
}

}  // namespace tvreg
