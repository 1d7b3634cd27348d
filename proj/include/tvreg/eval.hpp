#pragma once

// Scores, cross-validation and the paired signed-rank test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tvreg/loss.hpp"
#include "tvreg/random.hpp"
#include "tvreg/solver.hpp"

namespace tvreg {

/// ζ = (var(y) − var(y − ŷ)) / var(y), population variances.
inline double explained_variance(const Eigen::VectorXd& y_true,
                                 const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size())
    throw DimensionError("explained_variance: length mismatch");
  if (y_true.size() < 2)
    throw InvalidArgument("explained_variance needs at least two samples");
  auto pvar = [](const Eigen::VectorXd& v) {
    const double m = v.mean();
    return (v.array() - m).square().mean();
  };
  const double vt = pvar(y_true);
  if (!(vt > 0.0)) throw InvalidArgument("explained_variance: target variance is zero");
  const Eigen::VectorXd resid = y_true - y_pred;
  return (vt - pvar(resid)) / vt;
}

/// κ: fraction of exact label matches.
template <class Labels>
double classification_score(const Labels& y_true, const Labels& y_pred) {
  if (std::size(y_true) != std::size(y_pred))
    throw DimensionError("classification_score: length mismatch");
  if (std::size(y_true) == 0) throw InvalidArgument("classification_score: empty input");
  std::size_t hits = 0;
  auto it = std::begin(y_pred);
  for (const auto& t : y_true) hits += (t == *it++) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(std::size(y_true));
}

struct CvPlan {
  enum class Scheme { kfold, leave_one_group_out };
  Scheme scheme = Scheme::kfold;
  int folds = 4;
  /// Per-sample group label (leave-one-group-out).
  std::vector<int> groups;
  /// Shuffle sample order before cutting k folds; contiguous folds otherwise.
  std::optional<std::uint64_t> shuffle_seed;
  /// Worker threads for independent folds / grid points. Results do not
  /// depend on this.
  unsigned threads = 1;

  static CvPlan kfold(int k) {
    CvPlan p;
    p.folds = k;
    return p;
  }
  static CvPlan by_groups(std::vector<int> g) {
    CvPlan p;
    p.scheme = Scheme::leave_one_group_out;
    p.groups = std::move(g);
    return p;
  }
};

/// Held-out index sets, one per fold. Together they partition 0..n-1.
inline std::vector<std::vector<Index>> make_folds(const CvPlan& plan, Index n) {
  std::vector<std::vector<Index>> folds;
  if (plan.scheme == CvPlan::Scheme::kfold) {
    if (plan.folds < 2 || plan.folds > n)
      throw InvalidArgument("k-fold needs 2 <= k <= n (k=" + std::to_string(plan.folds) +
                            ", n=" + std::to_string(n) + ")");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    if (plan.shuffle_seed) {
      auto eng = rnd::make_engine(*plan.shuffle_seed);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rnd::uniform_below(eng, i)]);
    }
    for (int f = 0; f < plan.folds; ++f) {
      const Index lo = n * f / plan.folds;
      const Index hi = n * (f + 1) / plan.folds;
      std::vector<Index> test(order.begin() + lo, order.begin() + hi);
      std::sort(test.begin(), test.end());
      folds.push_back(std::move(test));
    }
  } else {
    if (static_cast<Index>(plan.groups.size()) != n)
      throw DimensionError("group labels do not match sample count");
    std::map<int, std::vector<Index>> by_group;
    for (Index i = 0; i < n; ++i) by_group[plan.groups[static_cast<std::size_t>(i)]].push_back(i);
    if (by_group.size() < 2)
      throw InvalidArgument("leave-one-group-out needs at least two groups");
    for (auto& [g, idx] : by_group) folds.push_back(std::move(idx));
  }
  return folds;
}

inline std::vector<Index> complement(const std::vector<Index>& test, Index n) {
  std::vector<char> held(static_cast<std::size_t>(n), 0);
  for (Index i : test) held[static_cast<std::size_t>(i)] = 1;
  std::vector<Index> train;
  for (Index i = 0; i < n; ++i)
    if (!held[static_cast<std::size_t>(i)]) train.push_back(i);
  return train;
}

struct CvSummary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

inline CvSummary summarize(const std::vector<double>& s) {
  CvSummary out;
  if (s.empty()) return out;
  double sum = 0.0;
  for (double v : s) sum += v;
  out.mean = sum / static_cast<double>(s.size());
  double sq = 0.0;
  for (double v : s) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(s.size()));
  out.min = *std::min_element(s.begin(), s.end());
  out.max = *std::max_element(s.begin(), s.end());
  return out;
}

struct CvReport {
  std::vector<double> per_fold_scores;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// λ picked on each training split by nested CV (empty otherwise).
  std::vector<double> selected_lambdas;

  static CvReport from_scores(std::vector<double> scores) {
    CvReport r;
    const CvSummary s = summarize(scores);
    r.per_fold_scores = std::move(scores);
    r.mean = s.mean;
    r.std = s.std;
    r.min = s.min;
    r.max = s.max;
    return r;
  }
};

namespace detail {

template <class Job>
std::vector<double> run_jobs(std::size_t count, unsigned threads, Job&& job) {
  std::vector<double> out(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = job(i);
    return out;
  }
  for (std::size_t start = 0; start < count; start += threads) {
    std::vector<std::future<double>> batch;
    const std::size_t end = std::min(count, start + threads);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(std::async(std::launch::async, [&job, i] { return job(i); }));
    for (std::size_t i = start; i < end; ++i) out[i] = batch[i - start].get();
  }
  return out;
}

}  // namespace detail

/// Generic driver: `score_fold(train, test)` receives the two row subsets as
/// separate datasets and returns the held-out score.
template <class ScoreFold>
CvReport cross_validate_with(const Dataset& d, const CvPlan& plan, ScoreFold&& score_fold) {
  const auto folds = make_folds(plan, d.n());
  std::vector<double> scores = detail::run_jobs(folds.size(), plan.threads, [&](std::size_t f) {
    const std::vector<Index> train = complement(folds[f], d.n());
    if (train.empty() || folds[f].empty())
      throw InvalidArgument("fold " + std::to_string(f) + " has an empty side");
    return static_cast<double>(score_fold(d.subset(train), d.subset(folds[f])));
  });
  return CvReport::from_scores(std::move(scores));
}

/// Fit on `train` with the task-appropriate model and score on `test`:
/// ζ for regression, κ for binary and multiclass.
inline double fit_and_score(const Dataset& train, const Dataset& test,
                            const SolverConfig& cfg) {
  switch (train.task) {
    case Task::regression: {
      const Model m = fit(train, LossKind::squared, cfg);
      return explained_variance(test.y, predict_regression(m, test.X));
    }
    case Task::binary: {
      const Model m = fit(train, LossKind::logistic, cfg);
      const std::vector<int> pred = predict_binary(m, test.X);
      std::vector<int> truth(static_cast<std::size_t>(test.n()));
      for (Index i = 0; i < test.n(); ++i) truth[i] = static_cast<int>(test.y[i]);
      return classification_score(truth, pred);
    }
    case Task::multiclass: {
      const OvoModel m = fit_ovo(train, cfg);
      const std::vector<int> pred = predict_ovo(m, test.X);
      std::vector<int> truth(static_cast<std::size_t>(test.n()));
      for (Index i = 0; i < test.n(); ++i) truth[i] = static_cast<int>(test.y[i]);
      return classification_score(truth, pred);
    }
  }
  return 0.0;
}

inline CvReport cross_validate(const Dataset& d, const CvPlan& plan, const SolverConfig& cfg) {
  d.validate();
  return cross_validate_with(d, plan, [&](const Dataset& train, const Dataset& test) {
    return fit_and_score(train, test, cfg);
  });
}

struct SweepPoint {
  double lambda = 0.0;
  CvReport report;
};

/// cross_validate at every λ of `grid`. Folds of all grid points are
/// scheduled together when plan.threads > 1.
inline std::vector<SweepPoint> lambda_sweep(const Dataset& d, const CvPlan& plan,
                                            const std::vector<double>& grid,
                                            const SolverConfig& cfg) {
  d.validate();
  const auto folds = make_folds(plan, d.n());
  const std::size_t nf = folds.size();
  const std::vector<double> flat = detail::run_jobs(grid.size() * nf, plan.threads, [&](std::size_t job) {
    SolverConfig c = cfg;
    c.lambda = grid[job / nf];
    const auto& test = folds[job % nf];
    const std::vector<Index> train = complement(test, d.n());
    if (train.empty() || test.empty()) throw InvalidArgument("fold has an empty side");
    return fit_and_score(d.subset(train), d.subset(test), c);
  });
  std::vector<SweepPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> s(flat.begin() + static_cast<std::ptrdiff_t>(g * nf),
                          flat.begin() + static_cast<std::ptrdiff_t>((g + 1) * nf));
    out.push_back({grid[g], CvReport::from_scores(std::move(s))});
  }
  return out;
}

/// Outer CV where each training split picks λ from `grid` by an inner CV
/// (`inner` plan) before the final fit.
inline CvReport cross_validate_nested(const Dataset& d, const CvPlan& outer, const CvPlan& inner,
                                      const std::vector<double>& grid, const SolverConfig& cfg) {
  if (grid.empty()) throw InvalidArgument("nested CV needs a non-empty lambda grid");
  d.validate();
  const auto folds = make_folds(outer, d.n());
  std::vector<double> chosen(folds.size());
  std::vector<double> scores = detail::run_jobs(folds.size(), outer.threads, [&](std::size_t f) {
    const Dataset train = d.subset(complement(folds[f], d.n()));
    CvPlan in = inner;
    in.threads = 1;
    if (in.scheme == CvPlan::Scheme::leave_one_group_out) {
      std::vector<int> g;
      for (Index i : complement(folds[f], d.n())) g.push_back(outer.groups[static_cast<std::size_t>(i)]);
      in.groups = std::move(g);
    }
    const auto sweep = lambda_sweep(train, in, grid, cfg);
    std::size_t best = 0;
    for (std::size_t g = 1; g < sweep.size(); ++g)
      if (sweep[g].report.mean > sweep[best].report.mean) best = g;
    chosen[f] = sweep[best].lambda;
    SolverConfig c = cfg;
    c.lambda = chosen[f];
    return fit_and_score(train, d.subset(folds[f]), c);
  });
  CvReport r = CvReport::from_scores(std::move(scores));
  r.selected_lambdas = std::move(chosen);
  return r;
}

/// `count` log-spaced values from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("bad log grid");
  std::vector<double> g;
  if (count == 1) return {lo};
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g.push_back(std::exp(a + (b - a) * i / (count - 1)));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped, tied magnitudes share their mid-rank. For at most 12 non-zero
/// differences the null distribution of W+ is enumerated exactly; above that
/// a normal approximation with tie and continuity corrections is used.
/// Returns 1 when every difference is zero.
inline double wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("wilcoxon: length mismatch");
  if (a.empty()) throw InvalidArgument("wilcoxon: empty samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
  // doubled ranks stay integral under mid-ranking
  std::vector<long> rank2(n);
  std::vector<long> tie_sizes;
  for (std::size_t s = 0; s < n;) {
    std::size_t e = s;
    while (e + 1 < n && std::abs(d[order[e + 1]]) == std::abs(d[order[s]])) ++e;
    const long r2 = static_cast<long>(s + 1 + e + 1);  // 2 × mean of ranks s+1..e+1
    for (std::size_t q = s; q <= e; ++q) rank2[order[q]] = r2;
    tie_sizes.push_back(static_cast<long>(e - s + 1));
    s = e + 1;
  }
  long w2 = 0;  // 2·W+
  long total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) w2 += rank2[i];
  }
  // |2W+ − E[2W+]| doubled again to keep everything integral
  const long dev_obs = std::abs(2 * w2 - total2);

  if (n <= 12) {
    std::vector<double> count(static_cast<std::size_t>(total2 + 1), 0.0);
    count[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (long s = total2; s >= rank2[i]; --s) count[s] += count[s - rank2[i]];
    double extreme = 0.0;
    for (long s = 0; s <= total2; ++s)
      if (std::abs(2 * s - total2) >= dev_obs) extreme += count[s];
    return std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(n)));
  }

  const double nn = static_cast<double>(n);
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  for (long t : tie_sizes) var -= static_cast<double>(t * t * t - t) / 48.0;
  const double dev = static_cast<double>(dev_obs) / 4.0;  // |W+ − E W+|
  const double zstat = std::max(0.0, dev - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(zstat / std::sqrt(2.0)));
}

}  // namespace tvreg
