#pragma once

// `tvreg` command-line front end. run_cli() is the whole program; the tool's
// main() only forwards argv and the standard streams.
//
// Exit codes: 0 ok, 1 usage (bad flags, task mismatch), 2 I/O or file
// format, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvreg/error.hpp"
#include "tvreg/eval.hpp"
#include "tvreg/io.hpp"
#include "tvreg/simdata.hpp"
#include "tvreg/solver.hpp"
#include "tvreg/tvprox.hpp"

namespace tvreg::cli {

enum ExitCode : int { ok = 0, usage = 1, io_error = 2, numeric = 3 };

inline constexpr const char* kVersion = "tvreg 1.0.0 (formats TVV1 TVD1 TVM1)";

/// Decimal text that reads back to the same double.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Dims parse_dims(const std::string& s) {
  Dims d;
  char x1 = 0, x2 = 0;
  std::istringstream in(s);
  if (!(in >> d.ni >> x1 >> d.nj >> x2 >> d.nk) || x1 != 'x' || x2 != 'x' || !in.eof() ||
      d.ni < 1 || d.nj < 1 || d.nk < 1)
    throw InvalidArgument("dims must look like 12x12x12, got '" + s + "'");
  return d;
}

inline Task parse_task(const std::string& s) {
  if (s == "regression") return Task::regression;
  if (s == "binary") return Task::binary;
  if (s == "multiclass") return Task::multiclass;
  throw InvalidArgument("unknown task '" + s + "'");
}

/// "0.01,0.05,0.1" or "log:lo:hi:count".
inline std::vector<double> parse_lambda_grid(const std::string& s) {
  std::vector<double> out;
  if (s.rfind("log:", 0) == 0) {
    std::istringstream in(s.substr(4));
    double lo = 0, hi = 0;
    int count = 0;
    char c1 = 0, c2 = 0;
    if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':')
      throw InvalidArgument("lambda grid must be log:lo:hi:count, got '" + s + "'");
    return log_grid(lo, hi, count);
  }
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v >= 0.0))
      throw InvalidArgument("bad lambda value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty lambda grid");
  return out;
}

inline std::vector<int> read_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<int> g;
  int v = 0;
  while (in >> v) g.push_back(v);
  if (!in.eof()) throw ParseError("groups", g.size(), "expected integer group ids");
  return g;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + '\n';
  io::write_file(path, io::Bytes(text.begin(), text.end()));
}

/// Per-column means of X, and X with them removed.
inline Eigen::RowVectorXd center_columns(Dataset& d) {
  Eigen::RowVectorXd mu = d.X.colwise().mean();
  d.X.rowwise() -= mu;
  return mu;
}

/// A model fit on centered columns predicts on raw columns once the mean
/// contribution moves into the intercept.
inline void uncenter(Model& m, const Eigen::RowVectorXd& mu) {
  m.b -= mu.dot(m.w.values());
}

struct Options {
  // simulate
  int n = 100;
  std::string dims = "12x12x12";
  double snr_db = 5.0;
  double dropout = 0.5;
  std::uint64_t sim_seed = 0;
  std::string out;
  std::string out_truth;
  // fit / cv
  std::string data;
  std::string task;
  double lambda = 0.05;
  int max_outer = 500;
  double gap_factor = 1e-4;
  double outer_tol = 1e-7;
  std::uint32_t seed = 0;
  bool center = false;
  std::string out_model;
  std::string trace;
  // predict
  std::string model;
  // denoise
  std::string in_volume;
  std::string text_dims;
  int max_inner = 2000;
  // cv
  int folds = 4;
  std::string groups_file;
  std::string lambda_grid = "0.05";
  bool shuffle = false;
  unsigned threads = 1;
  std::string out_report;
};

inline Dataset load_dataset(const std::string& path) {
  return io::decode_dataset(io::read_file(path));
}

inline void check_task_flag(const Options& o, const Dataset& d) {
  if (!o.task.empty() && parse_task(o.task) != d.task)
    throw InvalidArgument(std::string("--task ") + o.task + " does not match the dataset (" +
                          to_string(d.task) + ")");
}

inline SolverConfig config_from(const Options& o) {
  SolverConfig c;
  c.lambda = o.lambda;
  c.max_outer = o.max_outer;
  c.gap_factor = o.gap_factor;
  c.outer_tol = o.outer_tol;
  c.seed = o.seed;
  c.validate();
  return c;
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
  SimSpec spec;
  spec.n = o.n;
  spec.dims = parse_dims(o.dims);
  spec.snr_db = o.snr_db;
  spec.dropout = o.dropout;
  spec.seed = o.sim_seed;
  const SimOutput sim = simulate(spec);
  io::write_file(o.out, io::encode_dataset(sim.dataset));
  if (!o.out_truth.empty()) io::write_file(o.out_truth, io::encode_volume(sim.w_true));
  out << "gamma " << fmt(sim.gamma) << '\n' << "support " << sim.roi_support.size() << '\n';
  return ok;
}

inline int cmd_fit(const Options& o, std::ostream& out) {
  Dataset d = load_dataset(o.data);
  check_task_flag(o, d);
  const SolverConfig cfg = config_from(o);
  Eigen::RowVectorXd mu;
  if (o.center) mu = center_columns(d);

  std::vector<std::string> trace;
  auto keep_trace = [&](const Model& m) {
    for (double v : m.trace) trace.push_back(fmt(v));
  };

  io::Bytes bytes;
  if (d.task == Task::multiclass) {
    OvoModel m = fit_ovo(d, cfg);
    for (auto& pair : m.pairs) {
      if (o.center) uncenter(pair.model, mu);
      keep_trace(pair.model);
    }
    bytes = io::encode_model(m);
    out << "pairs " << m.pairs.size() << '\n';
  } else {
    Model m = fit(d, d.task == Task::regression ? LossKind::squared : LossKind::logistic, cfg);
    if (o.center) uncenter(m, mu);
    keep_trace(m);
    out << "outer_iters " << m.stats.outer_iters << '\n'
        << "objective " << fmt(m.trace.back()) << '\n';
    bytes = io::encode_model(m);
  }
  io::write_file(o.out_model, bytes);
  if (!o.trace.empty()) write_lines(o.trace, trace);
  return ok;
}

inline std::vector<std::string> predict_lines(const io::AnyModel& any, const Eigen::MatrixXd& X) {
  std::vector<std::string> lines;
  if (const auto* ovo = std::get_if<OvoModel>(&any)) {
    for (int c : predict_ovo(*ovo, X)) lines.push_back(std::to_string(c));
    return lines;
  }
  const Model& m = std::get<Model>(any);
  if (m.loss == LossKind::squared) {
    const Eigen::VectorXd p = predict_regression(m, X);
    for (Index i = 0; i < p.size(); ++i) lines.push_back(fmt(p[i]));
  } else {
    for (int c : predict_binary(m, X)) lines.push_back(std::to_string(c));
  }
  return lines;
}

inline int cmd_predict(const Options& o, std::ostream&) {
  const io::AnyModel model = io::decode_model(io::read_file(o.model));
  const Dataset d = load_dataset(o.data);
  const MaskPtr& mm = std::holds_alternative<Model>(model)
                          ? std::get<Model>(model).w.mask()
                          : std::get<OvoModel>(model).pairs.front().model.w.mask();
  if (!mm->same_geometry(*d.mask)) throw DimensionError("model and dataset masks differ");
  write_lines(o.out, predict_lines(model, d.X));
  return ok;
}

inline int cmd_denoise(const Options& o, std::ostream& out) {
  MaskedVolume w;
  if (o.text_dims.empty()) {
    w = io::decode_volume(io::read_file(o.in_volume));
  } else {
    std::ifstream in(o.in_volume);
    if (!in) throw IoError("cannot open '" + o.in_volume + "' for reading");
    w = io::read_text_volume(in, parse_dims(o.text_dims));
  }
  if (!(o.gap_factor > 0.0)) throw InvalidArgument("--gap-factor must be > 0");
  if (o.max_inner < 1) throw InvalidArgument("--max-inner must be >= 1");
  ProxOptions popts;
  popts.max_inner = o.max_inner;
  const ProxResult r = prox_tv(w, o.lambda, o.gap_factor * w.values().squaredNorm(), nullptr, popts);
  io::write_file(o.out, io::encode_volume(r.v));
  out << "gap " << fmt(r.gap) << '\n' << "inner_iters " << r.inner_iters << '\n';
  if (!r.converged) out << "warning: gap target not reached\n";
  return ok;
}

inline int cmd_cv(const Options& o, std::ostream& out) {
  const Dataset d = load_dataset(o.data);
  check_task_flag(o, d);
  const SolverConfig cfg = config_from(o);
  CvPlan plan = o.groups_file.empty() ? CvPlan::kfold(o.folds) : CvPlan::by_groups(read_groups(o.groups_file));
  if (o.shuffle) plan.shuffle_seed = o.seed;
  plan.threads = o.threads;
  const std::vector<double> grid = parse_lambda_grid(o.lambda_grid);
  const std::vector<SweepPoint> sweep = lambda_sweep(d, plan, grid, cfg);

  out << std::left << std::setw(14) << "lambda" << std::right << std::setw(12) << "mean"
      << std::setw(12) << "std" << std::setw(12) << "min" << std::setw(12) << "max" << '\n';
  std::vector<std::string> rows{"lambda,fold,score"};
  for (const auto& pt : sweep) {
    out << std::left << std::setw(14) << fmt(pt.lambda).substr(0, 13) << std::right << std::fixed
        << std::setprecision(4) << std::setw(12) << pt.report.mean << std::setw(12) << pt.report.std
        << std::setw(12) << pt.report.min << std::setw(12) << pt.report.max << '\n'
        << std::defaultfloat;
    for (std::size_t f = 0; f < pt.report.per_fold_scores.size(); ++f)
      rows.push_back(fmt(pt.lambda) + ',' + std::to_string(f) + ',' + fmt(pt.report.per_fold_scores[f]));
  }
  if (!o.out_report.empty()) write_lines(o.out_report, rows);
  return ok;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TV-regularized regression and classification on masked 3D grids", "tvreg"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Generate the synthetic ROI benchmark");
  sim->add_option("--n", o.n, "Number of images")->capture_default_str();
  sim->add_option("--dims", o.dims, "Grid size as IxJxK")->capture_default_str();
  sim->add_option("--snr-db", o.snr_db, "Target SNR in dB")->capture_default_str();
  sim->add_option("--dropout", o.dropout, "Fraction of the ROI dropped per image")->capture_default_str();
  sim->add_option("--seed", o.sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", o.out, "Dataset file (TVD1)")->required();
  sim->add_option("--out-truth", o.out_truth, "Ground-truth weight volume (TVV1)");

  auto add_solver_flags = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Dataset file (TVD1)")->required();
    c->add_option("--task", o.task, "regression, binary or multiclass (checked against the file)");
    c->add_option("--lambda", o.lambda, "TV weight")->capture_default_str();
    c->add_option("--max-outer", o.max_outer, "Outer iteration cap")->capture_default_str();
    c->add_option("--gap-factor", o.gap_factor, "Prox gap target relative to |u|^2")->capture_default_str();
    c->add_option("--outer-tol", o.outer_tol, "Relative objective change that stops the fit (0 disables)")
        ->capture_default_str();
    c->add_option("--seed", o.seed, "Power-iteration seed")->capture_default_str();
  };

  auto* fitc = app.add_subcommand("fit", "Fit a TV-regularized model");
  add_solver_flags(fitc);
  fitc->add_flag("--center", o.center, "Center feature columns before fitting");
  fitc->add_option("--out-model", o.out_model, "Model file (TVM1)")->required();
  fitc->add_option("--trace", o.trace, "Write per-iteration objectives, one per line");

  auto* pred = app.add_subcommand("predict", "Predict with a saved model");
  pred->add_option("--model", o.model, "Model file (TVM1)")->required();
  pred->add_option("--data", o.data, "Dataset file (TVD1); targets are ignored")->required();
  pred->add_option("--out", o.out, "Predictions, one per line")->required();

  auto* den = app.add_subcommand("denoise", "TV denoising (ROF) of a single volume");
  den->add_option("--in-volume", o.in_volume, "Input volume (TVV1, or text with --text-dims)")->required();
  den->add_option("--text-dims", o.text_dims, "Read whitespace-separated values on an IxJxK grid");
  den->add_option("--lambda", o.lambda, "TV weight")->required();
  den->add_option("--gap-factor", o.gap_factor, "Gap target relative to |input|^2")->capture_default_str();
  den->add_option("--max-inner", o.max_inner, "Iteration cap")->capture_default_str();
  den->add_option("--out", o.out, "Output volume (TVV1)")->required();

  auto* cvc = app.add_subcommand("cv", "Cross-validated score over a lambda grid");
  add_solver_flags(cvc);
  auto* folds_opt = cvc->add_option("--folds", o.folds, "Number of contiguous folds")->capture_default_str();
  auto* groups_opt = cvc->add_option("--groups-file", o.groups_file, "One group id per sample (leave one group out)");
  folds_opt->excludes(groups_opt);
  cvc->add_option("--lambda-grid", o.lambda_grid, "Comma list or log:lo:hi:count")->capture_default_str();
  cvc->add_flag("--shuffle", o.shuffle, "Shuffle rows before splitting (uses --seed)");
  cvc->add_option("--threads", o.threads, "Parallel fold jobs")->capture_default_str();
  cvc->add_option("--out-report", o.out_report, "CSV rows lambda,fold,score");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (fitc->parsed()) return cmd_fit(o, out);
    if (pred->parsed()) return cmd_predict(o, out);
    if (den->parsed()) return cmd_denoise(o, out);
    if (cvc->parsed()) return cmd_cv(o, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return io_error;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return io_error;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return numeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }
  return usage;
}

}  // namespace tvreg::cli
