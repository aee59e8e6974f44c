#pragma once

// Experiment engines on top of the solver facade: synthetic instance
// generation, recovery-rate sweeps over the (M/N, K/M) plane with a level
// curve at rate one half, and a rolling portfolio backtest scored on
// held-out months. All randomness is drawn through counter-derived seeds,
// so every trial is reproducible in isolation and results never depend on
// execution order.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gampkit/matrix_io.hpp"
#include "gampkit/random.hpp"
#include "gampkit/solvers.hpp"

namespace gampkit {

// squared-error ratio ||x - xhat||^2 / ||x||^2
inline double nmse(const Vec& x_true, const Vec& x_est) {
  detail::require(x_true.size() == x_est.size(), "nmse: size mismatch");
  const double denom = x_true.squaredNorm();
  detail::require(denom > 0.0, "nmse: reference vector must be nonzero");
  return (x_est - x_true).squaredNorm() / denom;
}

inline double nmse_db(const Vec& x_true, const Vec& x_est) {
  return 10.0 * std::log10(nmse(x_true, x_est));
}

struct SignalGenConfig {
  int n = 0;
  int k = 0;
  double concentration = 1.0;
  bool simplex = true;
  std::uint64_t seed = 0;
};

// K-sparse nonnegative signal with uniformly random support. With the
// simplex flag the nonzeros are a symmetric Dirichlet draw and sum to one;
// without it they are the same gamma draws left unnormalized.
inline Vec gen_sparse_simplex(const SignalGenConfig& cfg) {
  detail::require(cfg.n >= 1 && cfg.k >= 1 && cfg.k <= cfg.n,
                  "gen_sparse_simplex: need 1 <= K <= N");
  detail::require(cfg.concentration > 0.0,
                  "gen_sparse_simplex: concentration must be > 0");
  Rng rng(cfg.seed);
  const auto support = rng.sample_indices(static_cast<std::size_t>(cfg.n),
                                          static_cast<std::size_t>(cfg.k));
  Vec x = Vec::Zero(cfg.n);
  if (cfg.simplex) {
    const auto w = rng.dirichlet(cfg.concentration, support.size());
    for (std::size_t i = 0; i < support.size(); ++i)
      x[static_cast<Eigen::Index>(support[i])] = w[i];
  } else {
    for (std::size_t i = 0; i < support.size(); ++i)
      x[static_cast<Eigen::Index>(support[i])] = rng.gamma(cfg.concentration);
  }
  return x;
}

// i.i.d. N(0, 1/M) entries, so columns have unit expected norm
inline DenseOperator gen_gaussian_operator(int m, int n, std::uint64_t seed) {
  detail::require(m >= 1 && n >= 1, "gen_gaussian_operator: need M, N >= 1");
  Rng rng(seed);
  Mat a(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = scale * rng.normal();
  return DenseOperator(std::move(a));
}

struct SweepGrid {
  std::vector<double> delta_values;  // M/N
  std::vector<double> rho_values;    // K/M
  int trials = 0;
  int n = 0;
  double success_threshold = 1e-6;
  double concentration = 1.0;

  void validate() const {
    detail::require(!delta_values.empty() && !rho_values.empty(),
                    "SweepGrid: need at least one grid point");
    for (double d : delta_values)
      detail::require(d > 0.0 && d <= 1.0, "SweepGrid: delta must be in (0, 1]");
    for (double r : rho_values)
      detail::require(r > 0.0 && r <= 1.0, "SweepGrid: rho must be in (0, 1]");
    for (std::size_t i = 1; i < delta_values.size(); ++i)
      detail::require(delta_values[i] > delta_values[i - 1],
                      "SweepGrid: delta values must be strictly increasing");
    for (std::size_t i = 1; i < rho_values.size(); ++i)
      detail::require(rho_values[i] > rho_values[i - 1],
                      "SweepGrid: rho values must be strictly increasing");
    detail::require(trials >= 1, "SweepGrid: need trials >= 1");
    detail::require(n >= 1, "SweepGrid: need n >= 1");
    detail::require(success_threshold > 0.0,
                    "SweepGrid: success threshold must be > 0");
    detail::require(concentration > 0.0,
                    "SweepGrid: concentration must be > 0");
  }
};

struct TrialRecord {
  double delta = 0.0;
  double rho = 0.0;
  int trial = 0;
  double nmse = 0.0;
  bool success = false;
  int iterations = 0;
  double seconds = 0.0;
};

struct ContourPoint {
  double delta = 0.0;
  double rho = 0.0;
};

struct SweepResult {
  std::vector<TrialRecord> records;
  Mat success_rate;  // delta index by rho index
  std::vector<ContourPoint> contour;
  int trials = 0;
};

// Rate-one-half level curve, one point per delta column: the success rate
// is interpolated linearly across the rho axis at the last grid row still
// at or above one half. Columns entirely below one half contribute no
// point; columns entirely above end at the top grid edge.
inline std::vector<ContourPoint> extract_contour(
    const std::vector<double>& delta_values,
    const std::vector<double>& rho_values, const Mat& success_rate) {
  detail::require(success_rate.rows() ==
                          static_cast<Eigen::Index>(delta_values.size()) &&
                      success_rate.cols() ==
                          static_cast<Eigen::Index>(rho_values.size()),
                  "extract_contour: rate table shape mismatch");
  std::vector<ContourPoint> out;
  const Eigen::Index cols = success_rate.cols();
  for (Eigen::Index di = 0; di < success_rate.rows(); ++di) {
    Eigen::Index last = -1;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (success_rate(di, j) >= 0.5) last = j;
    if (last < 0) continue;
    const double delta = delta_values[static_cast<std::size_t>(di)];
    if (last == cols - 1) {
      out.push_back({delta, rho_values.back()});
      continue;
    }
    const double s0 = success_rate(di, last);
    const double s1 = success_rate(di, last + 1);
    const double r0 = rho_values[static_cast<std::size_t>(last)];
    const double r1 = rho_values[static_cast<std::size_t>(last + 1)];
    out.push_back({delta, r0 + (s0 - 0.5) * (r1 - r0) / (s0 - s1)});
  }
  return out;
}

// One recovery experiment per (grid point, trial): fresh operator and
// simplex signal, the exact measurements augmented with the sum constraint,
// then the given solver. Divergence is recorded as a failed trial, never an
// abort. Seeds are derived per (grid point, trial) from the master seed, so
// the records are identical no matter how trials are scheduled.
inline SweepResult run_ptc_sweep(const SweepGrid& grid, const SolveSpec& spec,
                                 std::uint64_t master_seed) {
  grid.validate();
  detail::require(!spec.constraint.has_value(),
                  "run_ptc_sweep: the sweep attaches its own constraint");
  SweepResult result;
  result.trials = grid.trials;
  result.success_rate =
      Mat::Zero(static_cast<Eigen::Index>(grid.delta_values.size()),
                static_cast<Eigen::Index>(grid.rho_values.size()));
  for (std::size_t di = 0; di < grid.delta_values.size(); ++di) {
    for (std::size_t rj = 0; rj < grid.rho_values.size(); ++rj) {
      const double delta = grid.delta_values[di];
      const double rho = grid.rho_values[rj];
      const int m = std::max(
          1, static_cast<int>(std::lround(delta * grid.n)));
      const int k = std::min(
          m, std::max(1, static_cast<int>(std::lround(rho * m))));
      const std::uint64_t point =
          di * grid.rho_values.size() + rj;
      int wins = 0;
      for (int t = 0; t < grid.trials; ++t) {
        const std::uint64_t trial_seed =
            derive_seed(master_seed, point, static_cast<std::uint64_t>(t));
        const DenseOperator a =
            gen_gaussian_operator(m, grid.n, derive_seed(trial_seed, 0));
        SignalGenConfig sig;
        sig.n = grid.n;
        sig.k = k;
        sig.concentration = grid.concentration;
        sig.simplex = true;
        sig.seed = derive_seed(trial_seed, 1);
        const Vec x = gen_sparse_simplex(sig);
        const Vec y = a.apply(x);
        const Problem problem(a, y, simplex_constraint(grid.n));

        TrialRecord rec;
        rec.delta = delta;
        rec.rho = rho;
        rec.trial = t;
        rec.nmse = std::numeric_limits<double>::infinity();
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const Solution sol = solve(problem, spec);
          rec.nmse = nmse(x, sol.xhat);
          rec.iterations = sol.diagnostics.iterations_used;
        } catch (const GampDivergence&) {
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
        rec.success = rec.nmse < grid.success_threshold;
        wins += rec.success ? 1 : 0;
        result.records.push_back(rec);
      }
      result.success_rate(static_cast<Eigen::Index>(di),
                          static_cast<Eigen::Index>(rj)) =
          static_cast<double>(wins) / grid.trials;
    }
  }
  result.contour =
      extract_contour(grid.delta_values, grid.rho_values, result.success_rate);
  return result;
}

namespace detail {

inline void write_json_number(std::FILE* f, double v) {
  // JSON has no representation for non-finite values
  if (!std::isfinite(v)) {
    std::fputs("null", f);
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::fputs(buf, f);
}

}  // namespace detail

inline void save_trial_records_csv(const std::string& path,
                                   const std::vector<TrialRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "delta,rho,trial,nmse_db,success,iters,seconds\n";
  char buf[160];
  for (const TrialRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%d,%d,%.17g\n",
                  r.delta, r.rho, r.trial, 10.0 * std::log10(r.nmse),
                  r.success ? 1 : 0, r.iterations, r.seconds);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void save_trial_records_jsonl(const std::string& path,
                                     const std::vector<TrialRecord>& records) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const TrialRecord& r : records) {
    std::fputs("{\"delta\":", f);
    detail::write_json_number(f, r.delta);
    std::fputs(",\"rho\":", f);
    detail::write_json_number(f, r.rho);
    std::fprintf(f, ",\"trial\":%d,\"nmse_db\":", r.trial);
    detail::write_json_number(f, 10.0 * std::log10(r.nmse));
    std::fprintf(f, ",\"success\":%s,\"iters\":%d,\"seconds\":",
                 r.success ? "true" : "false", r.iterations);
    detail::write_json_number(f, r.seconds);
    std::fputs("}\n", f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

// The trial count rides along as a constant column so a contour file is
// self-describing about the rate resolution behind it.
inline void save_contour_csv(const std::string& path,
                             const std::vector<ContourPoint>& contour,
                             int trials) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "delta,rho,trials\n";
  char buf[80];
  for (const ContourPoint& p : contour) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", p.delta, p.rho, trials);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// One rolling step of the backtest: the fitted block of consecutive months,
// the held-out block right after it, and the targets derived from the
// fitted block alone.
struct BacktestWindow {
  Mat past;    // M by N returns the solver may see
  Mat future;  // T by N returns used only for scoring
  Vec mu;      // column means of past
  double rho = 0.0;
  int start_month = 0;
};

// Windows advance by a fixed stride; the scoring block starts exactly where
// the fitted block ends, which is what keeps future data out of every fit.
inline std::vector<BacktestWindow> make_backtest_windows(const Mat& returns,
                                                         int window_months,
                                                         int horizon,
                                                         int stride) {
  detail::require(window_months >= 2, "make_backtest_windows: window too short");
  detail::require(horizon >= 2, "make_backtest_windows: horizon too short");
  detail::require(stride >= 1, "make_backtest_windows: stride must be >= 1");
  detail::require(returns.rows() >= window_months + horizon,
                  "make_backtest_windows: not enough months");
  std::vector<BacktestWindow> out;
  for (int start = 0; start + window_months + horizon <= returns.rows();
       start += stride) {
    BacktestWindow w;
    w.past = returns.middleRows(start, window_months);
    w.future = returns.middleRows(start + window_months, horizon);
    w.mu = w.past.colwise().mean().transpose();
    w.rho = w.mu.mean();
    w.start_month = start;
    out.push_back(std::move(w));
  }
  return out;
}

struct BacktestReport {
  std::vector<double> sharpe_per_window;
  double mean_sharpe = 0.0;
  double constraint_error = 0.0;  // mean squared target-return miss
};

namespace detail {

inline void check_window(const BacktestWindow& w, int prev_start) {
  require(w.past.rows() >= 2 && w.past.cols() >= 1,
          "run_backtest: malformed window");
  require(w.future.rows() >= 2 && w.future.cols() == w.past.cols(),
          "run_backtest: scoring block shape mismatch");
  require(w.mu.size() == w.past.cols(), "run_backtest: mu size mismatch");
  const Vec col_means = w.past.colwise().mean().transpose();
  require((w.mu - col_means).lpNorm<Eigen::Infinity>() <=
              1e-12 + 1e-9 * col_means.lpNorm<Eigen::Infinity>(),
          "run_backtest: mu does not match the window's column means");
  require(w.start_month > prev_start,
          "run_backtest: windows must advance chronologically");
}

inline double holdout_sharpe(const BacktestWindow& w, const Vec& weights) {
  const Vec port = w.future * weights;
  const double mean_r = port.mean();
  const double var_r = (port.array() - mean_r).square().sum() /
                       static_cast<double>(port.size() - 1);
  return mean_r / std::sqrt(var_r);
}

}  // namespace detail

// Per window: fit min ||1 rho - A x||^2 + penalty subject to mu'x = rho,
// 1'x = 1, x >= 0 on the past block, then score the realized Sharpe ratio
// on the held-out block. The solver never sees a window's future rows.
inline BacktestReport run_backtest(const std::vector<BacktestWindow>& windows,
                                   const SolveSpec& spec) {
  detail::require(!windows.empty(), "run_backtest: no windows");
  detail::require(!spec.constraint.has_value(),
                  "run_backtest: the backtest attaches its own constraint");
  BacktestReport report;
  int prev_start = std::numeric_limits<int>::min();
  for (const BacktestWindow& w : windows) {
    detail::check_window(w, prev_start);
    prev_start = w.start_month;
    const Vec target = Vec::Constant(w.past.rows(), w.rho);
    Problem p(DenseOperator(w.past), target,
              portfolio_constraint(w.mu, w.rho));
    SolveSpec window_spec = spec;
    window_spec.constraint.reset();
    const Solution sol = solve(p, window_spec);
    report.sharpe_per_window.push_back(detail::holdout_sharpe(w, sol.xhat));
    const double miss = w.mu.dot(sol.xhat) - w.rho;
    report.constraint_error += miss * miss;
  }
  const double count = static_cast<double>(windows.size());
  report.constraint_error /= count;
  for (double s : report.sharpe_per_window) report.mean_sharpe += s;
  report.mean_sharpe /= count;
  return report;
}

// Equal-weight benchmark scored the same way, no solver involved.
inline BacktestReport run_backtest_naive(
    const std::vector<BacktestWindow>& windows) {
  detail::require(!windows.empty(), "run_backtest_naive: no windows");
  BacktestReport report;
  int prev_start = std::numeric_limits<int>::min();
  for (const BacktestWindow& w : windows) {
    detail::check_window(w, prev_start);
    prev_start = w.start_month;
    const Vec weights =
        Vec::Constant(w.past.cols(), 1.0 / static_cast<double>(w.past.cols()));
    report.sharpe_per_window.push_back(detail::holdout_sharpe(w, weights));
    const double miss = w.mu.dot(weights) - w.rho;
    report.constraint_error += miss * miss;
  }
  const double count = static_cast<double>(windows.size());
  report.constraint_error /= count;
  for (double s : report.sharpe_per_window) report.mean_sharpe += s;
  report.mean_sharpe /= count;
  return report;
}

// Monthly-returns table: a leading date column followed by one column per
// asset, values in percent. The date column is dropped and percents become
// fractions. Empty or non-numeric cells and the conventional missing-data
// sentinel (percent values at or below -99) are rejected with the offending
// row and column.
inline Mat load_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool saw_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto toks = detail::split_csv_line(line);
    if (toks.size() < 2)
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               ": need a date column and at least one asset");
    // the date column is a label and is never parsed
    std::vector<double> row(toks.size() - 1);
    bool ok = true;
    for (std::size_t j = 1; ok && j < toks.size(); ++j) {
      double v = 0.0;
      if (!detail::parse_double(toks[j], v)) {
        if (!saw_content) {
          ok = false;  // header line
          break;
        }
        throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                 ", column " + std::to_string(j + 1) +
                                 ": not a number: '" + toks[j] + "'");
      }
      if (v <= -99.0)
        throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                 ", column " + std::to_string(j + 1) +
                                 ": missing-value sentinel " + toks[j]);
      row[j - 1] = v / 100.0;
    }
    if (!ok) {
      saw_content = true;
      continue;
    }
    saw_content = true;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               " has " + std::to_string(row.size() + 1) +
                               " fields, expected " +
                               std::to_string(rows.front().size() + 1));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Mat m(static_cast<Eigen::Index>(rows.size()),
        static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return m;
}

}  // namespace gampkit
