#include "shelab/islands.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shelab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double log_plus(double z) { return std::log(std::max(z, std::exp(1.0))); }

// Linear-interpolation quantile over a sorted sample; NaN on an empty one.
double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::nan("");
  if (v.size() == 1) return v[0];
  const double pos = q * double(v.size() - 1);
  const size_t lo = size_t(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double w = pos - double(lo);
  return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

void check_scan_windows(const std::vector<double>& n_values, double torus) {
  require(!n_values.empty(), "island scan: need at least one window size");
  for (size_t i = 0; i < n_values.size(); ++i) {
    require(std::isfinite(n_values[i]) && n_values[i] > 1.0,
            "island scan: window sizes must be finite and larger than 1");
    require(n_values[i] <= torus,
            "island scan: window exceeds the torus length");
    if (i > 0)
      require(n_values[i] > n_values[i - 1],
              "island scan: window sizes must be strictly ascending");
  }
}

void check_time_matches(double t, const SolutionField& field,
                        const char* who) {
  require(std::isfinite(t) && t > 0, "island statistics: need t > 0");
  if (std::abs(t - field.t) > 1e-6 * std::max(1.0, t))
    throw std::invalid_argument(std::string(who) +
                                ": t does not match the run's final snapshot");
}

void check_kept(const EnsembleRun& run, const char* who) {
  if (run.fields.empty())
    throw std::invalid_argument(std::string(who) +
                                ": the run must keep per-replica fields");
}

// Median/quartile assembly shared by the streamed scan and the kept-fields
// summary.  dims_per_window[i] collects the finite estimates at window i;
// replicas with an empty island there are only counted.
IslandScan summarize(double t, double alpha,
                     const std::vector<double>& n_values,
                     std::vector<std::vector<double>>&& dims_per_window,
                     std::vector<int>&& zeros, uint32_t replicas) {
  IslandScan scan;
  scan.t = t;
  scan.alpha = alpha;
  scan.theory_dim = 1.0 - d_alpha(alpha, t);
  scan.replica_count = replicas;
  scan.n_values = n_values;
  for (size_t i = 0; i < n_values.size(); ++i) {
    scan.thresholds.push_back(island_threshold(alpha, n_values[i]));
    std::vector<double>& dims = dims_per_window[i];
    std::sort(dims.begin(), dims.end());
    scan.median_dim.push_back(quantile_sorted(dims, 0.50));
    scan.q25_dim.push_back(quantile_sorted(dims, 0.25));
    scan.q75_dim.push_back(quantile_sorted(dims, 0.75));
    scan.zero_measure_count.push_back(zeros[i]);
  }
  return scan;
}

void accumulate_dims(const SolutionField& field, double alpha,
                     const std::vector<double>& n_values,
                     std::vector<std::vector<double>>* dims_per_window,
                     std::vector<int>* zeros) {
  for (size_t i = 0; i < n_values.size(); ++i) {
    const double measure = island_measure(field, alpha, n_values[i]);
    if (measure > 0)
      (*dims_per_window)[i].push_back(std::log(measure) /
                                      std::log(n_values[i]));
    else
      ++(*zeros)[i];
  }
}

}  // namespace

double d_alpha(double alpha, double t) {
  require(std::isfinite(alpha) && alpha > 0, "d_alpha: need alpha > 0");
  require(std::isfinite(t) && t > 0, "d_alpha: need t > 0");
  return 4.0 * alpha * std::sqrt(6.0 / t) / (3.0 * std::sqrt(3.0));
}

double island_threshold(double alpha, double N) {
  require(std::isfinite(alpha) && alpha > 0,
          "island_threshold: need alpha > 0");
  require(std::isfinite(N) && N > 0, "island_threshold: need N > 0");
  return std::exp(std::pow(alpha * log_plus(N), 2.0 / 3.0));
}

double island_measure(const SolutionField& field, double alpha, double N) {
  const Grid& grid = field.grid;
  require(grid.d == 1, "island_measure: islands are defined on d = 1 fields");
  require(int64_t(field.values.size()) == grid.total_cells(),
          "island_measure: field size does not match its grid");
  require(std::isfinite(N) && N > 0, "island_measure: need N > 0");
  const int64_t m = llround(N / grid.dx);
  require(m >= 1, "island_measure: window is smaller than one cell");
  require(m <= grid.n_cells, "island_measure: window exceeds the torus");
  const double a_n = island_threshold(alpha, N);
  int64_t count = 0;
  for (int64_t i = 0; i < m; ++i)
    if (field.values[size_t(i)] > a_n) ++count;
  return double(count) * grid.dx;
}

IslandScan dimension_summary(const EnsembleRun& run, double alpha,
                             const std::vector<double>& n_values) {
  check_kept(run, "dimension_summary");
  require(run.grid.d == 1,
          "dimension_summary: islands are defined on d = 1 runs");
  check_scan_windows(n_values, run.grid.length());
  const double t = run.fields[0].back().t;
  require(d_alpha(alpha, t) < 0.5,
          "dimension_summary: the dimension formula needs d(alpha) < 1/2");

  std::vector<std::vector<double>> dims(n_values.size());
  std::vector<int> zeros(n_values.size(), 0);
  for (const auto& snaps : run.fields)
    accumulate_dims(snaps.back(), alpha, n_values, &dims, &zeros);
  return summarize(t, alpha, n_values, std::move(dims), std::move(zeros),
                   uint32_t(run.fields.size()));
}

std::vector<IslandScan> dimension_scan(const PamEnsembleConfig& cfg,
                                       const std::vector<double>& alphas,
                                       const std::vector<double>& n_values) {
  require(cfg.grid.d == 1,
          "dimension_scan: islands are defined on d = 1 runs");
  require(std::isfinite(cfg.t_final) && cfg.t_final > 0,
          "dimension_scan: need t_final > 0");
  require(cfg.replicas >= 1, "dimension_scan: need at least one replica");
  require(!alphas.empty(), "dimension_scan: need at least one alpha");
  for (double alpha : alphas)
    require(d_alpha(alpha, cfg.t_final) < 0.5,
            "dimension_scan: the dimension formula needs d(alpha) < 1/2");
  check_scan_windows(n_values, cfg.grid.length());

  std::vector<std::vector<std::vector<double>>> dims(
      alphas.size(), std::vector<std::vector<double>>(n_values.size()));
  std::vector<std::vector<int>> zeros(alphas.size(),
                                      std::vector<int>(n_values.size(), 0));
  uint32_t observed = 0;
  double t_actual = cfg.t_final;

  SolveOptions opt;
  opt.t_final = cfg.t_final;
  opt.replicas = cfg.replicas;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.observer = [&](const std::vector<SolutionField>& snaps) {
    const SolutionField& field = snaps.back();
    t_actual = field.t;
    for (size_t a = 0; a < alphas.size(); ++a)
      accumulate_dims(field, alphas[a], n_values, &dims[a], &zeros[a]);
    ++observed;
  };
  solve(cfg.grid, KernelSpec::white_noise(1), SigmaSpec::linear(), opt);

  std::vector<IslandScan> out;
  out.reserve(alphas.size());
  for (size_t a = 0; a < alphas.size(); ++a)
    out.push_back(summarize(t_actual, alphas[a], n_values, std::move(dims[a]),
                            std::move(zeros[a]), observed));
  return out;
}

SupGrowthCurve sup_growth(const EnsembleRun& run, double t,
                          const std::vector<double>& n_values,
                          bool symmetric_window) {
  check_kept(run, "sup_growth");
  require(run.grid.d == 1, "sup_growth: the growth law is for d = 1 runs");
  check_time_matches(t, run.fields[0].back(), "sup_growth");
  check_scan_windows(n_values, symmetric_window ? run.grid.length() / 2.0
                                                : run.grid.length());

  const int n = run.grid.n_cells;
  const double dx = run.grid.dx;
  SupGrowthCurve curve;
  curve.t = t;
  curve.theory = 0.75 * std::pow(2.0 * t / 3.0, 2.0 / 3.0);
  curve.symmetric_window = symmetric_window;
  curve.n_values = n_values;

  std::vector<std::vector<double>> stats(n_values.size()),
      sup_logs(n_values.size());
  for (size_t r = 0; r < run.fields.size(); ++r) {
    const SolutionField& field = run.fields[r].back();
    require(int64_t(field.values.size()) == run.grid.total_cells(),
            "sup_growth: field size does not match the run's grid");
    for (size_t i = 0; i < n_values.size(); ++i) {
      const int64_t m = llround(n_values[i] / dx);
      double sup = field.values[0];
      for (int64_t j = 1; j < m; ++j)
        sup = std::max(sup, field.values[size_t(j)]);
      if (symmetric_window)  // cells of [-N, 0) live at the torus's far end
        for (int64_t j = n - m; j < n; ++j)
          sup = std::max(sup, field.values[size_t(j)]);
      if (!(sup > 0))
        throw std::runtime_error(
            "sup_growth: replica " + std::to_string(r) +
            " has a non-positive window supremum; the model keeps u > 0");
      const double sup_log = std::log(sup);
      sup_logs[i].push_back(sup_log);
      stats[i].push_back(sup_log / std::pow(std::log(n_values[i]), 2.0 / 3.0));
    }
  }
  for (size_t i = 0; i < n_values.size(); ++i) {
    std::sort(stats[i].begin(), stats[i].end());
    std::sort(sup_logs[i].begin(), sup_logs[i].end());
    curve.median_stat.push_back(quantile_sorted(stats[i], 0.50));
    curve.q25_stat.push_back(quantile_sorted(stats[i], 0.25));
    curve.q75_stat.push_back(quantile_sorted(stats[i], 0.75));
    curve.median_sup_log.push_back(quantile_sorted(sup_logs[i], 0.50));
  }
  return curve;
}

TailFit tail_exponent(const EnsembleRun& run, double t,
                      const std::vector<double>& a_values) {
  check_kept(run, "tail_exponent");
  require(run.grid.d == 1, "tail_exponent: the tail law is for d = 1 runs");
  if (run.fields.size() < 10000)
    throw std::invalid_argument(
        "tail_exponent: need at least 10^4 completed replicas");
  check_time_matches(t, run.fields[0].back(), "tail_exponent");
  require(!a_values.empty(), "tail_exponent: need at least one threshold");
  for (size_t i = 0; i < a_values.size(); ++i) {
    require(std::isfinite(a_values[i]) && a_values[i] > 0,
            "tail_exponent: thresholds must be finite and positive");
    if (i > 0)
      require(a_values[i] > a_values[i - 1],
              "tail_exponent: thresholds must be strictly ascending");
  }

  const size_t reps = run.fields.size();
  std::vector<double> u0(reps);
  for (size_t r = 0; r < reps; ++r) u0[r] = run.fields[r].back().values[0];

  TailFit fit;
  fit.t = t;
  fit.theory = -d_alpha(1.0, t);
  fit.replica_count = uint32_t(reps);
  for (double a : a_values) {
    const double level = std::exp(a);
    int64_t count = 0;
    for (double u : u0)
      if (u > level) ++count;
    if (count < 30) {
      // Counts only fall as a grows, so everything from here on is dropped.
      fit.warnings.push_back(
          "thresholds from a = " + std::to_string(a) +
          " dropped: fewer than 30 exceedances among the replicas");
      break;
    }
    fit.a.push_back(a);
    fit.a32.push_back(std::pow(a, 1.5));
    fit.count.push_back(count);
    fit.log_p.push_back(std::log(double(count)) - std::log(double(reps)));
  }
  if (fit.a.size() < 2)
    throw std::invalid_argument(
        "tail_exponent: need at least two thresholds with 30 exceedances");

  const size_t m = fit.a.size();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < m; ++i) {
    sx += fit.a32[i];
    sy += fit.log_p[i];
  }
  const double xbar = sx / double(m), ybar = sy / double(m);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    sxx += (fit.a32[i] - xbar) * (fit.a32[i] - xbar);
    sxy += (fit.a32[i] - xbar) * (fit.log_p[i] - ybar);
  }
  fit.slope = sxy / sxx;
  // Slope error by the delta method.  The exceedance indicators are nested,
  // so cov(log p_i, log p_j) ~= (1 - p)/(R p) evaluated at the less extreme
  // of the two thresholds; residual-based errors ignore that coupling and
  // understate the uncertainty badly at the 30-count end of the fit.
  double var_slope = 0.0;
  for (size_t i = 0; i < m; ++i) {
    const double wi = (fit.a32[i] - xbar) / sxx;
    for (size_t j = 0; j < m; ++j) {
      const double wj = (fit.a32[j] - xbar) / sxx;
      const double p = double(fit.count[std::min(i, j)]) / double(reps);
      var_slope += wi * wj * (1.0 - p) / (double(reps) * p);
    }
  }
  fit.stderr_ = std::sqrt(std::max(var_slope, 0.0));
  return fit;
}

}  // namespace shelab
