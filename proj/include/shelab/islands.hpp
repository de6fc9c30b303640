#pragma once
// Intermittency statistics for the parabolic Anderson model (linear sigma,
// space-time white noise, d = 1).  The solution is unbounded in space at any
// fixed time, with peaks so tall that the set of x in [0, N] where
// u(t, x) > exp{(alpha log N)^{2/3}} has Lebesgue measure close to
// N^{1 - d(alpha)}, d(alpha) = 4 alpha 3^{-3/2} sqrt(6/t).  This module
// measures those islands: the per-field level-set measure, an ensemble
// dimension estimate log(measure)/log N, the growth law of the running
// spatial supremum, and the pointwise tail exponent that drives all three.
//
// The limits are genuinely asymptotic; at reachable N the estimates sit a
// visible distance from their theory values, so every ensemble summary here
// reports the theory column next to the data and asserts only ordering and
// monotonicity, never equality of constants.

#include <cstdint>
#include <string>
#include <vector>

#include "shelab/solver.hpp"

namespace shelab {

// Dimension deficit d(alpha) = 4 alpha 3^{-3/2} sqrt(6/t); the macroscopic
// dimension of the alpha-islands is 1 - d(alpha), valid while d(alpha) < 1/2.
// Throws std::invalid_argument unless alpha, t > 0.
double d_alpha(double alpha, double t);

// Island threshold a_N = exp{(alpha log+ N)^{2/3}} with log+ z = log(max(z, e)).
double island_threshold(double alpha, double N);

// Lebesgue measure of {x in [0, N): u(x) > a_N} on a d = 1 field: the cell
// count above island_threshold(alpha, N), weighted by the cell width.  The
// window must hold at least one cell and fit in the torus.  Exactly
// nonincreasing in alpha for a fixed field (nested level sets).
double island_measure(const SolutionField& field, double alpha, double N);

// Ensemble summary of the dimension estimates for one alpha: per replica and
// window, log(island_measure)/log N, summarized by median and quartiles.
// Replicas whose window holds no island (measure zero) are excluded from the
// order statistics and counted per window instead.
struct IslandScan {
  double t = 0.0;
  double alpha = 0.0;
  double theory_dim = 0.0;  // 1 - d(alpha); reported, never asserted
  uint32_t replica_count = 0;
  std::vector<double> n_values;
  std::vector<double> thresholds;  // a_N per window
  std::vector<double> median_dim, q25_dim, q75_dim;
  std::vector<int> zero_measure_count;
};

// Driver configuration for the model the island results are proved for:
// white noise, linear sigma, d = 1, flat initial data.
struct PamEnsembleConfig {
  Grid grid;  // d = 1
  double t_final = 1.0;
  uint32_t replicas = 1;
  uint64_t seed = 0;
  int threads = 1;
};

// Runs the ensemble and summarizes the dimension estimates for each alpha.
// Streams through an observer (no replica fields are retained), so the
// 2^14-cell scans stay within ordinary memory.  Windows must be strictly
// ascending, each larger than 1 and at most the torus length; every alpha
// must satisfy d(alpha) < 1/2, the validity region of the dimension formula.
std::vector<IslandScan> dimension_scan(const PamEnsembleConfig& cfg,
                                       const std::vector<double>& alphas,
                                       const std::vector<double>& n_values);

// The same summary computed from an existing run that kept its fields (last
// snapshot per replica).  dimension_scan(cfg, ...) and this function produce
// identical results for matching inputs.
IslandScan dimension_summary(const EnsembleRun& run, double alpha,
                             const std::vector<double>& n_values);

// Growth of the spatial supremum: per replica and window, the statistic
// log(sup u)/(log N)^{2/3} whose N -> infinity limit is
// (3/4)(2t/3)^{2/3}.  The raw window suprema are running maxima, hence
// nondecreasing in N per replica; the normalized statistic is summarized by
// median and quartiles with the limiting constant alongside.  The window is
// [0, N) by default; symmetric_window widens it to [-N, N) (the law carries
// the same constant either way).
struct SupGrowthCurve {
  double t = 0.0;
  double theory = 0.0;  // (3/4)(2t/3)^{2/3}
  bool symmetric_window = false;
  std::vector<double> n_values;
  std::vector<double> median_stat, q25_stat, q75_stat;
  std::vector<double> median_sup_log;  // median of log sup u, unnormalized
};

SupGrowthCurve sup_growth(const EnsembleRun& run, double t,
                          const std::vector<double>& n_values,
                          bool symmetric_window = false);

// Tail exponent of the pointwise law: least-squares slope of
// log P{u(t, 0) > e^a} against a^{3/2}, whose a -> infinity limit is -d(1).
// Requires 10^4 completed replicas.  Thresholds whose empirical exceedance
// count falls below 30 are dropped from the fit with a warning; at least two
// thresholds must survive.
struct TailFit {
  double t = 0.0;
  double slope = 0.0;
  double stderr_ = 0.0;  // delta-method slope error (nested-count covariance)
  double theory = 0.0;   // -d(1)
  uint32_t replica_count = 0;
  std::vector<double> a;        // thresholds kept, ascending
  std::vector<double> a32;      // regressors a^{3/2}
  std::vector<int64_t> count;   // exceedances of e^a among the replicas
  std::vector<double> log_p;    // log(count / replicas)
  std::vector<std::string> warnings;
};

TailFit tail_exponent(const EnsembleRun& run, double t,
                      const std::vector<double>& a_values);

}  // namespace shelab
