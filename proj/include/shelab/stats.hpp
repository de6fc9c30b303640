#pragma once
// Spatial-average functionals of the solution and the decisions built on
// their ensemble variance.
//
// An average is a product of per-factor maps applied to the field at shifted
// positions,
//
//   A_N = (1/#cells) sum_{x in [0,N)^d} prod_j g_j(u(t, x + zeta^j)),
//
// Riemann-summed over whole cells with periodic indexing.  Three procedures
// consume its cross-replica variance: variance_vs_N checks the bound
// C k^2 f([-N,N]^d) / N^d with C fitted once at the smallest N and frozen;
// ergodicity_test classifies the variance sequences of a whole suite of
// averages as decaying or stabilized; covariance_decay measures the spatial
// covariance of a single factor at growing lags (mixing).
//
// Factors are evaluated in their raw form.  The classical reduction to
// g(0) = 0, Lip(g) = 1 is available through AverageSpec::normalized(), which
// rescales each factor exactly ((g - g(0)) / lip); the suite decisions are
// invariant under it, and the tests check that.

#include <cstdint>
#include <string>
#include <vector>

#include "shelab/solver.hpp"

namespace shelab {

enum class GFamily {
  IdentityMinus1,  // g(z) = z - 1
  Clip01,          // g(z) = min(1, max(z - a, 0))
  Cosine,          // g(z) = cos(theta z)
  Sine,            // g(z) = sin(theta z)
  Custom,          // linear interpolation of a table, constant outside
};

struct GFactor {
  GFamily family = GFamily::IdentityMinus1;
  double a = 0.0;              // Clip01 offset
  double theta = 1.0;          // Cosine / Sine frequency, != 0
  double u_min = 0.0;          // Custom: abscissa of values[0]
  double du = 1.0;             // Custom: abscissa spacing, > 0
  std::vector<double> values;  // Custom: samples
  double lip = 1.0;            // Lipschitz constant of the raw factor
  // Normalization applied after the raw map: (g(z) - sub) * scale.  The
  // factories leave it at the identity; AverageSpec::normalized() fills it.
  double sub = 0.0;
  double scale = 1.0;
  std::vector<double> shift;  // zeta coordinates; empty means no shift

  static GFactor identity_minus_1(std::vector<double> shift = {});
  static GFactor clip01(double a, std::vector<double> shift = {});
  static GFactor cosine(double theta, std::vector<double> shift = {});
  static GFactor sine(double theta, std::vector<double> shift = {});
  // Validated like the solver's custom nonlinearity: the steepest table
  // secant must not exceed the declared Lipschitz constant.
  static GFactor custom(double u_min, double du, std::vector<double> values,
                        double lip, std::vector<double> shift = {});
};

double eval_g(const GFactor& g, double z);

struct AverageSpec {
  std::vector<GFactor> factors;  // k = factors.size() >= 1

  int k() const { return int(factors.size()); }
  // Exact reduction to g(0) = 0, Lip = 1: sub = g(0), scale = 1 / lip.
  AverageSpec normalized() const;
};

// Average of the factor product over the cells of [0,N)^d at the field's
// time.  N is rounded to whole cells and must keep the window within half
// the torus (no wraparound double-counting); shifts snap to the nearest
// cell, recording a note in *warnings when they were off-grid.
double spatial_average(const SolutionField& field, const AverageSpec& avg,
                       double N, std::vector<std::string>* warnings = nullptr);

struct PoincareCheck {
  std::vector<double> n_values;
  std::vector<double> var;      // ensemble variance of the spatial average
  std::vector<double> stderr_;  // replica-level jackknife error of var
  std::vector<double> f_box;    // f([-N,N]^d); filters use |h|*|h~|
  std::vector<double> bound;    // C k^2 f_box / N^d, C fitted at n_values[0]
  std::vector<double> ratio;    // var / bound
  double c_fit = 0.0;
  bool pass = false;  // var <= bound + 3 stderr at every N
};

// Cross-replica variance of the average at each N (ascending), against the
// fitted bound.  Uses each replica's last stored snapshot; requires a run
// with kept fields and at least 10^3 replicas.
PoincareCheck variance_vs_N(const EnsembleRun& run, const AverageSpec& avg,
                            const std::vector<double>& n_values);

enum class ErgodicityVerdict {
  ConsistentWithErgodic,
  Inconsistent,
  Inconclusive,
};

// Classifies every suite member's variance sequence over n_values:
// "decaying" needs a log-log slope below -1/2 with the last value under
// half the first (or a last value indistinguishable from zero at level
// alpha); "stabilized" needs a flat slope at a level above 5 standard
// errors.  Any stabilized member makes the run Inconsistent, all-decaying
// makes it ConsistentWithErgodic, anything mixed is Inconclusive.  The
// suite must contain k = 1 and k = 2 members, at least three distinct
// factor families, and at least two distinct shift patterns; the run needs
// kept fields and at least 10^2 replicas.
ErgodicityVerdict ergodicity_test(const EnsembleRun& run,
                                  const std::vector<AverageSpec>& suite,
                                  const std::vector<double>& n_values,
                                  double alpha);

struct DecayCurve {
  std::vector<int> lag;        // in cells, along the contiguous axis
  std::vector<double> lag_x;   // physical lags
  std::vector<double> cov;     // Cov[g(u(t,0)), g(u(t,x))] per lag
  std::vector<double> stderr_; // across replicas
  double slope = 0.0;          // d log cov / d x fitted on positive entries
  bool slope_ok = false;       // at least three positive entries to fit
};

// Ensemble covariance of the transformed field at each cell lag, averaged
// over base cells, with the replica-level standard error and a log-linear
// decay fit.  Lags must stay within a quarter of the torus.
DecayCurve covariance_decay(const EnsembleRun& run, const GFactor& g,
                            const std::vector<int>& lags);

}  // namespace shelab
