#include "shelab/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "shelab/spectral.hpp"

namespace shelab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Raw factor value, before the (sub, scale) normalization.
double raw_g(const GFactor& g, double z) {
  switch (g.family) {
    case GFamily::IdentityMinus1:
      return z - 1.0;
    case GFamily::Clip01:
      return std::min(1.0, std::max(z - g.a, 0.0));
    case GFamily::Cosine:
      return std::cos(g.theta * z);
    case GFamily::Sine:
      return std::sin(g.theta * z);
    case GFamily::Custom:
      break;
  }
  const double pos = (z - g.u_min) / g.du;
  if (pos <= 0) return g.values.front();
  const double last = double(g.values.size() - 1);
  if (pos >= last) return g.values.back();
  const size_t j = size_t(pos);
  const double w = pos - double(j);
  return g.values[j] * (1.0 - w) + g.values[j + 1] * w;
}

// Inverse of the standard normal CDF (Acklam's rational approximation,
// relative error below 1.2e-9); used for the noise-floor test in the
// ergodicity classification.
double inv_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double e[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0);
  }
  q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

struct VarEstimate {
  double var = 0.0;
  double se = 0.0;
};

// Unbiased cross-replica variance with its delete-one jackknife standard
// error.  Centered accumulation keeps the closed form stable:
// with b_i = a_i - mean, S = sum b^2, the leave-one-out variances are
// v_i = (S - b_i^2 R/(R-1)) / (R-2), so the jackknife spread reduces to the
// fourth-moment sum Q = sum (b_i^2 - S/R)^2.
VarEstimate variance_with_jackknife(const std::vector<double>& a) {
  const size_t n = a.size();
  VarEstimate est;
  if (n < 2) return est;
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= double(n);
  double s = 0.0;
  std::vector<double> b2(n);
  for (size_t i = 0; i < n; ++i) {
    const double b = a[i] - mean;
    b2[i] = b * b;
    s += b2[i];
  }
  est.var = s / double(n - 1);
  if (n < 3) return est;
  double q = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dev = b2[i] - s / double(n);
    q += dev * dev;
  }
  const double c = double(n) / double(n - 1);
  est.se = std::sqrt((double(n) - 1.0) / double(n)) * c * std::sqrt(q) /
           (double(n) - 2.0);
  return est;
}

struct SlopeFit {
  double slope = 0.0;
  int used = 0;
};

// Least-squares slope of log(y) against x over the entries with y > 0.
SlopeFit fit_log_slope(const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (size_t i = 0; i < ys.size(); ++i) {
    if (!(ys[i] > 0)) continue;
    const double x = xs[i];
    const double y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used < 2) return {0.0, used};
  const double denom = double(used) * sxx - sx * sx;
  if (denom <= 0) return {0.0, used};
  return {(double(used) * sxy - sx * sy) / denom, used};
}

void check_windows(const std::vector<double>& n_values, const char* who) {
  for (size_t i = 0; i < n_values.size(); ++i) {
    if (!(std::isfinite(n_values[i]) && n_values[i] > 0) ||
        (i > 0 && !(n_values[i] > n_values[i - 1])))
      throw std::invalid_argument(std::string(who) +
                                  ": window sizes must be positive and "
                                  "strictly ascending");
  }
}

void check_kept_fields(const EnsembleRun& run, size_t min_replicas,
                       const char* who, const char* how_many) {
  if (run.fields.empty())
    throw std::invalid_argument(std::string(who) +
                                ": the run must keep per-replica fields");
  if (run.fields.size() < min_replicas)
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                how_many + " completed replicas");
}

// Ensemble variance (with jackknife error) of the spatial average at each
// window size, evaluated on every replica's last stored snapshot.
void variance_series(const EnsembleRun& run, const AverageSpec& avg,
                     const std::vector<double>& n_values,
                     std::vector<double>* var, std::vector<double>* se) {
  const size_t reps = run.fields.size();
  std::vector<double> a(reps);
  var->clear();
  se->clear();
  for (double n_len : n_values) {
    for (size_t r = 0; r < reps; ++r)
      a[r] = spatial_average(run.fields[r].back(), avg, n_len);
    const VarEstimate est = variance_with_jackknife(a);
    var->push_back(est.var);
    se->push_back(est.se);
  }
}

// f([-N,N]^d) as the bound uses it: correlations integrate the measure
// (atoms plus density), filters integrate |h|*|h~|.
double bound_box_mass(const KernelSpec& kernel, double n_len) {
  if (kernel.role() == KernelRole::Correlation)
    return box_mass(kernel, n_len);
  const FilterCorrelation& corr = shared_correlation(kernel);
  return box_mass_radial([&corr](double r) { return corr(r); }, kernel.d,
                         n_len);
}

}  // namespace

// --- average specification --------------------------------------------------

GFactor GFactor::identity_minus_1(std::vector<double> shift) {
  GFactor g;
  g.family = GFamily::IdentityMinus1;
  g.lip = 1.0;
  g.shift = std::move(shift);
  return g;
}

GFactor GFactor::clip01(double a, std::vector<double> shift) {
  require(std::isfinite(a), "clip01 factor: offset must be finite");
  GFactor g;
  g.family = GFamily::Clip01;
  g.a = a;
  g.lip = 1.0;
  g.shift = std::move(shift);
  return g;
}

GFactor GFactor::cosine(double theta, std::vector<double> shift) {
  require(std::isfinite(theta) && theta != 0,
          "cosine factor: frequency must be finite and nonzero");
  GFactor g;
  g.family = GFamily::Cosine;
  g.theta = theta;
  g.lip = std::abs(theta);
  g.shift = std::move(shift);
  return g;
}

GFactor GFactor::sine(double theta, std::vector<double> shift) {
  require(std::isfinite(theta) && theta != 0,
          "sine factor: frequency must be finite and nonzero");
  GFactor g;
  g.family = GFamily::Sine;
  g.theta = theta;
  g.lip = std::abs(theta);
  g.shift = std::move(shift);
  return g;
}

GFactor GFactor::custom(double u_min, double du, std::vector<double> values,
                        double lip, std::vector<double> shift) {
  require(du > 0, "custom factor: need du > 0");
  require(!values.empty(), "custom factor: need at least one sample");
  require(lip > 0, "custom factor: need a positive Lipschitz constant");
  for (size_t j = 0; j + 1 < values.size(); ++j)
    require(std::abs(values[j + 1] - values[j]) <= lip * du * (1 + 1e-9),
            "custom factor: table secant exceeds the declared Lipschitz "
            "constant");
  GFactor g;
  g.family = GFamily::Custom;
  g.u_min = u_min;
  g.du = du;
  g.values = std::move(values);
  g.lip = lip;
  g.shift = std::move(shift);
  return g;
}

double eval_g(const GFactor& g, double z) {
  return (raw_g(g, z) - g.sub) * g.scale;
}

AverageSpec AverageSpec::normalized() const {
  require(!factors.empty(), "normalized: need at least one factor");
  AverageSpec out;
  out.factors.reserve(factors.size());
  for (const GFactor& g : factors) {
    require(g.lip > 0, "normalized: factor needs a positive Lipschitz "
                       "constant");
    require(g.scale != 0, "normalized: factor scale must be nonzero");
    GFactor f = g;
    // Current map is m(z) = (raw(z) - sub) * scale with Lip = lip * |scale|;
    // the reduction (m - m(0)) / Lip folds back into the same two fields.
    const double at0 = eval_g(f, 0.0);
    const double cur_lip = f.lip * std::abs(f.scale);
    f.sub += at0 / f.scale;
    f.scale /= cur_lip;
    out.factors.push_back(std::move(f));
  }
  return out;
}

// --- spatial average --------------------------------------------------------

double spatial_average(const SolutionField& field, const AverageSpec& avg,
                       double N, std::vector<std::string>* warnings) {
  const Grid& grid = field.grid;
  require(int64_t(field.values.size()) == grid.total_cells(),
          "spatial_average: field size does not match its grid");
  require(!avg.factors.empty(), "spatial_average: need at least one factor");
  require(std::isfinite(N) && N > 0, "spatial_average: need N > 0");
  const int d = grid.d;
  const int n = grid.n_cells;
  const int64_t m = llround(N / grid.dx);
  require(m >= 1, "spatial_average: window is smaller than one cell");
  require(m <= n / 2, "spatial_average: window exceeds half the torus");

  std::vector<std::array<int, 3>> offs(avg.factors.size(), {0, 0, 0});
  for (size_t j = 0; j < avg.factors.size(); ++j) {
    const auto& shift = avg.factors[j].shift;
    require(shift.empty() || int(shift.size()) == d,
            "spatial_average: shift dimension does not match the grid");
    bool snapped = false;
    for (size_t axis = 0; axis < shift.size(); ++axis) {
      const double cells = shift[axis] / grid.dx;
      require(std::isfinite(cells) && std::abs(cells) <= double(n),
              "spatial_average: shift must stay within the torus");
      int64_t s = llround(cells);
      if (std::abs(cells - double(s)) > 1e-9) snapped = true;
      s %= n;
      if (s < 0) s += n;
      offs[j][axis] = int(s);
    }
    if (snapped && warnings)
      warnings->push_back("factor " + std::to_string(j) +
                          ": off-grid shift snapped to the nearest cell");
  }

  int64_t window = 1;
  for (int axis = 0; axis < d; ++axis) window *= m;
  double sum = 0.0;
  std::array<int64_t, 3> coord{0, 0, 0};
  for (int64_t cell = 0; cell < window; ++cell) {
    int64_t rem = cell;
    for (int axis = d - 1; axis >= 0; --axis) {
      coord[axis] = rem % m;
      rem /= m;
    }
    double prod = 1.0;
    for (size_t j = 0; j < avg.factors.size(); ++j) {
      int64_t idx = 0;
      for (int axis = 0; axis < d; ++axis) {
        int64_t pos = coord[axis] + offs[j][size_t(axis)];
        if (pos >= n) pos -= n;
        idx = idx * n + pos;
      }
      prod *= eval_g(avg.factors[j], field.values[size_t(idx)]);
    }
    sum += prod;
  }
  return sum / double(window);
}

// --- variance against the averaged-functional bound -------------------------

PoincareCheck variance_vs_N(const EnsembleRun& run, const AverageSpec& avg,
                            const std::vector<double>& n_values) {
  check_kept_fields(run, 1000, "variance_vs_N", "10^3");
  require(!avg.factors.empty(), "variance_vs_N: need at least one factor");
  require(n_values.size() >= 2,
          "variance_vs_N: need at least two window sizes");
  check_windows(n_values, "variance_vs_N");

  PoincareCheck out;
  out.n_values = n_values;
  variance_series(run, avg, n_values, &out.var, &out.stderr_);

  const KernelSpec& kernel = run.fields[0].back().provenance.kernel;
  out.f_box.reserve(n_values.size());
  for (double n_len : n_values)
    out.f_box.push_back(bound_box_mass(kernel, n_len));

  const int d = run.grid.d;
  const double k2 = double(avg.k()) * double(avg.k());
  out.c_fit = out.f_box[0] > 0 ? out.var[0] * std::pow(n_values[0], d) /
                                     (k2 * out.f_box[0])
                               : 0.0;
  out.pass = true;
  for (size_t i = 0; i < n_values.size(); ++i) {
    const double bound =
        out.c_fit * k2 * out.f_box[i] / std::pow(n_values[i], d);
    out.bound.push_back(bound);
    out.ratio.push_back(bound > 0 ? out.var[i] / bound
                                  : (out.var[i] == 0 ? 0.0 : kInf));
    if (!(out.var[i] <= bound + 3.0 * out.stderr_[i])) out.pass = false;
  }
  return out;
}

// --- ergodicity suite -------------------------------------------------------

ErgodicityVerdict ergodicity_test(const EnsembleRun& run,
                                  const std::vector<AverageSpec>& suite,
                                  const std::vector<double>& n_values,
                                  double alpha) {
  require(alpha > 0 && alpha < 1, "ergodicity_test: alpha must lie in (0, 1)");
  check_kept_fields(run, 100, "ergodicity_test", "10^2");
  require(n_values.size() >= 3,
          "ergodicity_test: need at least three window sizes");
  check_windows(n_values, "ergodicity_test");

  bool has_k1 = false, has_k2 = false;
  std::set<int> families;
  std::set<std::string> shift_patterns;
  for (const AverageSpec& avg : suite) {
    require(!avg.factors.empty(),
            "ergodicity_test: every suite member needs a factor");
    if (avg.k() == 1) has_k1 = true;
    if (avg.k() >= 2) has_k2 = true;
    // A member's shift pattern is the set of distinct shift vectors it
    // evaluates at (an empty shift is the origin), so repeating one point
    // across factors does not count as a new pattern.
    std::set<std::string> points;
    for (const GFactor& g : avg.factors) {
      families.insert(int(g.family));
      std::string point;
      bool all_zero = true;
      for (double s : g.shift) {
        if (s != 0) all_zero = false;
        point += std::to_string(s) + ",";
      }
      points.insert(all_zero ? "origin" : point);
    }
    std::string pattern;
    for (const std::string& p : points) pattern += p + "|";
    shift_patterns.insert(pattern);
  }
  require(has_k1 && has_k2,
          "ergodicity_test: suite must contain k = 1 and k = 2 members");
  require(families.size() >= 3,
          "ergodicity_test: suite must span at least three factor families");
  require(shift_patterns.size() >= 2,
          "ergodicity_test: suite must span at least two shift patterns");

  std::vector<double> log_n(n_values.size());
  for (size_t i = 0; i < n_values.size(); ++i) log_n[i] = std::log(n_values[i]);
  const double z = inv_normal_cdf(1.0 - alpha);

  bool any_stabilized = false;
  bool all_decaying = true;
  std::vector<double> var, se;
  for (const AverageSpec& avg : suite) {
    variance_series(run, avg, n_values, &var, &se);
    const double slope = fit_log_slope(log_n, var).slope;
    const double v_first = var.front();
    const double v_last = var.back();
    const double se_last = se.back();
    // Decaying: the whole-sequence slope rule, or a last value lost in the
    // replica noise floor at level alpha (zero variance counts trivially).
    const bool decaying = v_last == 0.0 || v_last < z * se_last ||
                          (slope < -0.5 && v_last < 0.5 * v_first);
    // Stabilized: clearly resolved away from zero and essentially flat.
    const bool stabilized =
        !decaying && v_last > 5.0 * se_last && slope > -0.25;
    if (stabilized) any_stabilized = true;
    if (!decaying) all_decaying = false;
  }
  if (any_stabilized) return ErgodicityVerdict::Inconsistent;
  if (all_decaying) return ErgodicityVerdict::ConsistentWithErgodic;
  return ErgodicityVerdict::Inconclusive;
}

// --- mixing: covariance decay ----------------------------------------------

DecayCurve covariance_decay(const EnsembleRun& run, const GFactor& g,
                            const std::vector<int>& lags) {
  check_kept_fields(run, 2, "covariance_decay", "two");
  require(!lags.empty(), "covariance_decay: need at least one lag");
  const Grid& grid = run.grid;
  const int n = grid.n_cells;
  for (int lag : lags)
    require(lag >= 0 && lag <= n / 4,
            "covariance_decay: lags must lie within a quarter of the torus");

  const size_t reps = run.fields.size();
  const int64_t total = grid.total_cells();

  // Transform every replica's last snapshot once; the covariance centers on
  // the pooled mean of the transformed values.
  std::vector<std::vector<double>> transformed(reps);
  double gbar = 0.0;
  for (size_t r = 0; r < reps; ++r) {
    const SolutionField& field = run.fields[r].back();
    require(int64_t(field.values.size()) == total &&
                field.grid.n_cells == n && field.grid.d == grid.d,
            "covariance_decay: replica grids do not match the run");
    transformed[r].resize(size_t(total));
    for (int64_t i = 0; i < total; ++i) {
      transformed[r][size_t(i)] = eval_g(g, field.values[size_t(i)]);
      gbar += transformed[r][size_t(i)];
    }
  }
  gbar /= double(reps) * double(total);

  DecayCurve out;
  out.lag = lags;
  const int64_t rows = total / n;  // lag runs along the contiguous axis
  std::vector<double> per_replica(reps);
  for (int lag : lags) {
    for (size_t r = 0; r < reps; ++r) {
      const std::vector<double>& values = transformed[r];
      double acc = 0.0;
      for (int64_t row = 0; row < rows; ++row) {
        const double* base = values.data() + row * n;
        for (int i = 0; i < n; ++i) {
          const int ishift = i + lag < n ? i + lag : i + lag - n;
          acc += (base[i] - gbar) * (base[ishift] - gbar);
        }
      }
      per_replica[r] = acc / double(total);
    }
    double mean = 0.0;
    for (double c : per_replica) mean += c;
    mean /= double(reps);
    double ss = 0.0;
    for (double c : per_replica) ss += (c - mean) * (c - mean);
    const double sd = std::sqrt(ss / double(reps - 1));
    out.lag_x.push_back(lag * grid.dx);
    out.cov.push_back(mean);
    out.stderr_.push_back(sd / std::sqrt(double(reps)));
  }
  const SlopeFit fit = fit_log_slope(out.lag_x, out.cov);
  out.slope = fit.slope;
  out.slope_ok = fit.used >= 3;
  return out;
}

}  // namespace shelab
