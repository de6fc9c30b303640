#include "shelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "shelab/quadrature.hpp"

namespace shelab {
namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double ball_volume(int d, double R) {
  if (d == 1) return 2 * R;
  if (d == 2) return kPi * R * R;
  return 4.0 / 3.0 * kPi * R * R * R;
}

// --- angular weights --------------------------------------------------------
//
// Both the triangular smoother and the box mass of a radial f reduce to 1-d
// radial integrals Int r^{d-1} f(r) W(r/N) dr against angular weights
//   W_tri(a) = Int_{S^{d-1}} prod_j (1 - a|w_j|)_+ dsigma(w),
//   W_box(a) = sigma{ w : a|w_j| <= 1 for all j },
// which have closed forms up to one smooth 1-d quadrature in d = 3.

// Int (1 - p cos t)(1 - p sin t) dt, antiderivative on a positivity interval.
double tri_prim(double p, double t) {
  return t - p * std::sin(t) + p * std::cos(t) +
         0.5 * p * p * std::sin(t) * std::sin(t);
}

// Int_0^{pi/2} (1 - p cos t)_+ (1 - p sin t)_+ dt.
double tri_quarter(double p) {
  if (p <= 1.0) return tri_prim(p, 0.5 * kPi) - tri_prim(p, 0.0);
  const double m = 1.0 / p;
  if (m < M_SQRT1_2) return 0.0;  // factors never positive simultaneously
  const double lo = std::acos(m), hi = std::asin(m);
  return hi > lo ? tri_prim(p, hi) - tri_prim(p, lo) : 0.0;
}

double tri_weight(int d, double a) {
  if (d == 1) return 2.0 * std::max(0.0, 1.0 - a);
  if (d == 2) return 4.0 * tri_quarter(a);
  // d = 3: polar angle phi (z = cos phi), closed quarter-circle integral in
  // the azimuth; kinks sit where a sin(phi) crosses 1.
  if (a * a >= 3.0) return 0.0;
  std::vector<double> brk;
  if (a > 1.0) {
    brk.push_back(std::sqrt(1.0 - 1.0 / (a * a)));  // a sin(phi) = 1
    brk.push_back(1.0 / a);                         // a cos(phi) = 1
  }
  auto f = [a](double u) {  // u = cos phi
    double zfac = 1.0 - a * u;
    if (zfac <= 0) return 0.0;
    return zfac * tri_quarter(a * std::sqrt(std::max(0.0, 1.0 - u * u)));
  };
  auto r = quad_pts(f, 0.0, 1.0, brk, {1e-9, 1e-13, 2000});
  return 8.0 * r.value;
}

// Azimuthal arc length {t in [0, pi/2] : p cos t <= 1 and p sin t <= 1}.
double box_arc_quarter(double p) {
  if (p <= 1.0) return 0.5 * kPi;
  const double m = 1.0 / p;
  if (m < M_SQRT1_2) return 0.0;
  return std::asin(m) - std::acos(m);
}

double box_weight(int d, double a) {
  if (d == 1) return a <= 1.0 ? 2.0 : 0.0;
  if (d == 2) return 4.0 * box_arc_quarter(a);
  if (a * a >= 3.0) return 0.0;
  std::vector<double> brk;
  if (a > 1.0) {
    brk.push_back(std::sqrt(1.0 - 1.0 / (a * a)));
    brk.push_back(1.0 / a);
  }
  auto f = [a](double u) {
    if (a * u > 1.0) return 0.0;
    return box_arc_quarter(a * std::sqrt(std::max(0.0, 1.0 - u * u)));
  };
  auto r = quad_pts(f, 0.0, 1.0, brk, {1e-9, 1e-13, 2000});
  return 8.0 * r.value;
}

// --- radial integration -----------------------------------------------------

// Int_0^{hi} r^{d-1} f(r) w(r) dr with an integrable singularity allowed at
// the origin and kink positions supplied by the caller.
double radial_integral(const std::function<double(double)>& f, int d,
                       double hi, const std::function<double(double)>& w,
                       std::vector<double> kinks) {
  if (!(hi > 0)) return 0.0;
  auto g = [&](double r) { return std::pow(r, d - 1) * f(r) * w(r); };
  const double head = std::min(1.0, hi);
  auto h = quad_sing0(g, head, {1e-9, 1e-13, 4000});
  double total = h.value;
  if (hi > head) {
    kinks.push_back(head);
    total += quad_pts(g, head, hi, kinks, {1e-9, 1e-13, 4000}).value;
  }
  return total;
}

// Same against a piecewise-constant radial table: per-cell Gauss-Kronrod
// panels keep the jumps on panel boundaries.
double radial_integral_table(const KernelSpec& f, int d, double hi,
                             const std::function<double(double)>& w) {
  double total = 0;
  for (size_t j = 0; j < f.samples.size(); ++j) {
    const double a = j * f.sample_dr;
    const double b = std::min((j + 1) * f.sample_dr, hi);
    if (!(b > a)) break;
    if (f.samples[j] == 0.0) continue;
    double val, err;
    quad_detail::gk15(
        [&](double r) { return std::pow(r, d - 1) * w(r); }, a, b, &val, &err);
    total += f.samples[j] * val;
  }
  return total;
}

double eval_radial(const KernelSpec& f, double r) {
  return eval_correlation(f, r);
}

}  // namespace

// --- smoothing and masses ---------------------------------------------------

double triangular_smoother(const KernelSpec& f, double N) {
  require(f.role() == KernelRole::Correlation,
          "triangular_smoother: spec must describe a correlation");
  require(N > 0, "triangular_smoother: N must be > 0");
  const int d = f.d;
  const double norm = std::pow(N, -d);
  switch (f.family) {
    case KernelFamily::WhiteNoise:
      return norm;  // point mass at the peak of the triangle
    case KernelFamily::Constant:
      return f.level;  // the triangle has unit mass under this normalization
    case KernelFamily::TableF: {
      if (d == 1) {
        // Exact per-cell sums of (2/N) Int f (1 - r/N) dr.
        double total = 0;
        for (size_t j = 0; j < f.samples.size(); ++j) {
          const double a = j * f.sample_dr;
          const double b = std::min((j + 1) * f.sample_dr, N);
          if (!(b > a)) break;
          total += f.samples[j] * (b - a - (b * b - a * a) / (2 * N));
        }
        return 2.0 * total / N;
      }
      auto w = [&](double r) { return tri_weight(d, r / N); };
      return norm * radial_integral_table(f, d, N * std::sqrt(double(d)), w);
    }
    default: {
      auto w = [&](double r) { return tri_weight(d, r / N); };
      auto g = [&](double r) { return eval_radial(f, r); };
      return norm * radial_integral(g, d, N * std::sqrt(double(d)), w,
                                    {N, N * M_SQRT2});
    }
  }
}

double modulated_triangular(const KernelSpec& f, double N, double z0) {
  require(f.d == 1, "modulated_triangular: d must be 1");
  require(f.role() == KernelRole::Correlation,
          "modulated_triangular: spec must describe a correlation");
  require(N > 0, "modulated_triangular: N must be > 0");
  if (z0 == 0.0) return triangular_smoother(f, N);
  switch (f.family) {
    case KernelFamily::WhiteNoise:
      return 1.0 / N;
    case KernelFamily::Constant:
      return f.level * 2.0 * (1.0 - std::cos(z0 * N)) / (z0 * z0 * N * N);
    case KernelFamily::TableF: {
      // Antiderivative of cos(z0 x)(1 - x/N).
      auto prim = [&](double x) {
        return (1.0 - x / N) * std::sin(z0 * x) / z0 -
               std::cos(z0 * x) / (N * z0 * z0);
      };
      double total = 0;
      for (size_t j = 0; j < f.samples.size(); ++j) {
        const double a = j * f.sample_dr;
        const double b = std::min((j + 1) * f.sample_dr, N);
        if (!(b > a)) break;
        total += f.samples[j] * (prim(b) - prim(a));
      }
      return 2.0 * total / N;
    }
    default: {
      auto w = [&](double r) {
        return 2.0 * std::cos(z0 * r) * (1.0 - r / N);
      };
      auto g = [&](double r) { return eval_radial(f, r); };
      return radial_integral(g, 1, N, w, {}) / N;
    }
  }
}

double box_mass(const KernelSpec& f, double L) {
  require(f.role() == KernelRole::Correlation,
          "box_mass: spec must describe a correlation");
  require(L > 0, "box_mass: L must be > 0");
  const int d = f.d;
  switch (f.family) {
    case KernelFamily::WhiteNoise:
      return 1.0;
    case KernelFamily::Constant:
      return f.level * std::pow(2 * L, d);
    case KernelFamily::TableF: {
      auto w = [&](double r) { return box_weight(d, r / L); };
      return radial_integral_table(f, d, L * std::sqrt(double(d)), w);
    }
    default: {
      auto w = [&](double r) { return box_weight(d, r / L); };
      auto g = [&](double r) { return eval_radial(f, r); };
      return radial_integral(g, d, L * std::sqrt(double(d)), w,
                             {L, L * M_SQRT2});
    }
  }
}

double box_mass_radial(const std::function<double(double)>& profile, int d,
                       double L) {
  require(d >= 1 && d <= 3, "box_mass_radial: d must be 1, 2, or 3");
  require(L > 0, "box_mass_radial: L must be > 0");
  auto w = [&](double r) { return box_weight(d, r / L); };
  return radial_integral(profile, d, L * std::sqrt(double(d)), w,
                         {L, L * M_SQRT2});
}

double ball_mass(const KernelSpec& f, double R) {
  require(f.role() == KernelRole::Correlation,
          "ball_mass: spec must describe a correlation");
  require(R > 0, "ball_mass: R must be > 0");
  const int d = f.d;
  switch (f.family) {
    case KernelFamily::WhiteNoise:
      return 1.0;
    case KernelFamily::Constant:
      return f.level * ball_volume(d, R);
    case KernelFamily::TableF: {
      // Exact: Int r^{d-1} dr over each cell.
      double total = 0;
      for (size_t j = 0; j < f.samples.size(); ++j) {
        const double a = j * f.sample_dr;
        const double b = std::min((j + 1) * f.sample_dr, R);
        if (!(b > a)) break;
        total += f.samples[j] * (std::pow(b, d) - std::pow(a, d)) / d;
      }
      return sphere_area(d) * total;
    }
    default: {
      auto g = [&](double r) { return eval_radial(f, r); };
      auto one = [](double) { return 1.0; };
      return sphere_area(d) * radial_integral(g, d, R, one, {});
    }
  }
}

// --- the atom decision ------------------------------------------------------

namespace {

double fitted_log_slope(const std::vector<double>& n,
                        const std::vector<double>& v) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (size_t i = 0; i < n.size(); ++i) {
    if (!(std::abs(v[i]) > 0)) continue;
    const double x = std::log(n[i]), y = std::log(std::abs(v[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return 0.0;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

AtomEstimate atom_at_zero(const KernelSpec& f, std::vector<double> scales) {
  require(f.role() == KernelRole::Correlation,
          "atom_at_zero: spec must describe a correlation");
  if (scales.empty()) scales = {16.0, 64.0, 256.0, 1024.0};
  require(scales.size() >= 3, "atom_at_zero: need at least three scales");
  for (size_t i = 1; i < scales.size(); ++i)
    require(scales[i] > scales[i - 1] && scales[0] > 0,
            "atom_at_zero: scales must be positive and increasing");

  AtomEstimate est;
  for (double N : scales) {
    est.n_values.push_back(N);
    est.triangular_values.push_back(triangular_smoother(f, N));
    est.cesaro_values.push_back(box_mass(f, N) / std::pow(2 * N, f.d));
    est.ball_values.push_back(ball_mass(f, N) / ball_volume(f.d, N));
  }

  double atom_mass = 0;
  if (spectral_atom(f, &atom_mass)) {
    // Pure point mass at frequency zero: the triangular limit is exact.
    est.decision = AtomDecision::AtomPositive;
    est.extrapolated_atom = f.level;
    return est;
  }
  if (has_spectral_density(f)) {
    // Absolutely continuous spectrum: no atom, whatever the decay rate of
    // the finite-N estimates.
    est.decision = AtomDecision::AtomZero;
    est.extrapolated_atom = 0;
    return est;
  }

  // Tabulated f: operational rules on the triangular sequence.
  const auto& v = est.triangular_values;
  const size_t n = v.size();
  const double first = std::abs(v.front()), last = std::abs(v.back());
  const double slope = fitted_log_slope(est.n_values, v);
  if (last < 1e-3 * first && slope < -0.5) {
    est.decision = AtomDecision::AtomZero;
    est.extrapolated_atom = 0;
    return est;
  }
  bool stable = v[n - 1] > 0;
  for (size_t i = n - 3; stable && i < n; ++i)
    for (size_t j = i + 1; stable && j < n; ++j) {
      const double den = std::max(std::abs(v[i]), std::abs(v[j]));
      if (den > 0 && std::abs(v[i] - v[j]) / den >= 0.01) stable = false;
    }
  if (stable) {
    est.decision = AtomDecision::AtomPositive;
    // One Richardson step against the last scale ratio (O(1/N) error model).
    const double r = est.n_values[n - 1] / est.n_values[n - 2];
    est.extrapolated_atom =
        std::max(0.0, (r * v[n - 1] - v[n - 2]) / (r - 1.0));
    return est;
  }
  est.decision = AtomDecision::Inconclusive;
  est.extrapolated_atom = std::max(0.0, v[n - 1]);
  return est;
}

ErgodicClass ergodicity_predicate(const KernelSpec& f, bool sigma_constant) {
  if (!dalang_finite(f))
    throw std::invalid_argument(
        "ergodicity_predicate: correlation fails the finiteness condition");
  switch (atom_at_zero(f).decision) {
    case AtomDecision::AtomZero:
      return ErgodicClass::Ergodic;
    case AtomDecision::AtomPositive:
      return sigma_constant ? ErgodicClass::NonErgodic : ErgodicClass::Unknown;
    default:
      return ErgodicClass::Unknown;
  }
}

// --- mixing -----------------------------------------------------------------

namespace {

// Scaled Bessel products for the d = 2 smoothing kernel: the angular average
// of v_lambda over a circle of radius s around a point at radius R is
// 2 I0(c min) K0(c max), c = sqrt(2 lambda).
double bessel_i0k0(double x, double y) {  // I0(x) K0(y), 0 <= x <= y
  if (y < 30.0) return std::cyl_bessel_i(0.0, x) * std::cyl_bessel_k(0.0, y);
  auto i0_scaled = [](double z) {  // e^{-z} I0(z), z large
    const double iz = 1.0 / z;
    return (1.0 + 0.125 * iz + 0.0703125 * iz * iz) /
           std::sqrt(2.0 * kPi * z);
  };
  auto k0_scaled = [](double z) {  // e^{z} K0(z), z large
    const double iz = 1.0 / z;
    return std::sqrt(0.5 * kPi * iz) * (1.0 - 0.125 * iz + 0.0703125 * iz * iz);
  };
  const double ex = x < 30.0 ? std::cyl_bessel_i(0.0, x) * std::exp(-x)
                             : i0_scaled(x);
  return ex * k0_scaled(y) * std::exp(x - y);
}

// (v_lambda * g)(R) for a radial g, one quadrature per dimension.
double potential_conv(int d, double lambda,
                      const std::function<double(double)>& g, double support,
                      double R) {
  const double c = std::sqrt(2.0 * lambda);
  double reach = std::min(support, R + 60.0 / c);
  auto integrand = [&](double s) -> double {
    if (d == 1)
      return g(s) * (std::exp(-c * std::abs(R - s)) + std::exp(-c * (R + s))) /
             c;
    if (d == 2) {
      const double lo = c * std::min(R, s), hi = c * std::max(R, s);
      return s * g(s) * 2.0 * bessel_i0k0(lo, hi);
    }
    return s * g(s) *
           (std::exp(-c * std::abs(R - s)) - std::exp(-c * (R + s))) /
           (c * R);
  };
  if (!(reach > 0)) return 0.0;
  const double head = std::min(1.0, reach);
  double total = quad_sing0(integrand, head, {1e-8, 1e-12, 4000}).value;
  if (reach > head)
    total += quad_pts(integrand, head, reach, {R}, {1e-8, 1e-12, 4000}).value;
  return total;
}

bool decays_along(const std::vector<double>& radii,
                  const std::vector<double>& vals) {
  const double first = std::abs(vals.front());
  if (!(first > 0)) return true;  // already identically small
  if (!(std::abs(vals.back()) < 0.05 * first)) return false;
  return fitted_log_slope(radii, vals) < -0.25;
}

}  // namespace

bool mixing_predicate(const KernelSpec& f, double lambda,
                      std::vector<double> radii) {
  require(lambda > 0, "mixing_predicate: lambda must be > 0");
  if (radii.empty())
    for (double r = 1.0; r <= 512.0; r *= 2.0) radii.push_back(r);
  require(radii.size() >= 2, "mixing_predicate: need at least two radii");

  if (f.role() == KernelRole::Filter) {
    auto gp = check_Gp(f, 0.0);
    if (gp && *gp) return true;  // admissible filters always mix
    const FilterCorrelation& prof = shared_correlation(f);
    if (!std::isfinite(correlation_overlap(prof, lambda)))
      throw std::invalid_argument(
          "mixing_predicate: filter correlation fails the finiteness "
          "condition");
    std::vector<double> vals;
    for (double R : radii)
      vals.push_back(potential_conv(f.d, lambda, std::cref(prof),
                                    prof.r_max() * 4.0, R));
    return decays_along(radii, vals);
  }

  if (!dalang_finite(f))
    throw std::invalid_argument(
        "mixing_predicate: correlation fails the finiteness condition");
  switch (f.family) {
    case KernelFamily::Constant:
      return false;  // the smoothed correlation is constant in space
    case KernelFamily::WhiteNoise:
      return true;  // v_lambda itself, which vanishes at infinity
    case KernelFamily::TableF: {
      auto g = [&](double r) { return eval_radial(f, r); };
      const double support = f.sample_dr * double(f.samples.size());
      std::vector<double> vals;
      for (double R : radii)
        vals.push_back(potential_conv(f.d, lambda, g, support, R));
      return decays_along(radii, vals);
    }
    default:
      // Absolutely continuous spectrum: the smoothed correlation vanishes at
      // infinity by the Riemann-Lebesgue lemma.
      return true;
  }
}

// --- additive-noise covariance ----------------------------------------------

namespace {

double osc_kernel(int d, double u) {  // cos / J0 / sinc
  if (d == 1) return std::cos(u);
  if (d == 2) return std::cyl_bessel_j(0.0, u);
  if (std::abs(u) < 1e-4) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}

double heat_factor(double k2, double t) {  // (1 - e^{-t k^2}) / k^2
  const double z = k2 * t;
  if (z < 1e-8) return t * (1.0 - 0.5 * z);
  return (1.0 - std::exp(-z)) / k2;
}

// Spectral form of Int_0^t (p_{2s} * f)(x) ds for a radial density fhat.
double covariance_spectral(int d, const std::function<double(double)>& fhat,
                           double t, double x) {
  auto integrand = [&](double k) {
    return std::pow(k, d - 1) * fhat(k) * osc_kernel(d, k * x) *
           heat_factor(k * k, t);
  };
  double total = quad_sing0(integrand, 1.0, {1e-8, 1e-13, 4000}).value;
  total += quad_pts(integrand, 1.0, 64.0, {8.0}, {1e-8, 1e-13, 4000}).value;
  total += quad_upper_inf(integrand, 64.0, {1e-7, 1e-13, 4000}).value;
  return sphere_area(d) * std::pow(2 * kPi, -d) * total;
}

// Closed radial transform of a piecewise-constant table.
double table_transform(const KernelSpec& f, double k) {
  double total = 0;
  for (size_t j = 0; j < f.samples.size(); ++j) {
    if (f.samples[j] == 0.0) continue;
    const double a = j * f.sample_dr, b = (j + 1) * f.sample_dr;
    double cell;
    if (f.d == 1) {
      cell = 2.0 * (std::sin(k * b) - std::sin(k * a)) / k;
    } else if (f.d == 2) {
      cell = 2.0 * kPi *
             (b * std::cyl_bessel_j(1.0, k * b) -
              a * std::cyl_bessel_j(1.0, k * a)) /
             k;
    } else {
      auto prim = [&](double r) {
        return (std::sin(k * r) - k * r * std::cos(k * r)) / (k * k * k);
      };
      cell = 4.0 * kPi * (prim(b) - prim(a));
    }
    total += f.samples[j] * cell;
  }
  return total;
}

}  // namespace

double gaussian_covariance(const KernelSpec& f, double c0, double t,
                           double x) {
  require(f.role() == KernelRole::Correlation,
          "gaussian_covariance: spec must describe a correlation");
  require(t >= 0, "gaussian_covariance: t must be >= 0");
  require(x >= 0, "gaussian_covariance: x is a radius");
  if (t == 0.0 || c0 == 0.0) return 0.0;
  const double c2 = c0 * c0;
  switch (f.family) {
    case KernelFamily::WhiteNoise: {
      if (x == 0.0)
        return f.d == 1 ? c2 * std::sqrt(t / kPi) : kInf;
      auto r = quad_sing0(
          [&](double s) { return heat_kernel(f.d, 2 * s, x); }, t,
          {1e-9, 1e-14, 4000});
      return c2 * r.value;
    }
    case KernelFamily::Constant:
      return c2 * f.level * t;
    case KernelFamily::TableF: {
      if (f.d == 1) {
        // Exact cell convolution against the Gaussian kernel (variance 2s).
        auto smoothed = [&](double s) {
          const double w = std::sqrt(4.0 * s);
          double total = 0;
          for (size_t j = 0; j < f.samples.size(); ++j) {
            if (f.samples[j] == 0.0) continue;
            const double a = j * f.sample_dr, b = (j + 1) * f.sample_dr;
            total += 0.5 * f.samples[j] *
                     (std::erf((x - a) / w) - std::erf((x - b) / w) +
                      std::erf((x + b) / w) - std::erf((x + a) / w));
          }
          return total;
        };
        return c2 * quad(smoothed, 0.0, t, {1e-9, 1e-14, 4000}).value;
      }
      auto fhat = [&](double k) { return table_transform(f, k); };
      return c2 * covariance_spectral(f.d, fhat, t, x);
    }
    default: {
      auto fhat = [&](double k) { return spectral_density(f, k); };
      return c2 * covariance_spectral(f.d, fhat, t, x);
    }
  }
}

}  // namespace shelab
