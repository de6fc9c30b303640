#include "shelab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>

#include "shelab/quadrature.hpp"

namespace shelab {
namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double log_plus(double z) { return std::log(std::max(z, std::exp(1.0))); }

// Radial extent beyond which a table is identically zero; +inf otherwise.
double filter_support(const KernelSpec& h) {
  if (h.family == KernelFamily::TableH)
    return h.sample_dr * static_cast<double>(h.samples.size());
  return kInf;
}

}  // namespace

// --- spec construction ------------------------------------------------------

KernelSpec KernelSpec::white_noise(int d) {
  require(d >= 1 && d <= 3, "white_noise: d must be 1, 2, or 3");
  KernelSpec s;
  s.family = KernelFamily::WhiteNoise;
  s.d = d;
  return s;
}

KernelSpec KernelSpec::constant(int d, double level) {
  require(d >= 1 && d <= 3, "constant: d must be 1, 2, or 3");
  require(level > 0 && std::isfinite(level), "constant: level must be > 0");
  KernelSpec s;
  s.family = KernelFamily::Constant;
  s.d = d;
  s.level = level;
  return s;
}

KernelSpec KernelSpec::riesz(int d, double gamma) {
  require(d >= 1 && d <= 3, "riesz: d must be 1, 2, or 3");
  require(gamma > 0 && gamma < d, "riesz: need 0 < gamma < d");
  KernelSpec s;
  s.family = KernelFamily::RieszF;
  s.d = d;
  s.gamma = gamma;
  return s;
}

KernelSpec KernelSpec::exp_decay(int d, double rate) {
  require(d >= 1 && d <= 3, "exp_decay: d must be 1, 2, or 3");
  require(rate > 0 && std::isfinite(rate), "exp_decay: rate must be > 0");
  KernelSpec s;
  s.family = KernelFamily::ExpDecayF;
  s.d = d;
  s.rate = rate;
  return s;
}

KernelSpec KernelSpec::cauchy(int d, double scale) {
  require(d >= 1 && d <= 3, "cauchy: d must be 1, 2, or 3");
  require(scale > 0 && std::isfinite(scale), "cauchy: scale must be > 0");
  KernelSpec s;
  s.family = KernelFamily::CauchyF;
  s.d = d;
  s.scale = scale;
  return s;
}

KernelSpec KernelSpec::power_h(int d, double alpha, double beta) {
  require(d >= 1 && d <= 3, "power_h: d must be 1, 2, or 3");
  require(alpha > 0 && std::isfinite(alpha), "power_h: alpha must be > 0");
  require(beta > 0 && std::isfinite(beta), "power_h: beta must be > 0");
  KernelSpec s;
  s.family = KernelFamily::PowerH;
  s.d = d;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

KernelSpec KernelSpec::table_h(int d, std::vector<double> samples, double dr) {
  require(d >= 1 && d <= 3, "table_h: d must be 1, 2, or 3");
  require(!samples.empty(), "table_h: samples must be nonempty");
  require(dr > 0 && std::isfinite(dr), "table_h: sample spacing must be > 0");
  for (double v : samples)
    require(std::isfinite(v), "table_h: samples must be finite");
  KernelSpec s;
  s.family = KernelFamily::TableH;
  s.d = d;
  s.samples = std::move(samples);
  s.sample_dr = dr;
  return s;
}

KernelSpec KernelSpec::table_f(int d, std::vector<double> samples, double dr) {
  require(d >= 1 && d <= 3, "table_f: d must be 1, 2, or 3");
  require(!samples.empty(), "table_f: samples must be nonempty");
  require(dr > 0 && std::isfinite(dr), "table_f: sample spacing must be > 0");
  // A correlation may take negative values (only positive-definiteness is
  // required, which a table cannot certify cheaply); the variance f(0) must
  // still be nonnegative.
  for (double v : samples)
    require(std::isfinite(v), "table_f: samples must be finite");
  require(samples.front() >= 0, "table_f: f(0) must be >= 0");
  KernelSpec s;
  s.family = KernelFamily::TableF;
  s.d = d;
  s.samples = std::move(samples);
  s.sample_dr = dr;
  return s;
}

KernelRole KernelSpec::role() const {
  switch (family) {
    case KernelFamily::PowerH:
    case KernelFamily::TableH:
      return KernelRole::Filter;
    default:
      return KernelRole::Correlation;
  }
}

std::string KernelSpec::family_name() const {
  switch (family) {
    case KernelFamily::WhiteNoise: return "WhiteNoise";
    case KernelFamily::Constant: return "Constant";
    case KernelFamily::RieszF: return "RieszF";
    case KernelFamily::ExpDecayF: return "ExpDecayF";
    case KernelFamily::CauchyF: return "CauchyF";
    case KernelFamily::PowerH: return "PowerH";
    case KernelFamily::TableH: return "TableH";
    case KernelFamily::TableF: return "TableF";
  }
  return "?";
}

// --- elementary kernels -----------------------------------------------------

double omega_d(int d, double r) {
  require(d >= 1 && d <= 3, "omega_d: d must be 1, 2, or 3");
  require(r > 0, "omega_d: r must be > 0");
  if (d == 1) return 1.0;
  if (d == 2) return r * log_plus(1.0 / r);
  return r;
}

double heat_kernel(int d, double t, double r) {
  require(d >= 1 && d <= 3, "heat_kernel: d must be 1, 2, or 3");
  require(t > 0, "heat_kernel: t must be > 0");
  return std::pow(2.0 * kPi * t, -0.5 * d) * std::exp(-r * r / (2.0 * t));
}

double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
  }
  throw std::invalid_argument("sphere_area: d must be 1, 2, or 3");
}

double potential_kernel(int d, double lambda, double r) {
  require(d >= 1 && d <= 3, "potential_kernel: d must be 1, 2, or 3");
  require(lambda > 0, "potential_kernel: lambda must be > 0");
  require(r >= 0, "potential_kernel: r must be >= 0");
  const double a = std::sqrt(2.0 * lambda);
  switch (d) {
    case 1:
      return std::exp(-a * r) / a;
    case 2:
      if (r == 0) return kInf;
      return std::cyl_bessel_k(0.0, a * r) / kPi;
    default:
      if (r == 0) return kInf;
      return std::exp(-a * r) / (2.0 * kPi * r);
  }
}

double potential_kernel_quad(int d, double lambda, double r) {
  require(d >= 1 && d <= 3, "potential_kernel_quad: d must be 1, 2, or 3");
  require(lambda > 0, "potential_kernel_quad: lambda must be > 0");
  if (r == 0 && d >= 2) return kInf;
  auto g = [&](double t) {
    return std::exp(-lambda * t) * heat_kernel(d, t, r);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-11;
  // The integrand vanishes to all orders at t=0 for r>0 but is steep there;
  // for r=0 (d=1) it has an integrable t^{-1/2} singularity.
  double head = quad_sing0(g, 1.0, opt).value;
  double tail = quad_upper_inf(g, 1.0, opt).value;
  return head + tail;
}

// --- pointwise evaluation ---------------------------------------------------

double eval_correlation(const KernelSpec& f, double r) {
  require(f.role() == KernelRole::Correlation,
          "eval_correlation: spec is a filter, not a correlation");
  require(r >= 0, "eval_correlation: r must be >= 0");
  switch (f.family) {
    case KernelFamily::WhiteNoise:
      throw std::invalid_argument(
          "eval_correlation: white noise has no pointwise density");
    case KernelFamily::Constant:
      return f.level;
    case KernelFamily::RieszF:
      return r == 0 ? kInf : std::pow(r, -f.gamma);
    case KernelFamily::ExpDecayF:
      return std::exp(-f.rate * r);
    case KernelFamily::CauchyF:
      return f.scale * f.scale / (f.scale * f.scale + r * r);
    case KernelFamily::TableF: {
      const auto j = static_cast<size_t>(r / f.sample_dr);
      return j < f.samples.size() ? f.samples[j] : 0.0;
    }
    default:
      return 0.0;
  }
}

double eval_filter(const KernelSpec& h, double r) {
  require(h.role() == KernelRole::Filter,
          "eval_filter: spec is a correlation, not a filter");
  require(r >= 0, "eval_filter: r must be >= 0");
  if (h.family == KernelFamily::PowerH) {
    if (r == 0) return kInf;
    const double e = r < 1 ? 0.5 * (h.d + h.alpha) : 0.5 * (h.d + h.beta);
    return std::pow(r, -e);
  }
  const auto j = static_cast<size_t>(r / h.sample_dr);
  return j < h.samples.size() ? h.samples[j] : 0.0;
}

bool has_spectral_density(const KernelSpec& f) {
  switch (f.family) {
    case KernelFamily::WhiteNoise:
    case KernelFamily::RieszF:
    case KernelFamily::ExpDecayF:
    case KernelFamily::CauchyF:
      return true;
    default:
      return false;
  }
}

double spectral_density(const KernelSpec& f, double k) {
  require(k >= 0, "spectral_density: k must be >= 0");
  const int d = f.d;
  switch (f.family) {
    case KernelFamily::WhiteNoise:
      return 1.0;
    case KernelFamily::RieszF: {
      // FT of |x|^{-gamma} in R^d: C(d,gamma) |z|^{gamma-d} with
      // C = 2^{d-gamma} pi^{d/2} Gamma((d-gamma)/2) / Gamma(gamma/2).
      const double c = std::pow(2.0, d - f.gamma) * std::pow(kPi, 0.5 * d) *
                       std::tgamma(0.5 * (d - f.gamma)) /
                       std::tgamma(0.5 * f.gamma);
      return k == 0 ? kInf : c * std::pow(k, f.gamma - d);
    }
    case KernelFamily::ExpDecayF: {
      // FT of exp(-rate |x|): 2^d pi^{(d-1)/2} Gamma((d+1)/2) rate
      //                       / (rate^2 + |z|^2)^{(d+1)/2}.
      const double c = std::pow(2.0, d) * std::pow(kPi, 0.5 * (d - 1)) *
                       std::tgamma(0.5 * (d + 1));
      return c * f.rate * std::pow(f.rate * f.rate + k * k, -0.5 * (d + 1));
    }
    case KernelFamily::CauchyF: {
      const double s = f.scale;
      if (d == 1) return kPi * s * std::exp(-s * k);
      if (d == 2)
        return k == 0 ? kInf
                      : 2.0 * kPi * s * s * std::cyl_bessel_k(0.0, s * k);
      return k == 0 ? kInf : 2.0 * kPi * kPi * s * s * std::exp(-s * k) / k;
    }
    default:
      throw std::invalid_argument(
          "spectral_density: family has no closed-form spectral density");
  }
}

bool spectral_atom(const KernelSpec& f, double* mass_at_zero) {
  if (f.family != KernelFamily::Constant) return false;
  if (mass_at_zero)
    *mass_at_zero = std::pow(2.0 * kPi, f.d) * f.level;
  return true;
}

// --- autocorrelation of a filter -------------------------------------------

namespace {

// Exact 1-d autocorrelation of a radial step table at lag r: sum of overlap
// lengths between the signed support cells and their shift.
double table_autocorr_1d(const KernelSpec& h, double r, bool absolute) {
  const double dr = h.sample_dr;
  const auto& s = h.samples;
  const auto n = s.size();
  double acc = 0;
  for (size_t i = 0; i < n; ++i) {
    if (s[i] == 0) continue;
    const double ai = i * dr, bi = (i + 1) * dr;
    for (size_t j = 0; j < n; ++j) {
      if (s[j] == 0) continue;
      const double vi = absolute ? std::fabs(s[i]) : s[i];
      const double vj = absolute ? std::fabs(s[j]) : s[j];
      const double aj = j * dr, bj = (j + 1) * dr;
      // Cells live on [-b,-a] u [a,b]; accumulate |I_i cap (I_j + r)| over
      // the four sign pairs.
      const double segs_i[2][2] = {{ai, bi}, {-bi, -ai}};
      const double segs_j[2][2] = {{aj + r, bj + r}, {-bj + r, -aj + r}};
      for (auto& si : segs_i)
        for (auto& sj : segs_j) {
          const double lo = std::max(si[0], sj[0]);
          const double hi = std::min(si[1], sj[1]);
          if (hi > lo) acc += vi * vj * (hi - lo);
        }
    }
  }
  return acc;
}

// One-point radial autocorrelation Int h(|y|) h(|y-x|) dy at |x| = r, for a
// generic radial evaluator g.  `sing` marks an origin singularity (PowerH),
// `sup` the radial support bound (tables).
double radial_autocorr(const std::function<double(double)>& g, int d, double r,
                       bool sing, double sup, double tol) {
  QuadOptions opt;
  opt.rel_tol = tol;
  opt.abs_tol = 1e-14;
  const double upper = std::isfinite(sup) ? sup : kInf;

  if (d == 1) {
    // Int_0^inf g(y) [g(|y-r|) + g(y+r)] dy, singular at y=0 and y=r.
    auto f1 = [&](double y) {
      return g(y) * (g(std::fabs(y - r)) + g(y + r));
    };
    if (std::isfinite(upper)) {
      if (r >= 2.0 * upper) return 0.0;
      std::vector<double> br = {std::min(r, upper)};
      return quad_pts(f1, std::max(0.0, r - upper), upper, br, opt).value;
    }
    // Split into a neighborhood of each singularity plus a smooth remainder:
    // (0, m] around 0, [m, r+w] around r (w = r - m), and the tail.  The
    // window integrand is expanded in the offset u so the singular factor
    // g(u) is evaluated exactly (recomputing |y - r| from y loses u to
    // rounding once u < ulp(r)).
    const double m = std::min(0.5, 0.5 * r);
    const double w = r - m;
    double head = quad_sing0(f1, m, opt).value;
    auto around = [&](double u) {
      return g(r + u) * (g(u) + g(2 * r + u)) +
             g(r - u) * (g(u) + g(2 * r - u));
    };
    double mid = quad_sing0(around, w, opt).value;
    double tail = quad_upper_inf(f1, r + w, opt).value;
    return head + mid + tail;
  }

  // d >= 2: reduce to an outer integral over the radius s of one factor and
  // an inner integral over the chord radius u of the other.
  //   d=3: (g*g)(r) = (2 pi / r) Int s g(s) [Int_{|r-s|}^{r+s} u g(u) du] ds
  //   d=2: inner weight 4 u / sqrt((u^2-a^2)(b^2-u^2)), endpoints smoothed
  //        by the substitutions u = a + w^2 and u = b - w^2.
  // The inner integral takes the offset a = |r - s| and width ba = b - a
  // explicitly: callers can supply both without cancellation, and the chord
  // weight is assembled from exact factors (u - a = w^2, b - u = ba - w^2).
  // For a singular g the inner integral diverges as a -> 0, so the outer pass
  // must never evaluate it at a = 0; the window around s = r below integrates
  // in the offset variable to keep a positive and exact.
  auto inner = [&](double a, double ba) {
    if (std::isfinite(upper)) {
      if (a >= upper) return 0.0;
      ba = std::min(ba, upper - a);
    }
    if (ba <= 0) return 0.0;
    const double b = a + ba;
    if (d == 3) {
      auto iu = [&](double u) { return u * g(u); };
      return quad(iu, a, b, opt).value;
    }
    const double half = 0.5 * ba;
    auto lo_half = [&](double w) {
      const double u = a + w * w;
      const double q = (w * w) * (u + a) * (ba - w * w) * (b + u);
      if (q <= 0) return 0.0;
      return 8.0 * u * g(u) * w / std::sqrt(q);
    };
    auto hi_half = [&](double w) {
      const double u = b - w * w;
      const double q = (ba - w * w) * (u + a) * (w * w) * (b + u);
      if (q <= 0) return 0.0;
      return 8.0 * u * g(u) * w / std::sqrt(q);
    };
    return quad(lo_half, 0.0, std::sqrt(half), opt).value +
           quad(hi_half, 0.0, std::sqrt(half), opt).value;
  };
  // b - a = (r + s) - |r - s| = 2 min(r, s), exact in floating point.
  auto fs = [&](double s) {
    return s * g(s) * inner(std::fabs(r - s), 2.0 * std::min(r, s));
  };
  if (std::isfinite(upper) && r >= 2.0 * upper) return 0.0;
  const double mhead = std::min(1.0, 0.5 * r);
  double head = sing ? quad_sing0(fs, mhead, opt).value
                     : quad(fs, 0.0, mhead, opt).value;
  double body, tail = 0.0;
  if (sing) {
    // Window around the outer singularity at s = r, integrated in the exact
    // offset u = |s - r| so the inner integral's lower limit never collapses.
    const double w = r - mhead;
    auto around = [&](double u) {
      return (r + u) * g(r + u) * inner(u, 2.0 * r) +
             (r - u) * g(r - u) * inner(u, 2.0 * r - 2.0 * u);
    };
    body = quad_sing0(around, w, opt).value;
    double rest_hi = std::isfinite(upper) ? upper : 2.0 * r + 2.0;
    if (rest_hi > r + w)
      body += quad_pts(fs, r + w, rest_hi, {1.0, r + 1.0, 2.0 * r}, opt).value;
    if (!std::isfinite(upper)) tail = quad_upper_inf(fs, rest_hi, opt).value;
  } else if (std::isfinite(upper)) {
    body = upper > mhead ? quad_pts(fs, mhead, upper, {r}, opt).value : 0.0;
  } else {
    std::vector<double> br = {r};
    for (double x = mhead * 2; x < 2.0 * r + 2.0; x *= 4) br.push_back(x);
    body = quad_pts(fs, mhead, 2.0 * r + 2.0, br, opt).value;
    tail = quad_upper_inf(fs, 2.0 * r + 2.0, opt).value;
  }
  const double front = d == 3 ? 2.0 * kPi / r : 1.0;
  return front * (head + body + tail);
}

}  // namespace

double f_from_h(const KernelSpec& h, double r, bool absolute, double tol) {
  require(h.role() == KernelRole::Filter, "f_from_h: spec must be a filter");
  require(r >= 0, "f_from_h: r must be >= 0");
  if (h.family == KernelFamily::PowerH)
    require(h.alpha < h.d,
            "f_from_h: PowerH with alpha >= d is not locally integrable");
  const bool sing = h.family == KernelFamily::PowerH;
  const double sup = filter_support(h);
  if (h.family == KernelFamily::TableH && h.d == 1)
    return table_autocorr_1d(h, r, absolute);
  auto g = [&](double s) {
    double v = eval_filter(h, s);
    return absolute ? std::fabs(v) : v;
  };
  if (r == 0) {
    // Squared L^2 mass: Int g(|y|)^2 dy.
    auto g2 = [&](double s) {
      const double v = g(s);
      return std::pow(s, h.d - 1) * v * v;
    };
    QuadOptions opt;
    opt.rel_tol = tol;
    double hi = std::isfinite(sup) ? sup : 1.0;
    double head = quad_sing0(g2, hi, opt).value;
    double tail = std::isfinite(sup) ? 0.0 : quad_upper_inf(g2, hi, opt).value;
    double v = sphere_area(h.d) * (head + tail);
    return v;
  }
  return radial_autocorr(g, h.d, r, sing, sup, tol);
}

FilterCorrelation::FilterCorrelation(const KernelSpec& h, bool absolute,
                                     double r_max)
    : spec_(h), r_max_(r_max) {
  require(h.role() == KernelRole::Filter,
          "FilterCorrelation: spec must be a filter");
  support_ = 2.0 * filter_support(h);
  const double r_hi = std::min(r_max_, support_);
  // The log-log profile is close to piecewise linear, so modest grids carry
  // the interpolation; the nested d >= 2 quadrature sets the cost budget.
  const int n = h.d == 1 ? 256 : 72;
  const double lo = std::log(1e-6), hi = std::log(r_hi * (1 - 1e-12));
  log_r_.resize(n);
  val_.resize(n);
  const double tol = h.d == 1 ? 1e-9 : 1e-6;
  for (int i = 0; i < n; ++i) {
    log_r_[i] = lo + (hi - lo) * i / (n - 1);
    double v = f_from_h(h, std::exp(log_r_[i]), absolute, tol);
    val_[i] = std::log(std::max(v, 1e-300));
  }
  // Monotone cubic (Fritsch-Carlson) slopes in (log r, log fbar).
  slope_.assign(n, 0.0);
  std::vector<double> dvec(n - 1);
  for (int i = 0; i + 1 < n; ++i)
    dvec[i] = (val_[i + 1] - val_[i]) / (log_r_[i + 1] - log_r_[i]);
  slope_[0] = dvec[0];
  slope_[n - 1] = dvec[n - 2];
  for (int i = 1; i + 1 < n; ++i) {
    if (dvec[i - 1] * dvec[i] <= 0) {
      slope_[i] = 0;
    } else {
      const double w1 = 2 * (log_r_[i + 1] - log_r_[i]) +
                        (log_r_[i] - log_r_[i - 1]);
      const double w2 = (log_r_[i + 1] - log_r_[i]) +
                        2 * (log_r_[i] - log_r_[i - 1]);
      slope_[i] = (w1 + w2) / (w1 / dvec[i - 1] + w2 / dvec[i]);
    }
  }
  // Power-law tail fit over the last decade (unused when support is finite).
  if (!std::isfinite(support_)) {
    const int k = n / 8;
    const double num = val_[n - 1] - val_[n - 1 - k];
    const double den = log_r_[n - 1] - log_r_[n - 1 - k];
    tail_exp_ = num / den;
    tail_coeff_ = std::exp(val_[n - 1] - tail_exp_ * log_r_[n - 1]);
  }
}

double FilterCorrelation::operator()(double r) const {
  if (r >= support_) return 0.0;
  if (r <= 0) return kInf;
  const double x = std::log(r);
  if (x <= log_r_.front()) {
    // Extend with the leftmost local power law.
    const double s0 = slope_.front();
    return std::exp(val_.front() + s0 * (x - log_r_.front()));
  }
  if (x >= log_r_.back()) {
    if (!std::isfinite(support_))
      return tail_coeff_ * std::exp(tail_exp_ * x);
    return std::exp(val_.back());
  }
  auto it = std::upper_bound(log_r_.begin(), log_r_.end(), x);
  const auto i = static_cast<size_t>(it - log_r_.begin()) - 1;
  const double hseg = log_r_[i + 1] - log_r_[i];
  const double t = (x - log_r_[i]) / hseg;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  const double y = h00 * val_[i] + h10 * hseg * slope_[i] +
                   h01 * val_[i + 1] + h11 * hseg * slope_[i + 1];
  return std::exp(y);
}

double FilterCorrelation::ball_mass(double R) const {
  const int d = spec_.d;
  auto g = [&](double r) {
    return std::pow(r, d - 1) * (*this)(r);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  const double hi = std::min(R, support_);
  if (hi <= 0) return 0.0;
  double head = quad_sing0(g, std::min(hi, 1.0), opt).value;
  double rest = hi > 1.0 ? quad(g, 1.0, hi, opt).value : 0.0;
  return sphere_area(d) * (head + rest);
}

const FilterCorrelation& shared_correlation(const KernelSpec& h) {
  static std::mutex mu;
  static std::map<std::string, FilterCorrelation> cache;
  char key[256];
  std::snprintf(key, sizeof key, "%s|%d|%.17g|%.17g|%.17g|%zu",
                h.family_name().c_str(), h.d, h.alpha, h.beta, h.sample_dr,
                h.samples.size());
  std::string k(key);
  for (double v : h.samples) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "|%.17g", v);
    k += buf;
  }
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it == cache.end())
    it = cache.emplace(k, FilterCorrelation(h)).first;
  return it->second;
}

// --- norms ------------------------------------------------------------------

namespace {

// Int_a^b s^{e-1} ds with divergence markers.
double power_segment(double e, double a, double b) {
  if (b <= a) return 0.0;
  if (a == 0 && e <= 0) return kInf;
  if (std::fabs(e) < 1e-14) return std::log(b / a);
  return (std::pow(b, e) - std::pow(a, e)) / e;
}

// S_{d-1} Int s^{d-1} |h(s)|^p ds over [0,r] resp. [r,inf) for PowerH.
double pow_lp_mass_ball(const KernelSpec& h, double p, double r) {
  const double a = h.d - 0.5 * p * (h.d + h.alpha);
  const double b = h.d - 0.5 * p * (h.d + h.beta);
  double m = power_segment(a, 0.0, std::min(r, 1.0));
  if (r > 1) m += power_segment(b, 1.0, r);
  return sphere_area(h.d) * m;
}

double pow_lp_mass_comp(const KernelSpec& h, double p, double r) {
  const double a = h.d - 0.5 * p * (h.d + h.alpha);
  const double b = h.d - 0.5 * p * (h.d + h.beta);
  double m = 0.0;
  if (r < 1) m += power_segment(a, r, 1.0);
  if (b >= 0) return kInf;
  m += -std::pow(std::max(r, 1.0), b) / b;
  return sphere_area(h.d) * m;
}

// Same masses for a radial step table (exact cell sums).
double table_lp_mass(const KernelSpec& h, double p, double lo, double hi) {
  const double dr = h.sample_dr;
  double m = 0.0;
  for (size_t j = 0; j < h.samples.size(); ++j) {
    const double a = std::max(lo, j * dr);
    const double b = std::min(hi, (j + 1) * dr);
    if (b <= a) continue;
    const double v = std::fabs(h.samples[j]);
    if (v == 0) continue;
    m += std::pow(v, p) *
         (std::pow(b, h.d) - std::pow(a, h.d)) / h.d;
  }
  return sphere_area(h.d) * m;
}

}  // namespace

double lp_norm_ball(const KernelSpec& h, double p, double r) {
  require(h.role() == KernelRole::Filter, "lp_norm_ball: spec must be a filter");
  require(p > 0, "lp_norm_ball: p must be > 0");
  require(r >= 0, "lp_norm_ball: r must be >= 0");
  const double m = h.family == KernelFamily::PowerH
                       ? pow_lp_mass_ball(h, p, r)
                       : table_lp_mass(h, p, 0.0, r);
  return std::pow(m, 1.0 / p);
}

double lp_norm_complement(const KernelSpec& h, double p, double r) {
  require(h.role() == KernelRole::Filter,
          "lp_norm_complement: spec must be a filter");
  require(p > 0, "lp_norm_complement: p must be > 0");
  require(r >= 0, "lp_norm_complement: r must be >= 0");
  const double m = h.family == KernelFamily::PowerH
                       ? pow_lp_mass_comp(h, p, r)
                       : table_lp_mass(h, p, r, filter_support(h));
  return std::pow(m, 1.0 / p);
}

double pd_tail_bound(const KernelSpec& h, double p, double r) {
  require(p > 1, "pd_tail_bound: p must be > 1");
  const double q = p / (p - 1.0);
  const double t2 = lp_norm_complement(h, 2.0, r);
  return 2.0 * lp_norm_ball(h, p, r) * lp_norm_complement(h, q, r) + t2 * t2;
}

double gp_fp_integral(const KernelSpec& h, double p, bool gp, double eps) {
  require(h.role() == KernelRole::Filter,
          "gp_fp_integral: spec must be a filter");
  require(p > 1, "gp_fp_integral: p must be > 1");
  require(eps > 0 && eps < 1, "gp_fp_integral: need 0 < eps < 1");
  const double q = p / (p - 1.0);
  auto integrand = [&](double r) {
    const double t2 = lp_norm_complement(h, 2.0, r);
    const double bracket =
        lp_norm_ball(h, p, r) * lp_norm_complement(h, q, r) + t2 * t2;
    if (!std::isfinite(bracket)) return kInf;
    const double w = gp ? omega_d(h.d, r) : std::pow(r, h.d - 1);
    return bracket * w;
  };
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  // Geometric breakpoints resolve the steep small-r growth.
  std::vector<double> br;
  for (double x = 0.5; x > 2.0 * eps; x *= 0.5) br.push_back(x);
  std::sort(br.begin(), br.end());
  return quad_pts(integrand, eps, 1.0, br, opt).value;
}

// --- Gp / Fp decisions ------------------------------------------------------

namespace {

// Exact convergence rule for PowerH at a specific exponent p.
bool power_gpfp_at_p(const KernelSpec& h, double p, bool gp) {
  const int d = h.d;
  const double q = p / (p - 1.0);
  if (p * (d + h.alpha) >= 2.0 * d) return false;   // ||h||_{L^p(B_r)} = inf
  if (q * (d + h.beta) <= 2.0 * d) return false;    // ||h||_{L^q(B_r^c)} = inf
  // Small-r bracket ~ max(r^{e1}, r^{-alpha}); integrand weight w(r).
  const double e1 = d / p - 0.5 * (d + h.alpha);
  const double growth = std::min(e1, -h.alpha);
  if (gp) {
    const double thresh = d == 1 ? -1.0 : -2.0;
    return growth > thresh;
  }
  return growth > -static_cast<double>(d);
}

bool power_gpfp_any_p(const KernelSpec& h, bool gp) {
  // Existence over p: the L^2 tail term forces alpha < min(d,2) for Gp and
  // alpha < d for Fp; both are also sufficient (pick p close to 1).
  if (gp) return h.alpha < std::min<double>(h.d, 2.0);
  return h.alpha < h.d;
}

// Richardson-style cutoff extrapolation for tables: evaluate the integral at
// shrinking eps and test Cauchy convergence of the sequence.
std::optional<bool> table_gpfp(const KernelSpec& h, double p, bool gp) {
  const double p_use = p == 0 ? 2.0 : p;
  double prev = 0, prev_inc = 0;
  bool have_prev = false;
  double last = 0;
  for (int k = 3; k <= 14; ++k) {
    const double eps = std::pow(2.0, -k);
    const double val = gp_fp_integral(h, p_use, gp, eps);
    if (!std::isfinite(val)) return false;
    if (have_prev) {
      const double inc = val - prev;
      if (k >= 8 && std::fabs(inc) <= std::max(1e-9, 1e-7 * std::fabs(val)) &&
          std::fabs(prev_inc) <= std::max(1e-9, 1e-6 * std::fabs(val)))
        return true;
      prev_inc = inc;
    }
    have_prev = true;
    prev = val;
    last = val;
  }
  // Converged slowly or still growing: decide by the geometry of increments.
  (void)last;
  if (std::fabs(prev_inc) <= 1e-4 * std::max(1.0, std::fabs(prev)))
    return true;
  return std::nullopt;
}

}  // namespace

std::optional<bool> check_Gp(const KernelSpec& h, double p) {
  require(h.role() == KernelRole::Filter, "check_Gp: spec must be a filter");
  require(p == 0 || p > 1, "check_Gp: p must be 0 (search) or > 1");
  if (h.family == KernelFamily::PowerH)
    return p == 0 ? power_gpfp_any_p(h, true) : power_gpfp_at_p(h, p, true);
  return table_gpfp(h, p, true);
}

std::optional<bool> check_Fp(const KernelSpec& h, double p) {
  require(h.role() == KernelRole::Filter, "check_Fp: spec must be a filter");
  require(p == 0 || p > 1, "check_Fp: p must be 0 (search) or > 1");
  if (h.family == KernelFamily::PowerH)
    return p == 0 ? power_gpfp_any_p(h, false) : power_gpfp_at_p(h, p, false);
  return table_gpfp(h, p, false);
}

// --- Dalang integrals -------------------------------------------------------

namespace {

bool spectral_dalang_finite(const KernelSpec& f) {
  switch (f.family) {
    case KernelFamily::WhiteNoise: return f.d == 1;
    case KernelFamily::RieszF: return f.gamma < 2.0;
    case KernelFamily::ExpDecayF:
    case KernelFamily::CauchyF: return true;
    case KernelFamily::Constant: return true;
    default: return false;
  }
}

double spectral_dalang(const KernelSpec& f, double lambda) {
  double atom;
  if (spectral_atom(f, &atom)) return atom / lambda;
  if (!spectral_dalang_finite(f)) return kInf;
  const int d = f.d;
  auto g = [&](double k) {
    return std::pow(k, d - 1) * spectral_density(f, k) / (lambda + k * k);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-10;
  double head = quad_sing0(g, 1.0, opt).value;
  double tail = quad_upper_inf(g, 1.0, opt).value;
  return sphere_area(d) * (head + tail);
}

bool potential_dalang_finite(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::WhiteNoise: return spec.d == 1;
    case KernelFamily::Constant:
    case KernelFamily::ExpDecayF:
    case KernelFamily::CauchyF:
    case KernelFamily::TableF: return true;
    case KernelFamily::RieszF: return spec.gamma < 2.0;
    case KernelFamily::PowerH:
      return spec.alpha < std::min<double>(spec.d, 2.0);
    case KernelFamily::TableH: return true;
  }
  return false;
}

}  // namespace

double correlation_overlap(const FilterCorrelation& fbar, double lambda) {
  const KernelSpec& h = fbar.spec();
  const int d = h.d;
  auto g = [&](double r) {
    return std::pow(r, d - 1) * potential_kernel(d, lambda, r) * fbar(r);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  double head = quad_sing0(g, 1.0, opt).value;
  double tail = quad_upper_inf(g, 1.0, opt).value;
  return sphere_area(d) * (head + tail);
}

double correlation_overlap(const KernelSpec& spec, double lambda) {
  require(lambda > 0, "correlation_overlap: lambda must be > 0");
  if (spec.role() == KernelRole::Filter) {
    if (spec.family == KernelFamily::PowerH &&
        spec.alpha >= std::min<double>(spec.d, 2.0))
      return kInf;
    return correlation_overlap(shared_correlation(spec), lambda);
  }
  switch (spec.family) {
    case KernelFamily::WhiteNoise:
      return spec.d == 1 ? potential_kernel(1, lambda, 0.0) : kInf;
    case KernelFamily::Constant:
      return spec.level / lambda;
    default: break;
  }
  if (!potential_dalang_finite(spec)) return kInf;
  const int d = spec.d;
  auto g = [&](double r) {
    return std::pow(r, d - 1) * potential_kernel(d, lambda, r) *
           eval_correlation(spec, r);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-10;
  double head = quad_sing0(g, 1.0, opt).value;
  double tail = quad_upper_inf(g, 1.0, opt).value;
  return sphere_area(d) * (head + tail);
}

DalangResult dalang_both(const KernelSpec& spec, double lambda) {
  require(lambda > 0, "dalang_both: lambda must be > 0");
  DalangResult out;
  if (spec.role() == KernelRole::Correlation &&
      (has_spectral_density(spec) || spec.family == KernelFamily::Constant))
    out.spectral = spectral_dalang(spec, lambda);
  const double pot = correlation_overlap(spec, lambda);
  out.potential = pot;
  out.finite = std::isfinite(out.spectral ? *out.spectral : pot);
  return out;
}

double DalangResult::value() const {
  if (spectral) return *spectral;
  if (potential) return *potential;
  return kInf;
}

double dalang_integral(const KernelSpec& spec, double lambda) {
  return dalang_both(spec, lambda).value();
}

bool dalang_finite(const KernelSpec& spec) {
  if (spec.role() == KernelRole::Correlation && has_spectral_density(spec))
    return spectral_dalang_finite(spec);
  return potential_dalang_finite(spec);
}

// --- H_{-1} criterion -------------------------------------------------------

double h_minus1_fourier(const std::function<double(double)>& hhat_radial,
                        int d) {
  auto g = [&](double z) {
    const double v = hhat_radial(z);
    return std::pow(z, d - 1) * v * v / (1.0 + z * z);
  };
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  double head = quad_sing0(g, 1.0, opt).value;
  double tail = quad_upper_inf(g, 1.0, opt).value;
  return sphere_area(d) * (head + tail);
}

double h_minus1_norm(const KernelSpec& h) {
  require(h.role() == KernelRole::Filter,
          "h_minus1_norm: spec must be a filter");
  if (h.family == KernelFamily::PowerH) {
    if (h.alpha >= std::min<double>(h.d, 2.0)) return kInf;
    // Near-origin criterion Int_{B_1} |x|^{-d+1} omega_d(|x|) fbar(x) dx.
    const FilterCorrelation& fbar = shared_correlation(h);
    auto g = [&](double r) { return omega_d(h.d, r) * fbar(r); };
    QuadOptions opt;
    opt.rel_tol = 1e-9;
    return sphere_area(h.d) * quad_sing0(g, 1.0, opt).value;
  }
  if (h.d == 1) {
    // Exact transform of the step profile: hhat(z) =
    // 2 sum_j h_j (sin(z b_j) - sin(z a_j))/z, then the literal Fourier-side
    // integral.
    const double dr = h.sample_dr;
    const auto& s = h.samples;
    auto hhat = [&, dr](double z) {
      if (z < 1e-8) {
        double m = 0;
        for (size_t j = 0; j < s.size(); ++j) m += s[j] * dr;
        return 2.0 * m;
      }
      double acc = 0;
      for (size_t j = 0; j < s.size(); ++j)
        acc += s[j] * (std::sin(z * (j + 1) * dr) - std::sin(z * j * dr));
      return 2.0 * acc / z;
    };
    auto g = [&](double z) {
      const double v = hhat(z);
      return v * v / (1.0 + z * z);
    };
    QuadOptions opt;
    opt.rel_tol = 1e-9;
    opt.max_intervals = 8000;
    // |hhat(z)| <= 4 sum|h_j| / z, so the remainder beyond Z is below
    // 16 (sum|h_j|)^2 / (3 Z^3); Z = 600 keeps it past the tolerance.
    const double Z = 600.0;
    double sum_abs = 0;
    for (double v : s) sum_abs += std::fabs(v);
    double main = 2.0 * quad(g, 0.0, Z, opt).value;
    double tail_bound = 2.0 * 16.0 * sum_abs * sum_abs / (3.0 * Z * Z * Z);
    return main + 0.5 * tail_bound;
  }
  // Tables in d >= 2: criterion integral on the tabulated autocorrelation.
  const FilterCorrelation& fbar = shared_correlation(h);
  auto g = [&](double r) { return omega_d(h.d, r) * fbar(r); };
  QuadOptions opt;
  opt.rel_tol = 1e-9;
  return sphere_area(h.d) * quad_sing0(g, 1.0, opt).value;
}

// --- threshold and bounds ---------------------------------------------------

namespace {

double lambda_threshold_impl(const std::function<double(double)>& overlap,
                             double delta) {
  const double lo_cap = 1e-6, hi_cap = 1e6;
  if (!(overlap(hi_cap) < delta)) return kInf;
  if (overlap(lo_cap) < delta) return lo_cap;
  double lo = lo_cap, hi = hi_cap;
  for (int it = 0; it < 60; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (overlap(mid) < delta)
      hi = mid;
    else
      lo = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace

double lambda_threshold(const KernelSpec& spec, double delta) {
  require(delta > 0, "lambda_threshold: delta must be > 0");
  if (spec.role() == KernelRole::Filter) {
    auto ok = check_Gp(spec, 0.0);
    if (!ok || !*ok)
      throw std::invalid_argument(
          "lambda_threshold: filter does not satisfy the admissibility "
          "condition for any exponent");
    const FilterCorrelation& fbar = shared_correlation(spec);
    return lambda_threshold_impl(
        [&](double lam) { return correlation_overlap(fbar, lam); }, delta);
  }
  if (!dalang_finite(spec))
    throw std::invalid_argument(
        "lambda_threshold: correlation fails the finiteness condition");
  return lambda_threshold_impl(
      [&](double lam) { return correlation_overlap(spec, lam); }, delta);
}

double z_k(double k) {
  require(k >= 2, "z_k: k must be >= 2");
  return k == 2 ? 1.0 : 2.0 * std::sqrt(k);
}

MomentBoundDetail moment_bound_detail(const KernelSpec& spec, double sigma_lip,
                                      double sigma0, double u0_sup, double k,
                                      double eps) {
  require(sigma_lip > 0, "moment_bound: sigma_lip must be > 0");
  require(sigma0 >= 0, "moment_bound: sigma0 must be >= 0");
  require(u0_sup >= 0, "moment_bound: u0_sup must be >= 0");
  require(eps > 0 && eps < 1, "moment_bound: need 0 < eps < 1");
  MomentBoundDetail out;
  out.z = z_k(k);
  const double zl = out.z * sigma_lip;
  out.delta = 2.0 * (1.0 - eps) * (1.0 - eps) / (zl * zl);
  out.beta = lambda_threshold(spec, out.delta);
  // Picard-uniform bound: sup_n [u0 + sigma0/Lip] (1/eps + (1-eps)^{n+1} u0),
  // largest at n = 0.
  out.bound = (u0_sup + sigma0 / sigma_lip) *
              (1.0 / eps + (1.0 - eps) * u0_sup);
  return out;
}

double moment_bound(const KernelSpec& spec, double sigma_lip, double sigma0,
                    double u0_sup, double k, double eps) {
  return moment_bound_detail(spec, sigma_lip, sigma0, u0_sup, k, eps).bound;
}

double malliavin_kappa(const KernelSpec& spec, double t) {
  require(t > 0, "malliavin_kappa: t must be > 0");
  const int d = spec.d;
  switch (spec.family) {
    case KernelFamily::WhiteNoise:
      if (d != 1)
        throw std::invalid_argument(
            "malliavin_kappa: white noise requires d == 1");
      return heat_kernel(1, 2.0 * t, 0.0);
    case KernelFamily::Constant:
      return spec.level;
    default: break;
  }
  auto with_density = [&](const std::function<double(double)>& f) {
    auto g = [&](double r) {
      return std::pow(r, d - 1) * heat_kernel(d, 2.0 * t, r) * f(r);
    };
    QuadOptions opt;
    opt.rel_tol = 1e-9;
    const double R = 10.0 * std::sqrt(2.0 * t) + 1.0;
    double head = quad_sing0(g, std::min(1.0, R), opt).value;
    double rest = R > 1.0 ? quad(g, 1.0, R, opt).value : 0.0;
    double tail = quad_upper_inf(g, R, opt).value;
    return sphere_area(d) * (head + rest + tail);
  };
  if (spec.role() == KernelRole::Filter) {
    const FilterCorrelation& fbar = shared_correlation(spec);
    return with_density([&](double r) { return fbar(r); });
  }
  return with_density([&](double r) { return eval_correlation(spec, r); });
}

std::vector<double> malliavin_hn(const KernelSpec& spec, double t, int n_max) {
  require(t > 0, "malliavin_hn: t must be > 0");
  require(n_max >= 0 && n_max <= 6, "malliavin_hn: n_max must be in [0, 6]");
  // h_n(t) = Int_0^t h_{n-1}(t - tau) kappa(tau) dtau, evaluated recursively;
  // kappa may carry an integrable tau^{-1/2} singularity at 0.
  std::function<double(int, double, double)> hn = [&](int n, double tt,
                                                      double tol) -> double {
    if (n == 0) return 1.0;
    auto g = [&](double tau) {
      return hn(n - 1, tt - tau, tol * 4.0) * malliavin_kappa(spec, tau);
    };
    QuadOptions opt;
    opt.rel_tol = tol;
    opt.max_intervals = 200;
    return quad_sing0(g, tt, opt).value;
  };
  std::vector<double> out;
  out.reserve(n_max + 1);
  for (int n = 0; n <= n_max; ++n) out.push_back(hn(n, t, 1e-7));
  return out;
}

double malliavin_H_bound(const KernelSpec& spec, double t, double gamma,
                         double lambda) {
  require(gamma >= 0, "malliavin_H_bound: gamma must be >= 0");
  require(lambda > 0, "malliavin_H_bound: lambda must be > 0");
  const double overlap = correlation_overlap(spec, lambda);
  if (!(gamma * overlap < 2.0))
    throw std::domain_error(
        "malliavin_H_bound: gamma * overlap must be < 2 at this lambda");
  return std::exp(2.0 * lambda * t) / (1.0 - 0.5 * gamma * overlap);
}

MalliavinBound malliavin_bound(const KernelSpec& spec, double sigma_lip,
                               double t, double s, double dist, double k,
                               double T, double C_Tk) {
  require(sigma_lip > 0, "malliavin_bound: sigma_lip must be > 0");
  require(t > s && s >= 0, "malliavin_bound: need 0 <= s < t");
  require(t <= T, "malliavin_bound: t must be <= T");
  require(C_Tk > 0, "malliavin_bound: C_Tk must be > 0");
  const double zl = z_k(k) * sigma_lip;
  const double c = std::pow(2.0, 0.5 * (spec.d - 2)) * zl * zl;
  // Reuse one correlation cache across the lambda scan for filters.
  const FilterCorrelation* fbar =
      spec.role() == KernelRole::Filter ? &shared_correlation(spec) : nullptr;
  auto overlap_at = [&](double lam) {
    return fbar ? correlation_overlap(*fbar, lam)
                : correlation_overlap(spec, lam);
  };
  MalliavinBound best;
  best.value = kInf;
  for (int i = 0; i <= 120; ++i) {
    const double lam = std::pow(10.0, -6.0 + 12.0 * i / 120.0);
    const double ov = overlap_at(lam);
    const double den = 1.0 - c * ov;
    if (den <= 0) continue;
    const double val = 2.0 * C_Tk * std::exp(lam * (t - s)) *
                       heat_kernel(spec.d, t - s, dist) / std::sqrt(den);
    if (val < best.value) {
      best.value = val;
      best.lambda0 = lam;
      best.overlap = ov;
      best.denom = den;
    }
  }
  if (!std::isfinite(best.value))
    throw std::domain_error(
        "malliavin_bound: no admissible exponential weight at this (k, "
        "sigma): the correlation overlap stays too large");
  return best;
}

}  // namespace shelab
