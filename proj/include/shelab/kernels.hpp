#pragma once
// Analytic side of the laboratory: kernel families, their integral
// conditions, and the constants attached to them.
//
// A KernelSpec describes either a correlation f directly (WhiteNoise,
// Constant, RieszF, ExpDecayF, CauchyF, TableF) or a base filter h
// (PowerH, TableH) whose correlation is the autocorrelation f = h*h~.
// All built-in shapes are radial; signed filters are supported and all
// convergence conditions are evaluated on |h|.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace shelab {

enum class KernelFamily {
  WhiteNoise,  // f = delta_0, spectral density == 1
  Constant,    // f == level
  RieszF,      // f(x) = |x|^{-gamma}, 0 < gamma < d
  ExpDecayF,   // f(x) = exp(-rate*|x|)
  CauchyF,     // f(x) = scale^2/(scale^2+|x|^2)
  PowerH,      // h(w) = |w|^{-(d+alpha)/2} inside B_1, |w|^{-(d+beta)/2} outside
  TableH,      // radial step-function filter from samples
  TableF,      // radial step-function correlation from samples
};

enum class KernelRole { Correlation, Filter };

struct KernelSpec {
  KernelFamily family = KernelFamily::WhiteNoise;
  int d = 1;
  double level = 0;            // Constant
  double gamma = 0;            // RieszF
  double rate = 0;             // ExpDecayF
  double scale = 0;            // CauchyF
  double alpha = 0, beta = 0;  // PowerH
  std::vector<double> samples;  // TableH/TableF radial profile
  double sample_dr = 0;         // radial bin width of the samples

  static KernelSpec white_noise(int d);
  static KernelSpec constant(int d, double level);
  static KernelSpec riesz(int d, double gamma);
  static KernelSpec exp_decay(int d, double rate);
  static KernelSpec cauchy(int d, double scale);
  static KernelSpec power_h(int d, double alpha, double beta);
  static KernelSpec table_h(int d, std::vector<double> samples, double dr);
  static KernelSpec table_f(int d, std::vector<double> samples, double dr);

  KernelRole role() const;
  bool is_point_mass() const { return family == KernelFamily::WhiteNoise; }
  std::string family_name() const;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// --- elementary kernels -----------------------------------------------------

// Weight of the near-origin potential asymptotics: 1 (d=1), r*log_+(1/r)
// (d=2), r (d>=3), with log_+(z) = log(max(z, e)).
double omega_d(int d, double r);

// (2*pi*t)^{-d/2} exp(-r^2/(2t)), the transition density of the generator
// Delta/2; radial argument.
double heat_kernel(int d, double t, double r);

// v_lambda(r) = Int_0^inf exp(-lambda t) p_t(r) dt.  Closed forms in d=1,3,
// Bessel K0 in d=2; +inf at r=0 when d>=2.  lambda*v_lambda is a probability
// density.
double potential_kernel(int d, double lambda, double r);

// Same quantity by direct time quadrature; cross-check path.
double potential_kernel_quad(int d, double lambda, double r);

// Surface measure of the unit sphere (2, 2*pi, 4*pi for d = 1,2,3).
double sphere_area(int d);

// --- pointwise evaluation ---------------------------------------------------

// Correlation density at radius r (Correlation role only; WhiteNoise has no
// density and throws).
double eval_correlation(const KernelSpec& f, double r);

// Filter value at radius r (Filter role only).
double eval_filter(const KernelSpec& h, double r);

// Plain-convention spectral density fhat(k) = Int exp(i k.x) f(x) dx for the
// families that have one in closed form (WhiteNoise, RieszF, ExpDecayF,
// CauchyF).  Constant carries an atom instead: mass (2*pi)^d * level at k=0.
bool has_spectral_density(const KernelSpec& f);
double spectral_density(const KernelSpec& f, double k);
bool spectral_atom(const KernelSpec& f, double* mass_at_zero);

// --- autocorrelation of a filter -------------------------------------------

// (h * h~)(r) for radial h, by adaptive quadrature; `absolute` evaluates
// (|h| * |h~|)(r) instead.  Single-point, d in {1,2,3}.
double f_from_h(const KernelSpec& h, double r, bool absolute = false,
                double tol = 1e-8);

// Cached radial profile of |h|*|h~| (or the signed h*h~) with power-law tail
// extrapolation; used wherever the correlation is integrated repeatedly.
class FilterCorrelation {
 public:
  FilterCorrelation(const KernelSpec& h, bool absolute = true,
                    double r_max = 64.0);
  double operator()(double r) const;
  double r_max() const { return r_max_; }
  // Int_{B_R} profile dx in dimension d (ball mass).
  double ball_mass(double R) const;
  const KernelSpec& spec() const { return spec_; }

 private:
  KernelSpec spec_;
  double r_max_ = 0;
  double support_ = kInf;  // exact support bound for compactly supported h
  std::vector<double> log_r_, val_, slope_;  // pchip data on log r
  double tail_coeff_ = 0, tail_exp_ = 0;
};

// Process-wide cache of |h|*|h~| profiles keyed by the spec; building one is
// expensive for d >= 2, so repeated condition checks share it.
const FilterCorrelation& shared_correlation(const KernelSpec& h);

// --- norms and the Gp/Fp machinery ------------------------------------------

// L^p norm of |h| over the ball of radius r / its complement (radial
// quadrature; +inf when the integral diverges).
double lp_norm_ball(const KernelSpec& h, double p, double r);
double lp_norm_complement(const KernelSpec& h, double p, double r);

// The tail bound  2*||h||_{L^p(B_r)} ||h||_{L^q(B_r^c)} + ||h||_{L^2(B_r^c)}^2
// controlling sup_{|x|>2r} (|h|*|h~|)(x); q is the conjugate of p.
double pd_tail_bound(const KernelSpec& h, double p, double r);

// Int_eps^1 [ ||h||_{L^p(B_r)} ||h||_{L^q(B_r^c)} + ||h||^2_{L^2(B_r^c)} ] w(r) dr
// with w = omega_d (gp=true) or w(r) = r^{d-1} (gp=false).
double gp_fp_integral(const KernelSpec& h, double p, bool gp, double eps);

// Convergence of the weighted bracket integral on (0,1]: exact exponent
// analysis for PowerH, Richardson extrapolation on shrinking cutoffs for
// tables (nullopt when inconclusive).  p = 0 searches a small grid of
// exponents and reports whether any works.
std::optional<bool> check_Gp(const KernelSpec& h, double p);
std::optional<bool> check_Fp(const KernelSpec& h, double p);

// --- integral conditions ----------------------------------------------------

struct DalangResult {
  std::optional<double> spectral;   // Int fhat(z)/(lambda+|z|^2) dz, plain fhat
  std::optional<double> potential;  // Int v_lambda(x) f(x) dx
  bool finite = false;
  // Preferred scalar: spectral when available, else potential; +inf when the
  // condition fails.  The two forms satisfy
  //   potential(lambda) = 2 (2*pi)^{-d} spectral(2*lambda).
  double value() const;
};

DalangResult dalang_both(const KernelSpec& spec, double lambda);
double dalang_integral(const KernelSpec& spec, double lambda);
bool dalang_finite(const KernelSpec& spec);

// Near-origin criterion integral Int_{B_1} |x|^{-d+1} omega_d(|x|) fbar(x) dx
// deciding whether |h| has finite H_{-1} norm.  In d=1 (and for tables) the
// reported value is the literal Fourier-side integral Int |hhat|^2/(1+z^2) dz
// when it is computable; otherwise the criterion integral itself is returned.
// +inf when divergent.
double h_minus1_norm(const KernelSpec& h);

// Int |hhat(z)|^2/(1+|z|^2) dz for a caller-supplied radial transform.
double h_minus1_fourier(const std::function<double(double)>& hhat_radial,
                        int d);

// I(lambda) = Int v_lambda(x) fbar(x) dx = (v_lambda * fbar)(0), the overlap
// driving both the moment thresholds and the Malliavin denominators.
// fbar = |h|*|h~| for filters, f itself for nonnegative correlations.
double correlation_overlap(const KernelSpec& spec, double lambda);
double correlation_overlap(const FilterCorrelation& fbar, double lambda);

// Lambda(delta) = inf{lambda > 0 : I(lambda) < delta}, by bisection on
// [1e-6, 1e6] (60 rounds); +inf when even the cap fails.
double lambda_threshold(const KernelSpec& spec, double delta);

// --- moment and Malliavin bounds -------------------------------------------

double z_k(double k);  // 1 at k=2, 2*sqrt(k) for k>2

struct MomentBoundDetail {
  double bound = 0;   // uniform-in-n Picard bound
  double beta = 0;    // exponential weight via Lambda(2(1-eps)^2/(z_k Lip)^2)
  double z = 0;       // z_k used
  double delta = 0;   // threshold argument fed to Lambda
};

double moment_bound(const KernelSpec& spec, double sigma_lip, double sigma0,
                    double u0_sup, double k, double eps);
MomentBoundDetail moment_bound_detail(const KernelSpec& spec, double sigma_lip,
                                      double sigma0, double u0_sup, double k,
                                      double eps);

struct MalliavinBound {
  double value = 0;
  double lambda0 = 0;
  double overlap = 0;  // I(lambda0)
  double denom = 0;    // 1 - 2^{(d-2)/2} (z_k Lip)^2 I(lambda0)
};

// Bound on the k-norm of the Malliavin derivative D_{s,y} u(t,x):
//   2 C_{T,k} e^{lambda0 (t-s)} p_{t-s}(x-y) / sqrt(denom),
// with lambda0 picked (log-grid search up to a cap) to minimize the bound.
// Throws when no admissible lambda0 exists.
MalliavinBound malliavin_bound(const KernelSpec& spec, double sigma_lip,
                               double t, double s, double dist, double k,
                               double T, double C_Tk);

// kappa(t) = (p_{2t} * fbar)(0).
double malliavin_kappa(const KernelSpec& spec, double t);

// Iterates h_0 = 1, h_n(t) = Int_0^t h_{n-1}(s) kappa(t-s) ds, n <= n_max.
std::vector<double> malliavin_hn(const KernelSpec& spec, double t, int n_max);

// Geometric bound e^{2 lambda t} / (1 - gamma I(lambda)/2) on
// H(t;gamma) = sum gamma^n h_n(t); requires gamma I(lambda) < 2.
double malliavin_H_bound(const KernelSpec& spec, double t, double gamma,
                         double lambda);

}  // namespace shelab
