#pragma once
// Spectral-atom detection and the ergodicity / mixing decision procedures.
//
// The correlation's spectral measure decides the long-run behavior of spatial
// averages of the solution: an atom at frequency zero obstructs ergodicity,
// while an absolutely continuous spectrum yields mixing.  The atom is probed
// entirely in x-space through triangular (Fejer-type) smoothing of f at
// growing scales; closed-form families whose spectral structure is known
// (pure density, pure point mass) are decided exactly, and tabulated kernels
// fall back to operational decay / stabilization rules on the smoothed
// sequence.

#include <functional>
#include <vector>

#include "shelab/kernels.hpp"

namespace shelab {

enum class AtomDecision { AtomZero, AtomPositive, Inconclusive };
enum class ErgodicClass { Ergodic, NonErgodic, Unknown };

struct AtomEstimate {
  std::vector<double> n_values;           // averaging scales N
  std::vector<double> cesaro_values;      // f([-N,N]^d) / (2N)^d
  std::vector<double> ball_values;        // f(B_N) / vol(B_N)
  std::vector<double> triangular_values;  // (I_N * I~_N * f)(0)
  double extrapolated_atom = 0;  // limit of the triangular sequence; 0 when
                                 // the decision is AtomZero
  AtomDecision decision = AtomDecision::Inconclusive;
};

// (I_N * I~_N * f)(0) = N^{-d} Int f(x) prod_j (1 - |x_j|/N)_+ dx.  Exact for
// point masses, constants and d = 1 tables; adaptive quadrature otherwise.
double triangular_smoother(const KernelSpec& f, double N);

// The same smoothing modulated by cos(z0 x): the frequency-z0 analog of the
// estimate, used to compare spectral mass across frequencies.  d = 1 only.
double modulated_triangular(const KernelSpec& f, double N, double z0);

// Int_{[-L,L]^d} f(x) dx  and  Int_{B_R} f(x) dx (point masses included).
double box_mass(const KernelSpec& f, double L);
double ball_mass(const KernelSpec& f, double R);

// Box integral of a caller-supplied radial profile g(|x|); the filter case
// of the averaged-functional variance bound integrates |h|*|h~| this way.
double box_mass_radial(const std::function<double(double)>& profile, int d,
                       double L);

// Triangular estimates across the scales (default {2^4, 2^6, 2^8, 2^10})
// together with both Cesaro normalizations, plus the atom decision.  The
// tabulated-kernel rules: the sequence "decays" when the last value drops
// below 1e-3 x first with log-log slope < -0.5 (-> AtomZero), "stabilizes"
// when the last three values agree pairwise within 1% at a positive level
// (-> AtomPositive); anything else is Inconclusive.
AtomEstimate atom_at_zero(const KernelSpec& f,
                          std::vector<double> scales = {});

// Ergodicity of spatial averages of the solution driven by f: Ergodic when
// the spectral atom at zero vanishes; NonErgodic when the atom is positive
// and the noise enters with constant sigma (where the converse direction
// holds); Unknown otherwise.  Requires the finiteness condition on f.
ErgodicClass ergodicity_predicate(const KernelSpec& f, bool sigma_constant);

// Mixing of the stationary solution: decided by the decay of the smoothed
// correlation (v_lambda * f)(R) along growing radii (default 1, 2, ..., 512).
// Admissible filters and correlations with a spectral density are mixing
// outright; a constant correlation never is.
bool mixing_predicate(const KernelSpec& f, double lambda,
                      std::vector<double> radii = {});

// Exact covariance Cov[u(t, x), u(t, 0)] of the additive-noise solution with
// sigma == c0, namely c0^2 Int_0^t (p_{2s} * f)(x) ds; x is a radius.
double gaussian_covariance(const KernelSpec& f, double c0, double t, double x);

}  // namespace shelab
