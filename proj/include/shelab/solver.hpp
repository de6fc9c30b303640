#pragma once
// Time-stepping solver for the stochastic heat equation
//
//   du/dt = (1/2) Laplacian u + sigma(u) * noise,   u(0) = u0 (default == 1),
//
// on the periodic grid, in the mild form: each step applies the exact heat
// semigroup in spectral space to the current state plus the explicit noise
// term,
//
//   u_{k+1} = IFFT( exp(-|k|^2 dt / 2) * FFT( u_k + sigma(u_k) W_k dt ) ),
//
// so the composed scheme telescopes to the discrete mild solution.  sigma is
// evaluated pointwise at cell values with no dealiasing; for Lipschitz sigma
// the aliasing error stays bounded at the shipped grid sizes and is accepted
// as a documented bias source.  The scheme is unconditionally stable, but
// solve() still enforces dt <= dx^2/2 as an accuracy guard.
//
// Two exact reference paths complement the generic stepper: an additive-noise
// sampler (constant sigma, space-time white noise, d = 1) that evolves the
// spectrum directly with the exact per-mode noise variance, and the
// one-dimensional SDE dX = lambda sigma(X) dW reproducing the spatially
// constant solution under a constant correlation.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shelab/kernels.hpp"
#include "shelab/noise.hpp"

namespace shelab {

// --- nonlinearity -----------------------------------------------------------

enum class SigmaFamily {
  Constant,       // sigma(u) == c0 (additive noise)
  Linear,         // sigma(u) == u (multiplicative / parabolic Anderson)
  AffineClipped,  // sigma(u) == clamp(u, a, b): identity clipped to [a, b]
  Custom,         // linear interpolation of a sample table, constant outside
};

struct SigmaSpec {
  SigmaFamily family = SigmaFamily::Constant;
  double c0 = 1.0;              // Constant level
  double a = 0.0, b = 1.0;      // AffineClipped bounds, a <= b
  double u_min = 0.0;           // Custom: abscissa of values[0]
  double du = 1.0;              // Custom: abscissa spacing, > 0
  std::vector<double> values;   // Custom: sigma samples
  double lip = 0.0;             // Lipschitz constant; > 0 except for Constant
  double sigma0 = 0.0;          // sigma(0), cached for bound computations

  static SigmaSpec constant(double c0);
  static SigmaSpec linear();
  static SigmaSpec affine_clipped(double a, double b);
  // Declares a Lipschitz constant and validates the table against it: the
  // steepest secant between adjacent samples must not exceed lip.
  static SigmaSpec custom(double u_min, double du, std::vector<double> values,
                          double lip);

  std::string family_name() const;
};

double eval_sigma(const SigmaSpec& s, double u);

// --- solution state ---------------------------------------------------------

struct Provenance {
  KernelSpec kernel;   // noise correlation or filter
  SigmaSpec sigma;
  uint64_t seed = 0;
  uint32_t replica = 0;
  std::string scheme;  // which update rule produced the values
  int64_t steps = 0;   // steps taken since t = 0
};

struct SolutionField {
  Grid grid;
  double t = 0.0;
  std::vector<double> values;  // u(t, .), row-major over cells
  Provenance provenance;
};

// Ensemble aggregates.  Per-cell moments are accumulated in replica order
// (the scheduler reorders worker output back to 0, 1, 2, ...), so the stored
// doubles are byte-identical for any thread count.
struct SnapshotMoments {
  double t = 0.0;
  std::vector<double> mean;  // per cell
  std::vector<double> var;   // per cell, unbiased
};

struct ReplicaFailure {
  uint32_t replica = 0;
  int64_t step = 0;
  std::string message;
};

struct EnsembleRun {
  Grid grid;
  uint64_t seed = 0;
  std::string scheme;
  uint32_t replicas_requested = 0;
  uint32_t replicas_completed = 0;  // excludes blown-up replicas
  std::vector<double> snapshot_times;
  std::vector<SnapshotMoments> moments;  // one entry per snapshot time
  // Full per-replica snapshots, kept only under SolveOptions::keep_fields:
  // fields[r][s] is replica r at snapshot_times[s].
  std::vector<std::vector<SolutionField>> fields;
  std::vector<ReplicaFailure> failures;
};

// Refusal to simulate with a kernel that fails its admissibility condition.
class GateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- operations -------------------------------------------------------------

// One exponential-Euler step; the noise slice must match the field's grid and
// the field's step count (slice.step == provenance.steps).  Throws
// std::runtime_error naming the step index if any cell goes non-finite.
SolutionField step(const SolutionField& field, const NoiseSlice& noise,
                   const SigmaSpec& sigma);

// The admissibility gate applied by solve(): correlations must satisfy the
// finite-potential condition, filters the weighted bracket-integral
// condition.  Throws GateError (with the reason) on failure or when the
// filter criterion is inconclusive; returns normally otherwise.
void check_solver_gate(const KernelSpec& kernel);

struct SolveOptions {
  double t_final = 1.0;
  // Times to record; empty means {t_final}.  Each is rounded to the nearest
  // step boundary and must land in [0, t_final] within half a step.
  std::vector<double> snapshot_times;
  uint32_t replicas = 1;
  uint64_t seed = 0;
  int threads = 1;
  bool unsafe_skip_gate = false;  // explicit override of check_solver_gate
  bool keep_fields = false;       // store every replica's snapshots
  std::vector<double> u0;         // initial data; empty means u(0) == 1
  // Called once per replica, in replica order regardless of thread count,
  // with that replica's snapshots (same layout as EnsembleRun::fields[r]).
  std::function<void(const std::vector<SolutionField>&)> observer;
};

// Runs an ensemble of independent replicas.  Deterministic for a fixed seed:
// replica r uses seed path (seed, r, step), workers may compute replicas in
// any order, and results are reduced strictly in replica order.  A constant
// sigma with white noise in d = 1 is routed to the exact additive sampler
// (scheme "additive-exact-spectral"); everything else uses the generic
// stepper (scheme "spectral-exponential-euler").  Throws GateError if the
// kernel fails its gate (unless unsafe_skip_gate), std::invalid_argument for
// bad shapes or dt > dx^2/2, and records blown-up replicas in failures
// instead of aborting the ensemble.
EnsembleRun solve(const Grid& grid, const KernelSpec& kernel,
                  const SigmaSpec& sigma, const SolveOptions& opt);

// Picard iteration at a fixed horizon on one frozen noise realization:
// iterate 0 is u == 1 at all times, and iterate n+1 solves the linearized
// step recursion with sigma evaluated on iterate n's trajectory.  sup_diffs
// reports max_{t,x} |u_{n+1} - u_n| per iteration; a non-decreasing tail
// after the second iteration records a warning (discretization too coarse
// for the contraction to show).
struct PicardResult {
  SolutionField field;            // final iterate at time t
  std::vector<double> sup_diffs;  // one entry per completed iteration
  std::vector<std::string> warnings;
};

PicardResult picard_solve(const Grid& grid, const KernelSpec& kernel,
                          const SigmaSpec& sigma, double t, int iterations,
                          uint64_t seed);

// Samples of X_t solving dX = lambda sigma(X) dW, X_0 = 1 — the law of the
// spatially constant solution under correlation f == lambda^2 (with the
// convention lambda = sqrt(level)).  Linear sigma uses the exact log-normal
// X_t = exp(lambda W_t - lambda^2 t / 2); other families use Euler–Maruyama
// with 2000 substeps.  Draws come from a dedicated stream so results never
// collide with field noise at the same seed.
std::vector<double> nonergodic_reference(const SigmaSpec& sigma, double lambda,
                                         double t, uint32_t replicas,
                                         uint64_t seed);

}  // namespace shelab
