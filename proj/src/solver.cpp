#include "shelab/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "shelab/fft.hpp"
#include "shelab/rng.hpp"

namespace shelab {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Blow-up carries its step index so the ensemble driver can log the replica
// instead of aborting the whole run.
struct BlowUpError : std::runtime_error {
  BlowUpError(int64_t step_index, uint32_t replica)
      : std::runtime_error("solution blew up at step " +
                           std::to_string(step_index) + " (replica " +
                           std::to_string(replica) + "): non-finite cell"),
        step_index(step_index) {}
  int64_t step_index;
};

}  // namespace

// --- nonlinearity -----------------------------------------------------------

SigmaSpec SigmaSpec::constant(double c0) {
  SigmaSpec s;
  s.family = SigmaFamily::Constant;
  s.c0 = c0;
  s.lip = 0.0;
  s.sigma0 = c0;
  return s;
}

SigmaSpec SigmaSpec::linear() {
  SigmaSpec s;
  s.family = SigmaFamily::Linear;
  s.lip = 1.0;
  s.sigma0 = 0.0;
  return s;
}

SigmaSpec SigmaSpec::affine_clipped(double a, double b) {
  require(a <= b, "affine_clipped: need a <= b");
  SigmaSpec s;
  s.family = SigmaFamily::AffineClipped;
  s.a = a;
  s.b = b;
  s.lip = 1.0;
  s.sigma0 = std::min(std::max(0.0, a), b);
  return s;
}

SigmaSpec SigmaSpec::custom(double u_min, double du, std::vector<double> values,
                            double lip) {
  require(du > 0, "custom sigma: need du > 0");
  require(!values.empty(), "custom sigma: need at least one sample");
  require(lip > 0, "custom sigma: need a positive Lipschitz constant");
  for (size_t j = 0; j + 1 < values.size(); ++j)
    require(std::abs(values[j + 1] - values[j]) <= lip * du * (1 + 1e-9),
            "custom sigma: table secant exceeds the declared Lipschitz "
            "constant");
  SigmaSpec s;
  s.family = SigmaFamily::Custom;
  s.u_min = u_min;
  s.du = du;
  s.values = std::move(values);
  s.lip = lip;
  s.sigma0 = eval_sigma(s, 0.0);
  return s;
}

std::string SigmaSpec::family_name() const {
  switch (family) {
    case SigmaFamily::Constant: return "Constant";
    case SigmaFamily::Linear: return "Linear";
    case SigmaFamily::AffineClipped: return "AffineClipped";
    case SigmaFamily::Custom: return "Custom";
  }
  return "?";
}

double eval_sigma(const SigmaSpec& s, double u) {
  switch (s.family) {
    case SigmaFamily::Constant:
      return s.c0;
    case SigmaFamily::Linear:
      return u;
    case SigmaFamily::AffineClipped:
      return std::min(std::max(u, s.a), s.b);
    case SigmaFamily::Custom: {
      const double x = (u - s.u_min) / s.du;
      if (x <= 0 || s.values.size() == 1) return s.values.front();
      if (x >= double(s.values.size() - 1)) return s.values.back();
      const auto j = size_t(x);
      const double w = x - double(j);
      return s.values[j] + w * (s.values[j + 1] - s.values[j]);
    }
  }
  return 0.0;
}

// --- generic stepper --------------------------------------------------------

namespace {

std::vector<double> heat_factors(const Grid& g) {
  const std::vector<double> k2 = mode_k2(g.d, g.n_cells, g.dx);
  std::vector<double> decay(k2.size());
  for (size_t m = 0; m < k2.size(); ++m)
    decay[m] = std::exp(-k2[m] * g.dt / 2);
  return decay;
}

// u <- IFFT(decay * FFT(u + sigma(u) * eta * dt)) / n, with sigma inlined
// per family so the cell loop stays branch-free.
void step_inplace(std::vector<double>& u, const double* eta, const Grid& g,
                  const SigmaSpec& sigma, const std::vector<double>& decay,
                  const FftPlan& plan, FftWorkspace& ws) {
  const int64_t n = plan.n_real;
  const double dt = g.dt;
  auto combine = [&](auto&& sig) {
    for (int64_t i = 0; i < n; ++i)
      ws.real[i] = u[i] + sig(u[i]) * eta[i] * dt;
  };
  switch (sigma.family) {
    case SigmaFamily::Constant: {
      const double c0 = sigma.c0;
      combine([c0](double) { return c0; });
      break;
    }
    case SigmaFamily::Linear:
      combine([](double v) { return v; });
      break;
    case SigmaFamily::AffineClipped: {
      const double a = sigma.a, b = sigma.b;
      combine([a, b](double v) { return std::min(std::max(v, a), b); });
      break;
    }
    case SigmaFamily::Custom:
      combine([&sigma](double v) { return eval_sigma(sigma, v); });
      break;
  }
  fft_forward(plan, ws.real, ws.cplx);
  for (int64_t m = 0; m < plan.n_cplx; ++m) {
    ws.cplx[m][0] *= decay[m];
    ws.cplx[m][1] *= decay[m];
  }
  fft_backward(plan, ws.cplx, ws.real);
  const double inv = 1.0 / double(n);
  for (int64_t i = 0; i < n; ++i) u[i] = ws.real[i] * inv;
}

void check_finite(const std::vector<double>& u, int64_t step_index,
                  uint32_t replica) {
  for (double v : u)
    if (!std::isfinite(v)) throw BlowUpError(step_index, replica);
}

// Per-step noise synthesis for one replica, dispatched once per solve.
using NoiseSynth =
    std::function<std::vector<double>(uint32_t replica, uint32_t step)>;

NoiseSynth make_noise_synth(const Grid& g, const KernelSpec& kernel,
                            uint64_t seed) {
  switch (kernel.family) {
    case KernelFamily::WhiteNoise:
      return [g, seed](uint32_t r, uint32_t k) {
        return sample_white(g, seed, r, k).values;
      };
    case KernelFamily::Constant: {
      const double level = kernel.level;
      return [g, seed, level](uint32_t r, uint32_t k) {
        return sample_constant(g, level, seed, r, k).values;
      };
    }
    case KernelFamily::RieszF:
    case KernelFamily::ExpDecayF:
    case KernelFamily::CauchyF:
      return [g, seed, kernel](uint32_t r, uint32_t k) {
        return color_by_spectrum(sample_white(g, seed, r, k), kernel).values;
      };
    case KernelFamily::PowerH:
    case KernelFamily::TableH:
      return [g, seed, kernel](uint32_t r, uint32_t k) {
        return color_by_h(sample_white(g, seed, r, k), kernel).values;
      };
    case KernelFamily::TableF:
      throw std::invalid_argument(
          "sampled correlation tables have no noise synthesis path; fit a "
          "spectral family or supply the filter instead");
  }
  throw std::invalid_argument("unknown kernel family");
}

}  // namespace

SolutionField step(const SolutionField& field, const NoiseSlice& noise,
                   const SigmaSpec& sigma) {
  const Grid& g = field.grid;
  require(int64_t(field.values.size()) == g.total_cells(),
          "step: field size does not match its grid");
  require(noise.grid.d == g.d && noise.grid.n_cells == g.n_cells &&
              noise.grid.dx == g.dx && noise.grid.dt == g.dt,
          "step: noise slice grid does not match the field grid");
  require(int64_t(noise.step) == field.provenance.steps,
          "step: noise slice step does not match the field's step count");
  const FftPlan& plan = fft_plan(g.d, g.n_cells);
  FftWorkspace ws(plan);
  const std::vector<double> decay = heat_factors(g);
  SolutionField out = field;
  step_inplace(out.values, noise.values.data(), g, sigma, decay, plan, ws);
  out.provenance.steps += 1;
  out.t = double(out.provenance.steps) * g.dt;
  check_finite(out.values, field.provenance.steps, field.provenance.replica);
  return out;
}

void check_solver_gate(const KernelSpec& kernel) {
  if (kernel.role() == KernelRole::Correlation) {
    if (!dalang_finite(kernel))
      throw GateError(kernel.family_name() +
                      ": correlation fails the finite-potential "
                      "admissibility condition");
    return;
  }
  const std::optional<bool> ok = check_Gp(kernel, 0);
  if (!ok.has_value())
    throw GateError(kernel.family_name() +
                    ": filter admissibility criterion is inconclusive");
  if (!*ok)
    throw GateError(kernel.family_name() +
                    ": filter fails the weighted bracket-integral "
                    "admissibility condition");
}

// --- ensemble driver --------------------------------------------------------

namespace {

struct ReplicaOut {
  std::vector<SolutionField> snaps;
  bool failed = false;
  int64_t fail_step = 0;
  std::string fail_msg;
};

struct SolvePlan {
  int64_t steps_total = 0;
  std::vector<int64_t> snap_steps;
  std::vector<double> snap_times;  // snap_steps * dt
  std::string scheme;
  bool fast_additive = false;
};

SolvePlan make_plan(const Grid& g, const KernelSpec& kernel,
                    const SigmaSpec& sigma, const SolveOptions& opt) {
  require(opt.t_final >= 0, "solve: t_final must be >= 0");
  require(g.dt <= g.dx * g.dx / 2 * (1 + 1e-12),
          "solve: dt must be <= dx^2/2 (accuracy guard)");
  SolvePlan plan;
  plan.steps_total = llround(opt.t_final / g.dt);
  std::vector<double> times = opt.snapshot_times;
  if (times.empty()) times = {opt.t_final};
  int64_t prev = -1;
  for (double tau : times) {
    const int64_t k = llround(tau / g.dt);
    require(k >= 0 && k <= plan.steps_total,
            "solve: snapshot time outside [0, t_final]");
    require(k > prev, "solve: snapshot times must be strictly increasing");
    plan.snap_steps.push_back(k);
    plan.snap_times.push_back(double(k) * g.dt);
    prev = k;
  }
  plan.fast_additive = sigma.family == SigmaFamily::Constant &&
                       kernel.family == KernelFamily::WhiteNoise && g.d == 1;
  plan.scheme =
      plan.fast_additive ? "additive-exact-spectral" : "spectral-exponential-euler";
  return plan;
}

Provenance base_provenance(const KernelSpec& kernel, const SigmaSpec& sigma,
                           const SolveOptions& opt, const std::string& scheme) {
  Provenance p;
  p.kernel = kernel;
  p.sigma = sigma;
  p.seed = opt.seed;
  p.scheme = scheme;
  return p;
}

// Generic path: time-step the field, synthesizing one noise slice per step.
ReplicaOut simulate_generic(const Grid& g, const SigmaSpec& sigma,
                            const SolvePlan& plan, const Provenance& base,
                            const NoiseSynth& synth,
                            const std::vector<double>& u0,
                            const std::vector<double>& decay,
                            const FftPlan& fft, FftWorkspace& ws,
                            uint32_t replica) {
  ReplicaOut out;
  std::vector<double> u = u0;
  size_t si = 0;
  auto record = [&](int64_t k) {
    SolutionField f;
    f.grid = g;
    f.t = double(k) * g.dt;
    f.values = u;
    f.provenance = base;
    f.provenance.replica = replica;
    f.provenance.steps = k;
    out.snaps.push_back(std::move(f));
  };
  try {
    if (si < plan.snap_steps.size() && plan.snap_steps[si] == 0) {
      record(0);
      ++si;
    }
    for (int64_t k = 0; k < plan.steps_total; ++k) {
      const std::vector<double> eta = synth(replica, uint32_t(k));
      step_inplace(u, eta.data(), g, sigma, decay, fft, ws);
      check_finite(u, k, replica);
      if (si < plan.snap_steps.size() && plan.snap_steps[si] == k + 1) {
        record(k + 1);
        ++si;
      }
    }
  } catch (const BlowUpError& e) {
    out.failed = true;
    out.fail_step = e.step_index;
    out.fail_msg = e.what();
    out.snaps.clear();
  }
  return out;
}

// Additive white noise in d = 1: the per-mode update
//   u^ <- D u^ + xi,   Var(xi_m) = c0^2 (n/dx) (1 - e^{-|k|^2 dt}) / |k|^2,
// is the exact distributional recursion of the mild solution at step times,
// so there is no time-discretization bias; one gaussian fill per step, one
// transform per snapshot.  Self-conjugate modes (0 and Nyquist) take a real
// draw at full variance, interior modes split it over Re and Im.
ReplicaOut simulate_additive(const Grid& g, const SigmaSpec& sigma,
                             const SolvePlan& plan, const Provenance& base,
                             const std::vector<double>& u0,
                             const FftPlan& fft, FftWorkspace& ws,
                             uint32_t replica, uint64_t seed) {
  const int64_t n = fft.n_real;
  const int64_t nc = fft.n_cplx;
  const std::vector<double> k2 = mode_k2(g.d, g.n_cells, g.dx);
  std::vector<double> decay(nc), noise_std(nc);
  const double rate = double(n) / g.dx;
  for (int64_t m = 0; m < nc; ++m) {
    decay[m] = std::exp(-k2[m] * g.dt / 2);
    const double phi =
        k2[m] > 0 ? -std::expm1(-k2[m] * g.dt) / k2[m] : g.dt;
    noise_std[m] = std::abs(sigma.c0) * std::sqrt(rate * phi);
  }
  const double half = 1.0 / std::sqrt(2.0);

  std::vector<double> re(nc, 0.0), im(nc, 0.0), draws(n);
  bool ones = true;
  for (double v : u0) ones = ones && v == 1.0;
  if (ones) {
    re[0] = double(n);  // spectrum of u == 1, exactly
  } else {
    std::copy(u0.begin(), u0.end(), ws.real);
    fft_forward(fft, ws.real, ws.cplx);
    for (int64_t m = 0; m < nc; ++m) {
      re[m] = ws.cplx[m][0];
      im[m] = ws.cplx[m][1];
    }
  }

  ReplicaOut out;
  size_t si = 0;
  auto record = [&](int64_t k) {
    for (int64_t m = 0; m < nc; ++m) {
      ws.cplx[m][0] = re[m];
      ws.cplx[m][1] = im[m];
    }
    fft_backward(fft, ws.cplx, ws.real);
    SolutionField f;
    f.grid = g;
    f.t = double(k) * g.dt;
    f.values.resize(n);
    const double inv = 1.0 / double(n);
    for (int64_t i = 0; i < n; ++i) f.values[i] = ws.real[i] * inv;
    f.provenance = base;
    f.provenance.replica = replica;
    f.provenance.steps = k;
    out.snaps.push_back(std::move(f));
  };
  if (si < plan.snap_steps.size() && plan.snap_steps[si] == 0) {
    record(0);
    ++si;
  }
  for (int64_t k = 0; k < plan.steps_total; ++k) {
    fill_gaussian(draws.data(), n, seed, replica, uint32_t(k), 0);
    re[0] = decay[0] * re[0] + noise_std[0] * draws[0];
    re[nc - 1] = decay[nc - 1] * re[nc - 1] + noise_std[nc - 1] * draws[1];
    for (int64_t m = 1; m < nc - 1; ++m) {
      const double s = noise_std[m] * half;
      re[m] = decay[m] * re[m] + s * draws[2 * m];
      im[m] = decay[m] * im[m] + s * draws[2 * m + 1];
    }
    if (si < plan.snap_steps.size() && plan.snap_steps[si] == k + 1) {
      record(k + 1);
      ++si;
    }
  }
  return out;
}

}  // namespace

EnsembleRun solve(const Grid& grid, const KernelSpec& kernel,
                  const SigmaSpec& sigma, const SolveOptions& opt) {
  require(kernel.d == grid.d, "solve: kernel dimension does not match grid");
  require(opt.replicas >= 1, "solve: need at least one replica");
  require(opt.threads >= 1 && opt.threads <= 256,
          "solve: threads must be in [1, 256]");
  require(opt.u0.empty() || int64_t(opt.u0.size()) == grid.total_cells(),
          "solve: u0 size does not match the grid");
  if (!opt.unsafe_skip_gate) check_solver_gate(kernel);
  const SolvePlan plan = make_plan(grid, kernel, sigma, opt);
  const Provenance base = base_provenance(kernel, sigma, opt, plan.scheme);
  const std::vector<double> u0 =
      opt.u0.empty() ? std::vector<double>(grid.total_cells(), 1.0) : opt.u0;
  NoiseSynth synth;
  if (!plan.fast_additive) synth = make_noise_synth(grid, kernel, opt.seed);
  const FftPlan& fft = fft_plan(grid.d, grid.n_cells);  // plan before workers
  const std::vector<double> decay = heat_factors(grid);

  EnsembleRun run;
  run.grid = grid;
  run.seed = opt.seed;
  run.scheme = plan.scheme;
  run.replicas_requested = opt.replicas;
  run.snapshot_times = plan.snap_times;
  const int64_t cells = grid.total_cells();
  const size_t S = plan.snap_steps.size();
  std::vector<std::vector<double>> sum(S), sumsq(S);
  for (size_t s = 0; s < S; ++s) {
    sum[s].assign(cells, 0.0);
    sumsq[s].assign(cells, 0.0);
  }

  // Workers claim replicas from a shared counter and may finish out of
  // order; the reducer drains strictly in replica order through a bounded
  // buffer, which makes every aggregate and observer call independent of
  // the thread count, byte for byte.
  struct Shared {
    std::mutex mu;
    std::condition_variable cv_result, cv_space;
    std::map<uint32_t, ReplicaOut> ready;
    uint32_t next_claim = 0;
    uint32_t next_drain = 0;
    std::exception_ptr error;
  } sh;
  const uint32_t window = std::max(4, 2 * opt.threads);
  const uint32_t R = opt.replicas;

  auto worker = [&]() {
    FftWorkspace ws(fft);
    for (;;) {
      uint32_t r;
      {
        std::unique_lock<std::mutex> lk(sh.mu);
        if (sh.error || sh.next_claim >= R) return;
        r = sh.next_claim++;
        sh.cv_space.wait(
            lk, [&] { return sh.error || r < sh.next_drain + window; });
        if (sh.error) return;
      }
      try {
        ReplicaOut out =
            plan.fast_additive
                ? simulate_additive(grid, sigma, plan, base, u0, fft, ws, r,
                                    opt.seed)
                : simulate_generic(grid, sigma, plan, base, synth, u0, decay,
                                   fft, ws, r);
        std::lock_guard<std::mutex> lk(sh.mu);
        sh.ready.emplace(r, std::move(out));
        sh.cv_result.notify_all();
      } catch (...) {
        std::lock_guard<std::mutex> lk(sh.mu);
        if (!sh.error) sh.error = std::current_exception();
        sh.cv_result.notify_all();
        sh.cv_space.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(opt.threads);
  for (int i = 0; i < opt.threads; ++i) pool.emplace_back(worker);

  for (uint32_t drained = 0; drained < R; ++drained) {
    ReplicaOut out;
    {
      std::unique_lock<std::mutex> lk(sh.mu);
      sh.cv_result.wait(
          lk, [&] { return sh.error || sh.ready.count(sh.next_drain); });
      if (sh.error) break;
      auto it = sh.ready.find(sh.next_drain);
      out = std::move(it->second);
      sh.ready.erase(it);
      ++sh.next_drain;
      sh.cv_space.notify_all();
    }
    try {
      if (out.failed) {
        run.failures.push_back({drained, out.fail_step, out.fail_msg});
      } else {
        ++run.replicas_completed;
        for (size_t s = 0; s < S; ++s) {
          const std::vector<double>& v = out.snaps[s].values;
          for (int64_t i = 0; i < cells; ++i) {
            sum[s][i] += v[i];
            sumsq[s][i] += v[i] * v[i];
          }
        }
        if (opt.observer) opt.observer(out.snaps);
        if (opt.keep_fields) run.fields.push_back(std::move(out.snaps));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(sh.mu);
      if (!sh.error) sh.error = std::current_exception();
      sh.cv_space.notify_all();
      break;
    }
  }
  for (auto& th : pool) th.join();
  if (sh.error) std::rethrow_exception(sh.error);

  const double Rc = double(run.replicas_completed);
  run.moments.resize(S);
  for (size_t s = 0; s < S; ++s) {
    SnapshotMoments& m = run.moments[s];
    m.t = plan.snap_times[s];
    m.mean.assign(cells, std::numeric_limits<double>::quiet_NaN());
    m.var.assign(cells, std::numeric_limits<double>::quiet_NaN());
    for (int64_t i = 0; i < cells && Rc > 0; ++i) {
      m.mean[i] = sum[s][i] / Rc;
      if (Rc > 1)
        m.var[i] = (sumsq[s][i] - sum[s][i] * sum[s][i] / Rc) / (Rc - 1);
    }
  }
  return run;
}

// --- Picard iteration -------------------------------------------------------

PicardResult picard_solve(const Grid& grid, const KernelSpec& kernel,
                          const SigmaSpec& sigma, double t, int iterations,
                          uint64_t seed) {
  require(kernel.d == grid.d, "picard: kernel dimension does not match grid");
  require(t > 0, "picard: t must be > 0");
  require(iterations >= 1, "picard: need at least one iteration");
  require(grid.dt <= grid.dx * grid.dx / 2 * (1 + 1e-12),
          "picard: dt must be <= dx^2/2 (accuracy guard)");
  const int64_t S = std::max<int64_t>(1, llround(t / grid.dt));
  const int64_t n = grid.total_cells();
  const NoiseSynth synth = make_noise_synth(grid, kernel, seed);
  std::vector<std::vector<double>> eta(S);
  for (int64_t k = 0; k < S; ++k) eta[k] = synth(0, uint32_t(k));

  const FftPlan& fft = fft_plan(grid.d, grid.n_cells);
  FftWorkspace ws(fft);
  const std::vector<double> decay = heat_factors(grid);
  const std::vector<double> ones(n, 1.0);

  // prev[k] holds iterate u_m at time k*dt; iterate 0 is == 1 at all times.
  std::vector<std::vector<double>> prev(S + 1, ones), next(S + 1, ones);
  PicardResult res;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> u = ones;
    double sup = 0.0;
    for (int64_t k = 0; k < S; ++k) {
      // The linearized step: propagate the new iterate, but evaluate sigma
      // on the previous iterate's trajectory.
      const std::vector<double>& frozen = prev[k];
      const double dt = grid.dt;
      for (int64_t i = 0; i < n; ++i)
        ws.real[i] = u[i] + eval_sigma(sigma, frozen[i]) * eta[k][i] * dt;
      fft_forward(fft, ws.real, ws.cplx);
      for (int64_t m = 0; m < fft.n_cplx; ++m) {
        ws.cplx[m][0] *= decay[m];
        ws.cplx[m][1] *= decay[m];
      }
      fft_backward(fft, ws.cplx, ws.real);
      const double inv = 1.0 / double(n);
      for (int64_t i = 0; i < n; ++i) u[i] = ws.real[i] * inv;
      if (!std::all_of(u.begin(), u.end(),
                       [](double v) { return std::isfinite(v); }))
        throw BlowUpError(k, 0);
      next[k + 1] = u;
      for (int64_t i = 0; i < n; ++i)
        sup = std::max(sup, std::abs(u[i] - prev[k + 1][i]));
    }
    res.sup_diffs.push_back(sup);
    std::swap(prev, next);
  }
  for (size_t m = 2; m < res.sup_diffs.size(); ++m) {
    if (res.sup_diffs[m] > res.sup_diffs[m - 1]) {
      res.warnings.push_back(
          "successive Picard differences stopped decreasing at iteration " +
          std::to_string(m + 1) +
          "; the discretization is too coarse for the contraction to show");
      break;
    }
  }
  res.field.grid = grid;
  res.field.t = double(S) * grid.dt;
  res.field.values = prev[S];
  res.field.provenance.kernel = kernel;
  res.field.provenance.sigma = sigma;
  res.field.provenance.seed = seed;
  res.field.provenance.scheme = "picard-fixed-noise";
  res.field.provenance.steps = S;
  return res;
}

// --- spatially constant reference SDE ---------------------------------------

std::vector<double> nonergodic_reference(const SigmaSpec& sigma, double lambda,
                                         double t, uint32_t replicas,
                                         uint64_t seed) {
  require(t > 0, "nonergodic_reference: t must be > 0");
  constexpr uint32_t kSdeStream = 3;  // never collides with field noise
  std::vector<double> out(replicas);
  if (sigma.family == SigmaFamily::Linear) {
    // Exact log-normal: X_t = exp(lambda W_t - lambda^2 t / 2).
    const double s = std::sqrt(t);
    for (uint32_t r = 0; r < replicas; ++r) {
      const double w = s * gaussian_at(seed, r, 0, kSdeStream);
      out[r] = std::exp(lambda * w - lambda * lambda * t / 2);
    }
    return out;
  }
  constexpr int kSubsteps = 2000;
  const double h = t / kSubsteps;
  const double sqh = std::sqrt(h);
  for (uint32_t r = 0; r < replicas; ++r) {
    double x = 1.0;
    for (int j = 0; j < kSubsteps; ++j)
      x += lambda * eval_sigma(sigma, x) * sqh *
           gaussian_at(seed, r, uint32_t(j), kSdeStream);
    out[r] = x;
  }
  return out;
}

}  // namespace shelab
