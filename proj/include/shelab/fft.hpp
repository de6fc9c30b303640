#pragma once
// Thin FFTW wrapper: cached deterministic plans + aligned buffers.
//
// Plans use FFTW_ESTIMATE on purpose: the plan choice then depends only on
// the transform geometry, never on runtime timings, which keeps spectral
// arithmetic bit-identical between runs and across thread counts.  Transforms
// are executed through the new-array interface on caller buffers allocated
// with fft_alloc (same alignment class as the planning buffers).  Backward
// transforms are unnormalized (forward followed by backward scales by the
// cell count) and may scribble on their complex input, as usual for FFTW.

#include <fftw3.h>

#include <cstdint>
#include <vector>

namespace shelab {

struct FftPlan {
  int d = 0;
  int n = 0;           // cells per axis
  int64_t n_real = 0;  // n^d
  int64_t n_cplx = 0;  // n^(d-1) * (n/2+1)
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

// Cached plan for a d-dimensional n^d real transform, d in {1,2,3}.
// Thread-safe; the planner runs under a lock, execution does not need one.
const FftPlan& fft_plan(int d, int n);

void fft_forward(const FftPlan& p, double* in, fftw_complex* out);
void fft_backward(const FftPlan& p, fftw_complex* in, double* out);

double* fft_alloc_real(int64_t n);
fftw_complex* fft_alloc_complex(int64_t n);
void fft_free(void* p);

// RAII pair of physical/spectral buffers for one transform geometry.
struct FftWorkspace {
  explicit FftWorkspace(const FftPlan& p);
  ~FftWorkspace();
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
};

// Squared wavenumber |k|^2 for each r2c mode index, torus of side length
// n*dx per axis.  Index order matches the FFTW r2c layout.
std::vector<double> mode_k2(int d, int n, double dx);

}  // namespace shelab
