#include "shelab/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace shelab {

namespace {

std::mutex g_planner_mutex;
std::map<std::pair<int, int>, FftPlan> g_plans;

int64_t ipow(int64_t b, int e) {
  int64_t r = 1;
  while (e--) r *= b;
  return r;
}

}  // namespace

const FftPlan& fft_plan(int d, int n) {
  if (d < 1 || d > 3) throw std::invalid_argument("fft_plan: d must be 1..3");
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  auto it = g_plans.find({d, n});
  if (it != g_plans.end()) return it->second;

  FftPlan p;
  p.d = d;
  p.n = n;
  p.n_real = ipow(n, d);
  p.n_cplx = ipow(n, d - 1) * (n / 2 + 1);
  double* re = fftw_alloc_real(p.n_real);
  fftw_complex* sp = fftw_alloc_complex(p.n_cplx);
  int dims[3] = {n, n, n};
  p.fwd = fftw_plan_dft_r2c(d, dims, re, sp, FFTW_ESTIMATE);
  p.bwd = fftw_plan_dft_c2r(d, dims, sp, re, FFTW_ESTIMATE);
  fftw_free(re);
  fftw_free(sp);
  if (!p.fwd || !p.bwd) throw std::runtime_error("fft_plan: planner failed");
  return g_plans.emplace(std::make_pair(d, n), p).first->second;
}

void fft_forward(const FftPlan& p, double* in, fftw_complex* out) {
  fftw_execute_dft_r2c(p.fwd, in, out);
}

void fft_backward(const FftPlan& p, fftw_complex* in, double* out) {
  fftw_execute_dft_c2r(p.bwd, in, out);
}

double* fft_alloc_real(int64_t n) { return fftw_alloc_real(n); }
fftw_complex* fft_alloc_complex(int64_t n) { return fftw_alloc_complex(n); }
void fft_free(void* p) { fftw_free(p); }

FftWorkspace::FftWorkspace(const FftPlan& p) {
  real = fftw_alloc_real(p.n_real);
  cplx = fftw_alloc_complex(p.n_cplx);
}

FftWorkspace::~FftWorkspace() {
  fftw_free(real);
  fftw_free(cplx);
}

std::vector<double> mode_k2(int d, int n, double dx) {
  const double base = 2.0 * M_PI / (n * dx);
  const int nh = n / 2 + 1;
  std::vector<double> k2;
  k2.reserve(ipow(n, d - 1) * nh);
  auto axis_k = [&](int j) {
    int s = (j > n / 2) ? j - n : j;
    return base * s;
  };
  if (d == 1) {
    for (int j = 0; j < nh; ++j) {
      double k = base * j;
      k2.push_back(k * k);
    }
  } else if (d == 2) {
    for (int j0 = 0; j0 < n; ++j0) {
      double k0 = axis_k(j0);
      for (int j1 = 0; j1 < nh; ++j1) {
        double k1 = base * j1;
        k2.push_back(k0 * k0 + k1 * k1);
      }
    }
  } else {
    for (int j0 = 0; j0 < n; ++j0) {
      double k0 = axis_k(j0);
      for (int j1 = 0; j1 < n; ++j1) {
        double k1 = axis_k(j1);
        for (int j2 = 0; j2 < nh; ++j2) {
          double k2v = base * j2;
          k2.push_back(k0 * k0 + k1 * k1 + k2v * k2v);
        }
      }
    }
  }
  return k2;
}

}  // namespace shelab
