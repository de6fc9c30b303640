#pragma once
// Discrete synthesis of the driving noise on a periodic grid.
//
// A slice holds one time increment of the noise, cell-averaged and divided by
// dt, so its covariance approximates f(x-y)/dt where f is the spatial
// correlation.  Space-time white noise is sampled directly per cell; colored
// noise is produced either by circular convolution with a grid-sampled filter
// h (so the correlation is h * h~) or by multiplying the white spectrum by
// sqrt(f^) for families with a closed-form spectral density.  Every slice is
// a pure function of (seed, replica, step), which makes ensembles
// reproducible under any scheduling.

#include <cstdint>
#include <string>
#include <vector>

#include "shelab/kernels.hpp"

namespace shelab {

struct Grid {
  int d = 1;        // spatial dimension, 1..3
  int n_cells = 8;  // cells per axis, power of two, >= 8
  double dx = 1.0;  // cell width
  double dt = 1.0;  // time step carried alongside for noise scaling

  // Validates and constructs; throws std::invalid_argument on a bad shape.
  static Grid make(int d, int n_cells, double dx, double dt);

  double length() const { return n_cells * dx; }
  int64_t total_cells() const;
};

struct NoiseSlice {
  Grid grid;
  std::vector<double> values;  // row-major over cells, n_cells^d entries
  uint64_t seed = 0;           // seed path: the slice is a pure function of
  uint32_t replica = 0;        // (seed, replica, step)
  uint32_t step = 0;
  std::vector<std::string> warnings;  // provenance notes (torus-size checks)
};

// Independent centered gaussians per cell with variance 1/(dt*dx^d): the
// cell-average discretization of space-time white noise.
NoiseSlice sample_white(const Grid& grid, uint64_t seed, uint32_t replica,
                        uint32_t step);

// Spatially constant slice with variance level/dt, the discretization of a
// constant correlation f = level (a pure spectral atom): one shared gaussian
// per (replica, step) drawn from a stream separate from sample_white's cells.
NoiseSlice sample_constant(const Grid& grid, double level, uint64_t seed,
                           uint32_t replica, uint32_t step);

// Circular convolution of a white slice with the grid-sampled filter h, via
// the fast transform; the result's covariance approximates (h * h~) = f.  In
// d = 1 every cell takes the exact average of h over the cell (closed forms
// for both filter families); in d >= 2 cells sample h at the min-image cell
// center except the origin cell, which takes the exact average of h over the
// ball of the cell's volume.  If the torus is shorter than four times the
// radius where |h| has decayed below 1e-6, a warning is recorded on the
// returned slice.
NoiseSlice color_by_h(const NoiseSlice& white, const KernelSpec& h);

// Spectral synthesis for correlation families with a closed-form nonnegative
// spectral density (WhiteNoise, RieszF, ExpDecayF, CauchyF): multiplies the
// white spectrum by sqrt(f^(k)) on the discrete frequency lattice and
// transforms back, so the covariance approaches the periodized f.  A
// divergent density at k = 0 (RieszF) drops the zero mode, which subtracts
// the torus mean.  WhiteNoise passes the slice through unchanged.  Other
// families throw std::invalid_argument.
NoiseSlice color_by_spectrum(const NoiseSlice& white, const KernelSpec& f);

struct CovarianceCurve {
  std::vector<int> lag;            // lag in cells along one axis
  std::vector<double> covariance;  // cross-replica mean of the lag product
  std::vector<double> stderr_;     // standard error across replicas
  double dx = 0;                   // physical lag = lag * dx
};

// Covariance of slice values per single-axis lag (the contiguous axis;
// the correlation is isotropic, so the choice carries no information),
// averaged over all base cells
// (stationarity) and replicas; the standard error is across replicas.  The
// noise is centered by construction, so no mean is subtracted and the
// estimator is unbiased.  Requires at least 100 slices on identical grids.
CovarianceCurve empirical_covariance(const std::vector<NoiseSlice>& slices,
                                     int max_lag);

// Raw binary dump: a 32-byte header (8-byte magic "SHELAB01", int32 d, int32
// n_cells, double dx, double dt, little-endian) followed by the cell values
// as row-major 64-bit floats.  The seed path and warnings are not stored.
void dump_slice(const NoiseSlice& slice, const std::string& path);
NoiseSlice load_slice(const std::string& path);

}  // namespace shelab
