#include "shelab/noise.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>

#include "shelab/fft.hpp"
#include "shelab/rng.hpp"

namespace shelab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

double ball_volume(int d, double r) {
  switch (d) {
    case 1: return 2 * r;
    case 2: return M_PI * r * r;
    default: return 4.0 / 3.0 * M_PI * r * r * r;
  }
}

// Int_a^b r^m h(r) dr in closed form, for 0 <= a <= b.  The power filter
// h(r) = r^{-(d+alpha)/2} inside the unit ball, r^{-(d+beta)/2} outside, is
// integrated piecewise across its exponent break at r = 1; a sampled filter
// is integrated cell by cell.
double filter_radial_integral(const KernelSpec& h, int m, double a, double b) {
  if (!(b > a)) return 0.0;
  if (h.family == KernelFamily::PowerH) {
    auto piece = [&](double e, double lo, double hi) {
      if (!(hi > lo)) return 0.0;
      if (e == -1.0) return std::log(hi / lo);
      return (std::pow(hi, e + 1) - std::pow(lo, e + 1)) / (e + 1);
    };
    return piece(m - 0.5 * (h.d + h.alpha), a, std::min(b, 1.0)) +
           piece(m - 0.5 * (h.d + h.beta), std::max(a, 1.0), b);
  }
  // TableH: piecewise constant on cells [j*dr, (j+1)*dr).
  double total = 0;
  const double dr = h.sample_dr;
  const size_t j0 = static_cast<size_t>(a / dr);
  for (size_t j = j0; j < h.samples.size(); ++j) {
    const double lo = std::max(a, j * dr);
    const double hi = std::min(b, (j + 1) * dr);
    if (!(hi > lo)) {
      if (j * dr >= b) break;
      continue;
    }
    total += h.samples[j] *
             (std::pow(hi, m + 1) - std::pow(lo, m + 1)) / (m + 1);
  }
  return total;
}

// Radius beyond which |h| stays below 1e-6: the tail-exponent solution for
// the power family, the support of the last resolvable cell for a table.
double filter_decay_radius(const KernelSpec& h) {
  if (h.family == KernelFamily::PowerH)
    return std::max(1.0, std::pow(10.0, 12.0 / (h.d + h.beta)));
  double r = 0;
  for (size_t j = 0; j < h.samples.size(); ++j)
    if (std::abs(h.samples[j]) >= 1e-6) r = (j + 1) * h.sample_dr;
  return r;
}

// The grid-sampled filter: exact cell averages in d = 1, min-image cell
// centers in d >= 2 with the origin cell replaced by the exact average over
// the ball of equal volume (the integral the stochastic convolution sees).
std::vector<double> sample_filter(const Grid& g, const KernelSpec& h) {
  const int n = g.n_cells;
  const double dx = g.dx;
  std::vector<double> out(static_cast<size_t>(g.total_cells()));
  if (g.d == 1) {
    for (int j = 0; j < n; ++j) {
      const double x = std::abs((j <= n / 2 ? j : j - n) * dx);
      if (j == 0)
        out[j] = 2.0 / dx * filter_radial_integral(h, 0, 0, dx / 2);
      else if (j == n / 2)  // min-image distance folds at the far point
        out[j] = 2.0 / dx * filter_radial_integral(h, 0, x - dx / 2, x);
      else
        out[j] = filter_radial_integral(h, 0, x - dx / 2, x + dx / 2) / dx;
    }
    return out;
  }
  const double rho =
      std::pow(std::pow(dx, g.d) / ball_volume(g.d, 1.0), 1.0 / g.d);
  out[0] = g.d / std::pow(rho, g.d) *
           filter_radial_integral(h, g.d - 1, 0, rho);
  const int nz = g.d == 3 ? n : 1;
  const int ny = g.d >= 2 ? n : 1;
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        if (ix == 0 && iy == 0 && iz == 0) continue;
        const double cx = (ix <= n / 2 ? ix : ix - n) * dx;
        const double cy = (iy <= n / 2 ? iy : iy - n) * dx;
        const double cz = (iz <= n / 2 ? iz : iz - n) * dx;
        const size_t at =
            (static_cast<size_t>(iz) * ny + iy) * n + ix;
        out[at] = eval_filter(h, std::sqrt(cx * cx + cy * cy + cz * cz));
      }
  return out;
}

}  // namespace

Grid Grid::make(int d, int n_cells, double dx, double dt) {
  require(d >= 1 && d <= 3, "Grid: d must be 1, 2, or 3");
  require(n_cells >= 8 && is_pow2(n_cells),
          "Grid: n_cells must be a power of two >= 8");
  require(dx > 0, "Grid: dx must be > 0");
  require(dt > 0, "Grid: dt must be > 0");
  Grid g;
  g.d = d;
  g.n_cells = n_cells;
  g.dx = dx;
  g.dt = dt;
  return g;
}

int64_t Grid::total_cells() const {
  int64_t t = 1;
  for (int i = 0; i < d; ++i) t *= n_cells;
  return t;
}

NoiseSlice sample_white(const Grid& grid, uint64_t seed, uint32_t replica,
                        uint32_t step) {
  NoiseSlice s;
  s.grid = grid;
  s.seed = seed;
  s.replica = replica;
  s.step = step;
  s.values.resize(static_cast<size_t>(grid.total_cells()));
  fill_gaussian(s.values.data(), grid.total_cells(), seed, replica, step);
  const double scale = 1.0 / std::sqrt(grid.dt * std::pow(grid.dx, grid.d));
  for (double& v : s.values) v *= scale;
  return s;
}

NoiseSlice sample_constant(const Grid& grid, double level, uint64_t seed,
                           uint32_t replica, uint32_t step) {
  require(level >= 0, "sample_constant: level must be >= 0");
  NoiseSlice s;
  s.grid = grid;
  s.seed = seed;
  s.replica = replica;
  s.step = step;
  const double v = std::sqrt(level / grid.dt) *
                   gaussian_at(seed, replica, step, /*stream=*/1);
  s.values.assign(static_cast<size_t>(grid.total_cells()), v);
  return s;
}

NoiseSlice color_by_h(const NoiseSlice& white, const KernelSpec& h) {
  require(h.role() == KernelRole::Filter,
          "color_by_h: spec must describe a filter");
  require(h.d == white.grid.d, "color_by_h: dimension mismatch");
  require(white.values.size() ==
              static_cast<size_t>(white.grid.total_cells()),
          "color_by_h: malformed slice");
  if (h.family == KernelFamily::PowerH)
    require(h.alpha < h.d,
            "color_by_h: filter is not locally integrable (alpha >= d)");

  const Grid& g = white.grid;
  NoiseSlice out = white;
  const FftPlan& plan = fft_plan(g.d, g.n_cells);
  FftWorkspace wh(plan), ww(plan);
  std::vector<double> h_grid = sample_filter(g, h);
  std::memcpy(wh.real, h_grid.data(), sizeof(double) * h_grid.size());
  std::memcpy(ww.real, white.values.data(),
              sizeof(double) * white.values.size());
  fft_forward(plan, wh.real, wh.cplx);
  fft_forward(plan, ww.real, ww.cplx);
  const double scale = std::pow(g.dx, g.d) / plan.n_real;
  for (int64_t m = 0; m < plan.n_cplx; ++m) {
    const double hr = wh.cplx[m][0], hi = wh.cplx[m][1];
    const double wr = ww.cplx[m][0], wi = ww.cplx[m][1];
    ww.cplx[m][0] = (hr * wr - hi * wi) * scale;
    ww.cplx[m][1] = (hr * wi + hi * wr) * scale;
  }
  fft_backward(plan, ww.cplx, ww.real);
  std::memcpy(out.values.data(), ww.real,
              sizeof(double) * out.values.size());

  const double reach = 4 * filter_decay_radius(h);
  if (reach > g.length()) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "torus length %g is below 4x the filter decay radius %g; "
                  "periodization bias may exceed tolerances",
                  g.length(), reach / 4);
    out.warnings.emplace_back(buf);
  }
  return out;
}

NoiseSlice color_by_spectrum(const NoiseSlice& white, const KernelSpec& f) {
  require(white.values.size() ==
              static_cast<size_t>(white.grid.total_cells()),
          "color_by_spectrum: malformed slice");
  require(f.d == white.grid.d, "color_by_spectrum: dimension mismatch");
  if (f.family == KernelFamily::WhiteNoise) return white;
  require(f.family == KernelFamily::RieszF ||
              f.family == KernelFamily::ExpDecayF ||
              f.family == KernelFamily::CauchyF,
          "color_by_spectrum: family has no closed-form spectral density");

  const Grid& g = white.grid;
  NoiseSlice out = white;
  const FftPlan& plan = fft_plan(g.d, g.n_cells);
  FftWorkspace ws(plan);
  std::memcpy(ws.real, white.values.data(),
              sizeof(double) * white.values.size());
  fft_forward(plan, ws.real, ws.cplx);
  const std::vector<double> k2 = mode_k2(g.d, g.n_cells, g.dx);
  const bool atom_free_origin = f.family == KernelFamily::RieszF;
  for (int64_t m = 0; m < plan.n_cplx; ++m) {
    double w;
    if (k2[m] == 0.0)
      w = atom_free_origin ? 0.0 : std::sqrt(spectral_density(f, 0.0));
    else
      w = std::sqrt(spectral_density(f, std::sqrt(k2[m])));
    ws.cplx[m][0] *= w / plan.n_real;
    ws.cplx[m][1] *= w / plan.n_real;
  }
  fft_backward(plan, ws.cplx, ws.real);
  std::memcpy(out.values.data(), ws.real,
              sizeof(double) * out.values.size());
  return out;
}

CovarianceCurve empirical_covariance(const std::vector<NoiseSlice>& slices,
                                     int max_lag) {
  require(slices.size() >= 100,
          "empirical_covariance: need at least 100 slices");
  const Grid& g = slices.front().grid;
  require(max_lag >= 0 && max_lag < g.n_cells,
          "empirical_covariance: max_lag must lie in [0, n_cells)");
  for (const NoiseSlice& s : slices) {
    require(s.grid.d == g.d && s.grid.n_cells == g.n_cells &&
                s.grid.dx == g.dx && s.grid.dt == g.dt,
            "empirical_covariance: slices on different grids");
    require(s.values.size() == static_cast<size_t>(g.total_cells()),
            "empirical_covariance: malformed slice");
  }

  const int n = g.n_cells;
  const int64_t cells = g.total_cells();
  const int64_t rows = cells / n;  // contiguous runs along the last axis
  const size_t R = slices.size();
  const int L = max_lag + 1;
  std::vector<double> sum(L, 0.0), sumsq(L, 0.0);
  for (const NoiseSlice& s : slices) {
    for (int l = 0; l < L; ++l) {
      double acc = 0;
      for (int64_t row = 0; row < rows; ++row) {
        const double* v = s.values.data() + row * n;
        for (int j = 0; j < n; ++j) acc += v[j] * v[(j + l) & (n - 1)];
      }
      const double m = acc / static_cast<double>(cells);
      sum[l] += m;
      sumsq[l] += m * m;
    }
  }
  CovarianceCurve c;
  c.dx = g.dx;
  for (int l = 0; l < L; ++l) {
    const double mean = sum[l] / R;
    const double var = std::max(0.0, sumsq[l] / R - mean * mean);
    c.lag.push_back(l);
    c.covariance.push_back(mean);
    c.stderr_.push_back(std::sqrt(var / R));
  }
  return c;
}

namespace {
constexpr char kMagic[8] = {'S', 'H', 'E', 'L', 'A', 'B', '0', '1'};
}

void dump_slice(const NoiseSlice& slice, const std::string& path) {
  require(slice.values.size() ==
              static_cast<size_t>(slice.grid.total_cells()),
          "dump_slice: malformed slice");
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("dump_slice: cannot open " + path);
  const int32_t d = slice.grid.d, n = slice.grid.n_cells;
  bool ok = std::fwrite(kMagic, 1, 8, fp) == 8 &&
            std::fwrite(&d, sizeof d, 1, fp) == 1 &&
            std::fwrite(&n, sizeof n, 1, fp) == 1 &&
            std::fwrite(&slice.grid.dx, sizeof(double), 1, fp) == 1 &&
            std::fwrite(&slice.grid.dt, sizeof(double), 1, fp) == 1 &&
            std::fwrite(slice.values.data(), sizeof(double),
                        slice.values.size(), fp) == slice.values.size();
  ok = std::fclose(fp) == 0 && ok;
  if (!ok) throw std::runtime_error("dump_slice: short write to " + path);
}

NoiseSlice load_slice(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("load_slice: cannot open " + path);
  char magic[8];
  int32_t d = 0, n = 0;
  double dx = 0, dt = 0;
  NoiseSlice s;
  try {
    if (std::fread(magic, 1, 8, fp) != 8 ||
        std::memcmp(magic, kMagic, 8) != 0)
      throw std::runtime_error("load_slice: bad magic in " + path);
    if (std::fread(&d, sizeof d, 1, fp) != 1 ||
        std::fread(&n, sizeof n, 1, fp) != 1 ||
        std::fread(&dx, sizeof dx, 1, fp) != 1 ||
        std::fread(&dt, sizeof dt, 1, fp) != 1)
      throw std::runtime_error("load_slice: truncated header in " + path);
    s.grid = Grid::make(d, n, dx, dt);
    s.values.resize(static_cast<size_t>(s.grid.total_cells()));
    if (std::fread(s.values.data(), sizeof(double), s.values.size(), fp) !=
        s.values.size())
      throw std::runtime_error("load_slice: truncated data in " + path);
    if (std::fgetc(fp) != EOF)
      throw std::runtime_error("load_slice: trailing bytes in " + path);
  } catch (...) {
    std::fclose(fp);
    throw;
  }
  std::fclose(fp);
  return s;
}

}  // namespace shelab
