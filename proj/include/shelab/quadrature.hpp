#pragma once
// Adaptive 1-d quadrature: Gauss-Kronrod 7/15 with worst-interval bisection.
//
// The Kronrod nodes are interior, so integrable endpoint singularities are
// tolerated as long as they sit at interval endpoints; quad_pts/quad_sing0
// exist to put them there.  Improper ranges are mapped to [0,1) with the
// rational stretch x = a + t/(1-t).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace shelab {

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int max_intervals = 4000;
};

struct QuadResult {
  double value = 0;
  double error = 0;
  bool ok = false;
  int intervals = 0;
  operator double() const { return value; }
};

namespace quad_detail {

// Kronrod abscissae on [0,1] side of [-1,1]; even entries extend Gauss-7.
inline constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kWg[4] = {0.129484966168870, 0.279705391489277,
                                  0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double* val, double* err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double resk = kWgk[7] * fc, resg = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    double x = h * kXgk[j];
    double fsum = f(c - x) + f(c + x);
    resk += kWgk[j] * fsum;
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  *val = resk * h;
  *err = std::abs((resk - resg) * h);
}

struct Interval {
  double a, b, val, err;
  bool operator<(const Interval& o) const { return err < o.err; }
};

}  // namespace quad_detail

template <class F>
QuadResult quad(const F& f, double a, double b, QuadOptions opt = {}) {
  using namespace quad_detail;
  QuadResult res;
  if (!(a < b)) {
    res.ok = true;
    return res;
  }
  std::vector<Interval> heap;
  Interval w;
  w.a = a;
  w.b = b;
  gk15(f, a, b, &w.val, &w.err);
  heap.push_back(w);
  double total = w.val, toterr = w.err;
  while ((int)heap.size() < opt.max_intervals) {
    if (toterr <= opt.abs_tol || toterr <= opt.rel_tol * std::abs(total)) break;
    std::pop_heap(heap.begin(), heap.end());
    Interval worst = heap.back();
    heap.pop_back();
    double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {  // cannot split further
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    Interval left, right;
    left.a = worst.a;
    left.b = mid;
    right.a = mid;
    right.b = worst.b;
    gk15(f, left.a, left.b, &left.val, &left.err);
    gk15(f, right.a, right.b, &right.val, &right.err);
    if (!std::isfinite(left.val) || !std::isfinite(right.val)) {
      // Refining into a non-finite region cannot converge; keep the parent.
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    total += left.val + right.val - worst.val;
    toterr += left.err + right.err - worst.err;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }
  // Recompute sums in heap order for a stable result.
  total = 0;
  toterr = 0;
  for (const auto& iv : heap) {
    total += iv.val;
    toterr += iv.err;
  }
  res.value = total;
  res.error = toterr;
  res.intervals = (int)heap.size();
  res.ok = toterr <= opt.abs_tol || toterr <= opt.rel_tol * std::abs(total) ||
           std::abs(total) < opt.abs_tol;
  return res;
}

// Integrate with forced subdivision at the given interior points (e.g. kinks
// or integrable singularities of f).
template <class F>
QuadResult quad_pts(const F& f, double a, double b, std::vector<double> pts,
                    QuadOptions opt = {}) {
  pts.push_back(a);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  QuadResult res;
  res.ok = true;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double lo = std::max(a, pts[i]), hi = std::min(b, pts[i + 1]);
    if (!(lo < hi)) continue;
    QuadResult part = quad(f, lo, hi, opt);
    res.value += part.value;
    res.error += part.error;
    res.intervals += part.intervals;
    res.ok = res.ok && part.ok;
  }
  return res;
}

// [a, +inf) via x = a + t/(1-t).
template <class F>
QuadResult quad_upper_inf(const F& f, double a, QuadOptions opt = {}) {
  auto g = [&](double t) {
    double om = 1.0 - t;
    double x = a + t / om;
    return f(x) / (om * om);
  };
  return quad(g, 0.0, 1.0, opt);
}

// Whole line as two half lines split at zero.
template <class F>
QuadResult quad_line(const F& f, QuadOptions opt = {}) {
  QuadResult up = quad_upper_inf(f, 0.0, opt);
  QuadResult down = quad_upper_inf([&](double x) { return f(-x); }, 0.0, opt);
  QuadResult res;
  res.value = up.value + down.value;
  res.error = up.error + down.error;
  res.intervals = up.intervals + down.intervals;
  res.ok = up.ok && down.ok;
  return res;
}

/// (0, b] with an integrable singularity at 0: geometric subdivision toward
// the origin.  Pure power singularities make the dyadic slices a geometric
// sequence, so once the slice ratio stabilizes the remaining tail is summed
// in closed form instead of being walked down level by level.
template <class F>
QuadResult quad_sing0(const F& f, double b, QuadOptions opt = {}) {
  QuadResult res;
  double hi = b;
  double prev = 0, prev_ratio = -1;
  bool have_prev = false;
  int growing = 0;
  for (int k = 0; k < 2000; ++k) {
    double lo = hi * 0.5;
    QuadResult part = quad(f, lo, hi, opt);
    if (!std::isfinite(part.value)) {
      res.value = part.value;
      res.ok = false;
      return res;
    }
    // Steadily growing slices mean the singularity is not integrable; bail
    // out instead of walking 2000 levels into underflow garbage.
    growing = have_prev && std::abs(part.value) >
                               1.25 * std::abs(prev) + opt.abs_tol
                  ? growing + 1
                  : 0;
    if (growing >= 6 && k > 10) {
      res.value += part.value;
      res.ok = false;
      return res;
    }
    res.value += part.value;
    res.error += part.error;
    res.intervals += part.intervals;
    double thresh = 0.25 * (opt.abs_tol + opt.rel_tol * std::abs(res.value));
    if (k > 8 && std::abs(part.value) <= thresh) {
      res.ok = true;
      return res;
    }
    if (have_prev && prev != 0) {
      double ratio = part.value / prev;
      if (k > 4 && prev_ratio > 0 && ratio > 0 && ratio < 0.995) {
        // Geometric tail: slices decay by a stable factor.  The ratio drift
        // bounds the extrapolation uncertainty; accept once it is inside the
        // requested tolerance.
        double om = 1.0 - ratio;
        double drift = std::abs(ratio - prev_ratio);
        double unc = std::abs(part.value) * drift / (om * om) +
                     part.error / om;
        if (unc <= thresh) {
          res.value += part.value * ratio / om;
          res.error += unc;
          res.ok = true;
          return res;
        }
      }
      prev_ratio = ratio;
    }
    prev = part.value;
    have_prev = true;
    hi = lo;
  }
  res.ok = false;
  return res;
}

}  // namespace shelab
