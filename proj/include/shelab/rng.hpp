#pragma once
// Counter-based random numbers for reproducible parallel ensembles.
//
// Every draw is a pure function of (seed, replica, step, stream, cell index),
// so replicas can be computed on any number of threads, in any order, and the
// bits never change.  The generator is the 10-round Philox4x32 block cipher;
// gaussians come from Box-Muller applied to two 53-bit uniforms per block.

#include <cstdint>

namespace shelab {

struct Philox4 {
  uint32_t v[4];
};

// One 10-round Philox4x32 block: counter (c0,c1,c2,c3), key (k0,k1).
Philox4 philox4x32(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                   uint32_t k0, uint32_t k1);

// Fills out[0..n) with standard gaussians for the given (seed, replica, step,
// stream).  Cells 2j and 2j+1 are derived from counter block j; the layout is
// fixed, so the same arguments always reproduce the same bits on a given
// build.  n may be any non-negative count.
void fill_gaussian(double* out, int64_t n, uint64_t seed, uint32_t replica,
                   uint32_t step, uint32_t stream = 0);

// Single gaussian draw (scalar path), for SDE references and other
// one-at-a-time consumers.  Independent of fill_gaussian cells only when the
// stream id differs.
double gaussian_at(uint64_t seed, uint32_t replica, uint32_t step,
                   uint32_t stream);

// Single uniform in [0,1) from the same keying scheme.
double uniform_at(uint64_t seed, uint32_t replica, uint32_t step,
                  uint32_t stream);

}  // namespace shelab
