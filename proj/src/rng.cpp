#include "shelab/rng.hpp"

#include <cmath>

#if defined(__AVX512F__) && defined(SHELAB_HAVE_MVEC)
#include <immintrin.h>
#define SHELAB_RNG_AVX512 1
extern "C" {
__m512d _ZGVeN8v_log(__m512d);
__m512d _ZGVeN8v_sin(__m512d);
__m512d _ZGVeN8v_cos(__m512d);
}
#endif

namespace shelab {

namespace {

constexpr uint32_t kM0 = 0xD2511F53u;
constexpr uint32_t kM1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u;
constexpr uint32_t kW1 = 0xBB67AE85u;
constexpr double kTwoPi = 6.283185307179586476925287;

inline void philox_round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3,
                         uint32_t k0, uint32_t k1) {
  uint64_t p0 = uint64_t(kM0) * c0;
  uint64_t p1 = uint64_t(kM1) * c2;
  uint32_t n0 = uint32_t(p1 >> 32) ^ c1 ^ k0;
  uint32_t n1 = uint32_t(p1);
  uint32_t n2 = uint32_t(p0 >> 32) ^ c3 ^ k1;
  uint32_t n3 = uint32_t(p0);
  c0 = n0;
  c1 = n1;
  c2 = n2;
  c3 = n3;
}

// Maps a counter block to two uniforms: u1 in (0,1] (safe for log), u2 in [0,1).
inline void block_uniforms(uint32_t blk, uint32_t step, uint32_t rep,
                           uint32_t stream, uint32_t k0, uint32_t k1,
                           double* u1, double* u2) {
  Philox4 r = philox4x32(blk, step, rep, stream, k0, k1);
  uint64_t a = (uint64_t(r.v[0]) << 32) | r.v[1];
  uint64_t b = (uint64_t(r.v[2]) << 32) | r.v[3];
  *u1 = double((a >> 11) + 1) * 0x1.0p-53;
  *u2 = double(b >> 11) * 0x1.0p-53;
}

}  // namespace

Philox4 philox4x32(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                   uint32_t k0, uint32_t k1) {
  for (int r = 0; r < 10; ++r) {
    philox_round(c0, c1, c2, c3, k0, k1);
    k0 += kW0;
    k1 += kW1;
  }
  return {c0, c1, c2, c3};
}

#ifdef SHELAB_RNG_AVX512

namespace {

// Eight philox blocks at once; blocks are consecutive starting at blk0.
// Counter words are held in the low halves of 64-bit lanes so the 32x32->64
// multiplies map directly onto _mm512_mul_epu32.
inline void philox8(uint32_t blk0, uint32_t step, uint32_t rep, uint32_t stream,
                    uint32_t key0, uint32_t key1, uint64_t* outa,
                    uint64_t* outb) {
  const __m512i m0 = _mm512_set1_epi64(kM0);
  const __m512i m1 = _mm512_set1_epi64(kM1);
  const __m512i lo32 = _mm512_set1_epi64(0xffffffffull);
  __m512i c0 = _mm512_add_epi64(_mm512_set1_epi64(blk0),
                                _mm512_set_epi64(7, 6, 5, 4, 3, 2, 1, 0));
  __m512i c1 = _mm512_set1_epi64(step);
  __m512i c2 = _mm512_set1_epi64(rep);
  __m512i c3 = _mm512_set1_epi64(stream);
  uint32_t k0 = key0, k1 = key1;
  for (int r = 0; r < 10; ++r) {
    __m512i p0 = _mm512_mul_epu32(m0, c0);
    __m512i p1 = _mm512_mul_epu32(m1, c2);
    __m512i h0 = _mm512_srli_epi64(p0, 32);
    __m512i l0 = _mm512_and_si512(p0, lo32);
    __m512i h1 = _mm512_srli_epi64(p1, 32);
    __m512i l1 = _mm512_and_si512(p1, lo32);
    __m512i vk0 = _mm512_set1_epi64(k0);
    __m512i vk1 = _mm512_set1_epi64(k1);
    c0 = _mm512_xor_si512(_mm512_xor_si512(h1, c1), vk0);
    c1 = l1;
    c2 = _mm512_xor_si512(_mm512_xor_si512(h0, c3), vk1);
    c3 = l0;
    k0 += kW0;
    k1 += kW1;
  }
  // Pack (c0<<32)|c1 and (c2<<32)|c3 per lane.
  __m512i a = _mm512_or_si512(_mm512_slli_epi64(c0, 32), c1);
  __m512i b = _mm512_or_si512(_mm512_slli_epi64(c2, 32), c3);
  _mm512_storeu_si512(outa, a);
  _mm512_storeu_si512(outb, b);
}

// 16 gaussians (8 counter blocks) starting at cell index 2*blk0.
inline void gauss16(double* z, uint32_t blk0, uint32_t step, uint32_t rep,
                    uint32_t stream, uint32_t k0, uint32_t k1) {
  alignas(64) uint64_t a[8], b[8];
  alignas(64) double u1[8], u2[8];
  philox8(blk0, step, rep, stream, k0, k1, a, b);
  for (int l = 0; l < 8; ++l) {
    u1[l] = double((a[l] >> 11) + 1) * 0x1.0p-53;
    u2[l] = double(b[l] >> 11) * 0x1.0p-53;
  }
  __m512d vu1 = _mm512_load_pd(u1);
  __m512d vu2 = _mm512_load_pd(u2);
  __m512d radius = _mm512_sqrt_pd(
      _mm512_mul_pd(_mm512_set1_pd(-2.0), _ZGVeN8v_log(vu1)));
  __m512d theta = _mm512_mul_pd(_mm512_set1_pd(kTwoPi), vu2);
  alignas(64) double zc[8], zs[8];
  _mm512_store_pd(zc, _mm512_mul_pd(radius, _ZGVeN8v_cos(theta)));
  _mm512_store_pd(zs, _mm512_mul_pd(radius, _ZGVeN8v_sin(theta)));
  for (int l = 0; l < 8; ++l) {
    z[2 * l] = zc[l];
    z[2 * l + 1] = zs[l];
  }
}

}  // namespace

void fill_gaussian(double* out, int64_t n, uint64_t seed, uint32_t replica,
                   uint32_t step, uint32_t stream) {
  const uint32_t k0 = uint32_t(seed);
  const uint32_t k1 = uint32_t(seed >> 32);
  int64_t i = 0;
  for (; i + 16 <= n; i += 16)
    gauss16(out + i, uint32_t(i / 2), step, replica, stream, k0, k1);
  if (i < n) {
    alignas(64) double tail[16];
    gauss16(tail, uint32_t(i / 2), step, replica, stream, k0, k1);
    for (int64_t j = i; j < n; ++j) out[j] = tail[j - i];
  }
}

#else  // portable scalar path

void fill_gaussian(double* out, int64_t n, uint64_t seed, uint32_t replica,
                   uint32_t step, uint32_t stream) {
  const uint32_t k0 = uint32_t(seed);
  const uint32_t k1 = uint32_t(seed >> 32);
  for (int64_t i = 0; i < n; i += 2) {
    double u1, u2;
    block_uniforms(uint32_t(i / 2), step, replica, stream, k0, k1, &u1, &u2);
    double radius = std::sqrt(-2.0 * std::log(u1));
    double z0 = radius * std::cos(kTwoPi * u2);
    out[i] = z0;
    if (i + 1 < n) out[i + 1] = radius * std::sin(kTwoPi * u2);
  }
}

#endif

double gaussian_at(uint64_t seed, uint32_t replica, uint32_t step,
                   uint32_t stream) {
  double u1, u2;
  block_uniforms(0, step, replica, stream, uint32_t(seed), uint32_t(seed >> 32),
                 &u1, &u2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double uniform_at(uint64_t seed, uint32_t replica, uint32_t step,
                  uint32_t stream) {
  double u1, u2;
  block_uniforms(0, step, replica, stream, uint32_t(seed), uint32_t(seed >> 32),
                 &u1, &u2);
  return u2;
}

}  // namespace shelab
