// AVX2 variants of the compute kernels. Each routine mirrors the scalar
// reference exactly: same accumulation order per output element, no FMA,
// so results are bit-identical (kernels_test asserts this).

#include "ccnn/kernels.hpp"

#if defined(CCNN_BUILD_AVX2) && (defined(__x86_64__) || defined(__i386__))

#include <immintrin.h>

#include <stdexcept>

namespace ccnn::kernels {
namespace {

constexpr int kMaxChannels = 64;

void axpy_avx2(double* y, double a, const double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t n4 = n / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (std::size_t i = n4; i < n; ++i) y[i] += a * x[i];
}

inline double reduce_blocked(__m256d v) {
    // lanes hold the four partial sums s0..s3; combine as (s0+s1)+(s2+s3)
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s01 = _mm_hadd_pd(lo, lo);
    __m128d s23 = _mm_hadd_pd(hi, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s01, s23));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t n4 = n / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double total = reduce_blocked(acc);
    for (std::size_t i = n4; i < n; ++i) total += a[i] * b[i];
    return total;
}

void relu_avx2(double* out, const double* z, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t n4 = n / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vz = _mm256_loadu_pd(z + i);
        __m256d mask = _mm256_cmp_pd(vz, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(vz, mask));
    }
    for (std::size_t i = n4; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_grad_avx2(double* dz, const double* z, const double* da, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t n4 = n / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vz = _mm256_loadu_pd(z + i);
        __m256d vd = _mm256_loadu_pd(da + i);
        __m256d mask = _mm256_cmp_pd(vz, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dz + i, _mm256_and_pd(vd, mask));
    }
    for (std::size_t i = n4; i < n; ++i) dz[i] = z[i] > 0.0 ? da[i] : 0.0;
}

void conv3d_forward_avx2(const Conv3dShape& s, const double* in, const double* w,
                         const double* bias, double* out) {
    if (s.out_c > kMaxChannels)
        throw std::invalid_argument("conv3d: out_c exceeds kernel channel cap");
    const int fb4 = s.out_c / 4 * 4;
    for (int a = 0; a < s.e1; ++a)
        for (int b = 0; b < s.e2; ++b)
            for (int c = 0; c < s.e3; ++c) {
                double* op = out + (std::size_t(a) * s.e2 * s.e3 + std::size_t(b) * s.e3 + c) * s.out_c;
                for (int fb = 0; fb < fb4; fb += 4) {
                    __m256d acc = _mm256_loadu_pd(bias + fb);
                    for (int i = 0; i < s.k1; ++i) {
                        int ia = a + i - s.o1;
                        if (ia < 0 || ia >= s.d1) continue;
                        for (int j = 0; j < s.k2; ++j) {
                            int jb = b + j - s.o2;
                            if (jb < 0 || jb >= s.d2) continue;
                            for (int h = 0; h < s.k3; ++h) {
                                int hc = c + h - s.o3;
                                if (hc < 0 || hc >= s.d3) continue;
                                const double* ip =
                                    in + (std::size_t(ia) * s.d2 * s.d3 + std::size_t(jb) * s.d3 + hc) *
                                             s.in_c;
                                const double* wp =
                                    w + (std::size_t(i) * s.k2 * s.k3 + std::size_t(j) * s.k3 + h) *
                                            s.in_c * s.out_c +
                                    fb;
                                for (int ci = 0; ci < s.in_c; ++ci) {
                                    __m256d vv = _mm256_set1_pd(ip[ci]);
                                    __m256d vw = _mm256_loadu_pd(wp + std::size_t(ci) * s.out_c);
                                    acc = _mm256_add_pd(acc, _mm256_mul_pd(vv, vw));
                                }
                            }
                        }
                    }
                    _mm256_storeu_pd(op + fb, acc);
                }
                for (int f = fb4; f < s.out_c; ++f) {
                    double acc = bias[f];
                    for (int i = 0; i < s.k1; ++i) {
                        int ia = a + i - s.o1;
                        if (ia < 0 || ia >= s.d1) continue;
                        for (int j = 0; j < s.k2; ++j) {
                            int jb = b + j - s.o2;
                            if (jb < 0 || jb >= s.d2) continue;
                            for (int h = 0; h < s.k3; ++h) {
                                int hc = c + h - s.o3;
                                if (hc < 0 || hc >= s.d3) continue;
                                const double* ip =
                                    in + (std::size_t(ia) * s.d2 * s.d3 + std::size_t(jb) * s.d3 + hc) *
                                             s.in_c;
                                const double* wp =
                                    w + (std::size_t(i) * s.k2 * s.k3 + std::size_t(j) * s.k3 + h) *
                                            s.in_c * s.out_c;
                                for (int ci = 0; ci < s.in_c; ++ci)
                                    acc += ip[ci] * wp[std::size_t(ci) * s.out_c + f];
                            }
                        }
                    }
                    op[f] = acc;
                }
            }
}

void conv3d_grad_kernels_avx2(const Conv3dShape& s, const double* in,
                              const double* dz, double* dw, double* db) {
    if (s.out_c > kMaxChannels)
        throw std::invalid_argument("conv3d: out_c exceeds kernel channel cap");
    const int fb4 = s.out_c / 4 * 4;
    for (int i = 0; i < s.k1; ++i)
        for (int j = 0; j < s.k2; ++j)
            for (int h = 0; h < s.k3; ++h)
                for (int ci = 0; ci < s.in_c; ++ci) {
                    double* wp = dw + (std::size_t(i) * s.k2 * s.k3 + std::size_t(j) * s.k3 + h) *
                                          s.in_c * s.out_c +
                                 std::size_t(ci) * s.out_c;
                    for (int fb = 0; fb < fb4; fb += 4) {
                        __m256d acc = _mm256_setzero_pd();
                        for (int a = 0; a < s.e1; ++a) {
                            int ia = a + i - s.o1;
                            if (ia < 0 || ia >= s.d1) continue;
                            for (int b = 0; b < s.e2; ++b) {
                                int jb = b + j - s.o2;
                                if (jb < 0 || jb >= s.d2) continue;
                                for (int c = 0; c < s.e3; ++c) {
                                    int hc = c + h - s.o3;
                                    if (hc < 0 || hc >= s.d3) continue;
                                    __m256d vv = _mm256_set1_pd(
                                        in[(std::size_t(ia) * s.d2 * s.d3 + std::size_t(jb) * s.d3 + hc) *
                                               s.in_c +
                                           ci]);
                                    const double* zp = dz + (std::size_t(a) * s.e2 * s.e3 +
                                                             std::size_t(b) * s.e3 + c) *
                                                                s.out_c;
                                    acc = _mm256_add_pd(acc,
                                                        _mm256_mul_pd(vv, _mm256_loadu_pd(zp + fb)));
                                }
                            }
                        }
                        __m256d cur = _mm256_loadu_pd(wp + fb);
                        _mm256_storeu_pd(wp + fb, _mm256_add_pd(cur, acc));
                    }
                    for (int f = fb4; f < s.out_c; ++f) {
                        double acc = 0.0;
                        for (int a = 0; a < s.e1; ++a) {
                            int ia = a + i - s.o1;
                            if (ia < 0 || ia >= s.d1) continue;
                            for (int b = 0; b < s.e2; ++b) {
                                int jb = b + j - s.o2;
                                if (jb < 0 || jb >= s.d2) continue;
                                for (int c = 0; c < s.e3; ++c) {
                                    int hc = c + h - s.o3;
                                    if (hc < 0 || hc >= s.d3) continue;
                                    double v = in[(std::size_t(ia) * s.d2 * s.d3 +
                                                   std::size_t(jb) * s.d3 + hc) *
                                                      s.in_c +
                                                  ci];
                                    acc += v * dz[(std::size_t(a) * s.e2 * s.e3 +
                                                   std::size_t(b) * s.e3 + c) *
                                                      s.out_c +
                                                  f];
                                }
                            }
                        }
                        wp[f] += acc;
                    }
                }
    std::size_t positions = std::size_t(s.e1) * s.e2 * s.e3;
    for (int fb = 0; fb < fb4; fb += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t p = 0; p < positions; ++p)
            acc = _mm256_add_pd(acc, _mm256_loadu_pd(dz + p * s.out_c + fb));
        __m256d cur = _mm256_loadu_pd(db + fb);
        _mm256_storeu_pd(db + fb, _mm256_add_pd(cur, acc));
    }
    for (int f = fb4; f < s.out_c; ++f) {
        double acc = 0.0;
        for (std::size_t p = 0; p < positions; ++p) acc += dz[p * s.out_c + f];
        db[f] += acc;
    }
}

void conv3d_grad_input_avx2(const Conv3dShape& s, const double* w,
                            const double* dz, double* din) {
    for (int p = 0; p < s.d1; ++p)
        for (int q = 0; q < s.d2; ++q)
            for (int r = 0; r < s.d3; ++r) {
                double* dp = din + (std::size_t(p) * s.d2 * s.d3 + std::size_t(q) * s.d3 + r) * s.in_c;
                for (int ci = 0; ci < s.in_c; ++ci) {
                    double acc = 0.0;
                    for (int i = 0; i < s.k1; ++i) {
                        int a = p - i + s.o1;
                        if (a < 0 || a >= s.e1) continue;
                        for (int j = 0; j < s.k2; ++j) {
                            int b = q - j + s.o2;
                            if (b < 0 || b >= s.e2) continue;
                            for (int h = 0; h < s.k3; ++h) {
                                int c = r - h + s.o3;
                                if (c < 0 || c >= s.e3) continue;
                                const double* wp =
                                    w + (std::size_t(i) * s.k2 * s.k3 + std::size_t(j) * s.k3 + h) *
                                            s.in_c * s.out_c +
                                    std::size_t(ci) * s.out_c;
                                const double* zp =
                                    dz + (std::size_t(a) * s.e2 * s.e3 + std::size_t(b) * s.e3 + c) *
                                             s.out_c;
                                acc += dot_avx2(wp, zp, s.out_c);
                            }
                        }
                    }
                    dp[ci] += acc;
                }
            }
}

}  // namespace

const KernelSet kAvx2 = {
    "avx2",
    axpy_avx2,
    dot_avx2,
    relu_avx2,
    relu_grad_avx2,
    conv3d_forward_avx2,
    conv3d_grad_kernels_avx2,
    conv3d_grad_input_avx2,
};

}  // namespace ccnn::kernels

#elif defined(__x86_64__) || defined(__i386__)

// Toolchain without -mavx2: alias the scalar set so dispatch still links.
namespace ccnn::kernels {
const KernelSet kAvx2 = kScalar;
}

#endif
