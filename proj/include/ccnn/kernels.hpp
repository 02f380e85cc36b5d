#pragma once

#include <cstddef>
#include <string>

namespace ccnn::kernels {

// Geometry of one 3D convolution call. Tensors are dense with the channel
// index fastest:
//   input  [a][b][c][ci]  -> in [((a*d2 + b)*d3 + c)*in_c + ci]
//   output [a][b][c][f]   -> out[((a*e2 + b)*e3 + c)*out_c + f]
//   weights[i][j][h][ci][f], filter index f fastest
// Output position (a,b,c) reads input (a+i-o1, b+j-o2, c+h-o3); samples
// outside the input are zero.
struct Conv3dShape {
    int d1, d2, d3;   // input dims (depth, rows, cols)
    int in_c, out_c;  // channels
    int k1, k2, k3;   // kernel taps per axis
    int o1, o2, o3;   // tap offsets; same-padding uses (k-1)/2
    int e1, e2, e3;   // output dims

    static Conv3dShape same(int d1, int d2, int d3, int in_c, int out_c,
                            int k1, int k2, int k3);
    static Conv3dShape valid(int d1, int d2, int d3, int in_c, int out_c,
                             int k1, int k2, int k3);
    std::size_t in_size() const;
    std::size_t out_size() const;
    std::size_t w_size() const;
};

// One function-pointer table per instruction set. The scalar entries define
// the reference semantics, including the exact accumulation order; a SIMD
// variant must produce bit-identical results (this is what kernels_test
// asserts). In particular `dot` is specified as a 4-way blocked sum:
// four partial accumulators over indices 0..3 (mod 4), combined as
// (s0+s1)+(s2+s3), then a sequential tail.
struct KernelSet {
    const char* name;

    // y[i] += a * x[i]
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    // blocked-4 inner product, see above
    double (*dot)(const double* a, const double* b, std::size_t n);
    // out[i] = z[i] > 0 ? z[i] : 0
    void (*relu)(double* out, const double* z, std::size_t n);
    // dz[i] = z[i] > 0 ? da[i] : 0
    void (*relu_grad)(double* dz, const double* z, const double* da, std::size_t n);

    // out = bias + conv(in, w); per-output accumulation runs taps in
    // (i, j, h, ci) order
    void (*conv3d_forward)(const Conv3dShape& s, const double* in, const double* w,
                           const double* bias, double* out);
    // dw += d(out)/d(w) contracted with dz; db += column sums of dz.
    // Each entry's contribution is summed over output positions in
    // (a, b, c) order into a local accumulator, then added once.
    void (*conv3d_grad_kernels)(const Conv3dShape& s, const double* in,
                                const double* dz, double* dw, double* db);
    // din += d(out)/d(in) contracted with dz; per input entry the taps run
    // in (i, j, h) order, the filter contraction uses `dot` semantics
    void (*conv3d_grad_input)(const Conv3dShape& s, const double* w,
                              const double* dz, double* din);
};

extern const KernelSet kScalar;
#if defined(__x86_64__) || defined(__i386__)
extern const KernelSet kAvx2;
#endif

bool avx2_supported();

// Active set: AVX2 when the CPU supports it, otherwise scalar. The
// CCNN_SIMD environment variable ("scalar", "avx2", "auto") overrides.
const KernelSet& active();
const KernelSet& by_name(const std::string& name);  // "scalar" | "avx2"

}  // namespace ccnn::kernels
