#include "ccnn/kernels.hpp"

#include <stdexcept>

namespace ccnn::kernels {

Conv3dShape Conv3dShape::same(int d1, int d2, int d3, int in_c, int out_c,
                              int k1, int k2, int k3) {
    return Conv3dShape{d1, d2, d3, in_c, out_c, k1, k2, k3,
                       (k1 - 1) / 2, (k2 - 1) / 2, (k3 - 1) / 2,
                       d1, d2, d3};
}

Conv3dShape Conv3dShape::valid(int d1, int d2, int d3, int in_c, int out_c,
                               int k1, int k2, int k3) {
    int e1 = d1 - k1 + 1, e2 = d2 - k2 + 1, e3 = d3 - k3 + 1;
    if (e1 < 1 || e2 < 1 || e3 < 1)
        throw std::invalid_argument("conv3d: valid padding underflows output dims");
    return Conv3dShape{d1, d2, d3, in_c, out_c, k1, k2, k3, 0, 0, 0, e1, e2, e3};
}

std::size_t Conv3dShape::in_size() const {
    return std::size_t(d1) * d2 * d3 * in_c;
}
std::size_t Conv3dShape::out_size() const {
    return std::size_t(e1) * e2 * e3 * out_c;
}
std::size_t Conv3dShape::w_size() const {
    return std::size_t(k1) * k2 * k3 * in_c * out_c;
}

namespace {

constexpr int kMaxChannels = 64;

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t n4 = n / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 += a[i + 0] * b[i + 0];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double total = (s0 + s1) + (s2 + s3);
    for (std::size_t i = n4; i < n; ++i) total += a[i] * b[i];
    return total;
}

void relu_scalar(double* out, const double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void relu_grad_scalar(double* dz, const double* z, const double* da, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dz[i] = z[i] > 0.0 ? da[i] : 0.0;
}

void conv3d_forward_scalar(const Conv3dShape& s, const double* in, const double* w,
                           const double* bias, double* out) {
    if (s.out_c > kMaxChannels)
        throw std::invalid_argument("conv3d: out_c exceeds kernel channel cap");
    double acc[kMaxChannels];
    for (int a = 0; a < s.e1; ++a)
        for (int b = 0; b < s.e2; ++b)
            for (int c = 0; c < s.e3; ++c) {
                for (int f = 0; f < s.out_c; ++f) acc[f] = bias[f];
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
                                in + (std::size_t(ia) * s.d2 * s.d3 + std::size_t(jb) * s.d3 + hc) * s.in_c;
                            const double* wp =
                                w + (std::size_t(i) * s.k2 * s.k3 + std::size_t(j) * s.k3 + h) *
                                        s.in_c * s.out_c;
                            for (int ci = 0; ci < s.in_c; ++ci) {
                                double v = ip[ci];
                                const double* wf = wp + std::size_t(ci) * s.out_c;
                                for (int f = 0; f < s.out_c; ++f) acc[f] += v * wf[f];
                            }
                        }
                    }
                }
                double* op = out + (std::size_t(a) * s.e2 * s.e3 + std::size_t(b) * s.e3 + c) * s.out_c;
                for (int f = 0; f < s.out_c; ++f) op[f] = acc[f];
            }
}

void conv3d_grad_kernels_scalar(const Conv3dShape& s, const double* in,
                                const double* dz, double* dw, double* db) {
    if (s.out_c > kMaxChannels)
        throw std::invalid_argument("conv3d: out_c exceeds kernel channel cap");
    double acc[kMaxChannels];
    for (int i = 0; i < s.k1; ++i)
        for (int j = 0; j < s.k2; ++j)
            for (int h = 0; h < s.k3; ++h)
                for (int ci = 0; ci < s.in_c; ++ci) {
                    for (int f = 0; f < s.out_c; ++f) acc[f] = 0.0;
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
                                const double* zp =
                                    dz + (std::size_t(a) * s.e2 * s.e3 + std::size_t(b) * s.e3 + c) *
                                             s.out_c;
                                for (int f = 0; f < s.out_c; ++f) acc[f] += v * zp[f];
                            }
                        }
                    }
                    double* wp = dw + (std::size_t(i) * s.k2 * s.k3 + std::size_t(j) * s.k3 + h) *
                                          s.in_c * s.out_c +
                                 std::size_t(ci) * s.out_c;
                    for (int f = 0; f < s.out_c; ++f) wp[f] += acc[f];
                }
    for (int f = 0; f < s.out_c; ++f) acc[f] = 0.0;
    std::size_t positions = std::size_t(s.e1) * s.e2 * s.e3;
    for (std::size_t p = 0; p < positions; ++p) {
        const double* zp = dz + p * s.out_c;
        for (int f = 0; f < s.out_c; ++f) acc[f] += zp[f];
    }
    for (int f = 0; f < s.out_c; ++f) db[f] += acc[f];
}

void conv3d_grad_input_scalar(const Conv3dShape& s, const double* w,
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
                                acc += dot_scalar(wp, zp, s.out_c);
                            }
                        }
                    }
                    dp[ci] += acc;
                }
            }
}

}  // namespace

const KernelSet kScalar = {
    "scalar",
    axpy_scalar,
    dot_scalar,
    relu_scalar,
    relu_grad_scalar,
    conv3d_forward_scalar,
    conv3d_grad_kernels_scalar,
    conv3d_grad_input_scalar,
};

}  // namespace ccnn::kernels
