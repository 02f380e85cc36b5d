// Independent reference implementations used only by tests. These stay
// deliberately naive (straight loops, no shared code with the library) so
// they can serve as oracles for the optimized paths.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "ccnn/aperture.hpp"
#include "ccnn/datacube.hpp"
#include "ccnn/kernels.hpp"

namespace oracles {

// triple-loop DD-CASSI snapshot, ascending band order
inline std::vector<double> simulate_snapshot_naive(const ccnn::datacube::HyperCube& cube,
                                                   const ccnn::aperture::CodedApertureSet& set,
                                                   int snap) {
    std::vector<double> plane(std::size_t(cube.n) * cube.m, 0.0);
    for (int x = 0; x < cube.n; ++x)
        for (int y = 0; y < cube.m; ++y) {
            double acc = 0.0;
            for (int band = 0; band < cube.l; ++band)
                acc += cube.at(x, y, band) * set.entry(snap, x, y + band);
            plane[std::size_t(x) * cube.m + y] = acc;
        }
    return plane;
}

// direct 7-loop 3D convolution with zero padding, channel-last layout,
// accumulating taps in (i, j, h, ci) order to match the kernel contract
inline void conv3d_naive(const ccnn::kernels::Conv3dShape& s, const double* in,
                         const double* w, const double* bias, double* out) {
    for (int a = 0; a < s.e1; ++a)
        for (int b = 0; b < s.e2; ++b)
            for (int c = 0; c < s.e3; ++c)
                for (int f = 0; f < s.out_c; ++f) {
                    double acc = bias[f];
                    for (int i = 0; i < s.k1; ++i)
                        for (int j = 0; j < s.k2; ++j)
                            for (int h = 0; h < s.k3; ++h)
                                for (int ci = 0; ci < s.in_c; ++ci) {
                                    int ia = a + i - s.o1, jb = b + j - s.o2, hc = c + h - s.o3;
                                    if (ia < 0 || ia >= s.d1 || jb < 0 || jb >= s.d2 ||
                                        hc < 0 || hc >= s.d3)
                                        continue;
                                    acc += in[(std::size_t(ia) * s.d2 * s.d3 +
                                               std::size_t(jb) * s.d3 + hc) *
                                                  s.in_c +
                                              ci] *
                                           w[(((std::size_t(i) * s.k2 + j) * s.k3 + h) *
                                                  s.in_c +
                                              ci) *
                                                 s.out_c +
                                             f];
                                }
                    out[(std::size_t(a) * s.e2 * s.e3 + std::size_t(b) * s.e3 + c) * s.out_c +
                        f] = acc;
                }
}

// direct DFT periodogram |X(u,v)|^2 / (n*m) of a real 2D pattern
inline std::vector<double> periodogram_naive(const std::vector<double>& x, int n, int m) {
    const double pi = 3.14159265358979323846264338327950288;
    std::vector<double> p(std::size_t(n) * m, 0.0);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < m; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < m; ++b) {
                    double phase = -2.0 * pi * (double(u) * a / n + double(v) * b / m);
                    acc += x[std::size_t(a) * m + b] *
                           std::complex<double>(std::cos(phase), std::sin(phase));
                }
            p[std::size_t(u) * m + v] = std::norm(acc) / (double(n) * m);
        }
    return p;
}

// mean periodogram energy over the lowest `fraction` of non-DC radial
// frequencies (frequency radius normalized per axis)
inline double low_frequency_energy(const std::vector<double>& pattern, int n, int m,
                                   double fraction) {
    auto p = periodogram_naive(pattern, n, m);
    std::vector<std::pair<double, double>> by_radius;  // (radius, energy)
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < m; ++v) {
            if (u == 0 && v == 0) continue;
            double fu = std::min(u, n - u) / static_cast<double>(n);
            double fv = std::min(v, m - v) / static_cast<double>(m);
            by_radius.push_back({std::sqrt(fu * fu + fv * fv), p[std::size_t(u) * m + v]});
        }
    std::sort(by_radius.begin(), by_radius.end());
    std::size_t count = static_cast<std::size_t>(fraction * by_radius.size());
    if (count == 0) count = 1;
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += by_radius[i].second;
    return sum / static_cast<double>(count);
}

inline double spectral_angle(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double c = dot / std::sqrt(na * nb);
    c = std::min(1.0, std::max(-1.0, c));
    return std::acos(c);
}

}  // namespace oracles
