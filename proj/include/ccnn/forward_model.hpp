#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccnn/aperture.hpp"
#include "ccnn/datacube.hpp"

namespace ccnn::forward_model {

using datacube::HyperCube;

// K detector snapshots, snapshot-sequential, row-major planes:
// v[snap*(n*m) + x*m + y]
struct MeasurementCube {
    int n = 0, m = 0, k = 0;
    std::vector<double> v;

    double& at(int x, int y, int snap) {
        return v[std::size_t(snap) * n * m + std::size_t(x) * m + y];
    }
    double at(int x, int y, int snap) const {
        return v[std::size_t(snap) * n * m + std::size_t(x) * m + y];
    }
    std::size_t size() const { return std::size_t(n) * m * k; }
};

enum class NoiseKind { none, gaussian };

struct NoiseConfig {
    NoiseKind kind = NoiseKind::none;
    double snr_db = 0.0;  // signal RMS over noise RMS, in dB
    std::uint64_t seed = 0;
};

// Y[x][y] = sum_l F[x][y][l] * T^k[x][y+l], summed in ascending l order.
std::vector<double> simulate_snapshot(const HyperCube& cube,
                                      const aperture::CodedApertureSet& set, int snapshot);

MeasurementCube simulate_all(const HyperCube& cube, const aperture::CodedApertureSet& set,
                             const NoiseConfig& noise = {});

// Sparse system matrix: rows = K*N*M grouped by snapshot then row-major
// pixel, cols = N*M*L with vec(F)[band*(n*m) + x*m + y] (band-major).
// Exactly L structural nonzeros per row.
struct SystemMatrix {
    std::int64_t rows = 0, cols = 0;
    struct Triplet {
        std::int64_t row, col;
        double value;
    };
    std::vector<Triplet> triplets;  // sorted by (row, col)

    std::vector<double> apply(const std::vector<double>& x) const;
    std::vector<double> to_dense() const;  // refuses rows*cols > 2^32
    void export_text(const std::string& path) const;
};

SystemMatrix build_system_matrix(const aperture::CodedApertureSet& set, int n, int m, int l);

std::vector<double> vec_cube(const HyperCube& cube);
std::vector<double> vec_measurement(const MeasurementCube& mc);

// 3D representation basis: kron(spectral DCT-II, 2D separable wavelet).
enum class SpatialBasis { haar, symmlet8 };

struct DenseMatrix {
    int rows = 0, cols = 0;
    std::vector<double> v;  // row-major
    double& at(int r, int c) { return v[std::size_t(r) * cols + c]; }
    double at(int r, int c) const { return v[std::size_t(r) * cols + c]; }
};

DenseMatrix wavelet_matrix_1d(int n, SpatialBasis kind);  // analysis matrix, orthonormal
DenseMatrix dct_matrix_1d(int l);                         // orthonormal DCT-II
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix build_basis(int n, int m, int l, SpatialBasis spatial);

// Patch with spatial extent p x p and `depth` slices (L for scene patches,
// K for measurement patches); v[(r*p + c)*depth + d]
struct Patch {
    int p = 0, depth = 0;
    std::vector<double> v;
    double& at(int r, int c, int d) { return v[(std::size_t(r) * p + c) * depth + d]; }
    double at(int r, int c, int d) const { return v[(std::size_t(r) * p + c) * depth + d]; }
};

Patch extract_patch(const MeasurementCube& meas, int x0, int y0, int p);
Patch extract_scene_patch(const HyperCube& cube, int x0, int y0, int p);

// Patch-level model with periodic apertures:
// Y[m][n][k] = sum_l F[m][n][l] * C^k[(x0+m-q) mod B][(y0+n-q+l) mod B]
Patch patch_forward(const Patch& scene_patch, const aperture::CodedApertureSet& set,
                    int x0, int y0);

// .msc container: "MSC1\n", JSON header line, f64le payload snapshot-sequential.
void save_measurement(const MeasurementCube& mc, const std::string& path);
MeasurementCube load_measurement(const std::string& path);

}  // namespace ccnn::forward_model
