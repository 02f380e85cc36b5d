#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ccnn::datacube {

// N x M x L radiance volume, band-sequential, row-major within a band:
// v[band*(n*m) + x*m + y]. Axis convention matches the measurement model:
// x is the first spatial index (0..n), y the second (0..m), and spectral
// dispersion shifts along y.
struct HyperCube {
    int n = 0, m = 0, l = 0;
    std::vector<double> v;

    double& at(int x, int y, int band) {
        return v[std::size_t(band) * n * m + std::size_t(x) * m + y];
    }
    double at(int x, int y, int band) const {
        return v[std::size_t(band) * n * m + std::size_t(x) * m + y];
    }
    std::size_t size() const { return std::size_t(n) * m * l; }
};

// Per-pixel class labels, 0 = unlabeled, values in {0..mc}.
struct LabelMap {
    int n = 0, m = 0;
    int mc = 0;
    std::vector<std::uint8_t> v;

    std::uint8_t& at(int x, int y) { return v[std::size_t(x) * m + y]; }
    std::uint8_t at(int x, int y) const { return v[std::size_t(x) * m + y]; }
    std::size_t labeled_count() const;
};

using PixelCoord = std::pair<int, int>;  // (x, y)

struct SplitIndex {
    std::vector<PixelCoord> train;
    std::vector<PixelCoord> test;
    std::uint64_t seed = 0;
};

// Seeded Voronoi regions with per-class Gaussian-bump spectra, multiplicative
// pixel jitter, and unlabeled region borders. Stand-in for external datasets.
std::pair<HyperCube, LabelMap> generate_synthetic_scene(int n, int m, int l,
                                                        int classes,
                                                        std::uint64_t seed);

SplitIndex split_train_test(const LabelMap& labels, double fraction,
                            std::uint64_t seed, bool stratified = false);

// Scales values so the cube maximum becomes 1 (no-op for an all-zero cube).
void normalize_cube(HyperCube& cube);

// .hsc container: "HSC1\n", one JSON header line, then f64le payload.
void save_cube(const HyperCube& cube, const std::string& path);
HyperCube load_cube(const std::string& path);

// Binary PGM (P5), 8-bit, 0 = unlabeled.
void save_labels(const LabelMap& labels, const std::string& path);
LabelMap load_labels(const std::string& path);

}  // namespace ccnn::datacube
