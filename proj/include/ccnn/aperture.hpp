#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace ccnn::aperture {

// B x B trainable tile, cyclically repeated to form a full aperture.
struct BasicBlock {
    int b = 0;
    std::vector<double> v;  // row-major

    double& at(int r, int c) { return v[std::size_t(r) * b + c]; }
    double at(int r, int c) const { return v[std::size_t(r) * b + c]; }
};

enum class Mode { periodic, full };

// K coded apertures: either K periodic basic blocks, or K stored full
// patterns of size n x cols (cols = M + L - 1). In periodic mode the full
// pattern is never materialized; entries are derived on demand.
struct CodedApertureSet {
    Mode mode = Mode::periodic;
    int k = 0;
    std::vector<BasicBlock> blocks;              // periodic mode
    int n = 0, cols = 0;                         // full mode
    std::vector<std::vector<double>> patterns;   // full mode, k patterns row-major

    int block_size() const { return blocks.empty() ? 0 : blocks.front().b; }
    double entry(int snapshot, int row, int col) const;
};

// mathematically non-negative modulo
inline int pmod(int a, int b) {
    int r = a % b;
    return r < 0 ? r + b : r;
}

std::vector<double> tile(const BasicBlock& block, int n, int cols);

BasicBlock random_block(int b, double transmittance, std::uint64_t seed);
CodedApertureSet random_block_set(int k, int b, double transmittance, std::uint64_t seed);

std::vector<double> random_full(int n, int cols, double transmittance, std::uint64_t seed);
CodedApertureSet random_full_set(int k, int n, int cols, double transmittance,
                                 std::uint64_t seed);

// Void-and-cluster on a torus, Gaussian energy sigma = 1.5 px, exact ones
// count round(density * n * cols).
std::vector<double> bluenoise_full(int n, int cols, double density, std::uint64_t seed);
CodedApertureSet bluenoise_full_set(int k, int n, int cols, double density,
                                    std::uint64_t seed);

// values > 1 -> 1, values < 0 -> 0; idempotent
CodedApertureSet clamp_blocks(const CodedApertureSet& set);

// All (snapshot, row-in-block, col-in-block) entries touched when forming
// the measurement patch centered at (x0, y0).
std::set<std::array<int, 3>> gather_block_indices(int x0, int y0, int p, int l,
                                                  int b, int k);

void save_apertures(const CodedApertureSet& set, const std::string& path);
CodedApertureSet load_apertures(const std::string& path);

}  // namespace ccnn::aperture
