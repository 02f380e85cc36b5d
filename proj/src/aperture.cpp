#include "ccnn/aperture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"

namespace ccnn::aperture {

using nlohmann::json;

double CodedApertureSet::entry(int snapshot, int row, int col) const {
    if (snapshot < 0 || snapshot >= k)
        throw std::invalid_argument("aperture entry: snapshot index out of range");
    if (mode == Mode::periodic) {
        const BasicBlock& blk = blocks[snapshot];
        return blk.at(pmod(row, blk.b), pmod(col, blk.b));
    }
    if (row < 0 || row >= n || col < 0 || col >= cols)
        throw std::invalid_argument("aperture entry: index out of range for full pattern");
    return patterns[snapshot][std::size_t(row) * cols + col];
}

std::vector<double> tile(const BasicBlock& block, int n, int cols) {
    if (n < 1 || cols < 1) throw std::invalid_argument("tile: dimensions must be >= 1");
    std::vector<double> out(std::size_t(n) * cols);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < cols; ++c)
            out[std::size_t(r) * cols + c] = block.at(r % block.b, c % block.b);
    return out;
}

BasicBlock random_block(int b, double transmittance, std::uint64_t seed) {
    if (b < 1) throw std::invalid_argument("random_block: b must be >= 1");
    if (!(transmittance > 0.0 && transmittance < 1.0))
        throw std::invalid_argument("random_block: transmittance must lie in (0, 1)");
    BasicBlock blk;
    blk.b = b;
    blk.v.resize(std::size_t(b) * b);
    Rng rng(seed);
    for (auto& x : blk.v) x = rng.bernoulli(transmittance) ? 1.0 : 0.0;
    return blk;
}

CodedApertureSet random_block_set(int k, int b, double transmittance, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("aperture set: k must be >= 1");
    CodedApertureSet set;
    set.mode = Mode::periodic;
    set.k = k;
    for (int i = 0; i < k; ++i)
        set.blocks.push_back(random_block(b, transmittance, mix_seed(seed, i)));
    return set;
}

std::vector<double> random_full(int n, int cols, double transmittance, std::uint64_t seed) {
    if (n < 1 || cols < 1) throw std::invalid_argument("random_full: dimensions must be >= 1");
    if (!(transmittance > 0.0 && transmittance < 1.0))
        throw std::invalid_argument("random_full: transmittance must lie in (0, 1)");
    std::vector<double> out(std::size_t(n) * cols);
    Rng rng(seed);
    for (auto& x : out) x = rng.bernoulli(transmittance) ? 1.0 : 0.0;
    return out;
}

CodedApertureSet random_full_set(int k, int n, int cols, double transmittance,
                                 std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("aperture set: k must be >= 1");
    CodedApertureSet set;
    set.mode = Mode::full;
    set.k = k;
    set.n = n;
    set.cols = cols;
    for (int i = 0; i < k; ++i)
        set.patterns.push_back(random_full(n, cols, transmittance, mix_seed(seed, i)));
    return set;
}

namespace {

// Gaussian splat table for the void-and-cluster energy field
struct EnergyKernel {
    int rx, ry;
    std::vector<double> w;  // (2*rx+1) x (2*ry+1)
};

EnergyKernel make_kernel(int n, int cols, double sigma) {
    int reach = static_cast<int>(std::ceil(6.0 * sigma));
    EnergyKernel k;
    k.rx = std::min(reach, (n - 1) / 2);
    k.ry = std::min(reach, (cols - 1) / 2);
    k.w.resize(std::size_t(2 * k.rx + 1) * (2 * k.ry + 1));
    double inv = 1.0 / (2.0 * sigma * sigma);
    for (int dx = -k.rx; dx <= k.rx; ++dx)
        for (int dy = -k.ry; dy <= k.ry; ++dy)
            k.w[std::size_t(dx + k.rx) * (2 * k.ry + 1) + (dy + k.ry)] =
                std::exp(-(dx * dx + dy * dy) * inv);
    return k;
}

void splat(std::vector<double>& energy, int n, int cols, const EnergyKernel& k,
           int x, int y, double sign) {
    for (int dx = -k.rx; dx <= k.rx; ++dx) {
        int xx = x + dx;
        xx = xx < 0 ? xx + n : (xx >= n ? xx - n : xx);
        for (int dy = -k.ry; dy <= k.ry; ++dy) {
            int yy = y + dy;
            yy = yy < 0 ? yy + cols : (yy >= cols ? yy - cols : yy);
            energy[std::size_t(xx) * cols + yy] +=
                sign * k.w[std::size_t(dx + k.rx) * (2 * k.ry + 1) + (dy + k.ry)];
        }
    }
}

// argmax/argmin of energy over cells with the given occupancy,
// lexicographic (x, y) tie-break
int find_extreme(const std::vector<double>& energy, const std::vector<std::uint8_t>& ones,
                 int cells, bool want_one, bool want_max) {
    int best = -1;
    double best_e = 0.0;
    for (int i = 0; i < cells; ++i) {
        if ((ones[i] != 0) != want_one) continue;
        double e = energy[i];
        if (best < 0 || (want_max ? e > best_e : e < best_e)) {
            best = i;
            best_e = e;
        }
    }
    return best;
}

}  // namespace

std::vector<double> bluenoise_full(int n, int cols, double density, std::uint64_t seed) {
    if (n < 1 || cols < 1) throw std::invalid_argument("bluenoise_full: dimensions must be >= 1");
    if (!(density > 0.0 && density < 1.0))
        throw std::invalid_argument("bluenoise_full: density must lie in (0, 1)");
    const int cells = n * cols;
    const long target = std::lround(density * static_cast<double>(cells));
    std::vector<std::uint8_t> ones(cells, 0);

    // seed with exactly `target` ones at random distinct cells
    Rng rng(seed);
    std::vector<int> idx(cells);
    for (int i = 0; i < cells; ++i) idx[i] = i;
    rng.shuffle(idx);
    for (long i = 0; i < target; ++i) ones[idx[i]] = 1;

    EnergyKernel kern = make_kernel(n, cols, 1.5);
    std::vector<double> energy(cells, 0.0);
    for (int i = 0; i < cells; ++i)
        if (ones[i]) splat(energy, n, cols, kern, i / cols, i % cols, +1.0);

    // swap tightest cluster and largest void until stable
    const long max_iter = 16L * cells;
    for (long iter = 0; iter < max_iter; ++iter) {
        int cluster = find_extreme(energy, ones, cells, true, true);
        if (cluster < 0) break;  // degenerate densities
        ones[cluster] = 0;
        splat(energy, n, cols, kern, cluster / cols, cluster % cols, -1.0);

        int void_cell = find_extreme(energy, ones, cells, false, false);
        ones[void_cell] = 1;
        splat(energy, n, cols, kern, void_cell / cols, void_cell % cols, +1.0);
        if (void_cell == cluster) break;  // pattern stable
    }

    std::vector<double> out(cells);
    for (int i = 0; i < cells; ++i) out[i] = ones[i] ? 1.0 : 0.0;
    return out;
}

CodedApertureSet bluenoise_full_set(int k, int n, int cols, double density,
                                    std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("aperture set: k must be >= 1");
    CodedApertureSet set;
    set.mode = Mode::full;
    set.k = k;
    set.n = n;
    set.cols = cols;
    for (int i = 0; i < k; ++i)
        set.patterns.push_back(bluenoise_full(n, cols, density, mix_seed(seed, i)));
    return set;
}

CodedApertureSet clamp_blocks(const CodedApertureSet& set) {
    CodedApertureSet out = set;
    auto clamp01 = [](double x) { return x > 1.0 ? 1.0 : (x < 0.0 ? 0.0 : x); };
    for (auto& blk : out.blocks)
        for (auto& x : blk.v) x = clamp01(x);
    for (auto& pat : out.patterns)
        for (auto& x : pat) x = clamp01(x);
    return out;
}

std::set<std::array<int, 3>> gather_block_indices(int x0, int y0, int p, int l,
                                                  int b, int k) {
    if (p < 1 || p % 2 == 0) throw std::invalid_argument("gather_block_indices: p must be odd");
    if (l < 1 || b < 1 || k < 1)
        throw std::invalid_argument("gather_block_indices: arguments must be positive");
    int q = p / 2;
    std::set<int> rows, cols;
    for (int m = 0; m < p; ++m) rows.insert(pmod(x0 + m - q, b));
    for (int nn = 0; nn < p; ++nn)
        for (int band = 0; band < l; ++band) cols.insert(pmod(y0 + nn - q + band, b));
    std::set<std::array<int, 3>> out;
    for (int snap = 0; snap < k; ++snap)
        for (int r : rows)
            for (int c : cols) out.insert({snap, r, c});
    return out;
}

void save_apertures(const CodedApertureSet& set, const std::string& path) {
    json j;
    j["k"] = set.k;
    if (set.mode == Mode::periodic) {
        j["mode"] = "periodic";
        j["b"] = set.block_size();
        json blocks = json::array();
        for (const auto& blk : set.blocks) blocks.push_back(blk.v);
        j["blocks"] = blocks;
    } else {
        j["mode"] = "full";
        j["n"] = set.n;
        j["cols"] = set.cols;
        json pats = json::array();
        for (const auto& pat : set.patterns) pats.push_back(pat);
        j["pattern"] = pats;
    }
    std::string text = j.dump();
    text.push_back('\n');
    write_file_bytes(path, text.data(), text.size());
}

CodedApertureSet load_apertures(const std::string& path) {
    auto bytes = read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError(path + ": not valid JSON: " + e.what());
    }
    CodedApertureSet set;
    if (!j.contains("k") || !j.contains("mode"))
        throw FormatError(path + ": missing field 'k' or 'mode'");
    set.k = j["k"].get<int>();
    if (set.k < 1) throw FormatError(path + ": field 'k' must be >= 1");
    std::string mode = j["mode"].get<std::string>();
    if (mode == "periodic") {
        set.mode = Mode::periodic;
        int b = j.at("b").get<int>();
        if (b < 1) throw FormatError(path + ": field 'b' must be >= 1");
        auto blocks = j.at("blocks");
        if (static_cast<int>(blocks.size()) != set.k)
            throw FormatError(path + ": field 'blocks' must hold k blocks");
        for (const auto& arr : blocks) {
            BasicBlock blk;
            blk.b = b;
            blk.v = arr.get<std::vector<double>>();
            if (blk.v.size() != std::size_t(b) * b)
                throw FormatError(path + ": block size does not match field 'b'");
            set.blocks.push_back(std::move(blk));
        }
    } else if (mode == "full") {
        set.mode = Mode::full;
        set.n = j.at("n").get<int>();
        set.cols = j.at("cols").get<int>();
        if (set.n < 1 || set.cols < 1)
            throw FormatError(path + ": fields 'n'/'cols' must be >= 1");
        auto pats = j.at("pattern");
        if (static_cast<int>(pats.size()) != set.k)
            throw FormatError(path + ": field 'pattern' must hold k patterns");
        for (const auto& arr : pats) {
            auto pat = arr.get<std::vector<double>>();
            if (pat.size() != std::size_t(set.n) * set.cols)
                throw FormatError(path + ": pattern size does not match n*cols");
            set.patterns.push_back(std::move(pat));
        }
    } else {
        throw FormatError(path + ": unknown mode '" + mode + "'");
    }
    return set;
}

}  // namespace ccnn::aperture
