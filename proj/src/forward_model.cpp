#include "ccnn/forward_model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"

namespace ccnn::forward_model {

using aperture::CodedApertureSet;
using aperture::Mode;
using nlohmann::json;

namespace {

void check_compat(const HyperCube& cube, const CodedApertureSet& set) {
    if (set.mode == Mode::full) {
        if (set.n != cube.n || set.cols != cube.m + cube.l - 1)
            throw std::invalid_argument(
                "simulate: full aperture must be N x (M+L-1) for this cube");
    } else {
        if (set.blocks.empty()) throw std::invalid_argument("simulate: empty aperture set");
    }
}

}  // namespace

std::vector<double> simulate_snapshot(const HyperCube& cube, const CodedApertureSet& set,
                                      int snapshot) {
    check_compat(cube, set);
    if (snapshot < 0 || snapshot >= set.k)
        throw std::invalid_argument("simulate_snapshot: snapshot index out of range");
    const int n = cube.n, m = cube.m, l = cube.l;
    std::vector<double> plane(std::size_t(n) * m, 0.0);
    if (set.mode == Mode::periodic) {
        const auto& blk = set.blocks[snapshot];
        const int b = blk.b;
        for (int x = 0; x < n; ++x) {
            int rb = x % b;
            for (int y = 0; y < m; ++y) {
                double acc = 0.0;
                for (int band = 0; band < l; ++band)
                    acc += cube.at(x, y, band) * blk.at(rb, (y + band) % b);
                plane[std::size_t(x) * m + y] = acc;
            }
        }
    } else {
        const auto& pat = set.patterns[snapshot];
        const int cols = set.cols;
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < m; ++y) {
                double acc = 0.0;
                for (int band = 0; band < l; ++band)
                    acc += cube.at(x, y, band) * pat[std::size_t(x) * cols + y + band];
                plane[std::size_t(x) * m + y] = acc;
            }
    }
    return plane;
}

MeasurementCube simulate_all(const HyperCube& cube, const CodedApertureSet& set,
                             const NoiseConfig& noise) {
    check_compat(cube, set);
    MeasurementCube mc;
    mc.n = cube.n;
    mc.m = cube.m;
    mc.k = set.k;
    mc.v.resize(mc.size());
    for (int snap = 0; snap < set.k; ++snap) {
        auto plane = simulate_snapshot(cube, set, snap);
        std::memcpy(mc.v.data() + std::size_t(snap) * cube.n * cube.m, plane.data(),
                    plane.size() * sizeof(double));
    }
    if (noise.kind == NoiseKind::gaussian) {
        if (!std::isfinite(noise.snr_db))
            throw std::invalid_argument("simulate_all: snr_db must be finite");
        double ss = 0.0;
        for (double x : mc.v) ss += x * x;
        double rms = std::sqrt(ss / static_cast<double>(mc.v.size()));
        double sigma = rms * std::pow(10.0, -noise.snr_db / 20.0);
        Rng rng(noise.seed);
        for (double& x : mc.v) x += sigma * rng.normal();
    }
    return mc;
}

SystemMatrix build_system_matrix(const CodedApertureSet& set, int n, int m, int l) {
    if (n < 1 || m < 1 || l < 1)
        throw std::invalid_argument("build_system_matrix: dimensions must be >= 1");
    if (set.mode == Mode::full && (set.n != n || set.cols != m + l - 1))
        throw std::invalid_argument("build_system_matrix: aperture dimensions incompatible");
    SystemMatrix h;
    const std::int64_t nm = std::int64_t(n) * m;
    h.rows = std::int64_t(set.k) * nm;
    h.cols = nm * l;
    h.triplets.reserve(static_cast<std::size_t>(h.rows) * l);
    for (int snap = 0; snap < set.k; ++snap)
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < m; ++y) {
                std::int64_t row = snap * nm + std::int64_t(x) * m + y;
                for (int band = 0; band < l; ++band) {
                    std::int64_t col = std::int64_t(band) * nm + std::int64_t(x) * m + y;
                    h.triplets.push_back({row, col, set.entry(snap, x, y + band)});
                }
            }
    return h;
}

std::vector<double> SystemMatrix::apply(const std::vector<double>& x) const {
    if (static_cast<std::int64_t>(x.size()) != cols)
        throw std::invalid_argument("SystemMatrix::apply: vector length mismatch");
    std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
    for (const auto& t : triplets) y[static_cast<std::size_t>(t.row)] += t.value * x[static_cast<std::size_t>(t.col)];
    return y;
}

std::vector<double> SystemMatrix::to_dense() const {
    if (rows * cols > (std::int64_t(1) << 32))
        throw std::invalid_argument("SystemMatrix::to_dense: matrix too large for dense export");
    std::vector<double> d(static_cast<std::size_t>(rows * cols), 0.0);
    for (const auto& t : triplets)
        d[static_cast<std::size_t>(t.row * cols + t.col)] = t.value;
    return d;
}

void SystemMatrix::export_text(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open file for writing: " + path);
    char line[80];
    for (const auto& t : triplets) {
        int len = std::snprintf(line, sizeof(line), "%lld %lld %.17g\n",
                                static_cast<long long>(t.row), static_cast<long long>(t.col),
                                t.value);
        f.write(line, len);
    }
    if (!f) throw std::runtime_error("short write: " + path);
}

std::vector<double> vec_cube(const HyperCube& cube) { return cube.v; }

std::vector<double> vec_measurement(const MeasurementCube& mc) { return mc.v; }

DenseMatrix dct_matrix_1d(int l) {
    if (l < 1) throw std::invalid_argument("dct_matrix_1d: l must be >= 1");
    DenseMatrix d;
    d.rows = d.cols = l;
    d.v.resize(std::size_t(l) * l);
    const double pi = 3.14159265358979323846264338327950288;
    for (int k = 0; k < l; ++k) {
        double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / l);
        for (int t = 0; t < l; ++t)
            d.at(k, t) = scale * std::cos(pi * (2 * t + 1) * k / (2.0 * l));
    }
    return d;
}

namespace {

// Symmlet-8 (16-tap least-asymmetric) lowpass filter, computed by spectral
// factorization of the Daubechies polynomial at 60-digit precision.
const double kSym8[16] = {
    -0.003382415951005002773, -0.00054213233180001071769,
    0.03169508781152598903,   0.0076074873249766085739,
    -0.14329423835127266806,  -0.061273359067811075662,
    0.48135965125905338935,   0.77718575169962800242,
    0.36444189483617894787,   -0.051945838107881801837,
    -0.027219029917103485655, 0.049137179673730289886,
    0.0038087520138944896096, -0.014952258337062198854,
    -0.00030292051472413308736, 0.0018899503327676891052,
};

const double kHaar[2] = {0.70710678118654752440084436210485,
                         0.70710678118654752440084436210485};

DenseMatrix identity(int n) {
    DenseMatrix d;
    d.rows = d.cols = n;
    d.v.assign(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) d.at(i, i) = 1.0;
    return d;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    c.rows = a.rows;
    c.cols = b.cols;
    c.v.assign(std::size_t(c.rows) * c.cols, 0.0);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double v = a.at(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c.at(i, j) += v * b.at(k, j);
        }
    return c;
}

bool is_power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

}  // namespace

DenseMatrix wavelet_matrix_1d(int n, SpatialBasis kind) {
    if (!is_power_of_two(n))
        throw std::invalid_argument("wavelet_matrix_1d: size must be a power of two");
    const double* h = kind == SpatialBasis::haar ? kHaar : kSym8;
    const int taps = kind == SpatialBasis::haar ? 2 : 16;
    // periodized analysis cascade: at each level the leading `len` rows are
    // replaced by circular lowpass/highpass halves
    DenseMatrix w = identity(n);
    for (int len = n; len >= 2; len /= 2) {
        DenseMatrix stage = identity(n);
        for (int k = 0; k < len / 2; ++k)
            for (int j = 0; j < len; ++j) stage.at(k, j) = stage.at(len / 2 + k, j) = 0.0;
        for (int k = 0; k < len / 2; ++k)
            for (int t = 0; t < taps; ++t) {
                int col = (2 * k + t) % len;
                stage.at(k, col) += h[t];
                // highpass g[t] = (-1)^t h[taps-1-t]
                stage.at(len / 2 + k, col) += (t % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - t];
            }
        w = matmul(stage, w);
    }
    return w;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c;
    c.rows = a.rows * b.rows;
    c.cols = a.cols * b.cols;
    c.v.resize(std::size_t(c.rows) * c.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) {
            double v = a.at(i, j);
            for (int p = 0; p < b.rows; ++p)
                for (int q = 0; q < b.cols; ++q)
                    c.at(i * b.rows + p, j * b.cols + q) = v * b.at(p, q);
        }
    return c;
}

DenseMatrix build_basis(int n, int m, int l, SpatialBasis spatial) {
    std::int64_t dim = std::int64_t(n) * m * l;
    if (dim > 4096)
        throw std::invalid_argument("build_basis: basis too large to materialize densely");
    // synthesis bases (columns are basis vectors) = transposed analysis
    DenseMatrix wn = wavelet_matrix_1d(n, spatial);
    DenseMatrix wm = wavelet_matrix_1d(m, spatial);
    DenseMatrix spatial2d = kron(wn, wm);  // analysis on vec(plane), x-major
    DenseMatrix dct = dct_matrix_1d(l);
    // vec(F) is band-major, so the spectral factor sits on the left
    DenseMatrix analysis = kron(dct, spatial2d);
    DenseMatrix psi;
    psi.rows = analysis.cols;
    psi.cols = analysis.rows;
    psi.v.resize(analysis.v.size());
    for (int i = 0; i < analysis.rows; ++i)
        for (int j = 0; j < analysis.cols; ++j) psi.at(j, i) = analysis.at(i, j);
    return psi;
}

Patch extract_patch(const MeasurementCube& meas, int x0, int y0, int p) {
    if (p < 1 || p % 2 == 0) throw std::invalid_argument("extract_patch: p must be odd");
    if (x0 < 0 || x0 >= meas.n || y0 < 0 || y0 >= meas.m)
        throw std::invalid_argument("extract_patch: center outside the image");
    const int q = p / 2;
    Patch out;
    out.p = p;
    out.depth = meas.k;
    out.v.assign(std::size_t(p) * p * meas.k, 0.0);
    for (int r = 0; r < p; ++r) {
        int x = x0 + r - q;
        if (x < 0 || x >= meas.n) continue;
        for (int c = 0; c < p; ++c) {
            int y = y0 + c - q;
            if (y < 0 || y >= meas.m) continue;
            for (int d = 0; d < meas.k; ++d) out.at(r, c, d) = meas.at(x, y, d);
        }
    }
    return out;
}

Patch extract_scene_patch(const HyperCube& cube, int x0, int y0, int p) {
    if (p < 1 || p % 2 == 0) throw std::invalid_argument("extract_scene_patch: p must be odd");
    if (x0 < 0 || x0 >= cube.n || y0 < 0 || y0 >= cube.m)
        throw std::invalid_argument("extract_scene_patch: center outside the image");
    const int q = p / 2;
    Patch out;
    out.p = p;
    out.depth = cube.l;
    out.v.assign(std::size_t(p) * p * cube.l, 0.0);
    for (int r = 0; r < p; ++r) {
        int x = x0 + r - q;
        if (x < 0 || x >= cube.n) continue;
        for (int c = 0; c < p; ++c) {
            int y = y0 + c - q;
            if (y < 0 || y >= cube.m) continue;
            for (int d = 0; d < cube.l; ++d) out.at(r, c, d) = cube.at(x, y, d);
        }
    }
    return out;
}

Patch patch_forward(const Patch& scene_patch, const CodedApertureSet& set, int x0, int y0) {
    if (set.mode != Mode::periodic)
        throw std::invalid_argument("patch_forward: requires periodic apertures");
    if (scene_patch.p % 2 == 0) throw std::invalid_argument("patch_forward: p must be odd");
    const int p = scene_patch.p, l = scene_patch.depth, q = p / 2;
    Patch out;
    out.p = p;
    out.depth = set.k;
    out.v.assign(std::size_t(p) * p * set.k, 0.0);
    for (int snap = 0; snap < set.k; ++snap) {
        const auto& blk = set.blocks[snap];
        const int b = blk.b;
        for (int r = 0; r < p; ++r) {
            int rb = aperture::pmod(x0 + r - q, b);
            for (int c = 0; c < p; ++c) {
                double acc = 0.0;
                for (int band = 0; band < l; ++band)
                    acc += scene_patch.at(r, c, band) *
                           blk.at(rb, aperture::pmod(y0 + c - q + band, b));
                out.at(r, c, snap) = acc;
            }
        }
    }
    return out;
}

void save_measurement(const MeasurementCube& mc, const std::string& path) {
    if (mc.n < 1 || mc.m < 1 || mc.k < 1)
        throw std::invalid_argument("save_measurement: dimensions must be positive");
    if (mc.v.size() != mc.size())
        throw std::invalid_argument("save_measurement: payload size mismatch");
    for (double x : mc.v)
        if (!std::isfinite(x)) throw std::invalid_argument("save_measurement: non-finite value");
    std::vector<std::uint8_t> bytes;
    char header[128];
    int len = std::snprintf(header, sizeof(header),
                            "MSC1\n{\"n\":%d,\"m\":%d,\"k\":%d,\"dtype\":\"f64le\"}\n", mc.n,
                            mc.m, mc.k);
    bytes.insert(bytes.end(), header, header + len);
    append_f64le(bytes, mc.v.data(), mc.v.size());
    write_file_bytes(path, bytes.data(), bytes.size());
}

MeasurementCube load_measurement(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 5 || std::memcmp(bytes.data(), "MSC1\n", 5) != 0)
        throw FormatError(path + ": bad magic, expected MSC1");
    std::size_t hdr_end = 5;
    while (hdr_end < bytes.size() && bytes[hdr_end] != '\n') ++hdr_end;
    if (hdr_end >= bytes.size()) throw FormatError(path + ": unterminated header");
    json hdr;
    try {
        hdr = json::parse(bytes.begin() + 5, bytes.begin() + hdr_end);
    } catch (const json::exception& e) {
        throw FormatError(path + ": header is not valid JSON: " + e.what());
    }
    MeasurementCube mc;
    mc.n = hdr.at("n").get<int>();
    mc.m = hdr.at("m").get<int>();
    mc.k = hdr.at("k").get<int>();
    if (mc.n < 1 || mc.m < 1 || mc.k < 1)
        throw std::invalid_argument(path + ": header dimensions must be >= 1");
    std::size_t payload = bytes.size() - hdr_end - 1;
    if (payload != mc.size() * 8)
        throw FormatError(path + ": payload size does not match header dimensions");
    mc.v.resize(mc.size());
    read_f64le(bytes.data() + hdr_end + 1, mc.v.data(), mc.v.size());
    for (double x : mc.v)
        if (!std::isfinite(x)) throw FormatError(path + ": non-finite value in payload");
    return mc;
}

}  // namespace ccnn::forward_model
