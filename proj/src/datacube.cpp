#include "ccnn/datacube.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"

namespace ccnn::datacube {

using nlohmann::json;

std::size_t LabelMap::labeled_count() const {
    std::size_t c = 0;
    for (auto x : v)
        if (x != 0) ++c;
    return c;
}

namespace {

// seed streams for the synthetic scene generator
enum : std::uint64_t { kStreamSites = 1, kStreamSpectra = 2, kStreamJitter = 3 };

std::vector<double> class_signature(int l, Rng& rng) {
    // 2-3 Gaussian bumps over band index, rescaled into [0.05, 1]
    int bumps = 2 + static_cast<int>(rng.uniform_int(2));
    std::vector<double> center(bumps), width(bumps), amp(bumps);
    for (int b = 0; b < bumps; ++b) {
        center[b] = rng.uniform(0.0, l - 1.0);
        width[b] = rng.uniform(std::max(0.75, l / 8.0), std::max(1.0, l / 3.0));
        amp[b] = rng.uniform(0.3, 1.0);
    }
    std::vector<double> sig(l, 0.0);
    for (int band = 0; band < l; ++band)
        for (int b = 0; b < bumps; ++b) {
            double d = (band - center[b]) / width[b];
            sig[band] += amp[b] * std::exp(-0.5 * d * d);
        }
    // scale by the peak so the shape (and hence the spectral direction)
    // survives; values land in (0.05, 1]
    double hi = *std::max_element(sig.begin(), sig.end());
    for (int band = 0; band < l; ++band) sig[band] = 0.05 + 0.95 * (sig[band] / hi);
    return sig;
}

}  // namespace

std::pair<HyperCube, LabelMap> generate_synthetic_scene(int n, int m, int l,
                                                        int classes,
                                                        std::uint64_t seed) {
    if (n < 8 || m < 8) throw std::invalid_argument("synthetic scene: n, m must be >= 8");
    if (l < 2) throw std::invalid_argument("synthetic scene: l must be >= 2");
    if (classes < 2 || classes > 16)
        throw std::invalid_argument("synthetic scene: classes must be in [2, 16]");

    // distinct Voronoi sites
    Rng site_rng(mix_seed(seed, kStreamSites));
    std::vector<PixelCoord> sites;
    while (static_cast<int>(sites.size()) < classes) {
        PixelCoord p{static_cast<int>(site_rng.uniform_int(n)),
                     static_cast<int>(site_rng.uniform_int(m))};
        if (std::find(sites.begin(), sites.end(), p) == sites.end()) sites.push_back(p);
    }

    std::vector<int> region(std::size_t(n) * m);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < m; ++y) {
            long best = -1;
            int cls = 0;
            for (int c = 0; c < classes; ++c) {
                long dx = x - sites[c].first, dy = y - sites[c].second;
                long d2 = dx * dx + dy * dy;
                if (best < 0 || d2 < best) {
                    best = d2;
                    cls = c;
                }
            }
            region[std::size_t(x) * m + y] = cls;
        }

    Rng spec_rng(mix_seed(seed, kStreamSpectra));
    std::vector<std::vector<double>> sig(classes);
    for (int c = 0; c < classes; ++c) sig[c] = class_signature(l, spec_rng);

    HyperCube cube;
    cube.n = n;
    cube.m = m;
    cube.l = l;
    cube.v.resize(cube.size());
    Rng jitter_rng(mix_seed(seed, kStreamJitter));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < m; ++y) {
            double j = jitter_rng.uniform(0.9, 1.1);
            const auto& s = sig[region[std::size_t(x) * m + y]];
            for (int band = 0; band < l; ++band) cube.at(x, y, band) = s[band] * j;
        }

    LabelMap labels;
    labels.n = n;
    labels.m = m;
    labels.mc = classes;
    labels.v.assign(std::size_t(n) * m, 0);
    auto is_border = [&](int x, int y) {
        int r = region[std::size_t(x) * m + y];
        if (x > 0 && region[std::size_t(x - 1) * m + y] != r) return true;
        if (x + 1 < n && region[std::size_t(x + 1) * m + y] != r) return true;
        if (y > 0 && region[std::size_t(x) * m + y - 1] != r) return true;
        if (y + 1 < m && region[std::size_t(x) * m + y + 1] != r) return true;
        return false;
    };
    std::size_t unlabeled = 0;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < m; ++y) {
            if (is_border(x, y)) {
                ++unlabeled;
            } else {
                labels.at(x, y) = static_cast<std::uint8_t>(region[std::size_t(x) * m + y] + 1);
            }
        }
    (void)unlabeled;  // Voronoi borders with >= 2 classes always exceed 1%

    // a site whose whole region is border would lose its class; relabel sites
    for (int c = 0; c < classes; ++c)
        labels.at(sites[c].first, sites[c].second) = static_cast<std::uint8_t>(c + 1);

    return {std::move(cube), std::move(labels)};
}

SplitIndex split_train_test(const LabelMap& labels, double fraction,
                            std::uint64_t seed, bool stratified) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split: fraction must lie in (0, 1)");
    std::vector<PixelCoord> labeled;
    for (int x = 0; x < labels.n; ++x)
        for (int y = 0; y < labels.m; ++y)
            if (labels.at(x, y) != 0) labeled.emplace_back(x, y);
    if (labeled.empty()) throw std::runtime_error("split: no labeled pixels");

    SplitIndex out;
    out.seed = seed;
    Rng rng(mix_seed(seed, 0));
    if (!stratified) {
        rng.shuffle(labeled);
        std::size_t k = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(labeled.size())));
        out.train.assign(labeled.begin(), labeled.begin() + k);
        out.test.assign(labeled.begin() + k, labeled.end());
    } else {
        std::vector<std::vector<PixelCoord>> per_class(labels.mc + 1);
        for (auto& p : labeled) per_class[labels.at(p.first, p.second)].push_back(p);
        for (int c = 1; c <= labels.mc; ++c) {
            auto& v = per_class[c];
            if (v.empty()) continue;
            rng.shuffle(v);
            std::size_t k = static_cast<std::size_t>(
                std::llround(fraction * static_cast<double>(v.size())));
            out.train.insert(out.train.end(), v.begin(), v.begin() + k);
            out.test.insert(out.test.end(), v.begin() + k, v.end());
        }
    }
    return out;
}

void normalize_cube(HyperCube& cube) {
    double mx = 0.0;
    for (double x : cube.v) mx = std::max(mx, x);
    if (mx <= 0.0) return;
    for (double& x : cube.v) x /= mx;
}

void save_cube(const HyperCube& cube, const std::string& path) {
    if (cube.n < 1 || cube.m < 1 || cube.l < 1)
        throw std::invalid_argument("save_cube: dimensions must be positive");
    if (cube.v.size() != cube.size())
        throw std::invalid_argument("save_cube: payload size does not match dimensions");
    for (double x : cube.v)
        if (!std::isfinite(x)) throw std::invalid_argument("save_cube: non-finite value");

    std::vector<std::uint8_t> bytes;
    char header[160];
    int len = std::snprintf(header, sizeof(header),
                            "HSC1\n{\"n\":%d,\"m\":%d,\"l\":%d,\"dtype\":\"f64le\","
                            "\"order\":\"bsq-rowmajor\"}\n",
                            cube.n, cube.m, cube.l);
    bytes.insert(bytes.end(), header, header + len);
    append_f64le(bytes, cube.v.data(), cube.v.size());
    write_file_bytes(path, bytes.data(), bytes.size());
}

HyperCube load_cube(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 5 || std::memcmp(bytes.data(), "HSC1\n", 5) != 0)
        throw FormatError(path + ": bad magic, expected HSC1");
    std::size_t hdr_end = 5;
    while (hdr_end < bytes.size() && bytes[hdr_end] != '\n') ++hdr_end;
    if (hdr_end >= bytes.size()) throw FormatError(path + ": unterminated header");
    json hdr;
    try {
        hdr = json::parse(bytes.begin() + 5, bytes.begin() + hdr_end);
    } catch (const json::exception& e) {
        throw FormatError(path + ": header is not valid JSON: " + e.what());
    }
    for (const char* key : {"n", "m", "l", "dtype", "order"})
        if (!hdr.contains(key)) throw FormatError(path + ": header missing field '" + key + "'");
    if (hdr["dtype"] != "f64le") throw FormatError(path + ": unsupported dtype");
    if (hdr["order"] != "bsq-rowmajor") throw FormatError(path + ": unsupported order");

    HyperCube cube;
    cube.n = hdr["n"].get<int>();
    cube.m = hdr["m"].get<int>();
    cube.l = hdr["l"].get<int>();
    if (cube.n < 1) throw std::invalid_argument(path + ": header field 'n' must be >= 1");
    if (cube.m < 1) throw std::invalid_argument(path + ": header field 'm' must be >= 1");
    if (cube.l < 1) throw std::invalid_argument(path + ": header field 'l' must be >= 1");

    std::size_t payload = bytes.size() - hdr_end - 1;
    if (payload != cube.size() * 8)
        throw FormatError(path + ": payload size " + std::to_string(payload) +
                          " does not match header dimensions (expected " +
                          std::to_string(cube.size() * 8) + " bytes)");
    cube.v.resize(cube.size());
    read_f64le(bytes.data() + hdr_end + 1, cube.v.data(), cube.v.size());
    for (double x : cube.v)
        if (!std::isfinite(x)) throw FormatError(path + ": non-finite value in payload");
    return cube;
}

void save_labels(const LabelMap& labels, const std::string& path) {
    if (labels.n < 1 || labels.m < 1)
        throw std::invalid_argument("save_labels: dimensions must be positive");
    if (labels.v.size() != std::size_t(labels.n) * labels.m)
        throw std::invalid_argument("save_labels: payload size does not match dimensions");
    // PGM raster is m columns wide, n rows tall
    char header[64];
    int len = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", labels.m, labels.n);
    std::vector<std::uint8_t> bytes(header, header + len);
    bytes.insert(bytes.end(), labels.v.begin(), labels.v.end());
    write_file_bytes(path, bytes.data(), bytes.size());
}

LabelMap load_labels(const std::string& path) {
    auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
        return std::string(bytes.begin() + start, bytes.begin() + pos);
    };
    if (token() != "P5") throw FormatError(path + ": bad magic, expected P5");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw FormatError(path + ": malformed PGM header");
    }
    if (w < 1 || h < 1) throw std::invalid_argument(path + ": PGM dimensions must be >= 1");
    if (maxval != 255) throw FormatError(path + ": PGM maxval must be 255");
    ++pos;  // single whitespace after maxval
    if (bytes.size() - pos != std::size_t(w) * h)
        throw FormatError(path + ": PGM payload size does not match dimensions");
    LabelMap labels;
    labels.n = h;
    labels.m = w;
    labels.v.assign(bytes.begin() + pos, bytes.end());
    labels.mc = 0;
    for (auto x : labels.v) labels.mc = std::max(labels.mc, static_cast<int>(x));
    return labels;
}

}  // namespace ccnn::datacube
