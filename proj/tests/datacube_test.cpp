#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "ccnn/datacube.hpp"
#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"
#include "oracles.hpp"

using namespace ccnn;
using namespace ccnn::datacube;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<double> pixel_spectrum(const HyperCube& cube, int x, int y) {
    std::vector<double> s(cube.l);
    for (int band = 0; band < cube.l; ++band) s[band] = cube.at(x, y, band);
    return s;
}

}  // namespace

TEST_SUITE("datacube") {

TEST_CASE("synthetic scene: labels match signature families") {
    auto [cube, labels] = generate_synthetic_scene(8, 8, 2, 2, 1);
    REQUIRE(labels.mc == 2);
    // spectra are class signatures times a scalar jitter, so the spectral
    // angle within a class is 0 and across classes is positive
    std::map<int, std::vector<double>> ref;
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            int c = labels.at(x, y);
            if (c == 0) continue;
            auto s = pixel_spectrum(cube, x, y);
            if (!ref.count(c)) ref[c] = s;
            CHECK(oracles::spectral_angle(s, ref[c]) < 1e-6);
        }
    REQUIRE(ref.size() == 2);
    CHECK(oracles::spectral_angle(ref[1], ref[2]) > 1e-4);
}

TEST_CASE("synthetic scene: seeded determinism") {
    auto [c1, l1] = generate_synthetic_scene(16, 12, 4, 3, 9);
    auto [c2, l2] = generate_synthetic_scene(16, 12, 4, 3, 9);
    CHECK(c1.v == c2.v);
    CHECK(l1.v == l2.v);
}

TEST_CASE("synthetic scene: between-class angles exceed within-class angles") {
    auto [cube, labels] = generate_synthetic_scene(48, 48, 8, 5, 3);
    std::map<int, std::vector<std::vector<double>>> spectra;
    for (int x = 0; x < 48; ++x)
        for (int y = 0; y < 48; ++y) {
            int c = labels.at(x, y);
            if (c == 0 || spectra[c].size() >= 20) continue;
            spectra[c].push_back(pixel_spectrum(cube, x, y));
        }
    REQUIRE(spectra.size() == 5);
    double within = 0.0, between = 0.0;
    long nw = 0, nb = 0;
    for (auto& [ca, va] : spectra)
        for (auto& [cb, vb] : spectra)
            for (std::size_t i = 0; i < va.size(); ++i)
                for (std::size_t j = 0; j < vb.size(); ++j) {
                    if (ca == cb && i < j) {
                        within += oracles::spectral_angle(va[i], va[j]);
                        ++nw;
                    } else if (ca < cb) {
                        between += oracles::spectral_angle(va[i], vb[j]);
                        ++nb;
                    }
                }
    CHECK(between / nb > within / nw);
}

TEST_CASE("synthetic scene: label map has exactly `classes` labels and >= 1% unlabeled") {
    for (int classes : {2, 5, 16}) {
        auto [cube, labels] = generate_synthetic_scene(24, 24, 3, classes, 5 + classes);
        std::set<int> distinct;
        std::size_t unlabeled = 0;
        for (auto v : labels.v) {
            if (v == 0)
                ++unlabeled;
            else
                distinct.insert(v);
        }
        CHECK(static_cast<int>(distinct.size()) == classes);
        CHECK(unlabeled >= labels.v.size() / 100);
    }
}

TEST_CASE("synthetic scene: argument validation") {
    CHECK_THROWS_AS(generate_synthetic_scene(4, 8, 2, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic_scene(8, 8, 1, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic_scene(8, 8, 2, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic_scene(8, 8, 2, 17, 0), std::invalid_argument);
}

TEST_CASE("split: 100 labeled pixels at 0.3 give 30/70") {
    LabelMap labels;
    labels.n = 10;
    labels.m = 10;
    labels.mc = 2;
    labels.v.assign(100, 1);
    auto split = split_train_test(labels, 0.3, 11);
    CHECK(split.train.size() == 30);
    CHECK(split.test.size() == 70);
}

TEST_CASE("split: all pixels unlabeled is an error") {
    LabelMap labels;
    labels.n = 8;
    labels.m = 8;
    labels.v.assign(64, 0);
    CHECK_THROWS(split_train_test(labels, 0.3, 1));
}

TEST_CASE("split: same seed twice gives the identical split") {
    auto [cube, labels] = generate_synthetic_scene(16, 16, 2, 3, 2);
    auto a = split_train_test(labels, 0.3, 5);
    auto b = split_train_test(labels, 0.3, 5);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
}

TEST_CASE("split: partition property over fractions and seeds") {
    auto [cube, labels] = generate_synthetic_scene(20, 20, 2, 4, 8);
    std::set<PixelCoord> all_labeled;
    for (int x = 0; x < labels.n; ++x)
        for (int y = 0; y < labels.m; ++y)
            if (labels.at(x, y)) all_labeled.insert({x, y});
    for (double fraction : {0.1, 0.3, 0.5})
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            for (bool stratified : {false, true}) {
                auto s = split_train_test(labels, fraction, seed, stratified);
                std::set<PixelCoord> train(s.train.begin(), s.train.end());
                std::set<PixelCoord> test(s.test.begin(), s.test.end());
                CHECK(train.size() == s.train.size());
                CHECK(test.size() == s.test.size());
                std::set<PixelCoord> both;
                both.insert(train.begin(), train.end());
                both.insert(test.begin(), test.end());
                CHECK(both == all_labeled);
                CHECK(train.size() + test.size() == all_labeled.size());
                if (!stratified)
                    CHECK(s.train.size() ==
                          static_cast<std::size_t>(std::llround(fraction * all_labeled.size())));
            }
        }
}

TEST_CASE("split: fraction bounds") {
    LabelMap labels;
    labels.n = 8;
    labels.m = 8;
    labels.mc = 1;
    labels.v.assign(64, 1);
    CHECK_THROWS_AS(split_train_test(labels, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_train_test(labels, 1.0, 0), std::invalid_argument);
}

TEST_CASE("cube io: save/load round trip is bit exact") {
    HyperCube cube;
    cube.n = 4;
    cube.m = 4;
    cube.l = 2;
    cube.v.resize(cube.size());
    Rng rng(3);
    for (auto& x : cube.v) x = rng.uniform(0.0, 2.0);
    auto path = tmp_path("rt.hsc");
    save_cube(cube, path);
    auto loaded = load_cube(path);
    CHECK(loaded.n == 4);
    CHECK(loaded.m == 4);
    CHECK(loaded.l == 2);
    CHECK(loaded.v == cube.v);
}

TEST_CASE("cube io: random round trips") {
    Rng rng(55);
    for (int trial = 0; trial < 5; ++trial) {
        HyperCube cube;
        cube.n = 1 + static_cast<int>(rng.uniform_int(6));
        cube.m = 1 + static_cast<int>(rng.uniform_int(6));
        cube.l = 1 + static_cast<int>(rng.uniform_int(4));
        cube.v.resize(cube.size());
        for (auto& x : cube.v) x = rng.uniform(0.0, 10.0);
        auto path = tmp_path("rt2.hsc");
        save_cube(cube, path);
        CHECK(load_cube(path).v == cube.v);
    }
}

TEST_CASE("cube io: truncated payload is a format error") {
    HyperCube cube;
    cube.n = 4;
    cube.m = 4;
    cube.l = 2;
    cube.v.assign(cube.size(), 1.0);
    auto path = tmp_path("trunc.hsc");
    save_cube(cube, path);
    auto bytes = read_file_bytes(path);
    bytes.resize(bytes.size() - 16);
    write_file_bytes(path, bytes.data(), bytes.size());
    CHECK_THROWS_AS(load_cube(path), FormatError);
}

TEST_CASE("cube io: zero dimension in header is rejected") {
    auto path = tmp_path("zero.hsc");
    std::string content =
        "HSC1\n{\"n\":0,\"m\":4,\"l\":2,\"dtype\":\"f64le\",\"order\":\"bsq-rowmajor\"}\n";
    write_file_bytes(path, content.data(), content.size());
    CHECK_THROWS_AS(load_cube(path), std::invalid_argument);
}

TEST_CASE("cube io: bad magic is a format error") {
    auto path = tmp_path("magic.hsc");
    std::string content = "NOPE\nrest";
    write_file_bytes(path, content.data(), content.size());
    CHECK_THROWS_AS(load_cube(path), FormatError);
}

TEST_CASE("label io: round trip and pgm shape") {
    auto [cube, labels] = generate_synthetic_scene(12, 9, 2, 3, 4);
    auto path = tmp_path("labels.pgm");
    save_labels(labels, path);
    auto loaded = load_labels(path);
    CHECK(loaded.n == labels.n);
    CHECK(loaded.m == labels.m);
    CHECK(loaded.mc == labels.mc);
    CHECK(loaded.v == labels.v);
    // header advertises m columns, n rows
    std::ifstream f(path, std::ios::binary);
    std::string magic;
    int w, h;
    f >> magic >> w >> h;
    CHECK(magic == "P5");
    CHECK(w == labels.m);
    CHECK(h == labels.n);
}

TEST_CASE("normalize_cube scales the maximum to 1") {
    HyperCube cube;
    cube.n = 2;
    cube.m = 2;
    cube.l = 1;
    cube.v = {0.5, 1.0, 2.0, 0.25};
    normalize_cube(cube);
    CHECK(cube.v[2] == 1.0);
    CHECK(cube.v[0] == doctest::Approx(0.25));
}

}  // TEST_SUITE
