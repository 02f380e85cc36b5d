#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ccnn/evalbench.hpp"
#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"

using namespace ccnn;
using namespace ccnn::evalbench;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ConfusionMatrix make_cm(int classes, std::vector<std::int64_t> counts) {
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts = std::move(counts);
    return cm;
}

}  // namespace

TEST_SUITE("evalbench") {

TEST_CASE("confusion: diagonal for perfect predictions, totals add up") {
    std::vector<int> truth = {1, 2, 3, 1, 2, 3};
    auto cm = confusion(truth, truth, 3);
    CHECK(cm.total() == 6);
    for (int t = 0; t < 3; ++t)
        for (int p = 0; p < 3; ++p) CHECK(cm.at(t, p) == (t == p ? 2 : 0));

    auto cm2 = confusion({2}, {1}, 2);
    CHECK(cm2.at(1, 0) == 1);
    CHECK(cm2.total() == 1);

    CHECK_THROWS_AS(confusion({0}, {1}, 2), std::invalid_argument);
    CHECK_THROWS_AS(confusion({1}, {3}, 2), std::invalid_argument);
    CHECK_THROWS_AS(confusion({1, 2}, {1}, 2), std::invalid_argument);
}

TEST_CASE("metrics: hand-derived oracle for [[8,2],[1,9]]") {
    auto r = metrics(make_cm(2, {8, 2, 1, 9}));
    CHECK(std::fabs(r.oa - 0.85) <= 1e-12);
    CHECK(std::fabs(r.aa - 0.85) <= 1e-12);
    CHECK(std::fabs(r.kappa - 0.70) <= 1e-12);  // p_e = (10*9 + 10*11)/400 = 0.5
    CHECK(r.per_class[0] == doctest::Approx(0.8));
    CHECK(r.per_class[1] == doctest::Approx(0.9));
}

TEST_CASE("metrics: identity confusion gives all ones; kappa = 1 iff diagonal") {
    auto r = metrics(make_cm(3, {4, 0, 0, 0, 7, 0, 0, 0, 2}));
    CHECK(r.oa == 1.0);
    CHECK(r.aa == 1.0);
    CHECK(r.kappa == doctest::Approx(1.0));

    auto r2 = metrics(make_cm(2, {5, 1, 0, 6}));
    CHECK(r2.kappa < 1.0);

    CHECK_THROWS_AS(metrics(make_cm(2, {0, 0, 0, 0})), std::invalid_argument);
}

TEST_CASE("metrics: kappa invariant under class permutation") {
    auto cm = make_cm(3, {8, 2, 1, 3, 9, 2, 0, 1, 7});
    auto base = metrics(cm);
    // permutation (1 2 3) -> (3 1 2) applied to rows and columns
    int perm[3] = {2, 0, 1};
    ConfusionMatrix pcm;
    pcm.classes = 3;
    pcm.counts.assign(9, 0);
    for (int t = 0; t < 3; ++t)
        for (int p = 0; p < 3; ++p) pcm.at(perm[t], perm[p]) = cm.at(t, p);
    auto permuted = metrics(pcm);
    CHECK(permuted.kappa == doctest::Approx(base.kappa).epsilon(1e-12));
    CHECK(permuted.oa == doctest::Approx(base.oa).epsilon(1e-12));
}

TEST_CASE("metrics: independent uniform predictions give kappa near zero") {
    Rng rng(777);
    std::vector<int> truth(10000), pred(10000);
    for (int i = 0; i < 10000; ++i) {
        truth[i] = 1 + static_cast<int>(rng.uniform_int(4));
        pred[i] = 1 + static_cast<int>(rng.uniform_int(4));
    }
    auto r = metrics(confusion(truth, pred, 4));
    CHECK(std::fabs(r.kappa) < 0.05);
}

TEST_CASE("metrics: AA skips classes absent from the test split") {
    // class 3 has no truth samples
    auto r = metrics(make_cm(3, {4, 0, 0, 1, 5, 0, 0, 0, 0}));
    CHECK(r.aa == doctest::Approx((1.0 + 5.0 / 6.0) / 2.0));
}

TEST_CASE("compression ratio: paper operating points round to about 5%") {
    double pavia = compression_ratio(5, 103);
    double salinas = compression_ratio(10, 192);
    CHECK(pavia == doctest::Approx(0.048543689320388348774).epsilon(1e-15));
    CHECK(salinas == doctest::Approx(0.052083333333333335646).epsilon(1e-15));
    CHECK(std::fabs(pavia - 0.05) <= 0.005);
    CHECK(std::fabs(salinas - 0.05) <= 0.005);
    CHECK(compression_ratio(7, 7) == 1.0);
    CHECK_THROWS_AS(compression_ratio(0, 5), std::invalid_argument);
}

TEST_CASE("svm: separates two gaussian clouds verified by a brute-force line") {
    Rng rng(888);
    std::vector<std::vector<double>> train, test;
    std::vector<int> ytrain, ytest;
    auto make_cloud = [&](double cx, double cy, int label, int count, bool is_test) {
        for (int i = 0; i < count; ++i) {
            std::vector<double> p = {cx + 0.5 * rng.normal(), cy + 0.5 * rng.normal()};
            if (is_test) {
                test.push_back(p);
                ytest.push_back(label);
            } else {
                train.push_back(p);
                ytrain.push_back(label);
            }
        }
    };
    make_cloud(0.0, 0.0, 1, 40, false);
    make_cloud(4.0, 4.0, 2, 40, false);
    make_cloud(0.0, 0.0, 1, 40, true);
    make_cloud(4.0, 4.0, 2, 40, true);

    // oracle: the perpendicular bisector x+y=4 must separate everything
    for (std::size_t i = 0; i < train.size(); ++i) {
        double side = train[i][0] + train[i][1] - 4.0;
        CHECK((ytrain[i] == 1 ? side < 0 : side > 0));
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
        double side = test[i][0] + test[i][1] - 4.0;
        CHECK((ytest[i] == 1 ? side < 0 : side > 0));
    }

    SvmConfig cfg;
    cfg.c = 1.0;
    cfg.epochs = 200;
    cfg.eta = 0.1;
    auto model = svm_train(train, ytrain, 2, cfg);
    int correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
        correct += svm_predict(model, test[i]) == ytest[i];
    CHECK(correct == static_cast<int>(test.size()));
}

TEST_CASE("svm: duplicating every sample leaves the model unchanged") {
    Rng rng(889);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        y.push_back(1 + static_cast<int>(rng.uniform_int(3)));
    }
    SvmConfig cfg;
    cfg.epochs = 80;
    auto base = svm_train(x, y, 3, cfg);

    auto x2 = x;
    auto y2 = y;
    x2.insert(x2.end(), x.begin(), x.end());
    y2.insert(y2.end(), y.begin(), y.end());
    auto doubled = svm_train(x2, y2, 3, cfg);
    for (std::size_t i = 0; i < base.w.size(); ++i)
        CHECK(std::fabs(base.w[i] - doubled.w[i]) <= 1e-9);
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(base.b[c] - doubled.b[c]) <= 1e-9);
}

TEST_CASE("svm: deterministic; single-class data rejected") {
    Rng rng(890);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        y.push_back(1 + (i % 2));
    }
    SvmConfig cfg;
    cfg.epochs = 50;
    auto a = svm_train(x, y, 2, cfg);
    auto b = svm_train(x, y, 2, cfg);
    CHECK(a.w == b.w);
    CHECK(a.b == b.b);

    std::vector<int> ones(y.size(), 1);
    CHECK_THROWS_AS(svm_train(x, ones, 2, cfg), std::runtime_error);
}

TEST_CASE("render_map: all-unlabeled map renders black") {
    datacube::LabelMap pred;
    pred.n = 4;
    pred.m = 5;
    pred.v.assign(20, 0);
    auto path = tmp_path("map.ppm");
    render_map(pred, path);
    auto bytes = read_file_bytes(path);
    // header "P6\n5 4\n255\n" then 60 zero bytes
    std::string header(bytes.begin(), bytes.begin() + 11);
    CHECK(header == "P6\n5 4\n255\n");
    CHECK(bytes.size() == 11 + 60);
    for (std::size_t i = 11; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("compare: single method yields one row; order follows the config") {
    CompareConfig cfg;
    cfg.scene.synth = true;
    cfg.scene.n = 12;
    cfg.scene.m = 12;
    cfg.scene.l = 3;
    cfg.scene.classes = 2;
    cfg.seed = 5;
    cfg.snapshots = 2;
    cfg.block = 2;
    cfg.patch = 3;
    cfg.train.epochs = 2;
    cfg.train.batch = 8;
    cfg.train.eta = 0.02;
    cfg.svm.epochs = 20;
    cfg.methods = {"original-svm"};
    auto rows = compare(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == "original-svm");
    CHECK(rows[0].report.oa >= 0.0);
    CHECK(rows[0].report.oa <= 1.0);

    cfg.methods = {"rand-compress-svm", "original-svm"};
    auto rows2 = compare(cfg);
    REQUIRE(rows2.size() == 2);
    CHECK(rows2[0].method == "rand-compress-svm");
    CHECK(rows2[1].method == "original-svm");
}

TEST_CASE("compare: deterministic metric fields for a fixed seed") {
    CompareConfig cfg;
    cfg.scene.synth = true;
    cfg.scene.n = 12;
    cfg.scene.m = 12;
    cfg.scene.l = 3;
    cfg.scene.classes = 2;
    cfg.seed = 6;
    cfg.snapshots = 2;
    cfg.block = 2;
    cfg.patch = 3;
    cfg.train.epochs = 2;
    cfg.train.batch = 8;
    cfg.svm.epochs = 20;
    cfg.methods = {"ccnn", "rand-compress-svm"};
    auto a = compare(cfg);
    auto b = compare(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].report.oa == b[i].report.oa);
        CHECK(a[i].report.aa == b[i].report.aa);
        CHECK(a[i].report.kappa == b[i].report.kappa);
        CHECK(a[i].report.confusion.counts == b[i].report.confusion.counts);
    }
}

TEST_CASE("compare: unknown method rejected; csv header fixed") {
    CompareConfig cfg;
    cfg.scene.synth = true;
    cfg.methods = {"definitely-not-a-method"};
    CHECK_THROWS_AS(compare(cfg), std::invalid_argument);

    std::vector<CompareRow> rows;
    CompareRow row;
    row.method = "ccnn";
    row.report.oa = 0.5;
    row.report.aa = 0.25;
    row.report.kappa = 0.125;
    row.seconds = 1.0;
    rows.push_back(row);
    auto csv = compare_rows_to_csv(rows);
    CHECK(csv.rfind("method,oa,aa,kappa,seconds\n", 0) == 0);
    CHECK(csv.find("ccnn,0.500000,0.250000,0.125000,") != std::string::npos);
}

}  // TEST_SUITE
