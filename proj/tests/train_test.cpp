#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "ccnn/datacube.hpp"
#include "ccnn/parallel.hpp"
#include "ccnn/rng.hpp"
#include "ccnn/train.hpp"

using namespace ccnn;
using namespace ccnn::train;
using aperture::CodedApertureSet;
using net3d::NetGrads;
using net3d::Tensor4;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

PatchSample random_sample(int p, int l, int x0, int y0, int label, std::uint64_t seed) {
    PatchSample s;
    s.scene.p = p;
    s.scene.depth = l;
    s.scene.v.resize(std::size_t(p) * p * l);
    Rng rng(seed);
    for (auto& x : s.scene.v) x = rng.uniform(0.0, 1.0);
    s.x0 = x0;
    s.y0 = y0;
    s.label = label;
    return s;
}

CodedApertureSet random_blocks(int k, int b, std::uint64_t seed) {
    CodedApertureSet set;
    set.mode = aperture::Mode::periodic;
    set.k = k;
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        aperture::BasicBlock blk;
        blk.b = b;
        blk.v.resize(std::size_t(b) * b);
        for (auto& x : blk.v) x = rng.uniform();
        set.blocks.push_back(std::move(blk));
    }
    return set;
}

double joint_loss(const net3d::NetworkParams& net, const CodedApertureSet& blocks,
                  const std::vector<PatchSample>& samples) {
    double total = 0.0;
    for (const auto& s : samples) {
        net3d::ForwardCache cache;
        auto logits =
            net3d::forward(net, patch_to_tensor(aperture_layer_forward(s, blocks)), cache);
        total += net3d::loss(net3d::softmax(logits), s.label - 1);
    }
    return total / static_cast<double>(samples.size());
}

void joint_grads(const net3d::NetworkParams& net, const CodedApertureSet& blocks,
                 const std::vector<PatchSample>& samples, NetGrads& ng, ApertureGrads& ag) {
    double inv_n = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        net3d::ForwardCache cache;
        auto logits =
            net3d::forward(net, patch_to_tensor(aperture_layer_forward(s, blocks)), cache);
        auto dlogits = net3d::loss_grad(net3d::softmax(logits), s.label - 1);
        for (auto& g : dlogits) g *= inv_n;
        Tensor4 dinput;
        net3d::backward(net, cache, dlogits, ng, &dinput);
        forward_model::Patch dmeas;
        dmeas.p = s.scene.p;
        dmeas.depth = blocks.k;
        dmeas.v.resize(std::size_t(dmeas.p) * dmeas.p * blocks.k);
        for (int d = 0; d < blocks.k; ++d)
            for (int r = 0; r < dmeas.p; ++r)
                for (int c = 0; c < dmeas.p; ++c) dmeas.at(r, c, d) = dinput.at(d, r, c, 0);
        aperture_layer_backward(s, dmeas, ag);
    }
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("aperture layer forward equals patch_forward and is linear in C") {
    auto sample = random_sample(3, 4, 5, 9, 1, 11);
    auto blocks = random_blocks(2, 3, 12);
    auto a = aperture_layer_forward(sample, blocks);
    auto b = forward_model::patch_forward(sample.scene, blocks, sample.x0, sample.y0);
    CHECK(a.v == b.v);

    auto doubled = blocks;
    for (auto& blk : doubled.blocks)
        for (auto& x : blk.v) x *= 2.0;
    auto a2 = aperture_layer_forward(sample, doubled);
    for (std::size_t i = 0; i < a.v.size(); ++i)
        CHECK(a2.v[i] == doctest::Approx(2.0 * a.v[i]).epsilon(1e-12));

    // superposition in C
    auto blocks2 = random_blocks(2, 3, 13);
    auto mixed = blocks;
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < mixed.blocks[k].v.size(); ++i)
            mixed.blocks[k].v[i] = 0.6 * blocks.blocks[k].v[i] + 0.4 * blocks2.blocks[k].v[i];
    auto am = aperture_layer_forward(sample, mixed);
    auto ab = aperture_layer_forward(sample, blocks2);
    for (std::size_t i = 0; i < am.v.size(); ++i)
        CHECK(am.v[i] == doctest::Approx(0.6 * a.v[i] + 0.4 * ab.v[i]).epsilon(1e-12));

    // superposition in F
    auto sample2 = random_sample(3, 4, 5, 9, 1, 14);
    PatchSample sum = sample;
    for (std::size_t i = 0; i < sum.scene.v.size(); ++i)
        sum.scene.v[i] = sample.scene.v[i] + sample2.scene.v[i];
    auto s1 = aperture_layer_forward(sample, blocks);
    auto s2 = aperture_layer_forward(sample2, blocks);
    auto ss = aperture_layer_forward(sum, blocks);
    for (std::size_t i = 0; i < ss.v.size(); ++i)
        CHECK(ss.v[i] == doctest::Approx(s1.v[i] + s2.v[i]).epsilon(1e-12));
}

TEST_CASE("zero blocks: zero measurement, logits equal the bias path") {
    auto sample = random_sample(3, 3, 0, 0, 1, 21);
    CodedApertureSet zero;
    zero.mode = aperture::Mode::periodic;
    zero.k = 2;
    zero.blocks.push_back({2, {0, 0, 0, 0}});
    zero.blocks.push_back({2, {0, 0, 0, 0}});
    auto meas = aperture_layer_forward(sample, zero);
    for (double x : meas.v) CHECK(x == 0.0);

    auto net = net3d::build_network(2, 3, 2, 22);
    net.fc.b = {0.5, -0.25};
    net3d::ForwardCache cache;
    auto logits = net3d::forward(net, patch_to_tensor(meas), cache);
    CHECK(logits == net.fc.b);
}

TEST_CASE("aperture backward: zero upstream and single-voxel cases") {
    auto sample = random_sample(3, 4, 2, 3, 1, 31);
    auto grads = ApertureGrads::zeros(2, 3);
    forward_model::Patch dmeas;
    dmeas.p = 3;
    dmeas.depth = 2;
    dmeas.v.assign(3 * 3 * 2, 0.0);
    aperture_layer_backward(sample, dmeas, grads);
    for (double g : grads.g) CHECK(g == 0.0);

    // one nonzero scene voxel against one nonzero upstream entry
    PatchSample voxel;
    voxel.scene.p = 3;
    voxel.scene.depth = 4;
    voxel.scene.v.assign(3 * 3 * 4, 0.0);
    voxel.scene.at(1, 2, 3) = 1.75;
    voxel.x0 = 7;
    voxel.y0 = 5;
    voxel.label = 1;
    dmeas.v.assign(dmeas.v.size(), 0.0);
    dmeas.at(1, 2, 1) = -0.5;
    auto g2 = ApertureGrads::zeros(2, 3);
    aperture_layer_backward(voxel, dmeas, g2);
    int nonzero = 0;
    for (double g : g2.g) nonzero += g != 0.0;
    CHECK(nonzero == 1);
    int rb = aperture::pmod(7 + 1 - 1, 3);
    int cb = aperture::pmod(5 + 2 - 1 + 3, 3);
    CHECK(g2.at(1, rb, cb) == 1.75 * -0.5);
}

TEST_CASE("joint finite differences: net and block entries on the tiny instance") {
    // P=3, K=2, B=2, L=3, 2 classes; all block entries plus sampled net coords
    std::vector<PatchSample> samples = {random_sample(3, 3, 0, 0, 1, 41),
                                        random_sample(3, 3, 1, 2, 2, 42),
                                        random_sample(3, 3, 2, 1, 1, 43)};
    auto net = net3d::build_network(2, 3, 2, 44);
    auto blocks = random_blocks(2, 2, 45);

    NetGrads ng = NetGrads::zeros_like(net);
    auto ag = ApertureGrads::zeros(2, 2);
    joint_grads(net, blocks, samples, ng, ag);

    const double eps = 1e-6;
    double worst = 0.0;
    for (int snap = 0; snap < 2; ++snap)
        for (int i = 0; i < 4; ++i) {
            auto bp = blocks, bm = blocks;
            bp.blocks[snap].v[i] += eps;
            bm.blocks[snap].v[i] -= eps;
            double numeric =
                (joint_loss(net, bp, samples) - joint_loss(net, bm, samples)) / (2 * eps);
            double analytic = ag.g[std::size_t(snap) * 4 + i];
            worst = std::max(worst, std::fabs(analytic - numeric) /
                                        std::max({std::fabs(analytic), std::fabs(numeric), 1e-4}));
        }
    CHECK(worst <= 1e-4);

    double worst_net = 0.0;
    for (std::size_t i = 0; i < net.conv[2].w.size(); i += 457) {
        auto np = net, nm = net;
        np.conv[2].w[i] += eps;
        nm.conv[2].w[i] -= eps;
        double numeric =
            (joint_loss(np, blocks, samples) - joint_loss(nm, blocks, samples)) / (2 * eps);
        double analytic = ng.conv_w[2][i];
        worst_net = std::max(worst_net, std::fabs(analytic - numeric) /
                                            std::max({std::fabs(analytic), std::fabs(numeric), 1e-4}));
    }
    CHECK(worst_net <= 1e-4);
}

TEST_CASE("build_patch_dataset: partition size, labels, padding, ordering") {
    auto [cube, labels] = datacube::generate_synthetic_scene(16, 16, 3, 3, 51);
    auto split = datacube::split_train_test(labels, 0.3, 52);
    auto ds = build_patch_dataset(cube, labels, split, 7);
    CHECK(ds.train.size() + ds.test.size() == labels.labeled_count());
    for (const auto& s : ds.train) CHECK(s.label == labels.at(s.x0, s.y0));
    for (const auto& s : ds.test) CHECK(s.label == labels.at(s.x0, s.y0));

    // ordering by (y, x)
    for (std::size_t i = 1; i < ds.test.size(); ++i) {
        bool ordered = ds.test[i - 1].y0 < ds.test[i].y0 ||
                       (ds.test[i - 1].y0 == ds.test[i].y0 && ds.test[i - 1].x0 < ds.test[i].x0);
        CHECK(ordered);
    }

    // corner samples contain zero padding
    bool found_padded = false;
    for (const auto& s : ds.train) {
        if (s.x0 <= 2 || s.y0 <= 2 || s.x0 >= 13 || s.y0 >= 13) {
            double border = 0.0;
            for (int r = 0; r < 7; ++r)
                for (int c = 0; c < 7; ++c)
                    for (int d = 0; d < 3; ++d) {
                        int x = s.x0 + r - 3, y = s.y0 + c - 3;
                        if (x < 0 || x >= 16 || y < 0 || y >= 16)
                            border += std::fabs(s.scene.at(r, c, d));
                    }
            found_padded = true;
            CHECK(border == 0.0);
        }
    }
    CHECK(found_padded);

    datacube::SplitIndex empty;
    CHECK_THROWS(build_patch_dataset(cube, labels, empty, 7));
    CHECK_THROWS_AS(build_patch_dataset(cube, labels, split, 4), std::invalid_argument);
}

TEST_CASE("train_joint: eta 0 leaves W and yields clamped initial blocks") {
    std::vector<PatchSample> samples = {random_sample(3, 3, 0, 0, 1, 61),
                                        random_sample(3, 3, 1, 1, 2, 62)};
    net3d::TrainConfig cfg;
    cfg.eta = 0.0;
    cfg.epochs = 3;
    cfg.batch = 2;
    cfg.seed = 63;
    auto result = train_joint(samples, cfg, 2, 2, 2);
    auto fresh = net3d::build_network(2, 3, 2, cfg.seed);
    for (int i = 0; i < 6; ++i) CHECK(result.params.net.conv[i].w == fresh.conv[i].w);
    CHECK(result.params.net.fc.w == fresh.fc.w);
    for (const auto& blk : result.params.blocks.blocks)
        for (double x : blk.v) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    CHECK(result.clamp_count == 1);
    CHECK(result.loss_trace.size() == 3);
}

TEST_CASE("train_joint: single-sample loss decreases (pinned seed)") {
    std::vector<PatchSample> samples = {random_sample(3, 3, 2, 2, 1, 71)};
    net3d::TrainConfig cfg;
    cfg.eta = 0.05;
    cfg.epochs = 50;
    cfg.batch = 1;
    cfg.seed = 72;
    auto result = train_joint(samples, cfg, 2, 2, 2);
    CHECK(result.loss_trace.back() < result.loss_trace.front());
    CHECK(result.clamp_count == 1);
}

TEST_CASE("train_joint: per-epoch loss trace identical across runs; params bit-identical") {
    auto [cube, labels] = datacube::generate_synthetic_scene(12, 12, 3, 2, 81);
    auto split = datacube::split_train_test(labels, 0.3, 82);
    auto ds = build_patch_dataset(cube, labels, split, 3);
    net3d::TrainConfig cfg;
    cfg.eta = 0.02;
    cfg.epochs = 4;
    cfg.batch = 8;
    cfg.seed = 83;
    auto r1 = train_joint(ds.train, cfg, 2, 2, 2);
    auto r2 = train_joint(ds.train, cfg, 2, 2, 2);
    CHECK(r1.loss_trace == r2.loss_trace);
    for (int i = 0; i < 6; ++i) CHECK(r1.params.net.conv[i].w == r2.params.net.conv[i].w);
    CHECK(r1.params.net.fc.w == r2.params.net.fc.w);
    for (int k = 0; k < 2; ++k)
        CHECK(r1.params.blocks.blocks[k].v == r2.params.blocks.blocks[k].v);
}

TEST_CASE("train_joint: results are invariant to the worker thread count") {
    auto [cube, labels] = datacube::generate_synthetic_scene(12, 12, 3, 2, 91);
    auto split = datacube::split_train_test(labels, 0.3, 92);
    auto ds = build_patch_dataset(cube, labels, split, 3);
    net3d::TrainConfig cfg;
    cfg.eta = 0.02;
    cfg.epochs = 2;
    cfg.batch = 16;
    cfg.seed = 93;
    set_thread_count(1);
    auto r1 = train_joint(ds.train, cfg, 2, 2, 2);
    set_thread_count(3);
    auto r2 = train_joint(ds.train, cfg, 2, 2, 2);
    set_thread_count(1);
    CHECK(r1.loss_trace == r2.loss_trace);
    for (int i = 0; i < 6; ++i) CHECK(r1.params.net.conv[i].w == r2.params.net.conv[i].w);
    for (int k = 0; k < 2; ++k)
        CHECK(r1.params.blocks.blocks[k].v == r2.params.blocks.blocks[k].v);
}

TEST_CASE("train_joint: project-every-step clamps per update") {
    std::vector<PatchSample> samples = {random_sample(3, 3, 0, 0, 1, 95),
                                        random_sample(3, 3, 1, 1, 2, 96)};
    net3d::TrainConfig cfg;
    cfg.eta = 0.01;
    cfg.epochs = 3;
    cfg.batch = 1;  // 2 steps per epoch
    cfg.seed = 97;
    cfg.project_every_step = true;
    auto result = train_joint(samples, cfg, 2, 2, 2);
    CHECK(result.clamp_count == 3 * 2 + 1);
}

TEST_CASE("train_fixed: eta 0 leaves the network; separable toy set reaches 100%") {
    // two linearly separable patch classes
    std::vector<MeasuredSample> samples;
    Rng rng(101);
    for (int i = 0; i < 16; ++i) {
        MeasuredSample s;
        s.input.p = 3;
        s.input.depth = 2;
        s.input.v.resize(3 * 3 * 2);
        s.label = 1 + (i % 2);
        double base = s.label == 1 ? 0.2 : 1.2;
        for (auto& x : s.input.v) x = base + 0.05 * rng.uniform();
        samples.push_back(std::move(s));
    }
    net3d::TrainConfig cfg;
    cfg.eta = 0.0;
    cfg.epochs = 2;
    cfg.batch = 4;
    cfg.seed = 102;
    auto frozen = train_fixed(samples, cfg, 2, 2, 3);
    auto fresh = net3d::build_network(2, 3, 2, cfg.seed);
    CHECK(frozen.net.fc.w == fresh.fc.w);

    cfg.eta = 0.05;
    cfg.epochs = 200;
    auto trained = train_fixed(samples, cfg, 2, 2, 3);
    int correct = 0;
    for (const auto& s : samples)
        correct += predict_measured(trained.net, s.input) == s.label;
    CHECK(correct == 16);
}

TEST_CASE("predict: tie goes to the smallest class; constant logit shift is invariant") {
    auto net = net3d::build_network(2, 3, 3, 111);
    for (auto& c : net.conv) std::fill(c.w.begin(), c.w.end(), 0.0);
    forward_model::Patch patch;
    patch.p = 3;
    patch.depth = 2;
    patch.v.assign(3 * 3 * 2, 0.5);
    CHECK(predict_measured(net, patch) == 1);  // all logits equal

    auto net2 = net3d::build_network(2, 3, 3, 112);
    auto shifted = net2;
    for (auto& b : shifted.fc.b) b += 17.5;
    Rng rng(113);
    for (int trial = 0; trial < 20; ++trial) {
        forward_model::Patch p;
        p.p = 3;
        p.depth = 2;
        p.v.resize(3 * 3 * 2);
        for (auto& x : p.v) x = rng.uniform(0.0, 2.0);
        CHECK(predict_measured(net2, p) == predict_measured(shifted, p));
    }
}

TEST_CASE("fixed-aperture training on clamped optimized blocks reproduces joint predictions") {
    auto [cube, labels] = datacube::generate_synthetic_scene(10, 10, 3, 2, 121);
    auto split = datacube::split_train_test(labels, 0.3, 122);
    auto ds = build_patch_dataset(cube, labels, split, 3);
    net3d::TrainConfig cfg;
    cfg.eta = 0.02;
    cfg.epochs = 2;
    cfg.batch = 8;
    cfg.seed = 123;
    auto joint = train_joint(ds.train, cfg, 2, 2, 2);
    // same W, measurements produced by the clamped blocks
    for (const auto& s : ds.test) {
        auto meas = forward_model::patch_forward(s.scene, joint.params.blocks, s.x0, s.y0);
        CHECK(predict_measured(joint.params.net, meas) == predict(joint.params, s));
    }
}

TEST_CASE("model io: joint container round trip, stored model predicts identically") {
    auto [cube, labels] = datacube::generate_synthetic_scene(10, 10, 3, 2, 131);
    auto split = datacube::split_train_test(labels, 0.3, 132);
    auto ds = build_patch_dataset(cube, labels, split, 3);
    net3d::TrainConfig cfg;
    cfg.eta = 0.02;
    cfg.epochs = 2;
    cfg.batch = 8;
    cfg.seed = 133;
    auto result = train_joint(ds.train, cfg, 2, 2, 2);

    JointModel model;
    model.config.mode = "joint";
    model.config.k = 2;
    model.config.b = 2;
    model.config.p = 3;
    model.config.classes = 2;
    model.config.seed = cfg.seed;
    model.config.split_fraction = 0.3;
    model.config.split_seed = 132;
    model.net = result.params.net;
    model.apertures = result.params.blocks;
    model.loss_trace = result.loss_trace;
    auto path = tmp_path("model.ccnn.json");
    save_model(model, path);
    auto loaded = load_model(path);
    CHECK(loaded.config.mode == "joint");
    CHECK(loaded.loss_trace == model.loss_trace);
    REQUIRE(loaded.apertures.has_value());
    for (const auto& s : ds.test) {
        JointParams jp{loaded.net, *loaded.apertures};
        CHECK(predict(jp, s) == predict(result.params, s));
    }
}

TEST_CASE("train_joint: validation") {
    std::vector<PatchSample> empty;
    net3d::TrainConfig cfg;
    CHECK_THROWS_AS(train_joint(empty, cfg, 2, 2, 2), std::invalid_argument);
}

}  // TEST_SUITE
