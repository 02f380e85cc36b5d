#include "ccnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ccnn/io_util.hpp"
#include "ccnn/parallel.hpp"
#include "ccnn/rng.hpp"

namespace ccnn::train {

using aperture::CodedApertureSet;
using aperture::Mode;
using aperture::pmod;
using datacube::HyperCube;
using datacube::LabelMap;
using datacube::SplitIndex;
using net3d::ForwardCache;
using net3d::NetGrads;
using net3d::NetworkParams;
using net3d::Tensor4;
using net3d::TrainConfig;
using nlohmann::json;

namespace {

enum : std::uint64_t { kStreamBlocks = 101, kStreamShuffle = 102 };

constexpr std::size_t kBatchChunk = 8;  // fixed so reductions are thread-count invariant

int argmax_smallest_tie(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace

Patch aperture_layer_forward(const PatchSample& sample, const CodedApertureSet& blocks) {
    return forward_model::patch_forward(sample.scene, blocks, sample.x0, sample.y0);
}

void aperture_layer_backward(const PatchSample& sample, const Patch& dmeas,
                             ApertureGrads& grads) {
    const int p = sample.scene.p, l = sample.scene.depth, q = p / 2;
    if (dmeas.p != p) throw std::invalid_argument("aperture_layer_backward: patch size mismatch");
    const int b = grads.b;
    for (int snap = 0; snap < grads.k; ++snap)
        for (int r = 0; r < p; ++r) {
            int rb = pmod(sample.x0 + r - q, b);
            for (int c = 0; c < p; ++c) {
                double dy = dmeas.at(r, c, snap);
                if (dy == 0.0) continue;
                for (int band = 0; band < l; ++band)
                    grads.at(snap, rb, pmod(sample.y0 + c - q + band, b)) +=
                        sample.scene.at(r, c, band) * dy;
            }
        }
}

PatchDataset build_patch_dataset(const HyperCube& cube, const LabelMap& labels,
                                 const SplitIndex& split, int p) {
    if (p < 1 || p % 2 == 0) throw std::invalid_argument("build_patch_dataset: p must be odd");
    if (labels.n != cube.n || labels.m != cube.m)
        throw std::invalid_argument("build_patch_dataset: label map and cube dims differ");
    if (split.train.empty() && split.test.empty())
        throw std::runtime_error("build_patch_dataset: empty split");

    auto make = [&](const std::vector<datacube::PixelCoord>& coords) {
        std::vector<datacube::PixelCoord> sorted = coords;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second < b.second : a.first < b.first;
                  });
        std::vector<PatchSample> out;
        out.reserve(sorted.size());
        for (auto [x, y] : sorted) {
            PatchSample s;
            s.scene = forward_model::extract_scene_patch(cube, x, y, p);
            s.x0 = x;
            s.y0 = y;
            s.label = labels.at(x, y);
            out.push_back(std::move(s));
        }
        return out;
    };
    return {make(split.train), make(split.test)};
}

Tensor4 patch_to_tensor(const Patch& patch) {
    Tensor4 t(patch.depth, patch.p, patch.p, 1);
    for (int d = 0; d < patch.depth; ++d)
        for (int r = 0; r < patch.p; ++r)
            for (int c = 0; c < patch.p; ++c) t.at(d, r, c, 0) = patch.at(r, c, d);
    return t;
}

namespace {

struct ChunkBuf {
    NetGrads net;
    ApertureGrads blocks;
    double loss_sum = 0.0;
    ForwardCache cache;
    bool initialized = false;
};

// Scales the joint gradient if its L2 norm exceeds cfg.clip.
void apply_clip(NetGrads& net_grads, ApertureGrads* block_grads, double clip) {
    if (clip <= 0.0) return;
    double sq = net_grads.squared_norm();
    if (block_grads)
        for (double x : block_grads->g) sq += x * x;
    double norm = std::sqrt(sq);
    if (norm <= clip) return;
    double scale = clip / norm;
    NetGrads scaled = net_grads;
    net_grads.clear();
    net_grads.add_scaled(scaled, scale);
    if (block_grads)
        for (double& x : block_grads->g) x *= scale;
}

}  // namespace

TrainResult train_joint(const std::vector<PatchSample>& samples, const TrainConfig& cfg,
                        int k, int b, int classes, BlockInit init) {
    if (samples.empty()) throw std::invalid_argument("train_joint: empty training set");
    if (cfg.eta < 0.0 || cfg.epochs < 1 || cfg.batch < 1)
        throw std::invalid_argument("train_joint: invalid config");
    const int p = samples.front().scene.p;

    TrainResult result;
    result.params.net = net3d::build_network(k, p, classes, cfg.seed,
                                             net3d::Activation::relu, net3d::Padding::same);
    CodedApertureSet& blocks = result.params.blocks;
    blocks.mode = Mode::periodic;
    blocks.k = k;
    Rng block_rng(mix_seed(cfg.seed, kStreamBlocks));
    for (int i = 0; i < k; ++i) {
        aperture::BasicBlock blk;
        blk.b = b;
        blk.v.resize(std::size_t(b) * b);
        for (auto& x : blk.v)
            x = init == BlockInit::uniform01 ? block_rng.uniform()
                                             : (block_rng.bernoulli(0.5) ? 1.0 : 0.0);
        blocks.blocks.push_back(std::move(blk));
    }

    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(cfg.seed, kStreamShuffle));

    std::size_t max_chunks = chunk_count(std::size_t(cfg.batch), kBatchChunk);
    std::vector<ChunkBuf> bufs(max_chunks);
    NetGrads batch_net = NetGrads::zeros_like(result.params.net);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            std::size_t bn = std::min<std::size_t>(cfg.batch, n - start);
            double inv_bn = 1.0 / static_cast<double>(bn);

            parallel_chunks(bn, kBatchChunk, [&](std::size_t ci, std::size_t lo, std::size_t hi) {
                ChunkBuf& buf = bufs[ci];
                if (!buf.initialized) {
                    buf.net = NetGrads::zeros_like(result.params.net);
                    buf.blocks = ApertureGrads::zeros(k, b);
                    buf.initialized = true;
                } else {
                    buf.net.clear();
                    std::fill(buf.blocks.g.begin(), buf.blocks.g.end(), 0.0);
                }
                buf.loss_sum = 0.0;
                for (std::size_t s = lo; s < hi; ++s) {
                    const PatchSample& sample = samples[order[start + s]];
                    Patch meas = aperture_layer_forward(sample, blocks);
                    Tensor4 input = patch_to_tensor(meas);
                    auto logits = net3d::forward(result.params.net, input, buf.cache);
                    auto probs = net3d::softmax(logits);
                    buf.loss_sum += net3d::loss(probs, sample.label - 1);
                    auto dlogits = net3d::loss_grad(probs, sample.label - 1);
                    for (auto& g : dlogits) g *= inv_bn;
                    Tensor4 dinput;
                    net3d::backward(result.params.net, buf.cache, dlogits, buf.net, &dinput);
                    Patch dmeas;
                    dmeas.p = p;
                    dmeas.depth = k;
                    dmeas.v.resize(std::size_t(p) * p * k);
                    for (int d = 0; d < k; ++d)
                        for (int r = 0; r < p; ++r)
                            for (int c = 0; c < p; ++c) dmeas.at(r, c, d) = dinput.at(d, r, c, 0);
                    aperture_layer_backward(sample, dmeas, buf.blocks);
                }
            });

            batch_net.clear();
            ApertureGrads batch_blocks = ApertureGrads::zeros(k, b);
            double batch_loss = 0.0;
            for (std::size_t ci = 0; ci < chunk_count(bn, kBatchChunk); ++ci) {
                batch_net.add_scaled(bufs[ci].net, 1.0);
                for (std::size_t i = 0; i < batch_blocks.g.size(); ++i)
                    batch_blocks.g[i] += bufs[ci].blocks.g[i];
                batch_loss += bufs[ci].loss_sum;
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_joint: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(start / cfg.batch));
            epoch_loss += batch_loss;

            apply_clip(batch_net, &batch_blocks, cfg.clip);
            net3d::sgd_step(result.params.net, batch_net, cfg.eta);
            for (int snap = 0; snap < k; ++snap)
                for (int i = 0; i < b * b; ++i)
                    blocks.blocks[snap].v[i] -= cfg.eta * batch_blocks.g[(std::size_t(snap) * b * b) + i];
            if (cfg.project_every_step) {
                blocks = aperture::clamp_blocks(blocks);
                ++result.clamp_count;
            }
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
    }

    result.params.blocks = aperture::clamp_blocks(blocks);
    ++result.clamp_count;
    return result;
}

FixedTrainResult train_fixed(const std::vector<MeasuredSample>& samples,
                             const TrainConfig& cfg, int classes, int input_depth, int p) {
    if (samples.empty()) throw std::invalid_argument("train_fixed: empty training set");
    if (cfg.eta < 0.0 || cfg.epochs < 1 || cfg.batch < 1)
        throw std::invalid_argument("train_fixed: invalid config");

    FixedTrainResult result;
    result.net = net3d::build_network(input_depth, p, classes, cfg.seed,
                                      net3d::Activation::relu, net3d::Padding::same);

    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(cfg.seed, kStreamShuffle));

    // inputs are fixed; convert once
    std::vector<Tensor4> inputs;
    inputs.reserve(n);
    for (const auto& s : samples) inputs.push_back(patch_to_tensor(s.input));

    std::size_t max_chunks = chunk_count(std::size_t(cfg.batch), kBatchChunk);
    std::vector<ChunkBuf> bufs(max_chunks);
    NetGrads batch_net = NetGrads::zeros_like(result.net);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            std::size_t bn = std::min<std::size_t>(cfg.batch, n - start);
            double inv_bn = 1.0 / static_cast<double>(bn);

            parallel_chunks(bn, kBatchChunk, [&](std::size_t ci, std::size_t lo, std::size_t hi) {
                ChunkBuf& buf = bufs[ci];
                if (!buf.initialized) {
                    buf.net = NetGrads::zeros_like(result.net);
                    buf.initialized = true;
                } else {
                    buf.net.clear();
                }
                buf.loss_sum = 0.0;
                for (std::size_t s = lo; s < hi; ++s) {
                    std::size_t si = order[start + s];
                    auto logits = net3d::forward(result.net, inputs[si], buf.cache);
                    auto probs = net3d::softmax(logits);
                    buf.loss_sum += net3d::loss(probs, samples[si].label - 1);
                    auto dlogits = net3d::loss_grad(probs, samples[si].label - 1);
                    for (auto& g : dlogits) g *= inv_bn;
                    net3d::backward(result.net, buf.cache, dlogits, buf.net);
                }
            });

            batch_net.clear();
            double batch_loss = 0.0;
            for (std::size_t ci = 0; ci < chunk_count(bn, kBatchChunk); ++ci) {
                batch_net.add_scaled(bufs[ci].net, 1.0);
                batch_loss += bufs[ci].loss_sum;
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_fixed: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(start / cfg.batch));
            epoch_loss += batch_loss;

            apply_clip(batch_net, nullptr, cfg.clip);
            net3d::sgd_step(result.net, batch_net, cfg.eta);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

int predict(const JointParams& params, const PatchSample& sample) {
    Patch meas = aperture_layer_forward(sample, params.blocks);
    return predict_measured(params.net, meas);
}

int predict_measured(const NetworkParams& net, const Patch& input) {
    ForwardCache cache;
    Tensor4 t = patch_to_tensor(input);
    auto logits = net3d::forward(net, t, cache);
    return argmax_smallest_tie(net3d::softmax(logits)) + 1;
}

namespace {

json config_to_json(const ModelConfig& c) {
    return json{{"mode", c.mode},
                {"k", c.k},
                {"b", c.b},
                {"p", c.p},
                {"classes", c.classes},
                {"eta", c.eta},
                {"epochs", c.epochs},
                {"batch", c.batch},
                {"seed", c.seed},
                {"split_fraction", c.split_fraction},
                {"split_seed", c.split_seed},
                {"stratified", c.stratified},
                {"activation", c.activation},
                {"padding", c.padding},
                {"clip", c.clip},
                {"project_every_step", c.project_every_step}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.mode = j.at("mode").get<std::string>();
    c.k = j.at("k").get<int>();
    c.b = j.at("b").get<int>();
    c.p = j.at("p").get<int>();
    c.classes = j.at("classes").get<int>();
    c.eta = j.at("eta").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch = j.at("batch").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.split_fraction = j.at("split_fraction").get<double>();
    c.split_seed = j.at("split_seed").get<std::uint64_t>();
    c.stratified = j.at("stratified").get<bool>();
    c.activation = j.at("activation").get<std::string>();
    c.padding = j.at("padding").get<std::string>();
    c.clip = j.at("clip").get<double>();
    c.project_every_step = j.at("project_every_step").get<bool>();
    return c;
}

json apertures_to_json(const CodedApertureSet& set) {
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
    return j;
}

CodedApertureSet apertures_from_json(const json& j) {
    CodedApertureSet set;
    set.k = j.at("k").get<int>();
    if (j.at("mode") == "periodic") {
        set.mode = Mode::periodic;
        int b = j.at("b").get<int>();
        for (const auto& arr : j.at("blocks")) {
            aperture::BasicBlock blk;
            blk.b = b;
            blk.v = arr.get<std::vector<double>>();
            set.blocks.push_back(std::move(blk));
        }
    } else {
        set.mode = Mode::full;
        set.n = j.at("n").get<int>();
        set.cols = j.at("cols").get<int>();
        for (const auto& arr : j.at("pattern"))
            set.patterns.push_back(arr.get<std::vector<double>>());
    }
    return set;
}

}  // namespace

void save_model(const JointModel& model, const std::string& path) {
    json j;
    j["net"] = json::parse(net3d::network_to_json(model.net));
    j["apertures"] = model.apertures ? apertures_to_json(*model.apertures) : json(nullptr);
    j["config"] = config_to_json(model.config);
    j["loss_trace"] = model.loss_trace;
    std::string text = j.dump();
    text.push_back('\n');
    write_file_bytes(path, text.data(), text.size());
}

JointModel load_model(const std::string& path) {
    auto bytes = read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError(path + ": not valid JSON: " + e.what());
    }
    JointModel model;
    model.net = net3d::network_from_json(j.at("net").dump());
    if (!j.at("apertures").is_null()) model.apertures = apertures_from_json(j.at("apertures"));
    model.config = config_from_json(j.at("config"));
    model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    return model;
}

}  // namespace ccnn::train
