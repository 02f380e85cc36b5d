#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccnn/aperture.hpp"
#include "ccnn/datacube.hpp"
#include "ccnn/forward_model.hpp"
#include "ccnn/net3d.hpp"

namespace ccnn::train {

using forward_model::Patch;

// P x P x L scene patch centered at an absolute pixel, zero-padded where the
// window leaves the image.
struct PatchSample {
    Patch scene;
    int x0 = 0, y0 = 0;
    int label = 0;  // 1-based class index
};

// Measurement patch (or raw scene patch for uncompressed baselines) plus label.
struct MeasuredSample {
    Patch input;
    int label = 0;
};

struct JointParams {
    net3d::NetworkParams net;
    aperture::CodedApertureSet blocks;  // periodic
};

// Gradient over the K basic blocks, flat k*b*b.
struct ApertureGrads {
    int k = 0, b = 0;
    std::vector<double> g;

    static ApertureGrads zeros(int k, int b) { return {k, b, std::vector<double>(std::size_t(k) * b * b, 0.0)}; }
    double& at(int snap, int r, int c) { return g[(std::size_t(snap) * b + r) * b + c]; }
};

// The coded aperture as a pixel-wise linear layer.
Patch aperture_layer_forward(const PatchSample& sample,
                             const aperture::CodedApertureSet& blocks);

// dL/dC^k[a][b] accumulated additively into `grads`.
void aperture_layer_backward(const PatchSample& sample, const Patch& dmeas,
                             ApertureGrads& grads);

struct PatchDataset {
    std::vector<PatchSample> train;
    std::vector<PatchSample> test;
};

// One sample per labeled pixel of each split partition, ordered by (y, x).
PatchDataset build_patch_dataset(const datacube::HyperCube& cube,
                                 const datacube::LabelMap& labels,
                                 const datacube::SplitIndex& split, int p);

enum class BlockInit { uniform01, bernoulli05 };

struct TrainResult {
    JointParams params;
    std::vector<double> loss_trace;  // per-epoch mean loss
    int clamp_count = 0;
};

struct FixedTrainResult {
    net3d::NetworkParams net;
    std::vector<double> loss_trace;
};

// End-to-end training of theta = [W, C]: blocks start uniform in [0,1]
// (seeded), both parameter groups follow the same SGD updates, and the
// blocks are clamped into [0,1] exactly once after the final epoch.
TrainResult train_joint(const std::vector<PatchSample>& samples,
                        const net3d::TrainConfig& cfg, int k, int b, int classes,
                        BlockInit init = BlockInit::uniform01);

// Same loop with a frozen aperture and precomputed measurements.
FixedTrainResult train_fixed(const std::vector<MeasuredSample>& samples,
                             const net3d::TrainConfig& cfg, int classes, int input_depth,
                             int p);

net3d::Tensor4 patch_to_tensor(const Patch& patch);

int predict(const JointParams& params, const PatchSample& sample);
int predict_measured(const net3d::NetworkParams& net, const Patch& input);

// .ccnn.json container
struct ModelConfig {
    std::string mode = "joint";  // joint | fixed | original
    int k = 0, b = 0, p = 0, classes = 0;
    double eta = 0.01;
    int epochs = 100;
    int batch = 64;
    std::uint64_t seed = 0;
    double split_fraction = 0.3;
    std::uint64_t split_seed = 0;
    bool stratified = false;
    std::string activation = "relu";
    std::string padding = "same";
    double clip = 0.0;
    bool project_every_step = false;
};

struct JointModel {
    ModelConfig config;
    net3d::NetworkParams net;
    std::optional<aperture::CodedApertureSet> apertures;
    std::vector<double> loss_trace;
};

void save_model(const JointModel& model, const std::string& path);
JointModel load_model(const std::string& path);

}  // namespace ccnn::train
