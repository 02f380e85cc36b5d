#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccnn/kernels.hpp"

namespace ccnn::net3d {

// Dense rank-4 tensor, channel index fastest: (d1, d2, d3, channels) with
// d1 the snapshot/depth axis.
struct Tensor4 {
    int d1 = 0, d2 = 0, d3 = 0, c = 0;
    std::vector<double> v;

    Tensor4() = default;
    Tensor4(int a, int b, int cc, int ch)
        : d1(a), d2(b), d3(cc), c(ch), v(std::size_t(a) * b * cc * ch, 0.0) {}

    double& at(int a, int b, int cc, int ch) {
        return v[((std::size_t(a) * d2 + b) * d3 + cc) * c + ch];
    }
    double at(int a, int b, int cc, int ch) const {
        return v[((std::size_t(a) * d2 + b) * d3 + cc) * c + ch];
    }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor4& o) const {
        return d1 == o.d1 && d2 == o.d2 && d3 == o.d3 && c == o.c;
    }
};

enum class Activation { relu, tanh };
enum class Padding { same, valid };

struct Conv3d {
    int k1 = 0, k2 = 0, k3 = 0;
    int in_c = 0, out_c = 0;
    std::vector<double> w;  // [i][j][h][ci][f], f fastest
    std::vector<double> b;  // [f]
};

struct Dense {
    int in_dim = 0, out_dim = 0;
    std::vector<double> w;  // [out][in]
    std::vector<double> b;  // [out]
};

// The seven-layer classifier: six 3D conv layers (filters 20, 20, 35, 35,
// 35, 35; kernels (3,3,3), (3,1,1), (3,3,3), (3,1,1), (3,1,1), (2,1,1) over
// (snapshot, row, col)), flatten, one fully-connected layer to the logits.
struct NetworkParams {
    int input_depth = 0;  // K (or L for uncompressed inputs)
    int p = 0;
    int classes = 0;
    Activation act = Activation::relu;
    Padding pad = Padding::same;
    std::vector<Conv3d> conv;
    Dense fc;

    std::size_t param_count() const;
};

struct TrainConfig {
    double eta = 0.01;
    int epochs = 100;
    int batch = 64;
    std::uint64_t seed = 0;
    int patch_p = 7;
    double clip = 0.0;  // 0 = no gradient-norm cap
    bool project_every_step = false;
};

// Parameter-shaped gradient container.
struct NetGrads {
    std::vector<std::vector<double>> conv_w, conv_b;
    std::vector<double> fc_w, fc_b;

    static NetGrads zeros_like(const NetworkParams& params);
    void clear();
    void add_scaled(const NetGrads& other, double scale);
    double squared_norm() const;
};

// Per-layer activations kept for the backward pass.
struct ForwardCache {
    Tensor4 input;
    std::vector<Tensor4> pre;   // pre-activation per conv layer
    std::vector<Tensor4> act;   // post-activation per conv layer
    std::vector<double> logits;
    bool valid = false;
};

NetworkParams build_network(int k_snapshots, int p, int classes, std::uint64_t seed,
                            Activation act = Activation::relu,
                            Padding pad = Padding::same);

// conv -> bias -> activation per layer, flatten, affine to logits.
std::vector<double> forward(const NetworkParams& params, const Tensor4& input,
                            ForwardCache& cache);

std::vector<double> softmax(const std::vector<double>& logits);
double loss(const std::vector<double>& probs, int label);
std::vector<double> loss_grad(const std::vector<double>& probs, int label);

// Count of times the -log argument was clamped at the 1e-300 floor.
std::uint64_t loss_floor_hits();

// Reverse-mode gradients for every parameter. If `dinput` is non-null the
// gradient w.r.t. the network input is written there (needed when a coded
// aperture layer precedes the network).
void backward(const NetworkParams& params, const ForwardCache& cache,
              const std::vector<double>& dlogits, NetGrads& grads,
              Tensor4* dinput = nullptr);

// theta <- theta - eta * grad; rejects non-finite gradients.
void sgd_step(NetworkParams& params, const NetGrads& grads, double eta);

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_coord;
    bool pass = false;
};

// Central-difference check over every parameter of a small network.
GradCheckReport grad_check(const NetworkParams& params, const Tensor4& input, int label,
                           double eps, double tol, std::size_t max_params = 10000);

void save_network(const NetworkParams& params, const std::string& path);
NetworkParams load_network(const std::string& path);

// json round-trip helpers shared with the joint-model container
std::string network_to_json(const NetworkParams& params);
NetworkParams network_from_json(const std::string& text);

}  // namespace ccnn::net3d
