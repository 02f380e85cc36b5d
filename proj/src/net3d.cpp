#include "ccnn/net3d.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"

namespace ccnn::net3d {

using kernels::Conv3dShape;
using nlohmann::json;

namespace {

constexpr int kNumConv = 6;
constexpr int kFilters[kNumConv] = {20, 20, 35, 35, 35, 35};
constexpr int kKernelDims[kNumConv][3] = {
    {3, 3, 3}, {3, 1, 1}, {3, 3, 3}, {3, 1, 1}, {3, 1, 1}, {2, 1, 1}};

std::atomic<std::uint64_t> g_loss_floor_hits{0};

Conv3dShape layer_shape(int d1, int d2, int d3, const Conv3d& c, Padding pad) {
    return pad == Padding::same
               ? Conv3dShape::same(d1, d2, d3, c.in_c, c.out_c, c.k1, c.k2, c.k3)
               : Conv3dShape::valid(d1, d2, d3, c.in_c, c.out_c, c.k1, c.k2, c.k3);
}

void apply_activation(Activation act, Tensor4& out, const Tensor4& pre) {
    if (act == Activation::relu) {
        kernels::active().relu(out.v.data(), pre.v.data(), pre.size());
    } else {
        for (std::size_t i = 0; i < pre.size(); ++i) out.v[i] = std::tanh(pre.v[i]);
    }
}

void activation_grad(Activation act, Tensor4& dpre, const Tensor4& pre, const Tensor4& dact) {
    if (act == Activation::relu) {
        kernels::active().relu_grad(dpre.v.data(), pre.v.data(), dact.v.data(), pre.size());
    } else {
        for (std::size_t i = 0; i < pre.size(); ++i) {
            double t = std::tanh(pre.v[i]);
            dpre.v[i] = dact.v[i] * (1.0 - t * t);
        }
    }
}

}  // namespace

std::size_t NetworkParams::param_count() const {
    std::size_t n = 0;
    for (const auto& c : conv) n += c.w.size() + c.b.size();
    n += fc.w.size() + fc.b.size();
    return n;
}

NetGrads NetGrads::zeros_like(const NetworkParams& params) {
    NetGrads g;
    for (const auto& c : params.conv) {
        g.conv_w.emplace_back(c.w.size(), 0.0);
        g.conv_b.emplace_back(c.b.size(), 0.0);
    }
    g.fc_w.assign(params.fc.w.size(), 0.0);
    g.fc_b.assign(params.fc.b.size(), 0.0);
    return g;
}

void NetGrads::clear() {
    for (auto& w : conv_w) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : conv_b) std::fill(b.begin(), b.end(), 0.0);
    std::fill(fc_w.begin(), fc_w.end(), 0.0);
    std::fill(fc_b.begin(), fc_b.end(), 0.0);
}

void NetGrads::add_scaled(const NetGrads& other, double scale) {
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < conv_w.size(); ++i) {
        k.axpy(conv_w[i].data(), scale, other.conv_w[i].data(), conv_w[i].size());
        k.axpy(conv_b[i].data(), scale, other.conv_b[i].data(), conv_b[i].size());
    }
    k.axpy(fc_w.data(), scale, other.fc_w.data(), fc_w.size());
    k.axpy(fc_b.data(), scale, other.fc_b.data(), fc_b.size());
}

double NetGrads::squared_norm() const {
    double s = 0.0;
    auto acc = [&s](const std::vector<double>& v) {
        for (double x : v) s += x * x;
    };
    for (const auto& w : conv_w) acc(w);
    for (const auto& b : conv_b) acc(b);
    acc(fc_w);
    acc(fc_b);
    return s;
}

NetworkParams build_network(int k_snapshots, int p, int classes, std::uint64_t seed,
                            Activation act, Padding pad) {
    if (k_snapshots < 2) throw std::invalid_argument("build_network: input depth must be >= 2");
    if (p < 3 || p % 2 == 0) throw std::invalid_argument("build_network: p must be odd and >= 3");
    if (classes < 2) throw std::invalid_argument("build_network: classes must be >= 2");

    NetworkParams params;
    params.input_depth = k_snapshots;
    params.p = p;
    params.classes = classes;
    params.act = act;
    params.pad = pad;

    Rng rng(mix_seed(seed, 17));
    int d1 = k_snapshots, d2 = p, d3 = p, in_c = 1;
    for (int layer = 0; layer < kNumConv; ++layer) {
        Conv3d c;
        c.k1 = kKernelDims[layer][0];
        c.k2 = kKernelDims[layer][1];
        c.k3 = kKernelDims[layer][2];
        c.in_c = in_c;
        c.out_c = kFilters[layer];
        c.w.resize(std::size_t(c.k1) * c.k2 * c.k3 * c.in_c * c.out_c);
        c.b.assign(c.out_c, 0.0);
        double bound = std::sqrt(6.0 / (double(c.k1) * c.k2 * c.k3 * c.in_c));
        for (auto& x : c.w) x = rng.uniform(-bound, bound);
        // validates dims for valid padding as a side effect
        Conv3dShape s = layer_shape(d1, d2, d3, c, pad);
        d1 = s.e1;
        d2 = s.e2;
        d3 = s.e3;
        in_c = c.out_c;
        params.conv.push_back(std::move(c));
    }
    params.fc.in_dim = d1 * d2 * d3 * in_c;
    params.fc.out_dim = classes;
    params.fc.w.resize(std::size_t(classes) * params.fc.in_dim);
    params.fc.b.assign(classes, 0.0);
    double bound = std::sqrt(6.0 / params.fc.in_dim);
    for (auto& x : params.fc.w) x = rng.uniform(-bound, bound);
    return params;
}

std::vector<double> forward(const NetworkParams& params, const Tensor4& input,
                            ForwardCache& cache) {
    if (input.d1 != params.input_depth || input.d2 != params.p || input.d3 != params.p ||
        input.c != 1)
        throw std::invalid_argument("forward: input shape mismatch");
    const auto& k = kernels::active();
    cache.input = input;
    cache.pre.resize(kNumConv);
    cache.act.resize(kNumConv);
    const Tensor4* cur = &cache.input;
    for (int layer = 0; layer < kNumConv; ++layer) {
        const Conv3d& c = params.conv[layer];
        Conv3dShape s = layer_shape(cur->d1, cur->d2, cur->d3, c, params.pad);
        Tensor4& pre = cache.pre[layer];
        if (pre.d1 != s.e1 || pre.d2 != s.e2 || pre.d3 != s.e3 || pre.c != s.out_c)
            pre = Tensor4(s.e1, s.e2, s.e3, s.out_c);
        k.conv3d_forward(s, cur->v.data(), c.w.data(), c.b.data(), pre.v.data());
        Tensor4& act = cache.act[layer];
        if (!act.same_shape(pre)) act = Tensor4(s.e1, s.e2, s.e3, s.out_c);
        apply_activation(params.act, act, pre);
        cur = &act;
    }
    if (static_cast<int>(cur->size()) != params.fc.in_dim)
        throw std::invalid_argument("forward: flatten size mismatch");
    cache.logits.assign(params.classes, 0.0);
    for (int cls = 0; cls < params.classes; ++cls)
        cache.logits[cls] =
            params.fc.b[cls] +
            k.dot(params.fc.w.data() + std::size_t(cls) * params.fc.in_dim, cur->v.data(),
                  params.fc.in_dim);
    cache.valid = true;
    return cache.logits;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double x : logits) {
        if (!std::isfinite(x)) throw std::invalid_argument("softmax: non-finite input");
        mx = std::max(mx, x);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    // underflow floor keeps outputs strictly positive
    for (auto& x : p) {
        x /= sum;
        if (x < 1e-300) x = 1e-300;
    }
    return p;
}

double loss(const std::vector<double>& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size()))
        throw std::invalid_argument("loss: label out of range");
    double p = probs[static_cast<std::size_t>(label)];
    if (p < 1e-300) {
        p = 1e-300;
        g_loss_floor_hits.fetch_add(1, std::memory_order_relaxed);
    }
    return -std::log(p);
}

std::vector<double> loss_grad(const std::vector<double>& probs, int label) {
    std::vector<double> g = probs;
    g[static_cast<std::size_t>(label)] -= 1.0;
    return g;
}

std::uint64_t loss_floor_hits() { return g_loss_floor_hits.load(); }

void backward(const NetworkParams& params, const ForwardCache& cache,
              const std::vector<double>& dlogits, NetGrads& grads, Tensor4* dinput) {
    if (!cache.valid) throw std::runtime_error("backward: stale or missing forward cache");
    if (dlogits.size() != static_cast<std::size_t>(params.classes))
        throw std::invalid_argument("backward: dlogits size mismatch");
    const auto& k = kernels::active();

    const Tensor4& last = cache.act[kNumConv - 1];
    Tensor4 dflat(last.d1, last.d2, last.d3, last.c);
    for (int cls = 0; cls < params.classes; ++cls) {
        double g = dlogits[static_cast<std::size_t>(cls)];
        grads.fc_b[cls] += g;
        k.axpy(grads.fc_w.data() + std::size_t(cls) * params.fc.in_dim, g, last.v.data(),
               params.fc.in_dim);
        k.axpy(dflat.v.data(), g, params.fc.w.data() + std::size_t(cls) * params.fc.in_dim,
               params.fc.in_dim);
    }

    Tensor4 dact = std::move(dflat);
    for (int layer = kNumConv - 1; layer >= 0; --layer) {
        const Conv3d& c = params.conv[layer];
        const Tensor4& in = layer == 0 ? cache.input : cache.act[layer - 1];
        Conv3dShape s = layer_shape(in.d1, in.d2, in.d3, c, params.pad);

        Tensor4 dpre(dact.d1, dact.d2, dact.d3, dact.c);
        activation_grad(params.act, dpre, cache.pre[layer], dact);

        k.conv3d_grad_kernels(s, in.v.data(), dpre.v.data(), grads.conv_w[layer].data(),
                              grads.conv_b[layer].data());
        if (layer > 0 || dinput != nullptr) {
            Tensor4 din(in.d1, in.d2, in.d3, in.c);
            k.conv3d_grad_input(s, c.w.data(), dpre.v.data(), din.v.data());
            if (layer == 0) {
                *dinput = std::move(din);
            } else {
                dact = std::move(din);
            }
        }
    }
}

void sgd_step(NetworkParams& params, const NetGrads& grads, double eta) {
    auto check = [](const std::vector<double>& v, const char* what) {
        for (double x : v)
            if (!std::isfinite(x))
                throw std::runtime_error(std::string("sgd_step: non-finite gradient in ") + what);
    };
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < params.conv.size(); ++i) {
        check(grads.conv_w[i], "conv weights");
        check(grads.conv_b[i], "conv biases");
        k.axpy(params.conv[i].w.data(), -eta, grads.conv_w[i].data(), grads.conv_w[i].size());
        k.axpy(params.conv[i].b.data(), -eta, grads.conv_b[i].data(), grads.conv_b[i].size());
    }
    check(grads.fc_w, "fc weights");
    check(grads.fc_b, "fc biases");
    k.axpy(params.fc.w.data(), -eta, grads.fc_w.data(), grads.fc_w.size());
    k.axpy(params.fc.b.data(), -eta, grads.fc_b.data(), grads.fc_b.size());
}

namespace {

double loss_at(const NetworkParams& params, const Tensor4& input, int label) {
    ForwardCache cache;
    auto logits = forward(params, input, cache);
    return loss(softmax(logits), label);
}

struct ParamView {
    double* data;
    std::size_t size;
    std::string name;
};

std::vector<ParamView> param_views(NetworkParams& params) {
    std::vector<ParamView> views;
    for (std::size_t i = 0; i < params.conv.size(); ++i) {
        views.push_back({params.conv[i].w.data(), params.conv[i].w.size(),
                         "conv" + std::to_string(i + 1) + ".w"});
        views.push_back({params.conv[i].b.data(), params.conv[i].b.size(),
                         "conv" + std::to_string(i + 1) + ".b"});
    }
    views.push_back({params.fc.w.data(), params.fc.w.size(), "fc.w"});
    views.push_back({params.fc.b.data(), params.fc.b.size(), "fc.b"});
    return views;
}

std::vector<const double*> grad_views(const NetGrads& grads, std::vector<std::size_t>& sizes) {
    std::vector<const double*> out;
    for (std::size_t i = 0; i < grads.conv_w.size(); ++i) {
        out.push_back(grads.conv_w[i].data());
        sizes.push_back(grads.conv_w[i].size());
        out.push_back(grads.conv_b[i].data());
        sizes.push_back(grads.conv_b[i].size());
    }
    out.push_back(grads.fc_w.data());
    sizes.push_back(grads.fc_w.size());
    out.push_back(grads.fc_b.data());
    sizes.push_back(grads.fc_b.size());
    return out;
}

}  // namespace

GradCheckReport grad_check(const NetworkParams& params, const Tensor4& input, int label,
                           double eps, double tol, std::size_t max_params) {
    NetworkParams work = params;
    if (work.param_count() > max_params)
        throw std::invalid_argument("grad_check: network exceeds the parameter cap");

    ForwardCache cache;
    auto logits = forward(work, input, cache);
    NetGrads grads = NetGrads::zeros_like(work);
    backward(work, cache, loss_grad(softmax(logits), label), grads);

    std::vector<std::size_t> sizes;
    auto gviews = grad_views(grads, sizes);
    auto pviews = param_views(work);

    GradCheckReport report;
    for (std::size_t v = 0; v < pviews.size(); ++v) {
        for (std::size_t i = 0; i < pviews[v].size; ++i) {
            double saved = pviews[v].data[i];
            pviews[v].data[i] = saved + eps;
            double lp = loss_at(work, input, label);
            pviews[v].data[i] = saved - eps;
            double lm = loss_at(work, input, label);
            pviews[v].data[i] = saved;
            double numeric = (lp - lm) / (2.0 * eps);
            double analytic = gviews[v][i];
            double rel = std::fabs(analytic - numeric) /
                         std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_coord = pviews[v].name + "[" + std::to_string(i) + "]";
            }
        }
    }
    report.pass = report.max_rel_err <= tol;
    return report;
}

namespace {

json conv_to_json(const Conv3d& c) {
    return json{{"k1", c.k1}, {"k2", c.k2}, {"k3", c.k3}, {"in_c", c.in_c},
                {"out_c", c.out_c}, {"w", c.w}, {"b", c.b}};
}

Conv3d conv_from_json(const json& j) {
    Conv3d c;
    c.k1 = j.at("k1").get<int>();
    c.k2 = j.at("k2").get<int>();
    c.k3 = j.at("k3").get<int>();
    c.in_c = j.at("in_c").get<int>();
    c.out_c = j.at("out_c").get<int>();
    c.w = j.at("w").get<std::vector<double>>();
    c.b = j.at("b").get<std::vector<double>>();
    if (c.w.size() != std::size_t(c.k1) * c.k2 * c.k3 * c.in_c * c.out_c ||
        c.b.size() != std::size_t(c.out_c))
        throw FormatError("network file: conv layer array sizes do not match dims");
    return c;
}

json network_to_json_obj(const NetworkParams& params) {
    json j;
    j["topology"] = {{"k", params.input_depth},
                     {"p", params.p},
                     {"classes", params.classes},
                     {"activation", params.act == Activation::relu ? "relu" : "tanh"},
                     {"padding", params.pad == Padding::same ? "same" : "valid"}};
    json conv = json::array();
    for (const auto& c : params.conv) conv.push_back(conv_to_json(c));
    j["conv"] = conv;
    j["fc"] = {{"in", params.fc.in_dim}, {"out", params.fc.out_dim}, {"w", params.fc.w},
               {"b", params.fc.b}};
    return j;
}

NetworkParams network_from_json_obj(const json& j) {
    NetworkParams params;
    const auto& t = j.at("topology");
    params.input_depth = t.at("k").get<int>();
    params.p = t.at("p").get<int>();
    params.classes = t.at("classes").get<int>();
    params.act = t.at("activation") == "tanh" ? Activation::tanh : Activation::relu;
    params.pad = t.at("padding") == "valid" ? Padding::valid : Padding::same;
    for (const auto& c : j.at("conv")) params.conv.push_back(conv_from_json(c));
    if (params.conv.size() != kNumConv)
        throw FormatError("network file: expected 6 conv layers");
    params.fc.in_dim = j.at("fc").at("in").get<int>();
    params.fc.out_dim = j.at("fc").at("out").get<int>();
    params.fc.w = j.at("fc").at("w").get<std::vector<double>>();
    params.fc.b = j.at("fc").at("b").get<std::vector<double>>();
    if (params.fc.w.size() != std::size_t(params.fc.in_dim) * params.fc.out_dim ||
        params.fc.b.size() != std::size_t(params.fc.out_dim))
        throw FormatError("network file: fc array sizes do not match dims");
    return params;
}

}  // namespace

std::string network_to_json(const NetworkParams& params) {
    return network_to_json_obj(params).dump();
}

NetworkParams network_from_json(const std::string& text) {
    return network_from_json_obj(json::parse(text));
}

void save_network(const NetworkParams& params, const std::string& path) {
    std::string text = network_to_json(params);
    text.push_back('\n');
    write_file_bytes(path, text.data(), text.size());
}

NetworkParams load_network(const std::string& path) {
    auto bytes = read_file_bytes(path);
    try {
        return network_from_json_obj(json::parse(bytes.begin(), bytes.end()));
    } catch (const json::exception& e) {
        throw FormatError(path + ": not valid JSON: " + e.what());
    }
}

}  // namespace ccnn::net3d
