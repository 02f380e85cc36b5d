#include "ccnn/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "ccnn/aperture.hpp"
#include "ccnn/io_util.hpp"
#include "ccnn/rng.hpp"

namespace ccnn::evalbench {

using datacube::HyperCube;
using datacube::LabelMap;
using forward_model::MeasurementCube;
using forward_model::Patch;
using nlohmann::json;
using train::MeasuredSample;
using train::PatchDataset;
using train::PatchSample;

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          int classes) {
    if (truth.size() != pred.size())
        throw std::invalid_argument("confusion: truth/pred length mismatch");
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(std::size_t(classes) * classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        int t = truth[i], p = pred[i];
        if (t < 1 || t > classes || p < 1 || p > classes)
            throw std::invalid_argument("confusion: label out of range at index " +
                                        std::to_string(i));
        ++cm.at(t - 1, p - 1);
    }
    return cm;
}

Report metrics(const ConfusionMatrix& cm) {
    Report r;
    r.confusion = cm;
    std::int64_t total = cm.total();
    if (total <= 0) throw std::invalid_argument("metrics: empty confusion matrix");
    const int mc = cm.classes;

    std::vector<std::int64_t> rowsum(mc, 0), colsum(mc, 0);
    std::int64_t diag = 0;
    for (int t = 0; t < mc; ++t)
        for (int p = 0; p < mc; ++p) {
            rowsum[t] += cm.at(t, p);
            colsum[p] += cm.at(t, p);
            if (t == p) diag += cm.at(t, p);
        }

    r.per_class.assign(mc, 0.0);
    double acc_sum = 0.0;
    int present = 0;
    for (int t = 0; t < mc; ++t) {
        if (rowsum[t] > 0) {
            r.per_class[t] = static_cast<double>(cm.at(t, t)) / static_cast<double>(rowsum[t]);
            acc_sum += r.per_class[t];
            ++present;
        }
    }
    r.oa = static_cast<double>(diag) / static_cast<double>(total);
    r.aa = present > 0 ? acc_sum / present : 0.0;

    double pe = 0.0;
    double tt = static_cast<double>(total);
    for (int j = 0; j < mc; ++j)
        pe += static_cast<double>(rowsum[j]) * static_cast<double>(colsum[j]) / (tt * tt);
    r.kappa = pe >= 1.0 ? 1.0 : (r.oa - pe) / (1.0 - pe);
    return r;
}

double compression_ratio(int k, int l) {
    if (k < 1 || l < 1) throw std::invalid_argument("compression_ratio: k, l must be >= 1");
    return static_cast<double>(k) / static_cast<double>(l);
}

SvmModel svm_train(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   int classes, const SvmConfig& cfg) {
    if (x.empty() || x.size() != y.size())
        throw std::invalid_argument("svm_train: empty or mismatched data");
    if (classes < 2) throw std::invalid_argument("svm_train: need >= 2 classes");
    {
        std::vector<bool> seen(classes + 1, false);
        int distinct = 0;
        for (int label : y) {
            if (label < 1 || label > classes)
                throw std::invalid_argument("svm_train: label out of range");
            if (!seen[label]) {
                seen[label] = true;
                ++distinct;
            }
        }
        if (distinct < 2) throw std::runtime_error("svm_train: single-class training data");
    }
    const std::size_t n = x.size();
    const int dim = static_cast<int>(x.front().size());

    SvmModel model;
    model.classes = classes;
    model.dim = dim;
    model.mean.assign(dim, 0.0);
    model.sd.assign(dim, 0.0);
    for (const auto& row : x)
        for (int d = 0; d < dim; ++d) model.mean[d] += row[d];
    for (int d = 0; d < dim; ++d) model.mean[d] /= static_cast<double>(n);
    for (const auto& row : x)
        for (int d = 0; d < dim; ++d) {
            double c = row[d] - model.mean[d];
            model.sd[d] += c * c;
        }
    for (int d = 0; d < dim; ++d) {
        model.sd[d] = std::sqrt(model.sd[d] / static_cast<double>(n));
        if (model.sd[d] < 1e-12) model.sd[d] = 1.0;
    }

    std::vector<std::vector<double>> z(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (int d = 0; d < dim; ++d) z[i][d] = (x[i][d] - model.mean[d]) / model.sd[d];

    model.w.assign(std::size_t(classes) * dim, 0.0);
    model.b.assign(classes, 0.0);
    const double lambda = 1.0 / cfg.c;
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> gw(dim);

    for (int cls = 0; cls < classes; ++cls) {
        double* w = model.w.data() + std::size_t(cls) * dim;
        double& b = model.b[cls];
        for (int it = 0; it < cfg.epochs; ++it) {
            std::fill(gw.begin(), gw.end(), 0.0);
            double gb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double t = y[i] == cls + 1 ? 1.0 : -1.0;
                double margin = b;
                for (int d = 0; d < dim; ++d) margin += w[d] * z[i][d];
                if (t * margin < 1.0) {
                    for (int d = 0; d < dim; ++d) gw[d] -= t * z[i][d];
                    gb -= t;
                }
            }
            for (int d = 0; d < dim; ++d) w[d] -= cfg.eta * (lambda * w[d] + gw[d] * inv_n);
            b -= cfg.eta * gb * inv_n;
        }
    }
    return model;
}

int svm_predict(const SvmModel& model, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != model.dim)
        throw std::invalid_argument("svm_predict: feature dimension mismatch");
    int best = 0;
    double best_score = 0.0;
    for (int cls = 0; cls < model.classes; ++cls) {
        const double* w = model.w.data() + std::size_t(cls) * model.dim;
        double score = model.b[cls];
        for (int d = 0; d < model.dim; ++d)
            score += w[d] * (x[d] - model.mean[d]) / model.sd[d];
        if (cls == 0 || score > best_score) {
            best = cls;
            best_score = score;
        }
    }
    return best + 1;
}

namespace {

const std::uint8_t kPalette[16][3] = {
    {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
    {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
    {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
    {170, 110, 40}, {255, 250, 200}, {128, 0, 0},    {170, 255, 195},
};

}  // namespace

void render_map(const LabelMap& pred, const std::string& path) {
    char header[64];
    int len = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", pred.m, pred.n);
    std::vector<std::uint8_t> bytes(header, header + len);
    bytes.reserve(bytes.size() + std::size_t(pred.n) * pred.m * 3);
    for (int x = 0; x < pred.n; ++x)
        for (int y = 0; y < pred.m; ++y) {
            int label = pred.at(x, y);
            if (label == 0) {
                bytes.insert(bytes.end(), {0, 0, 0});
            } else {
                const auto& c = kPalette[(label - 1) % 16];
                bytes.insert(bytes.end(), {c[0], c[1], c[2]});
            }
        }
    write_file_bytes(path, bytes.data(), bytes.size());
}

const std::vector<std::string> kKnownMethods = {
    "ccnn",
    "rand-compress-3dcnn",
    "bluenoise-compress-3dcnn",
    "rand-compress-svm",
    "bluenoise-compress-svm",
    "original-3dcnn",
    "original-svm",
};

namespace {

enum : std::uint64_t {
    kStreamScene = 201,
    kStreamSplit = 202,
    kStreamRandAp = 203,
    kStreamBlueAp = 204,
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> flatten_patch(const Patch& p) { return p.v; }

// measurements for a fixed full-pattern aperture, extracted per sample center
std::vector<MeasuredSample> measure_samples(const std::vector<PatchSample>& samples,
                                            const MeasurementCube& meas, int p) {
    std::vector<MeasuredSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back({forward_model::extract_patch(meas, s.x0, s.y0, p), s.label});
    return out;
}

struct RunContext {
    HyperCube cube;
    LabelMap labels;
    int classes = 0;
    PatchDataset patches;
    // lazily built measured datasets keyed by aperture kind
    bool have_rand = false, have_blue = false;
    std::vector<MeasuredSample> rand_train, rand_test, blue_train, blue_test;
};

void ensure_measured(RunContext& ctx, const CompareConfig& cfg, std::uint64_t run_seed,
                     bool blue) {
    bool& have = blue ? ctx.have_blue : ctx.have_rand;
    if (have) return;
    const int cols = ctx.cube.m + ctx.cube.l - 1;
    aperture::CodedApertureSet set =
        blue ? aperture::bluenoise_full_set(cfg.snapshots, ctx.cube.n, cols,
                                            cfg.bluenoise_density,
                                            mix_seed(run_seed, kStreamBlueAp))
             : aperture::random_full_set(cfg.snapshots, ctx.cube.n, cols, cfg.transmittance,
                                         mix_seed(run_seed, kStreamRandAp));
    MeasurementCube meas = forward_model::simulate_all(ctx.cube, set, cfg.noise);
    auto& tr = blue ? ctx.blue_train : ctx.rand_train;
    auto& te = blue ? ctx.blue_test : ctx.rand_test;
    tr = measure_samples(ctx.patches.train, meas, cfg.patch);
    te = measure_samples(ctx.patches.test, meas, cfg.patch);
    have = true;
}

Report evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& pred,
                            int classes, double train_s, double eval_s) {
    Report r = metrics(confusion(truth, pred, classes));
    r.timing["train"] = train_s;
    r.timing["eval"] = eval_s;
    return r;
}

Report run_method(const std::string& method, RunContext& ctx, const CompareConfig& cfg,
                  std::uint64_t run_seed) {
    net3d::TrainConfig tc = cfg.train;
    tc.seed = run_seed;
    tc.patch_p = cfg.patch;
    SvmConfig sc = cfg.svm;
    sc.seed = run_seed;

    std::vector<int> truth;
    truth.reserve(ctx.patches.test.size());
    for (const auto& s : ctx.patches.test) truth.push_back(s.label);

    auto t0 = std::chrono::steady_clock::now();

    if (method == "ccnn") {
        auto result = train::train_joint(ctx.patches.train, tc, cfg.snapshots, cfg.block,
                                         ctx.classes);
        double train_s = seconds_since(t0);
        auto t1 = std::chrono::steady_clock::now();
        std::vector<int> pred;
        pred.reserve(ctx.patches.test.size());
        for (const auto& s : ctx.patches.test) pred.push_back(train::predict(result.params, s));
        return evaluate_predictions(truth, pred, ctx.classes, train_s, seconds_since(t1));
    }
    if (method == "rand-compress-3dcnn" || method == "bluenoise-compress-3dcnn") {
        bool blue = method.rfind("bluenoise", 0) == 0;
        ensure_measured(ctx, cfg, run_seed, blue);
        const auto& tr = blue ? ctx.blue_train : ctx.rand_train;
        const auto& te = blue ? ctx.blue_test : ctx.rand_test;
        t0 = std::chrono::steady_clock::now();
        auto result = train::train_fixed(tr, tc, ctx.classes, cfg.snapshots, cfg.patch);
        double train_s = seconds_since(t0);
        auto t1 = std::chrono::steady_clock::now();
        std::vector<int> pred;
        pred.reserve(te.size());
        for (const auto& s : te) pred.push_back(train::predict_measured(result.net, s.input));
        return evaluate_predictions(truth, pred, ctx.classes, train_s, seconds_since(t1));
    }
    if (method == "rand-compress-svm" || method == "bluenoise-compress-svm") {
        bool blue = method.rfind("bluenoise", 0) == 0;
        ensure_measured(ctx, cfg, run_seed, blue);
        const auto& tr = blue ? ctx.blue_train : ctx.rand_train;
        const auto& te = blue ? ctx.blue_test : ctx.rand_test;
        t0 = std::chrono::steady_clock::now();
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (const auto& s : tr) {
            x.push_back(flatten_patch(s.input));
            y.push_back(s.label);
        }
        SvmModel model = svm_train(x, y, ctx.classes, sc);
        double train_s = seconds_since(t0);
        auto t1 = std::chrono::steady_clock::now();
        std::vector<int> pred;
        pred.reserve(te.size());
        for (const auto& s : te) pred.push_back(svm_predict(model, flatten_patch(s.input)));
        return evaluate_predictions(truth, pred, ctx.classes, train_s, seconds_since(t1));
    }
    if (method == "original-3dcnn") {
        std::vector<MeasuredSample> tr, te;
        for (const auto& s : ctx.patches.train) tr.push_back({s.scene, s.label});
        for (const auto& s : ctx.patches.test) te.push_back({s.scene, s.label});
        t0 = std::chrono::steady_clock::now();
        auto result = train::train_fixed(tr, tc, ctx.classes, ctx.cube.l, cfg.patch);
        double train_s = seconds_since(t0);
        auto t1 = std::chrono::steady_clock::now();
        std::vector<int> pred;
        pred.reserve(te.size());
        for (const auto& s : te) pred.push_back(train::predict_measured(result.net, s.input));
        return evaluate_predictions(truth, pred, ctx.classes, train_s, seconds_since(t1));
    }
    if (method == "original-svm") {
        t0 = std::chrono::steady_clock::now();
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (const auto& s : ctx.patches.train) {
            x.push_back(flatten_patch(s.scene));
            y.push_back(s.label);
        }
        SvmModel model = svm_train(x, y, ctx.classes, sc);
        double train_s = seconds_since(t0);
        auto t1 = std::chrono::steady_clock::now();
        std::vector<int> pred;
        pred.reserve(ctx.patches.test.size());
        for (const auto& s : ctx.patches.test)
            pred.push_back(svm_predict(model, flatten_patch(s.scene)));
        return evaluate_predictions(truth, pred, ctx.classes, train_s, seconds_since(t1));
    }
    throw std::invalid_argument("compare: unknown method '" + method + "'");
}

}  // namespace

std::vector<CompareRow> compare(const CompareConfig& cfg) {
    if (cfg.methods.empty()) throw std::invalid_argument("compare: no methods configured");
    for (const auto& m : cfg.methods)
        if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
            throw std::invalid_argument("compare: unknown method '" + m + "'");
    if (cfg.runs < 1) throw std::invalid_argument("compare: runs must be >= 1");

    std::vector<CompareRow> rows;
    for (const auto& method : cfg.methods) rows.push_back({method, {}, 0.0});

    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = mix_seed(cfg.seed, 7000 + run);
        RunContext ctx;
        if (cfg.scene.synth) {
            auto [cube, labels] = datacube::generate_synthetic_scene(
                cfg.scene.n, cfg.scene.m, cfg.scene.l, cfg.scene.classes,
                mix_seed(run_seed, kStreamScene));
            ctx.cube = std::move(cube);
            ctx.labels = std::move(labels);
        } else {
            ctx.cube = datacube::load_cube(cfg.scene.path);
            ctx.labels = datacube::load_labels(cfg.scene.labels_path);
        }
        datacube::normalize_cube(ctx.cube);
        ctx.classes = ctx.labels.mc;
        auto split = datacube::split_train_test(ctx.labels, cfg.split_fraction,
                                                mix_seed(run_seed, kStreamSplit),
                                                cfg.stratified);
        ctx.patches = train::build_patch_dataset(ctx.cube, ctx.labels, split, cfg.patch);

        for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
            Report r = run_method(cfg.methods[i], ctx, cfg, run_seed);
            CompareRow& row = rows[i];
            if (run == 0) {
                row.report = r;
            } else {
                row.report.oa += r.oa;
                row.report.aa += r.aa;
                row.report.kappa += r.kappa;
                for (std::size_t c = 0; c < r.per_class.size(); ++c)
                    row.report.per_class[c] += r.per_class[c];
                for (std::size_t c = 0; c < r.confusion.counts.size(); ++c)
                    row.report.confusion.counts[c] += r.confusion.counts[c];
                for (const auto& [stage, s] : r.timing) row.report.timing[stage] += s;
            }
        }
    }

    double inv_runs = 1.0 / static_cast<double>(cfg.runs);
    for (auto& row : rows) {
        row.report.oa *= inv_runs;
        row.report.aa *= inv_runs;
        row.report.kappa *= inv_runs;
        for (auto& c : row.report.per_class) c *= inv_runs;
        double total = 0.0;
        for (auto& [stage, s] : row.report.timing) {
            s *= inv_runs;
            total += s;
        }
        row.seconds = total;
    }
    return rows;
}

std::string report_to_json(const Report& report) {
    json j;
    j["per_class"] = report.per_class;
    j["oa"] = report.oa;
    j["aa"] = report.aa;
    j["kappa"] = report.kappa;
    json cm = json::array();
    for (int t = 0; t < report.confusion.classes; ++t) {
        json row = json::array();
        for (int p = 0; p < report.confusion.classes; ++p) row.push_back(report.confusion.at(t, p));
        cm.push_back(row);
    }
    j["confusion"] = cm;
    j["timing"] = report.timing;
    return j.dump();
}

std::string compare_rows_to_csv(const std::vector<CompareRow>& rows) {
    std::string out = "method,oa,aa,kappa,seconds\n";
    char line[160];
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.3f\n", row.method.c_str(),
                      row.report.oa, row.report.aa, row.report.kappa, row.seconds);
        out += line;
    }
    return out;
}

std::string compare_rows_to_json(const std::vector<CompareRow>& rows) {
    json j = json::array();
    for (const auto& row : rows) {
        json r = json::parse(report_to_json(row.report));
        r["method"] = row.method;
        r["seconds"] = row.seconds;
        j.push_back(r);
    }
    return j.dump();
}

}  // namespace ccnn::evalbench
