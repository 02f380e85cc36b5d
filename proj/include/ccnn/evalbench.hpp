#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccnn/datacube.hpp"
#include "ccnn/forward_model.hpp"
#include "ccnn/net3d.hpp"
#include "ccnn/train.hpp"

namespace ccnn::evalbench {

// rows = truth, cols = prediction, both 1-based classes externally
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::int64_t> counts;

    std::int64_t& at(int truth, int pred) { return counts[std::size_t(truth) * classes + pred]; }
    std::int64_t at(int truth, int pred) const {
        return counts[std::size_t(truth) * classes + pred];
    }
    std::int64_t total() const;
};

struct Report {
    std::vector<double> per_class;
    double oa = 0.0, aa = 0.0, kappa = 0.0;
    ConfusionMatrix confusion;
    std::map<std::string, double> timing;  // seconds per stage
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          int classes);

// OA = trace/total, AA = mean per-class recall over classes with truth
// samples, Kappa = (p_o - p_e) / (1 - p_e) with Cohen's chance term.
Report metrics(const ConfusionMatrix& cm);

double compression_ratio(int k, int l);

struct SvmConfig {
    double c = 1.0;  // inverse L2 weight: penalty = (1/(2c))*|w|^2
    int epochs = 300;
    double eta = 0.1;
    std::uint64_t seed = 0;
};

// One-vs-rest linear SVM trained by full-batch subgradient descent on
// mean hinge loss + L2 penalty; features standardized with train statistics.
struct SvmModel {
    int classes = 0, dim = 0;
    std::vector<double> w;  // [class][feature]
    std::vector<double> b;  // [class]
    std::vector<double> mean, sd;
};

SvmModel svm_train(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   int classes, const SvmConfig& cfg);
int svm_predict(const SvmModel& model, const std::vector<double>& x);

// Classification map as binary PPM (P6): fixed 16-color palette, black for
// unlabeled.
void render_map(const datacube::LabelMap& pred, const std::string& path);

struct SceneSpec {
    std::string path;         // .hsc cube (unused when synth)
    std::string labels_path;  // .pgm labels (unused when synth)
    bool synth = false;
    int n = 48, m = 48, l = 8, classes = 5;
};

struct CompareConfig {
    SceneSpec scene;
    std::uint64_t seed = 0;
    int snapshots = 3;
    int block = 4;
    int patch = 7;
    double split_fraction = 0.3;
    bool stratified = false;
    double transmittance = 0.5;
    double bluenoise_density = 0.5;
    net3d::TrainConfig train;
    SvmConfig svm;
    forward_model::NoiseConfig noise;
    std::vector<std::string> methods;
    int runs = 1;
};

struct CompareRow {
    std::string method;
    Report report;
    double seconds = 0.0;
};

extern const std::vector<std::string> kKnownMethods;

// Runs every configured method with a shared split and seed; with runs > 1
// metric fields are means over per-run reports and confusions are summed.
std::vector<CompareRow> compare(const CompareConfig& cfg);

std::string report_to_json(const Report& report);
std::string compare_rows_to_csv(const std::vector<CompareRow>& rows);
std::string compare_rows_to_json(const std::vector<CompareRow>& rows);

}  // namespace ccnn::evalbench
