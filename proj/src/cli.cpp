#include "ccnn/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccnn/aperture.hpp"
#include "ccnn/datacube.hpp"
#include "ccnn/evalbench.hpp"
#include "ccnn/forward_model.hpp"
#include "ccnn/io_util.hpp"
#include "ccnn/net3d.hpp"
#include "ccnn/parallel.hpp"
#include "ccnn/train.hpp"

namespace ccnn::cli {

using nlohmann::json;

namespace {

// provenance record written next to every command's primary output
struct RunRecord {
    std::string command;
    json config = json::object();
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void add_input(const std::string& path) { inputs[path] = file_checksum(path); }
    void add_output(const std::string& path) { outputs[path] = file_checksum(path); }

    void write(const std::string& path) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["timing_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string text = j.dump(2);
        text.push_back('\n');
        write_file_bytes(path, text.data(), text.size());
    }
};

void require_file(const std::string& path, const std::string& flag) {
    if (!file_exists(path))
        throw std::invalid_argument("file for " + flag + " does not exist: " + path);
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("CCNN_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

std::string default_run_json(const std::string& primary_out) {
    return primary_out + ".run.json";
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    int n = 48, m = 48, l = 8, classes = 5;
    std::uint64_t seed = 0;
    std::string out, labels, run_json;
};

int cmd_synth(const SynthArgs& a) {
    RunRecord rec;
    rec.command = "synth";
    rec.config = {{"n", a.n},   {"m", a.m},         {"l", a.l},
                  {"classes", a.classes}, {"seed", a.seed}, {"out", a.out},
                  {"labels", a.labels}};
    auto [cube, labels] = datacube::generate_synthetic_scene(a.n, a.m, a.l, a.classes, a.seed);
    datacube::save_cube(cube, a.out);
    datacube::save_labels(labels, a.labels);
    rec.add_output(a.out);
    rec.add_output(a.labels);
    rec.write(a.run_json.empty() ? default_run_json(a.out) : a.run_json);
    std::printf("synth: wrote %s (%dx%dx%d) and %s (%d classes)\n", a.out.c_str(), a.n, a.m,
                a.l, a.labels.c_str(), a.classes);
    return 0;
}

// ---- aperture ---------------------------------------------------------------

struct ApertureArgs {
    std::string kind = "random-block";
    int k = 2, b = 4, n = 0, cols = 0;
    double transmittance = 0.5, density = 0.5;
    std::uint64_t seed = 0;
    std::string out, tiled_out, run_json;
};

int cmd_aperture(const ApertureArgs& a) {
    RunRecord rec;
    rec.command = "aperture";
    rec.config = {{"kind", a.kind}, {"k", a.k},
                  {"b", a.b},       {"n", a.n},
                  {"cols", a.cols}, {"transmittance", a.transmittance},
                  {"density", a.density}, {"seed", a.seed},
                  {"out", a.out},   {"tiled_out", a.tiled_out}};
    aperture::CodedApertureSet set;
    if (a.kind == "random-block") {
        set = aperture::random_block_set(a.k, a.b, a.transmittance, a.seed);
    } else if (a.kind == "random") {
        if (a.n < 1 || a.cols < 1)
            throw std::invalid_argument("--n and --cols are required for --kind random");
        set = aperture::random_full_set(a.k, a.n, a.cols, a.transmittance, a.seed);
    } else if (a.kind == "bluenoise") {
        if (a.n < 1 || a.cols < 1)
            throw std::invalid_argument("--n and --cols are required for --kind bluenoise");
        set = aperture::bluenoise_full_set(a.k, a.n, a.cols, a.density, a.seed);
    } else {
        throw std::invalid_argument("--kind must be random-block, random, or bluenoise");
    }
    aperture::save_apertures(set, a.out);
    rec.add_output(a.out);
    if (!a.tiled_out.empty()) {
        if (set.mode != aperture::Mode::periodic)
            throw std::invalid_argument("--tiled-out only applies to periodic apertures");
        if (a.n < 1 || a.cols < 1)
            throw std::invalid_argument("--n and --cols are required with --tiled-out");
        aperture::CodedApertureSet tiled;
        tiled.mode = aperture::Mode::full;
        tiled.k = set.k;
        tiled.n = a.n;
        tiled.cols = a.cols;
        for (const auto& blk : set.blocks)
            tiled.patterns.push_back(aperture::tile(blk, a.n, a.cols));
        aperture::save_apertures(tiled, a.tiled_out);
        rec.add_output(a.tiled_out);
    }
    rec.write(a.run_json.empty() ? default_run_json(a.out) : a.run_json);
    std::printf("aperture: wrote %s (%s, k=%d)\n", a.out.c_str(), a.kind.c_str(), a.k);
    return 0;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string scene, aperture_path, out, export_matrix, run_json;
    double snr_db = 0.0;
    bool with_noise = false;
    std::uint64_t noise_seed = 0;
    bool no_normalize = false;
};

int cmd_simulate(const SimulateArgs& a) {
    RunRecord rec;
    rec.command = "simulate";
    rec.config = {{"scene", a.scene},        {"aperture", a.aperture_path},
                  {"out", a.out},            {"snr_db", a.with_noise ? json(a.snr_db) : json()},
                  {"noise_seed", a.noise_seed}, {"export_matrix", a.export_matrix},
                  {"normalize", !a.no_normalize}};
    require_file(a.scene, "--scene");
    require_file(a.aperture_path, "--aperture");
    rec.add_input(a.scene);
    rec.add_input(a.aperture_path);

    auto cube = datacube::load_cube(a.scene);
    if (!a.no_normalize) datacube::normalize_cube(cube);
    auto set = aperture::load_apertures(a.aperture_path);
    forward_model::NoiseConfig noise;
    if (a.with_noise) {
        noise.kind = forward_model::NoiseKind::gaussian;
        noise.snr_db = a.snr_db;
        noise.seed = a.noise_seed;
    }
    auto meas = forward_model::simulate_all(cube, set, noise);
    forward_model::save_measurement(meas, a.out);
    rec.add_output(a.out);
    if (!a.export_matrix.empty()) {
        auto h = forward_model::build_system_matrix(set, cube.n, cube.m, cube.l);
        h.export_text(a.export_matrix);
        rec.add_output(a.export_matrix);
    }
    rec.write(a.run_json.empty() ? default_run_json(a.out) : a.run_json);
    std::printf("simulate: wrote %s (%dx%dx%d snapshots)\n", a.out.c_str(), meas.n, meas.m,
                meas.k);
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    std::string scene, labels, mode = "joint", aperture_path, out, run_json;
    int k = 3, b = 4, p = 7;
    double split_fraction = 0.3;
    std::uint64_t split_seed = 0;
    bool stratified = false;
    double eta = 0.01;
    int epochs = 100, batch = 64;
    std::uint64_t seed = 0;
    double clip = 0.0;
    bool project_every_step = false;
    std::string block_init = "uniform";
    int threads = 0;
};

int cmd_train(const TrainArgs& a) {
    RunRecord rec;
    rec.command = "train";
    rec.config = {{"scene", a.scene},
                  {"labels", a.labels},
                  {"mode", a.mode},
                  {"aperture", a.aperture_path},
                  {"k", a.k},
                  {"b", a.b},
                  {"p", a.p},
                  {"split_fraction", a.split_fraction},
                  {"split_seed", a.split_seed},
                  {"stratified", a.stratified},
                  {"eta", a.eta},
                  {"epochs", a.epochs},
                  {"batch", a.batch},
                  {"seed", a.seed},
                  {"clip", a.clip},
                  {"project_every_step", a.project_every_step},
                  {"block_init", a.block_init},
                  {"out", a.out}};
    require_file(a.scene, "--scene");
    require_file(a.labels, "--labels");
    rec.add_input(a.scene);
    rec.add_input(a.labels);
    set_thread_count(resolve_threads(a.threads));

    auto cube = datacube::load_cube(a.scene);
    datacube::normalize_cube(cube);
    auto labels = datacube::load_labels(a.labels);
    if (labels.n != cube.n || labels.m != cube.m)
        throw std::invalid_argument("--labels dimensions do not match --scene");
    int classes = labels.mc;
    auto split = datacube::split_train_test(labels, a.split_fraction, a.split_seed,
                                            a.stratified);
    auto dataset = train::build_patch_dataset(cube, labels, split, a.p);

    net3d::TrainConfig tc;
    tc.eta = a.eta;
    tc.epochs = a.epochs;
    tc.batch = a.batch;
    tc.seed = a.seed;
    tc.patch_p = a.p;
    tc.clip = a.clip;
    tc.project_every_step = a.project_every_step;

    train::JointModel model;
    model.config.mode = a.mode;
    model.config.b = a.b;
    model.config.p = a.p;
    model.config.classes = classes;
    model.config.eta = a.eta;
    model.config.epochs = a.epochs;
    model.config.batch = a.batch;
    model.config.seed = a.seed;
    model.config.split_fraction = a.split_fraction;
    model.config.split_seed = a.split_seed;
    model.config.stratified = a.stratified;
    model.config.clip = a.clip;
    model.config.project_every_step = a.project_every_step;

    if (a.mode == "joint") {
        model.config.k = a.k;
        auto init = a.block_init == "bernoulli" ? train::BlockInit::bernoulli05
                                                : train::BlockInit::uniform01;
        auto result = train::train_joint(dataset.train, tc, a.k, a.b, classes, init);
        model.net = std::move(result.params.net);
        model.apertures = std::move(result.params.blocks);
        model.loss_trace = std::move(result.loss_trace);
    } else if (a.mode == "fixed") {
        require_file(a.aperture_path, "--aperture");
        rec.add_input(a.aperture_path);
        auto set = aperture::load_apertures(a.aperture_path);
        model.config.k = set.k;
        auto meas = forward_model::simulate_all(cube, set, {});
        std::vector<train::MeasuredSample> measured;
        measured.reserve(dataset.train.size());
        for (const auto& s : dataset.train)
            measured.push_back({forward_model::extract_patch(meas, s.x0, s.y0, a.p), s.label});
        auto result = train::train_fixed(measured, tc, classes, set.k, a.p);
        model.net = std::move(result.net);
        model.apertures = std::move(set);
        model.loss_trace = std::move(result.loss_trace);
    } else if (a.mode == "original") {
        model.config.k = cube.l;
        std::vector<train::MeasuredSample> measured;
        measured.reserve(dataset.train.size());
        for (const auto& s : dataset.train) measured.push_back({s.scene, s.label});
        auto result = train::train_fixed(measured, tc, classes, cube.l, a.p);
        model.net = std::move(result.net);
        model.loss_trace = std::move(result.loss_trace);
    } else {
        throw std::invalid_argument("--mode must be joint, fixed, or original");
    }

    train::save_model(model, a.out);
    rec.add_output(a.out);
    rec.write(a.run_json.empty() ? default_run_json(a.out) : a.run_json);
    std::printf("train: wrote %s (mode=%s, final loss %.6f)\n", a.out.c_str(), a.mode.c_str(),
                model.loss_trace.empty() ? 0.0 : model.loss_trace.back());
    return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string model, scene, labels, report, map_path, run_json;
    int threads = 0;
};

int cmd_eval(const EvalArgs& a) {
    RunRecord rec;
    rec.command = "eval";
    rec.config = {{"model", a.model}, {"scene", a.scene},   {"labels", a.labels},
                  {"report", a.report}, {"map", a.map_path}};
    require_file(a.model, "--model");
    require_file(a.scene, "--scene");
    require_file(a.labels, "--labels");
    rec.add_input(a.model);
    rec.add_input(a.scene);
    rec.add_input(a.labels);
    set_thread_count(resolve_threads(a.threads));

    auto model = train::load_model(a.model);
    auto cube = datacube::load_cube(a.scene);
    datacube::normalize_cube(cube);
    auto labels = datacube::load_labels(a.labels);
    if (labels.mc != model.config.classes)
        throw std::invalid_argument("--labels class count does not match the model");
    auto split = datacube::split_train_test(labels, model.config.split_fraction,
                                            model.config.split_seed, model.config.stratified);
    auto dataset = train::build_patch_dataset(cube, labels, split, model.config.p);

    std::optional<forward_model::MeasurementCube> meas;
    if (model.config.mode == "fixed")
        meas = forward_model::simulate_all(cube, *model.apertures, {});

    auto predict_one = [&](const train::PatchSample& s) -> int {
        if (model.config.mode == "joint")
            return train::predict({model.net, *model.apertures}, s);
        if (model.config.mode == "fixed")
            return train::predict_measured(
                model.net, forward_model::extract_patch(*meas, s.x0, s.y0, model.config.p));
        return train::predict_measured(model.net, s.scene);
    };

    auto t0 = std::chrono::steady_clock::now();
    std::vector<int> truth, pred;
    truth.reserve(dataset.test.size());
    pred.resize(dataset.test.size());
    for (const auto& s : dataset.test) truth.push_back(s.label);
    parallel_chunks(dataset.test.size(), 32, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) pred[i] = predict_one(dataset.test[i]);
    });
    auto report = evalbench::metrics(evalbench::confusion(truth, pred, model.config.classes));
    report.timing["eval"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string primary = a.report.empty() ? a.model + ".report.json" : a.report;
    {
        std::string text = evalbench::report_to_json(report);
        text.push_back('\n');
        write_file_bytes(primary, text.data(), text.size());
        rec.add_output(primary);
    }
    if (!a.map_path.empty()) {
        datacube::LabelMap pm;
        pm.n = labels.n;
        pm.m = labels.m;
        pm.mc = labels.mc;
        pm.v.assign(labels.v.size(), 0);
        std::vector<train::PatchSample> all = dataset.train;
        all.insert(all.end(), dataset.test.begin(), dataset.test.end());
        std::vector<int> map_pred(all.size());
        parallel_chunks(all.size(), 32, [&](std::size_t, std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) map_pred[i] = predict_one(all[i]);
        });
        for (std::size_t i = 0; i < all.size(); ++i)
            pm.at(all[i].x0, all[i].y0) = static_cast<std::uint8_t>(map_pred[i]);
        evalbench::render_map(pm, a.map_path);
        rec.add_output(a.map_path);
    }
    rec.write(a.run_json.empty() ? default_run_json(primary) : a.run_json);
    std::printf("eval: oa=%.4f aa=%.4f kappa=%.4f (%zu test pixels)\n", report.oa, report.aa,
                report.kappa, dataset.test.size());
    return 0;
}

// ---- compare ----------------------------------------------------------------

struct CompareArgs {
    std::string config_path, out_dir = ".", run_json;
    int runs_override = 0;
    int threads = 0;
};

evalbench::CompareConfig parse_compare_config(const json& j) {
    evalbench::CompareConfig cfg;
    if (j.contains("scene")) {
        const auto& s = j["scene"];
        if (s.contains("synth")) {
            cfg.scene.synth = true;
            const auto& sy = s["synth"];
            cfg.scene.n = sy.value("n", 48);
            cfg.scene.m = sy.value("m", 48);
            cfg.scene.l = sy.value("l", 8);
            cfg.scene.classes = sy.value("classes", 5);
        } else {
            cfg.scene.path = s.at("path").get<std::string>();
            cfg.scene.labels_path = s.at("labels").get<std::string>();
        }
    } else {
        cfg.scene.synth = true;
    }
    cfg.seed = j.value("seed", 0);
    cfg.snapshots = j.value("snapshots", 3);
    cfg.block = j.value("block", 4);
    cfg.patch = j.value("patch", 7);
    cfg.split_fraction = j.value("split_fraction", 0.3);
    cfg.stratified = j.value("stratified", false);
    cfg.transmittance = j.value("transmittance", 0.5);
    cfg.bluenoise_density = j.value("bluenoise_density", 0.5);
    cfg.runs = j.value("runs", 1);
    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.eta = t.value("eta", 0.01);
        cfg.train.epochs = t.value("epochs", 100);
        cfg.train.batch = t.value("batch", 64);
        cfg.train.clip = t.value("clip", 0.0);
    }
    if (j.contains("svm")) {
        const auto& s = j["svm"];
        cfg.svm.c = s.value("c", 1.0);
        cfg.svm.epochs = s.value("epochs", 300);
        cfg.svm.eta = s.value("eta", 0.1);
    }
    if (j.contains("noise") && j["noise"].value("kind", "none") == "gaussian") {
        cfg.noise.kind = forward_model::NoiseKind::gaussian;
        cfg.noise.snr_db = j["noise"].value("snr_db", 40.0);
        cfg.noise.seed = j["noise"].value("seed", 0);
    }
    cfg.methods = j.value("methods", std::vector<std::string>{});
    return cfg;
}

int cmd_compare(const CompareArgs& a) {
    RunRecord rec;
    rec.command = "compare";
    require_file(a.config_path, "--config");
    rec.add_input(a.config_path);
    set_thread_count(resolve_threads(a.threads));

    auto bytes = read_file_bytes(a.config_path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError(a.config_path + ": not valid JSON: " + e.what());
    }
    auto cfg = parse_compare_config(j);
    if (a.runs_override > 0) cfg.runs = a.runs_override;
    rec.config = j;
    rec.config["out_dir"] = a.out_dir;
    rec.config["runs"] = cfg.runs;

    if (!cfg.scene.synth) {
        require_file(cfg.scene.path, "scene.path");
        require_file(cfg.scene.labels_path, "scene.labels");
        rec.add_input(cfg.scene.path);
        rec.add_input(cfg.scene.labels_path);
    }

    auto rows = evalbench::compare(cfg);

    std::filesystem::create_directories(a.out_dir);
    std::string csv_path = a.out_dir + "/compare.csv";
    std::string json_path = a.out_dir + "/compare.json";
    {
        std::string csv = evalbench::compare_rows_to_csv(rows);
        write_file_bytes(csv_path, csv.data(), csv.size());
        std::string js = evalbench::compare_rows_to_json(rows);
        js.push_back('\n');
        write_file_bytes(json_path, js.data(), js.size());
    }
    rec.add_output(csv_path);
    rec.add_output(json_path);
    rec.write(a.run_json.empty() ? a.out_dir + "/run.json" : a.run_json);
    std::fputs(evalbench::compare_rows_to_csv(rows).c_str(), stdout);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"DD-CASSI compressive measurement simulation and 3D-CCNN "
                 "classification experiments"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic labeled scene");
    s->add_option("--n", synth.n, "rows")->check(CLI::Range(8, 4096));
    s->add_option("--m", synth.m, "cols")->check(CLI::Range(8, 4096));
    s->add_option("--l", synth.l, "bands")->check(CLI::Range(2, 1024));
    s->add_option("--classes", synth.classes)->check(CLI::Range(2, 16));
    s->add_option("--seed", synth.seed);
    s->add_option("--out", synth.out, "output .hsc cube")->required();
    s->add_option("--labels", synth.labels, "output .pgm label map")->required();
    s->add_option("--run-json", synth.run_json);

    ApertureArgs ap;
    auto* ac = app.add_subcommand("aperture", "generate coded apertures");
    ac->add_option("--kind", ap.kind, "random-block | random | bluenoise");
    ac->add_option("--k", ap.k, "snapshot count")->check(CLI::Range(1, 256));
    ac->add_option("--b", ap.b, "basic block side (random-block)")->check(CLI::Range(1, 256));
    ac->add_option("--n", ap.n, "pattern rows (full kinds)");
    ac->add_option("--cols", ap.cols, "pattern cols = M+L-1 (full kinds)");
    ac->add_option("--transmittance", ap.transmittance)->check(CLI::Range(0.0, 1.0));
    ac->add_option("--density", ap.density)->check(CLI::Range(0.0, 1.0));
    ac->add_option("--seed", ap.seed);
    ac->add_option("--out", ap.out, "output .apt.json")->required();
    ac->add_option("--tiled-out", ap.tiled_out, "also export the tiled full patterns");
    ac->add_option("--run-json", ap.run_json);

    SimulateArgs sim;
    auto* sc = app.add_subcommand("simulate", "simulate DD-CASSI measurements");
    sc->add_option("--scene", sim.scene)->required();
    sc->add_option("--aperture", sim.aperture_path)->required();
    sc->add_option("--out", sim.out, "output .msc measurement cube")->required();
    auto* snr = sc->add_option("--snr-db", sim.snr_db, "add gaussian noise at this SNR");
    sc->add_option("--noise-seed", sim.noise_seed);
    sc->add_option("--export-matrix", sim.export_matrix, "write the system matrix triplets");
    sc->add_flag("--no-normalize", sim.no_normalize, "skip per-max radiance normalization");
    sc->add_option("--run-json", sim.run_json);

    TrainArgs tr;
    auto* tc = app.add_subcommand("train", "train a classifier (joint, fixed, or original)");
    tc->add_option("--scene", tr.scene)->required();
    tc->add_option("--labels", tr.labels)->required();
    tc->add_option("--mode", tr.mode, "joint | fixed | original");
    tc->add_option("--aperture", tr.aperture_path, "fixed-mode aperture file");
    tc->add_option("--k", tr.k, "snapshot count (joint mode)")->check(CLI::Range(2, 256));
    tc->add_option("--b", tr.b, "basic block side")->check(CLI::Range(1, 256));
    tc->add_option("--p", tr.p, "patch size (odd)");
    tc->add_option("--split-fraction", tr.split_fraction);
    tc->add_option("--split-seed", tr.split_seed);
    tc->add_flag("--stratified", tr.stratified, "per-class split sampling");
    tc->add_option("--eta", tr.eta);
    tc->add_option("--epochs", tr.epochs)->check(CLI::Range(1, 1000000));
    tc->add_option("--batch", tr.batch)->check(CLI::Range(1, 1000000));
    tc->add_option("--seed", tr.seed);
    tc->add_option("--clip", tr.clip, "gradient-norm cap, 0 = off");
    tc->add_flag("--project-every-step", tr.project_every_step,
                 "clamp blocks after every update instead of once at the end");
    tc->add_option("--block-init", tr.block_init, "uniform | bernoulli");
    tc->add_option("--threads", tr.threads);
    tc->add_option("--out", tr.out, "output .ccnn.json model")->required();
    tc->add_option("--run-json", tr.run_json);

    EvalArgs ev;
    auto* ec = app.add_subcommand("eval", "evaluate a trained model on the test split");
    ec->add_option("--model", ev.model)->required();
    ec->add_option("--scene", ev.scene)->required();
    ec->add_option("--labels", ev.labels)->required();
    ec->add_option("--report", ev.report, "output report JSON");
    ec->add_option("--map", ev.map_path, "output classification map (PPM)");
    ec->add_option("--threads", ev.threads);
    ec->add_option("--run-json", ev.run_json);

    CompareArgs cmp;
    auto* cc = app.add_subcommand("compare", "run the method comparison harness");
    cc->add_option("--config", cmp.config_path, "comparison config JSON")->required();
    cc->add_option("--out-dir", cmp.out_dir);
    cc->add_option("--runs", cmp.runs_override, "override the config run count");
    cc->add_option("--threads", cmp.threads);
    cc->add_option("--run-json", cmp.run_json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (s->parsed()) return cmd_synth(synth);
        if (ac->parsed()) return cmd_aperture(ap);
        if (sc->parsed()) {
            sim.with_noise = snr->count() > 0;
            return cmd_simulate(sim);
        }
        if (tc->parsed()) return cmd_train(tr);
        if (ec->parsed()) return cmd_eval(ev);
        if (cc->parsed()) return cmd_compare(cmp);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("ccnn");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ccnn::cli
