#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bridgeout/data.hpp"
#include "bridgeout/errors.hpp"
#include "bridgeout/harness.hpp"
#include "bridgeout/rng.hpp"

using namespace bridgeout;

namespace {

namespace fs = std::filesystem;

TrialResult fake_trial(double val_error, double test_error) {
    TrialResult r;
    r.final_val_error_pct = val_error;
    r.test_error_pct = test_error;
    return r;
}

void push_be32(std::vector<unsigned char>& bytes, std::uint32_t v) {
    bytes.push_back(static_cast<unsigned char>(v >> 24));
    bytes.push_back(static_cast<unsigned char>(v >> 16));
    bytes.push_back(static_cast<unsigned char>(v >> 8));
    bytes.push_back(static_cast<unsigned char>(v));
}

// Writes a miniature MNIST-layout dataset: 4x4 images whose class is
// recoverable from the brightest quadrant, 10 classes.
void write_synthetic_idx(const fs::path& dir, std::size_t train_rows, std::size_t test_rows,
                         bool shuffle_test_labels = false) {
    fs::create_directories(dir);
    RngStream rng(2024, 99);
    const auto write_pair = [&](const std::string& image_name, const std::string& label_name,
                                std::size_t rows, bool shuffle_labels) {
        std::vector<unsigned char> img;
        push_be32(img, 0x00000803u);
        push_be32(img, static_cast<std::uint32_t>(rows));
        push_be32(img, 4);
        push_be32(img, 4);
        std::vector<unsigned char> lab;
        push_be32(lab, 0x00000801u);
        push_be32(lab, static_cast<std::uint32_t>(rows));
        std::vector<unsigned char> labels(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto cls = static_cast<unsigned char>(rng.next_below(10));
            labels[i] = cls;
            for (std::size_t px = 0; px < 16; ++px) {
                const auto noise = static_cast<unsigned char>(rng.next_below(60));
                const bool hot = px == cls || px == (std::size_t)(cls + 4);
                img.push_back(hot ? static_cast<unsigned char>(190 + rng.next_below(60))
                                  : noise);
            }
        }
        if (shuffle_labels) {
            for (std::size_t i = rows; i > 1; --i)
                std::swap(labels[i - 1], labels[rng.next_below(i)]);
        }
        lab.insert(lab.end(), labels.begin(), labels.end());
        std::ofstream img_out(dir / image_name, std::ios::binary);
        img_out.write(reinterpret_cast<const char*>(img.data()),
                      static_cast<std::streamsize>(img.size()));
        std::ofstream lab_out(dir / label_name, std::ios::binary);
        lab_out.write(reinterpret_cast<const char*>(lab.data()),
                      static_cast<std::streamsize>(lab.size()));
    };
    write_pair("train-images-idx3-ubyte", "train-labels-idx1-ubyte", train_rows, false);
    write_pair("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", test_rows,
               shuffle_test_labels);
}

ExperimentConfig tiny_mnist_config(const std::string& data_dir) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::MnistDnn;
    cfg.regularizer = RegularizerConfig::bridgeout(0.5, 1.0);
    cfg.train.optimizer = OptimizerKind::Adam;
    cfg.train.learning_rate = 0.001;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 32;
    cfg.hidden_widths = {8};
    cfg.subset_size = 150;
    cfg.data_dir = data_dir;
    cfg.seeds = {1};
    return cfg;
}

}  // namespace

TEST_CASE("aggregate mean and standard error") {
    std::vector<TrialResult> same = {fake_trial(0, 2.0), fake_trial(0, 2.0)};
    auto [mean_same, se_same] = aggregate(same);
    CHECK(mean_same == 2.0);
    CHECK(se_same == 0.0);

    std::vector<TrialResult> pair = {fake_trial(0, 1.0), fake_trial(0, 3.0)};
    auto [mean_pair, se_pair] = aggregate(pair);
    CHECK(mean_pair == doctest::Approx(2.0));
    CHECK(se_pair == doctest::Approx(1.0));

    RngStream rng(1, 1);
    std::vector<TrialResult> random;
    for (int i = 0; i < 9; ++i) random.push_back(fake_trial(0, 5.0 * rng.next_double()));
    auto [mean_r, se_r] = aggregate(random);
    double acc = 0.0;
    double lo = 1e30, hi = -1e30;
    for (const auto& r : random) {
        acc += r.test_error_pct;
        lo = std::min(lo, r.test_error_pct);
        hi = std::max(hi, r.test_error_pct);
    }
    acc /= 9.0;
    double ss = 0.0;
    for (const auto& r : random) ss += (r.test_error_pct - acc) * (r.test_error_pct - acc);
    CHECK(mean_r == doctest::Approx(acc).epsilon(1e-12));
    CHECK(se_r == doctest::Approx(std::sqrt(ss / 8.0) / 3.0).epsilon(1e-12));
    CHECK(mean_r >= lo);
    CHECK(mean_r <= hi);

    CHECK_THROWS_AS(aggregate({fake_trial(0, 1.0)}), ConfigError);
}

TEST_CASE("weight histogram basics") {
    std::vector<Matrix> zero_weights = {Matrix(5, 5)};
    WeightHistogram zh = weight_histogram(zero_weights, 11);
    CHECK(zh.layers[0].near_zero_fraction == 1.0);
    std::size_t occupied = 0, occupied_index = 0;
    for (std::size_t b = 0; b < 11; ++b)
        if (zh.layers[0].densities[b] > 0.0) {
            ++occupied;
            occupied_index = b;
        }
    CHECK(occupied == 1);
    CHECK(occupied_index == 5);  // the center bin of an odd count

    RngStream rng(2, 2);
    std::vector<Matrix> weights = {sample_gaussian(20, 20, rng)};
    WeightHistogram h = weight_histogram(weights, 31);
    double total = 0.0;
    for (double d : h.layers[0].densities) total += d;
    CHECK(std::fabs(total - 1.0) < 1e-12);
    CHECK(h.layers[0].max_abs == weights[0].max_abs());

    CHECK_THROWS_AS(weight_histogram(weights, 9), ConfigError);
}

TEST_CASE("histogram and gradient-log exports") {
    const fs::path dir = fs::temp_directory_path() / "bridgeout_harness_test";
    fs::create_directories(dir);

    RngStream rng(3, 3);
    std::vector<Matrix> weights = {sample_gaussian(6, 6, rng)};
    const std::string hist_path = (dir / "hist.csv").string();
    export_weight_histogram(weights, 21, hist_path);
    std::ifstream hist_in(hist_path);
    std::string line;
    REQUIRE(std::getline(hist_in, line));
    CHECK(line == "layer,bin_center,density");

    TrialResult trial;
    for (std::size_t e = 1; e <= 3; ++e) {
        EpochRow row;
        row.epoch = e;
        row.layer_grads = {{0.1 * e, 0.2 * e}, {-0.1 * e, 0.3 * e}};
        trial.epochs.push_back(row);
    }
    const std::string grad_path = (dir / "grads.csv").string();
    export_gradient_log(trial, grad_path);
    std::ifstream grad_in(grad_path);
    std::size_t rows = 0;
    std::getline(grad_in, line);
    CHECK(line == "epoch,layer,mean_grad,mean_abs_grad");
    while (std::getline(grad_in, line)) ++rows;
    CHECK(rows == 6);  // epochs x layers

    TrialResult empty;
    const std::string empty_path = (dir / "empty.csv").string();
    export_gradient_log(empty, empty_path);
    std::ifstream empty_in(empty_path);
    rows = 0;
    std::getline(empty_in, line);
    while (std::getline(empty_in, line)) ++rows;
    CHECK(rows == 0);

    fs::remove_all(dir);
}

TEST_CASE("xavier init stays inside the fan bound") {
    RngStream rng(4, 4);
    Matrix w = xavier_init(30, 20, rng);
    const double limit = std::sqrt(6.0 / 50.0);
    CHECK(w.max_abs() <= limit);
    CHECK(w.max_abs() > limit * 0.5);  // actually spread out
}

TEST_CASE("classification error percent") {
    Matrix out{{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}};
    Matrix y{{1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}};
    CHECK(classification_error_pct(out, y) == doctest::Approx(100.0 / 3.0));

    Matrix binary_out = Matrix::column({0.9, 0.2});
    Matrix binary_y = Matrix::column({1.0, 1.0});
    CHECK(classification_error_pct(binary_out, binary_y) == doctest::Approx(50.0));
}

TEST_CASE("per-example GLM trainer reduces the loss and is deterministic") {
    RngStream data_rng(5, 5);
    Dataset ds = gen_sparse_logit(200, 50, data_rng);
    Matrix targets = one_hot(ds.train_targets, 2);

    const auto run_once = [&]() {
        RngStream init_rng(6, 6);
        GlmLayerModel model;
        model.activation = Activation::Softmax;
        model.loss = LossKind::CrossEntropy;
        model.weights = xavier_init(2, 20, init_rng);
        model.bias = Matrix(1, 2);
        TrainConfig tc;
        tc.learning_rate = 0.01;
        tc.grad_scale = 12.0;
        tc.epochs = 200;
        tc.batch_size = 200;
        tc.max_norm_t = 3.5;
        RngStream mask_rng(7, 7);
        GlmTrainReport report = train_glm_per_example(model, ds.train_inputs, targets,
                                                      RegularizerConfig::bridgeout(0.5, 1.0),
                                                      tc, mask_rng);
        return std::make_pair(model, report);
    };

    auto [model_a, report_a] = run_once();
    CHECK(report_a.iterations.size() == 200);
    CHECK(report_a.final_train_loss < report_a.iterations.front().train_loss);

    auto [model_b, report_b] = run_once();
    for (std::size_t i = 0; i < model_a.weights.size(); ++i)
        CHECK(model_a.weights[i] == model_b.weights[i]);
    CHECK(report_a.final_train_loss == report_b.final_train_loss);
}

TEST_CASE("table1 trial echoes its resolved defaults") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table1;
    cfg.regularizer = RegularizerConfig::bridgeout(0.5, 1.0);
    cfg.train.epochs = 30;  // keep the test quick
    TrialResult trial = run_trial(cfg, 3);
    CHECK(trial.config_echo.find("kind=table1") != std::string::npos);
    CHECK(trial.config_echo.find("grad_scale=12") != std::string::npos);
    CHECK(trial.config_echo.find("max_norm_t=3.5") != std::string::npos);
    CHECK(trial.config_echo.find("learning_rate=0.001") != std::string::npos);
    CHECK(trial.epochs.size() == 30);
    CHECK(trial.test_error_pct >= 0.0);
    CHECK(trial.test_error_pct <= 100.0);
    CHECK(trial.result_record().find("test_error_pct=") != std::string::npos);
}

TEST_CASE("zero-iteration trials return the untouched initialization") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table1;
    cfg.train.epochs = 0;
    TrialResult a = run_trial(cfg, 11);
    TrialResult b = run_trial(cfg, 11);
    CHECK(a.epochs.empty());
    CHECK(a.test_error_pct == b.test_error_pct);
    for (std::size_t i = 0; i < a.final_weights[0].size(); ++i)
        CHECK(a.final_weights[0][i] == b.final_weights[0][i]);
    // Xavier bounds for a 20 -> 2 layer, bias untouched at zero.
    CHECK(a.final_weights[0].max_abs() <= std::sqrt(6.0 / 22.0));
    CHECK(a.final_biases[0].max_abs() == 0.0);
}

TEST_CASE("run_trial is deterministic end to end") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table1;
    cfg.regularizer = RegularizerConfig::shakeout(0.5, 0.3, true);
    cfg.train.epochs = 60;
    TrialResult a = run_trial(cfg, 17);
    TrialResult b = run_trial(cfg, 17);
    CHECK(a.result_record() == b.result_record());
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (std::size_t e = 0; e < a.epochs.size(); ++e)
        CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
    for (std::size_t i = 0; i < a.final_weights[0].size(); ++i)
        CHECK(a.final_weights[0][i] == b.final_weights[0][i]);
}

TEST_CASE("trial files are written and reproducible") {
    const fs::path dir = fs::temp_directory_path() / "bridgeout_trial_files";
    fs::remove_all(dir);
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table1;
    cfg.train.epochs = 40;
    TrialResult trial = run_trial(cfg, 5);
    trial.write_files(dir.string(), "stem");
    for (const char* name :
         {"stem.txt", "stem_epochs.csv", "stem_gradients.csv", "stem_weights.csv"})
        CHECK(fs::exists(dir / name));
    std::ifstream txt(dir / "stem.txt");
    std::stringstream buffer;
    buffer << txt.rdbuf();
    CHECK(buffer.str() == trial.result_record());
    fs::remove_all(dir);
}

TEST_CASE("sweep selects the minimum and breaks ties toward larger p then larger q") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::MnistDnn;  // runner below never touches data
    cfg.regularizer = RegularizerConfig::bridgeout(0.5, 1.0);
    cfg.seeds = {1, 2};

    const auto runner = [](const ExperimentConfig& point, std::uint64_t seed) {
        TrialResult r;
        r.seed = seed;
        const double p = point.regularizer.p, q = point.regularizer.q;
        // Two tied minima at (0.5, 1.0) and (0.7, 0.5); larger p must win.
        const bool is_min = (p == 0.5 && q == 1.0) || (p == 0.7 && q == 0.5);
        r.final_val_error_pct = is_min ? 1.0 : 2.0 + p + q;
        r.test_error_pct = 100.0 - p;  // never used for selection
        return r;
    };

    SweepResult fwd = sweep(cfg, {0.3, 0.5, 0.7}, {0.5, 1.0, 2.0}, runner);
    CHECK(fwd.best().p == 0.7);
    CHECK(fwd.best().second == 0.5);
    CHECK(fwd.best().mean_val_error == 1.0);
    CHECK(fwd.grid.size() == 9);

    // Permuting the enumeration order cannot change the selection.
    SweepResult rev = sweep(cfg, {0.7, 0.5, 0.3}, {2.0, 1.0, 0.5}, runner);
    CHECK(rev.best().p == fwd.best().p);
    CHECK(rev.best().second == fwd.best().second);

    SweepResult single = sweep(cfg, {0.4}, {1.5}, runner);
    CHECK(single.best().p == 0.4);

    CHECK_THROWS_AS(sweep(cfg, {}, {1.0}, runner), ConfigError);
    CHECK_THROWS_AS(sweep(cfg, {0.5}, {}, runner), ConfigError);
}

TEST_CASE("default sweep grids cover the recommended ranges") {
    CHECK(default_p_grid() == std::vector<double>{0.3, 0.4, 0.5, 0.6, 0.7});
    CHECK(default_q_grid() == std::vector<double>{0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0});
}

TEST_CASE("sweep refuses trials that carry no validation error") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table1;
    cfg.regularizer = RegularizerConfig::dropout(0.5);
    cfg.seeds = {1};
    const auto runner = [](const ExperimentConfig&, std::uint64_t) {
        TrialResult r;
        r.final_val_error_pct = -1.0;
        return r;
    };
    CHECK_THROWS_AS(sweep(cfg, {0.5}, {}, runner), ConfigError);
}

TEST_CASE("mnist-layout pipeline runs end to end on a synthetic fixture") {
    const fs::path dir = fs::temp_directory_path() / "bridgeout_synth_idx";
    fs::remove_all(dir);
    write_synthetic_idx(dir, 10200, 80);

    ExperimentConfig cfg = tiny_mnist_config(dir.string());
    TrialResult trial = run_trial(cfg, 1);
    CHECK(trial.epochs.size() == 2);
    CHECK(trial.final_val_error_pct >= 0.0);
    CHECK(trial.test_error_pct >= 0.0);
    CHECK(trial.test_error_pct <= 100.0);
    CHECK(trial.final_weights.size() == 2);  // hidden + softmax
    // Per-epoch rows carry validation errors and per-layer gradients.
    CHECK(trial.epochs[0].val_error_pct >= 0.0);
    CHECK(trial.epochs[0].layer_grads.size() == 2);

    TrialResult again = run_trial(cfg, 1);
    CHECK(again.result_record() == trial.result_record());

    fs::remove_all(dir);
}

TEST_CASE("autoencoder kind reconstructs its own inputs") {
    const fs::path dir = fs::temp_directory_path() / "bridgeout_autoenc_idx";
    fs::remove_all(dir);
    write_synthetic_idx(dir, 10100, 20);

    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::AutoencoderHist;
    cfg.regularizer = RegularizerConfig::bridgeout(0.5, 1.0);
    cfg.train.optimizer = OptimizerKind::Adam;
    cfg.train.learning_rate = 0.001;
    cfg.train.epochs = 1;
    cfg.train.batch_size = 32;
    cfg.hidden_widths = {6};
    cfg.subset_size = 80;
    cfg.data_dir = dir.string();
    cfg.seeds = {1};

    TrialResult trial = run_trial(cfg, 1);
    CHECK(trial.epochs.size() == 1);
    CHECK(trial.test_error_pct < 0.0);      // reconstruction task, no test split
    CHECK(trial.final_val_error_pct < 0.0); // no classification validation either
    CHECK(trial.final_weights.size() == 2); // encoder + decoder
    CHECK(trial.final_weights[0].rows() == 6);
    CHECK(trial.final_weights[0].cols() == 16);
    CHECK(trial.final_weights[1].rows() == 16);
    CHECK(std::isfinite(trial.final_train_loss));

    fs::remove_all(dir);
}

TEST_CASE("missing idx files raise a data error naming the expectation") {
    ExperimentConfig cfg = tiny_mnist_config("/nonexistent_dir_for_idx");
    CHECK_THROWS_WITH_AS(run_trial(cfg, 1), doctest::Contains("train-images"), DataError);
}

TEST_CASE("poisoning the test labels cannot change the sweep selection") {
    const fs::path clean_dir = fs::temp_directory_path() / "bridgeout_sweep_clean";
    const fs::path poison_dir = fs::temp_directory_path() / "bridgeout_sweep_poison";
    fs::remove_all(clean_dir);
    fs::remove_all(poison_dir);
    write_synthetic_idx(clean_dir, 10200, 80, false);
    write_synthetic_idx(poison_dir, 10200, 80, true);

    const std::vector<double> p_grid = {0.4, 0.6};
    const std::vector<double> q_grid = {1.0};

    ExperimentConfig clean_cfg = tiny_mnist_config(clean_dir.string());
    SweepResult clean = sweep(clean_cfg, p_grid, q_grid);
    ExperimentConfig poison_cfg = tiny_mnist_config(poison_dir.string());
    SweepResult poisoned = sweep(poison_cfg, p_grid, q_grid);

    CHECK(clean.best().p == poisoned.best().p);
    CHECK(clean.best().second == poisoned.best().second);
    // Validation errors drove both selections identically.
    for (std::size_t i = 0; i < clean.grid.size(); ++i)
        CHECK(clean.grid[i].mean_val_error == poisoned.grid[i].mean_val_error);

    fs::remove_all(clean_dir);
    fs::remove_all(poison_dir);
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Table1;
    cfg.seeds = {1, 1};
    cfg.resolve_defaults();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    ExperimentConfig empty_seeds;
    empty_seeds.seeds = {};
    empty_seeds.resolve_defaults();
    CHECK_THROWS_AS(empty_seeds.validate(), ConfigError);

    CHECK(experiment_kind_from_name("table1") == ExperimentKind::Table1);
    CHECK_THROWS_AS(experiment_kind_from_name("bogus"), ConfigError);
}
