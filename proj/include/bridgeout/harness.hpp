#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bridgeout/data.hpp"
#include "bridgeout/matrix.hpp"
#include "bridgeout/network.hpp"
#include "bridgeout/optim.hpp"
#include "bridgeout/regularizers.hpp"
#include "bridgeout/rng.hpp"

namespace bridgeout {

enum class ExperimentKind { Table1, SparsityHist, AutoencoderHist, MnistDnn };

const char* experiment_kind_name(ExperimentKind k);
ExperimentKind experiment_kind_from_name(const std::string& name);

// Declarative description of one experiment. resolve_defaults() fills
// anything left unset with the per-kind defaults, and the result record
// echoes every resolved value, so defaults are auditable.
struct ExperimentConfig {
    // Marks "not set, use the per-kind default"; epochs = 0 legitimately
    // means train nothing, so the marker is the maximum value.
    static constexpr std::size_t kUnsetEpochs = static_cast<std::size_t>(-1);

    static TrainConfig unset_train() {
        TrainConfig tc;
        tc.learning_rate = 0.0;
        tc.epochs = kUnsetEpochs;
        tc.batch_size = 0;
        tc.grad_scale = 0.0;
        tc.max_norm_t = -1.0;  // resolves to the 3.5 default; 0 disables
        return tc;
    }

    ExperimentKind kind = ExperimentKind::Table1;
    RegularizerConfig regularizer;
    TrainConfig train = unset_train();
    std::vector<std::size_t> hidden_widths;
    Activation hidden_activation = Activation::Sigmoid;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::size_t subset_size = 3000;
    std::uint64_t subset_seed = 1234;  // subset shared across methods and seeds
    bool defaults_resolved = false;

    void resolve_defaults();
    void validate() const;
    // Deterministic key=value echo of every resolved setting.
    std::string echo() const;
};

struct EpochRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_error_pct = -1.0;  // negative when the kind has no validation split
    std::vector<std::pair<double, double>> layer_grads;
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::string config_echo;
    std::vector<EpochRow> epochs;
    double final_train_loss = 0.0;
    double test_error_pct = -1.0;  // negative when the kind has no test split
    double final_val_error_pct = -1.0;
    std::vector<Matrix> final_weights;
    std::vector<Matrix> final_biases;
    double wall_seconds = 0.0;  // reported to the console, never serialized

    // Deterministic line-oriented record: config echo plus final scalars.
    std::string result_record() const;
    // Writes <stem>.txt, <stem>_epochs.csv, <stem>_gradients.csv and
    // <stem>_weights.csv under dir.
    void write_files(const std::string& dir, const std::string& stem) const;
};

TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed);

// Mean and standard error (sample std / sqrt(n)) of the final test errors.
std::pair<double, double> aggregate(const std::vector<TrialResult>& results);

struct SweepPoint {
    double p = 0.0;
    double second = 0.0;  // q for Bridgeout, c for Shakeout, unused otherwise
    double mean_val_error = 0.0;
    std::vector<TrialResult> trials;
};

struct SweepResult {
    std::vector<SweepPoint> grid;
    std::size_t best_index = 0;

    const SweepPoint& best() const { return grid[best_index]; }
};

using TrialRunner = std::function<TrialResult(const ExperimentConfig&, std::uint64_t)>;

// Grid search over (p, second). Selection minimizes the mean validation
// error; ties prefer larger p, then larger second. Test data never enters
// the selection. The runner hook exists so tests can substitute a cheap
// fixture; it defaults to run_trial.
SweepResult sweep(const ExperimentConfig& cfg, const std::vector<double>& p_grid,
                  const std::vector<double>& second_grid, const TrialRunner& runner = {});

std::vector<double> default_p_grid();
std::vector<double> default_q_grid();

struct LayerHistogram {
    std::vector<double> centers;
    std::vector<double> densities;  // counts / total, summing to 1
    double near_zero_fraction = 0.0;  // share of |w| < 0.01
    double max_abs = 0.0;
};

struct WeightHistogram {
    std::vector<LayerHistogram> layers;
};

// Per-layer normalized histogram over [-max|w|, max|w|]; bins must be at
// least 10 (an odd count puts zero in the middle bin).
WeightHistogram weight_histogram(const std::vector<Matrix>& layer_weights, std::size_t bins);

WeightHistogram export_weight_histogram(const std::vector<Matrix>& layer_weights,
                                        std::size_t bins, const std::string& path);

// CSV rows (epoch, layer, mean_grad, mean_abs_grad).
void export_gradient_log(const TrialResult& trial, const std::string& path);

// Uniform Xavier/Glorot initialization on +-sqrt(6/(fan_in+fan_out)).
Matrix xavier_init(std::size_t fan_out, std::size_t fan_in, RngStream& rng);

// Single dense-layer model trained with per-example weight-noise masks,
// the realization the GLM theory marginalizes over. Used by the Table-1
// and weight-histogram experiments where the model is a GLM.
struct GlmLayerModel {
    Matrix weights;  // k x d
    Matrix bias;     // 1 x k
    Activation activation = Activation::Softmax;
    LossKind loss = LossKind::CrossEntropy;
};

struct GlmTrainReport {
    std::vector<EpochRow> iterations;
    double final_train_loss = 0.0;
};

GlmTrainReport train_glm_per_example(GlmLayerModel& model, const Matrix& inputs,
                                     const Matrix& targets, const RegularizerConfig& reg,
                                     const TrainConfig& train, RngStream& mask_rng);

// Misclassification percentage: argmax for softmax outputs, 0.5 threshold
// for a single sigmoid column.
double classification_error_pct(const Matrix& outputs, const Matrix& targets);

}  // namespace bridgeout
