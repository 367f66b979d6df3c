#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "bridgeout/matrix.hpp"
#include "bridgeout/network.hpp"
#include "bridgeout/rng.hpp"

namespace bridgeout {

enum class OptimizerKind { Sgd, Adam };

const char* optimizer_name(OptimizerKind k);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    // Per-weight clamp |w| <= max_norm_t after every step; 0 disables.
    // row_norm_clip switches to the per-row L2 variant for comparison.
    double max_norm_t = 0.0;
    bool row_norm_clip = false;
    std::size_t batch_size = 64;
    std::size_t epochs = 1;
    std::uint64_t shuffle_seed = 0;
    // Multiplies gradients before the step. 1 trains on the mean loss,
    // batch-size trains on the summed loss.
    double grad_scale = 1.0;

    void validate() const;
};

struct AdamState {
    Matrix m;
    Matrix v;
    std::size_t t = 0;

    static AdamState init(std::size_t rows, std::size_t cols) {
        return {Matrix(rows, cols), Matrix(rows, cols), 0};
    }
};

void sgd_step(Matrix& weights, const Matrix& grads, double learning_rate);

// Canonical Adam with bias-corrected moments. The state must have been
// initialized to zero moments of the weight shape.
void adam_step(AdamState& state, Matrix& weights, const Matrix& grads, const TrainConfig& cfg);

// Clamp every entry to [-t, t].
void max_norm_clip(Matrix& weights, double t);

// Rescales any row whose L2 norm exceeds t back onto the ball.
void row_norm_clip(Matrix& weights, double t);

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    // (signed mean, mean abs) of dJ/dW per layer, averaged over the
    // epoch's minibatches.
    std::vector<std::pair<double, double>> layer_grads;
};

using EpochCallback = std::function<void(const Network&, const EpochStats&)>;

// Epoch loop: shuffle, minibatch forward(train)/backward, optimizer step,
// max-norm clip. Shuffling draws from its own stream keyed by
// cfg.shuffle_seed so it never interferes with mask sampling. Throws
// DivergenceError naming the epoch and batch if the loss goes non-finite.
std::vector<EpochStats> train(Network& net, const Matrix& inputs, const Matrix& targets,
                              const TrainConfig& cfg, RngStream& mask_rng,
                              const EpochCallback& on_epoch = {});

}  // namespace bridgeout
