#include "bridgeout/optim.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "bridgeout/errors.hpp"

namespace bridgeout {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ull;  // "SHUFF"

void require_same_shape(const Matrix& w, const Matrix& g, const char* op) {
    if (!w.same_shape(g))
        throw ShapeError(std::string(op) + ": weights are " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ", grads are " + std::to_string(g.rows()) +
                         "x" + std::to_string(g.cols()));
}

}  // namespace

const char* optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("train: adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("train: adam eps must be positive");
    if (max_norm_t < 0.0) throw ConfigError("train: max_norm_t must be positive or 0 (off)");
    if (batch_size == 0) throw ConfigError("train: batch size must be positive");
    if (!(grad_scale > 0.0)) throw ConfigError("train: grad_scale must be positive");
}

void sgd_step(Matrix& weights, const Matrix& grads, double learning_rate) {
    require_same_shape(weights, grads, "sgd_step");
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= learning_rate * grads[i];
}

void adam_step(AdamState& state, Matrix& weights, const Matrix& grads, const TrainConfig& cfg) {
    require_same_shape(weights, grads, "adam_step");
    if (!state.m.same_shape(weights) || !state.v.same_shape(weights))
        throw ConfigError("adam_step: state not initialized for this weight shape");
    state.t += 1;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double m_hat = state.m[i] / corr1;
        const double v_hat = state.v[i] / corr2;
        weights[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
}

void max_norm_clip(Matrix& weights, double t) {
    if (!(t > 0.0)) throw ConfigError("max_norm_clip: t must be positive");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > t) weights[i] = t;
        else if (weights[i] < -t) weights[i] = -t;
    }
}

void row_norm_clip(Matrix& weights, double t) {
    if (!(t > 0.0)) throw ConfigError("row_norm_clip: t must be positive");
    for (std::size_t i = 0; i < weights.rows(); ++i) {
        double norm2 = 0.0;
        for (std::size_t j = 0; j < weights.cols(); ++j) norm2 += weights(i, j) * weights(i, j);
        const double norm = std::sqrt(norm2);
        if (norm > t) {
            const double s = t / norm;
            for (std::size_t j = 0; j < weights.cols(); ++j) weights(i, j) *= s;
        }
    }
}

std::vector<EpochStats> train(Network& net, const Matrix& inputs, const Matrix& targets,
                              const TrainConfig& cfg, RngStream& mask_rng,
                              const EpochCallback& on_epoch) {
    cfg.validate();
    net.validate();
    if (inputs.rows() == 0) throw ConfigError("train: dataset is empty");
    if (inputs.rows() != targets.rows())
        throw ShapeError("train: " + std::to_string(inputs.rows()) + " inputs vs " +
                         std::to_string(targets.rows()) + " target rows");

    const std::size_t n = inputs.rows();
    const std::size_t num_layers = net.layers.size();
    RngStream shuffle_rng(cfg.shuffle_seed, kShuffleStream);

    std::vector<AdamState> w_state, b_state;
    if (cfg.optimizer == OptimizerKind::Adam) {
        for (const Layer& layer : net.layers) {
            w_state.push_back(AdamState::init(layer.weights.rows(), layer.weights.cols()));
            b_state.push_back(AdamState::init(1, layer.bias.cols()));
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Fisher-Yates on the example order.
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = shuffle_rng.next_below(i);
            std::swap(order[i - 1], order[j]);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.layer_grads.assign(num_layers, {0.0, 0.0});
        double loss_acc = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::size_t bn = stop - start;
            Matrix bx(bn, inputs.cols());
            Matrix by(bn, targets.cols());
            for (std::size_t r = 0; r < bn; ++r) {
                const std::size_t src = order[start + r];
                for (std::size_t c = 0; c < inputs.cols(); ++c) bx(r, c) = inputs(src, c);
                for (std::size_t c = 0; c < targets.cols(); ++c) by(r, c) = targets(src, c);
            }

            ForwardTrace trace = forward(net, bx, RunMode::Train, &mask_rng);
            const double batch_loss = loss(net, trace, by);
            if (!std::isfinite(batch_loss))
                throw DivergenceError("training diverged: non-finite loss at epoch " +
                                          std::to_string(epoch) + ", batch " +
                                          std::to_string(batches),
                                      epoch, batches);
            Gradients grads = backward(net, trace, by);

            for (std::size_t l = 0; l < num_layers; ++l) {
                const auto [mean, mean_abs] = avg_layer_gradient(grads, l);
                stats.layer_grads[l].first += mean;
                stats.layer_grads[l].second += mean_abs;
                if (cfg.grad_scale != 1.0) {
                    grads.weights[l] = scale(grads.weights[l], cfg.grad_scale);
                    grads.biases[l] = scale(grads.biases[l], cfg.grad_scale);
                }
                if (cfg.optimizer == OptimizerKind::Adam) {
                    adam_step(w_state[l], net.layers[l].weights, grads.weights[l], cfg);
                    adam_step(b_state[l], net.layers[l].bias, grads.biases[l], cfg);
                } else {
                    sgd_step(net.layers[l].weights, grads.weights[l], cfg.learning_rate);
                    sgd_step(net.layers[l].bias, grads.biases[l], cfg.learning_rate);
                }
                if (cfg.max_norm_t > 0.0) {
                    if (cfg.row_norm_clip) row_norm_clip(net.layers[l].weights, cfg.max_norm_t);
                    else max_norm_clip(net.layers[l].weights, cfg.max_norm_t);
                }
            }
            loss_acc += batch_loss * static_cast<double>(bn);
            ++batches;
        }

        stats.train_loss = loss_acc / static_cast<double>(n);
        if (batches > 0)
            for (auto& [mean, mean_abs] : stats.layer_grads) {
                mean /= static_cast<double>(batches);
                mean_abs /= static_cast<double>(batches);
            }
        if (on_epoch) on_epoch(net, stats);
        history.push_back(std::move(stats));
    }
    return history;
}

}  // namespace bridgeout
