#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bridgeout/matrix.hpp"
#include "bridgeout/regularizers.hpp"
#include "bridgeout/rng.hpp"

namespace bridgeout {

enum class Activation { Sigmoid, Relu, Softmax, Identity };
enum class LossKind { CrossEntropy, Mse };
enum class RunMode { Train, Eval };

const char* activation_name(Activation a);
const char* loss_name(LossKind l);

// One dense layer: weights are k x d (k outputs, d inputs), bias is 1 x k.
struct Layer {
    Matrix weights;
    Matrix bias;
    Activation activation = Activation::Sigmoid;
    RegularizerConfig regularizer;

    std::size_t out_dim() const { return weights.rows(); }
    std::size_t in_dim() const { return weights.cols(); }
};

struct Network {
    std::vector<Layer> layers;
    LossKind loss = LossKind::CrossEntropy;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }

    // Checks dimension chaining, bias shapes, softmax placement and the
    // per-layer regularizer configs.
    void validate() const;
};

// Everything the paired backward pass needs: pre-activations, activations,
// the weights actually used (perturbed in train mode) and the masks that
// produced them. Dropout layers keep per-example activation masks in
// masks.unit_mask (one row per example) and leave the weights untouched.
struct LayerTrace {
    Matrix pre_activation;
    Matrix activation;
    Matrix weights_used;
    MaskSet masks;
};

struct ForwardTrace {
    Matrix input;
    std::vector<LayerTrace> layers;
    RunMode mode = RunMode::Eval;

    const Matrix& output() const { return layers.back().activation; }
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
};

// Train mode samples fresh masks for every regularized layer (rng
// required); eval mode runs the unperturbed weights and is mask-free.
ForwardTrace forward(const Network& net, const Matrix& batch, RunMode mode,
                     RngStream* rng = nullptr);

// Forward pass with caller-supplied masks, one MaskSet per layer (empty
// sets for unregularized layers). This is what the finite-difference
// oracle and the fixed-mask tests drive.
ForwardTrace forward_with_masks(const Network& net, const Matrix& batch,
                                const std::vector<MaskSet>& masks);

double loss(const Network& net, const ForwardTrace& trace, const Matrix& targets);

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& targets);

// Central differences of the loss with the masks held fixed across every
// +-h evaluation.
Gradients finite_diff_grad(const Network& net, const Matrix& batch, const Matrix& targets,
                           const std::vector<MaskSet>& masks, double h);

// (signed mean, mean absolute value) over all weight entries of layer l.
std::pair<double, double> avg_layer_gradient(const Gradients& grads, std::size_t layer);

// Weight snapshot: one shape-header line per layer followed by the rows in
// row-major order.
void save_weights_csv(const Network& net, const std::string& path);

}  // namespace bridgeout
