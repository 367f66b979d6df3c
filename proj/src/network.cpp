#include "bridgeout/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "bridgeout/errors.hpp"

namespace bridgeout {
namespace {

double sigmoid(double x) {
    // Branch on sign so neither exp overflows.
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

Matrix apply_activation(Activation act, const Matrix& nu) {
    Matrix out(nu.rows(), nu.cols());
    switch (act) {
        case Activation::Identity: return nu;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < nu.size(); ++i) out[i] = sigmoid(nu[i]);
            return out;
        case Activation::Relu:
            for (std::size_t i = 0; i < nu.size(); ++i) out[i] = nu[i] > 0.0 ? nu[i] : 0.0;
            return out;
        case Activation::Softmax:
            for (std::size_t i = 0; i < nu.rows(); ++i) {
                double mx = nu(i, 0);
                for (std::size_t j = 1; j < nu.cols(); ++j) mx = std::max(mx, nu(i, j));
                double denom = 0.0;
                for (std::size_t j = 0; j < nu.cols(); ++j) {
                    out(i, j) = std::exp(nu(i, j) - mx);
                    denom += out(i, j);
                }
                for (std::size_t j = 0; j < nu.cols(); ++j) out(i, j) /= denom;
            }
            return out;
    }
    return out;
}

// d a / d nu for elementwise activations, expressed from the stored trace.
Matrix activation_derivative(Activation act, const LayerTrace& trace) {
    const Matrix& a = trace.activation;
    Matrix out(a.rows(), a.cols());
    switch (act) {
        case Activation::Identity:
            return Matrix::full(a.rows(), a.cols(), 1.0);
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * (1.0 - a[i]);
            return out;
        case Activation::Relu:
            for (std::size_t i = 0; i < a.size(); ++i)
                out[i] = trace.pre_activation[i] > 0.0 ? 1.0 : 0.0;
            return out;
        case Activation::Softmax:
            throw ConfigError("softmax has no elementwise derivative; it is only valid fused "
                              "with cross-entropy at the output layer");
    }
    return out;
}

Matrix masked_input(const Layer& layer, const Matrix& input, const MaskSet& masks) {
    if (layer.regularizer.kind != RegKind::Dropout || masks.empty()) return input;
    const Matrix& m = masks.unit_mask;
    if (m.rows() != input.rows() || m.cols() != input.cols())
        throw ShapeError("dropout mask is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", want " + std::to_string(input.rows()) +
                         "x" + std::to_string(input.cols()));
    Matrix out = input;
    const double inv_p = 1.0 / layer.regularizer.p;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i] * inv_p;
    return out;
}

ForwardTrace run_forward(const Network& net, const Matrix& batch,
                         const std::vector<MaskSet>* fixed_masks, RunMode mode, RngStream* rng) {
    net.validate();
    if (batch.cols() != net.input_dim())
        throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(net.input_dim()));
    ForwardTrace trace;
    trace.input = batch;
    trace.mode = mode;
    trace.layers.reserve(net.layers.size());

    const Matrix* prev = &trace.input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const RegularizerConfig& reg = layer.regularizer;
        LayerTrace lt;

        if (mode == RunMode::Train && reg.kind != RegKind::None) {
            if (fixed_masks) {
                lt.masks = (*fixed_masks)[l];
            } else {
                if (!rng)
                    throw ConfigError("forward: train mode with regularized layers needs an rng");
                if (reg.kind == RegKind::Dropout)
                    lt.masks.unit_mask =
                        sample_bernoulli(prev->rows(), layer.in_dim(), reg.p, *rng);
                else
                    lt.masks = sample_masks(reg, layer.out_dim(), layer.in_dim(), *rng);
            }
        }

        if (reg.kind == RegKind::Dropout || lt.masks.empty())
            lt.weights_used = layer.weights;
        else
            lt.weights_used = perturb_weights(reg, layer.weights, lt.masks);

        const Matrix a_used = masked_input(layer, *prev, lt.masks);
        lt.pre_activation = add_row_broadcast(matmul_nt(a_used, lt.weights_used), layer.bias);
        lt.activation = apply_activation(layer.activation, lt.pre_activation);
        trace.layers.push_back(std::move(lt));
        prev = &trace.layers.back().activation;
    }
    return trace;
}

void require_targets(const ForwardTrace& trace, const Matrix& targets) {
    const Matrix& out = trace.output();
    if (targets.rows() != out.rows() || targets.cols() != out.cols())
        throw ShapeError("targets are " + std::to_string(targets.rows()) + "x" +
                         std::to_string(targets.cols()) + ", outputs are " +
                         std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
        case Activation::Softmax: return "softmax";
        case Activation::Identity: return "identity";
    }
    return "?";
}

const char* loss_name(LossKind l) {
    return l == LossKind::CrossEntropy ? "cross_entropy" : "mse";
}

void Network::validate() const {
    if (layers.empty()) throw ConfigError("network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
            throw ConfigError("layer " + std::to_string(l) + " has empty weights");
        if (layer.bias.rows() != 1 || layer.bias.cols() != layer.out_dim())
            throw ShapeError("layer " + std::to_string(l) + " bias is " +
                             std::to_string(layer.bias.rows()) + "x" +
                             std::to_string(layer.bias.cols()) + ", want 1x" +
                             std::to_string(layer.out_dim()));
        if (l > 0 && layer.in_dim() != layers[l - 1].out_dim())
            throw ShapeError("layer " + std::to_string(l) + " expects " +
                             std::to_string(layer.in_dim()) + " inputs but layer " +
                             std::to_string(l - 1) + " emits " +
                             std::to_string(layers[l - 1].out_dim()));
        if (layer.activation == Activation::Softmax && l + 1 != layers.size())
            throw ConfigError("softmax is only valid as the final layer");
        layer.regularizer.validate();
    }
}

ForwardTrace forward(const Network& net, const Matrix& batch, RunMode mode, RngStream* rng) {
    return run_forward(net, batch, nullptr, mode, rng);
}

ForwardTrace forward_with_masks(const Network& net, const Matrix& batch,
                                const std::vector<MaskSet>& masks) {
    if (masks.size() != net.layers.size())
        throw ShapeError("forward_with_masks: got " + std::to_string(masks.size()) +
                         " mask sets for " + std::to_string(net.layers.size()) + " layers");
    return run_forward(net, batch, &masks, RunMode::Train, nullptr);
}

double loss(const Network& net, const ForwardTrace& trace, const Matrix& targets) {
    require_targets(trace, targets);
    const LayerTrace& last = trace.layers.back();
    const Activation out_act = net.layers.back().activation;
    const double n = static_cast<double>(targets.rows());

    if (net.loss == LossKind::Mse) {
        if (out_act == Activation::Softmax)
            throw ConfigError("mse loss is not supported behind a softmax output");
        double acc = 0.0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const double d = last.activation[i] - targets[i];
            acc += d * d;
        }
        return acc / static_cast<double>(targets.size());
    }

    // Cross entropy, computed from the logits for stability.
    if (out_act == Activation::Softmax) {
        const Matrix& nu = last.pre_activation;
        double acc = 0.0;
        for (std::size_t i = 0; i < nu.rows(); ++i) {
            double mx = nu(i, 0);
            for (std::size_t j = 1; j < nu.cols(); ++j) mx = std::max(mx, nu(i, j));
            double denom = 0.0;
            for (std::size_t j = 0; j < nu.cols(); ++j) denom += std::exp(nu(i, j) - mx);
            const double lse = mx + std::log(denom);
            for (std::size_t j = 0; j < nu.cols(); ++j)
                acc += targets(i, j) * (lse - nu(i, j));
        }
        return acc / n;
    }
    if (out_act == Activation::Sigmoid) {
        const Matrix& nu = last.pre_activation;
        double acc = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i)
            acc += softplus(nu[i]) - targets[i] * nu[i];
        return acc / n;
    }
    throw ConfigError("cross_entropy needs softmax or sigmoid outputs, layer emits " +
                      std::string(activation_name(out_act)));
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& targets) {
    require_targets(trace, targets);
    const std::size_t L = net.layers.size();
    const double n = static_cast<double>(targets.rows());
    Gradients grads;
    grads.weights.resize(L);
    grads.biases.resize(L);

    // dJ/dnu of the output layer.
    const Activation out_act = net.layers.back().activation;
    Matrix delta;
    if (net.loss == LossKind::CrossEntropy) {
        if (out_act != Activation::Softmax && out_act != Activation::Sigmoid)
            throw ConfigError("cross_entropy needs softmax or sigmoid outputs");
        delta = scale(sub(trace.output(), targets), 1.0 / n);
    } else {
        Matrix d_act = scale(sub(trace.output(), targets),
                             2.0 / static_cast<double>(targets.size()));
        delta = hadamard(d_act, activation_derivative(out_act, trace.layers.back()));
    }

    for (std::size_t l = L; l-- > 0;) {
        const Layer& layer = net.layers[l];
        const LayerTrace& lt = trace.layers[l];
        const Matrix& prev_act = l == 0 ? trace.input : trace.layers[l - 1].activation;
        const Matrix a_used = masked_input(layer, prev_act, lt.masks);

        Matrix dw = matmul_tn(delta, a_used);
        if (!lt.masks.empty()) {
            const RegularizerConfig& reg = layer.regularizer;
            if (reg.kind == RegKind::Bridgeout) {
                dw = hadamard(dw, bridgeout_weight_grad_factor(layer.weights,
                                                               lt.masks.weight_mask, reg.p,
                                                               reg.q, reg.eps));
            } else if (reg.kind == RegKind::Shakeout) {
                // d W~ / d W is m_j/p on kept columns and 0 on dropped ones.
                for (std::size_t i = 0; i < dw.rows(); ++i)
                    for (std::size_t j = 0; j < dw.cols(); ++j)
                        dw(i, j) *= lt.masks.unit_mask(0, j) / reg.p;
            }
        }
        grads.weights[l] = std::move(dw);
        grads.biases[l] = column_sums(delta);

        if (l > 0) {
            Matrix d_prev = matmul(delta, lt.weights_used);
            if (!lt.masks.empty() && layer.regularizer.kind == RegKind::Dropout) {
                const double inv_p = 1.0 / layer.regularizer.p;
                for (std::size_t i = 0; i < d_prev.size(); ++i)
                    d_prev[i] *= lt.masks.unit_mask[i] * inv_p;
            }
            delta = hadamard(d_prev,
                             activation_derivative(net.layers[l - 1].activation,
                                                   trace.layers[l - 1]));
        }
    }
    return grads;
}

Gradients finite_diff_grad(const Network& net, const Matrix& batch, const Matrix& targets,
                           const std::vector<MaskSet>& masks, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
    Network probe = net;
    Gradients grads;
    grads.weights.resize(net.layers.size());
    grads.biases.resize(net.layers.size());
    const auto eval = [&]() {
        return loss(probe, forward_with_masks(probe, batch, masks), targets);
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Matrix gw(net.layers[l].weights.rows(), net.layers[l].weights.cols());
        for (std::size_t i = 0; i < gw.size(); ++i) {
            const double w0 = probe.layers[l].weights[i];
            probe.layers[l].weights[i] = w0 + h;
            const double jp = eval();
            probe.layers[l].weights[i] = w0 - h;
            const double jm = eval();
            probe.layers[l].weights[i] = w0;
            gw[i] = (jp - jm) / (2.0 * h);
        }
        Matrix gb(1, net.layers[l].bias.cols());
        for (std::size_t i = 0; i < gb.size(); ++i) {
            const double b0 = probe.layers[l].bias[i];
            probe.layers[l].bias[i] = b0 + h;
            const double jp = eval();
            probe.layers[l].bias[i] = b0 - h;
            const double jm = eval();
            probe.layers[l].bias[i] = b0;
            gb[i] = (jp - jm) / (2.0 * h);
        }
        grads.weights[l] = std::move(gw);
        grads.biases[l] = std::move(gb);
    }
    return grads;
}

std::pair<double, double> avg_layer_gradient(const Gradients& grads, std::size_t layer) {
    if (layer >= grads.weights.size())
        throw ConfigError("avg_layer_gradient: layer index out of range");
    const Matrix& g = grads.weights[layer];
    double mean = 0.0, mean_abs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        mean += g[i];
        mean_abs += std::fabs(g[i]);
    }
    const double count = static_cast<double>(g.size());
    return {mean / count, mean_abs / count};
}

void save_weights_csv(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_weights_csv: cannot open " + path);
    char buf[32];
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Matrix& w = net.layers[l].weights;
        out << "# layer " << l << " rows " << w.rows() << " cols " << w.cols() << "\n";
        for (std::size_t i = 0; i < w.rows(); ++i) {
            for (std::size_t j = 0; j < w.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", w(i, j));
                out << (j ? "," : "") << buf;
            }
            out << "\n";
        }
    }
    if (!out) throw DataError("save_weights_csv: write failed for " + path);
}

}  // namespace bridgeout
