#include "bridgeout/regularizers.hpp"

#include <cmath>
#include <string>

#include "bridgeout/errors.hpp"

namespace bridgeout {

const char* reg_kind_name(RegKind kind) {
    switch (kind) {
        case RegKind::None: return "none";
        case RegKind::Dropout: return "dropout";
        case RegKind::Shakeout: return "shakeout";
        case RegKind::Bridgeout: return "bridgeout";
    }
    return "?";
}

RegularizerConfig RegularizerConfig::dropout(double p) {
    RegularizerConfig cfg;
    cfg.kind = RegKind::Dropout;
    cfg.p = p;
    cfg.validate();
    return cfg;
}

RegularizerConfig RegularizerConfig::shakeout(double p, double c, bool unbiased) {
    RegularizerConfig cfg;
    cfg.kind = RegKind::Shakeout;
    cfg.p = p;
    cfg.c = c;
    cfg.unbiased_shakeout = unbiased;
    cfg.validate();
    return cfg;
}

RegularizerConfig RegularizerConfig::bridgeout(double p, double q) {
    RegularizerConfig cfg;
    cfg.kind = RegKind::Bridgeout;
    cfg.p = p;
    cfg.q = q;
    cfg.validate();
    return cfg;
}

void RegularizerConfig::validate() const {
    if (kind == RegKind::None) return;
    if (!(p > 0.0 && p <= 1.0))
        throw ConfigError("regularizer: retention probability p must be in (0, 1], got " +
                          std::to_string(p));
    if (kind == RegKind::Shakeout && p >= 1.0)
        throw ConfigError("shakeout: p must be strictly below 1 (the m=1 branch divides by 1-p)");
    if (kind == RegKind::Bridgeout && !(q > 0.0))
        throw ConfigError("bridgeout: norm power q must be positive, got " + std::to_string(q));
    if (c < 0.0) throw ConfigError("shakeout: L1 strength c must be non-negative");
    if (!(eps > 0.0)) throw ConfigError("regularizer: eps must be positive");
}

MaskSet sample_masks(const RegularizerConfig& cfg, std::size_t weight_rows,
                     std::size_t weight_cols, RngStream& rng) {
    cfg.validate();
    MaskSet masks;
    switch (cfg.kind) {
        case RegKind::None: break;
        case RegKind::Dropout:
        case RegKind::Shakeout:
            masks.unit_mask = sample_bernoulli(1, weight_cols, cfg.p, rng);
            break;
        case RegKind::Bridgeout:
            masks.weight_mask = sample_bernoulli(weight_rows, weight_cols, cfg.p, rng);
            break;
    }
    return masks;
}

namespace {

void require_unit_mask(const Matrix& w, const Matrix& unit_mask, const char* op) {
    if (unit_mask.rows() != 1 || unit_mask.cols() != w.cols())
        throw ShapeError(std::string(op) + ": unit mask is " + std::to_string(unit_mask.rows()) +
                         "x" + std::to_string(unit_mask.cols()) + ", want 1x" +
                         std::to_string(w.cols()));
}

}  // namespace

Matrix perturb_dropout(const Matrix& w, const Matrix& unit_mask, double p) {
    require_unit_mask(w, unit_mask, "perturb_dropout");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("perturb_dropout: p must be in (0, 1]");
    Matrix out(w.rows(), w.cols());
    const double inv_p = 1.0 / p;
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j)
            out(i, j) = unit_mask(0, j) == 0.0 ? 0.0 : w(i, j) * inv_p;
    return out;
}

Matrix perturb_shakeout(const Matrix& w, const Matrix& unit_mask, double p, double c,
                        bool unbiased) {
    require_unit_mask(w, unit_mask, "perturb_shakeout");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("perturb_shakeout: p must be in (0, 1)");
    if (c < 0.0) throw ConfigError("perturb_shakeout: c must be non-negative");
    const double keep_inc = unbiased ? c * (1.0 - p) / p : c / (1.0 - p);
    Matrix out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const double wij = w(i, j);
            const double s = wij > 0.0 ? 1.0 : (wij < 0.0 ? -1.0 : 0.0);
            out(i, j) = unit_mask(0, j) == 0.0 ? -c * s : wij / p + keep_inc * s;
        }
    }
    return out;
}

Matrix perturb_bridgeout(const Matrix& w, const Matrix& weight_mask, double p, double q) {
    if (!weight_mask.same_shape(w))
        throw ShapeError("perturb_bridgeout: mask is " + std::to_string(weight_mask.rows()) +
                         "x" + std::to_string(weight_mask.cols()) + ", want " +
                         std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("perturb_bridgeout: p must be in (0, 1]");
    if (!(q > 0.0)) throw ConfigError("perturb_bridgeout: q must be positive");
    const double half_q = q / 2.0;
    const double keep_scale = (1.0 - p) / p;
    Matrix out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i) {
        double a = std::fabs(w[i]);
        double normed = half_q == 0.5 ? std::sqrt(a) : (half_q == 1.0 ? a : std::pow(a, half_q));
        out[i] = weight_mask[i] == 0.0 ? w[i] - normed : w[i] + normed * keep_scale;
    }
    return out;
}

Matrix bridgeout_weight_grad_factor(const Matrix& w, const Matrix& weight_mask, double p,
                                    double q, double eps) {
    if (!weight_mask.same_shape(w))
        throw ShapeError("bridgeout_weight_grad_factor: mask shape mismatch");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("bridgeout_weight_grad_factor: bad p");
    if (!(q > 0.0)) throw ConfigError("bridgeout_weight_grad_factor: bad q");
    if (!(eps > 0.0)) throw ConfigError("bridgeout_weight_grad_factor: bad eps");
    const double half_q = q / 2.0;
    const double e = half_q - 1.0;
    Matrix out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double wi = w[i];
        const double s = wi > 0.0 ? 1.0 : (wi < 0.0 ? -1.0 : 0.0);
        double a = std::fabs(wi);
        if (e < 0.0 && a < eps) a = eps;
        double mag = e == 0.0 ? 1.0 : (e == -0.5 ? 1.0 / std::sqrt(a) : std::pow(a, e));
        out[i] = 1.0 + half_q * mag * (weight_mask[i] / p - 1.0) * s;
    }
    return out;
}

Matrix expected_perturbation(const RegularizerConfig& cfg, const Matrix& w) {
    cfg.validate();
    switch (cfg.kind) {
        case RegKind::None:
        case RegKind::Dropout:
        case RegKind::Bridgeout:
            return w;
        case RegKind::Shakeout: {
            if (cfg.unbiased_shakeout) return w;
            // E[W~] = p*(w/p + c/(1-p)*sgn) + (1-p)*(-c*sgn)
            const double shift = cfg.c * (cfg.p / (1.0 - cfg.p) - (1.0 - cfg.p));
            Matrix out = w;
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double s = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
                out[i] += shift * s;
            }
            return out;
        }
    }
    return w;
}

Matrix perturb_weights(const RegularizerConfig& cfg, const Matrix& w, const MaskSet& masks) {
    switch (cfg.kind) {
        case RegKind::None: return w;
        case RegKind::Dropout: return perturb_dropout(w, masks.unit_mask, cfg.p);
        case RegKind::Shakeout:
            return perturb_shakeout(w, masks.unit_mask, cfg.p, cfg.c, cfg.unbiased_shakeout);
        case RegKind::Bridgeout: return perturb_bridgeout(w, masks.weight_mask, cfg.p, cfg.q);
    }
    return w;
}

}  // namespace bridgeout
