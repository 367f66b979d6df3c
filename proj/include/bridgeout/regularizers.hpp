#pragma once

#include <cstddef>

#include "bridgeout/matrix.hpp"
#include "bridgeout/rng.hpp"

namespace bridgeout {

enum class RegKind { None, Dropout, Shakeout, Bridgeout };

const char* reg_kind_name(RegKind kind);

// Hyperparameters of a stochastic weight-perturbation rule.
//   p   retention probability of the Bernoulli mask
//   q   norm power (Bridgeout)
//   c   L1 strength (Shakeout)
//   unbiased_shakeout  selects the m=1 increment c*(1-p)/p, which makes
//       E[W~] = W; the default keeps the published form c/(1-p)
//   eps floor applied to |w|^(q/2-1) in the Bridgeout gradient factor
struct RegularizerConfig {
    RegKind kind = RegKind::None;
    double p = 1.0;
    double q = 1.0;
    double c = 0.0;
    bool unbiased_shakeout = false;
    double eps = 1e-8;

    static RegularizerConfig none() { return {}; }
    static RegularizerConfig dropout(double p);
    static RegularizerConfig shakeout(double p, double c, bool unbiased = false);
    static RegularizerConfig bridgeout(double p, double q);

    // Throws ConfigError on out-of-range hyperparameters.
    void validate() const;
};

// The masks consumed by one forward/backward pair. Exactly one member is
// populated: unit_mask for Dropout and Shakeout (one {0,1} column mask per
// input unit; the network layer stores per-example dropout masks here with
// one row per example), weight_mask for Bridgeout (shaped like W).
struct MaskSet {
    Matrix unit_mask;
    Matrix weight_mask;

    bool empty() const { return unit_mask.empty() && weight_mask.empty(); }
};

// Draws the minibatch mask for a k x d weight matrix.
MaskSet sample_masks(const RegularizerConfig& cfg, std::size_t weight_rows,
                     std::size_t weight_cols, RngStream& rng);

// Column j of the result is 0 when m_j = 0 and w_{:,j}/p otherwise.
Matrix perturb_dropout(const Matrix& w, const Matrix& unit_mask, double p);

// Entry is -c*sgn(w) when m_j = 0; when m_j = 1 it is w/p plus
// c/(1-p)*sgn(w) as published, or c*(1-p)/p*sgn(w) in the unbiased variant.
Matrix perturb_shakeout(const Matrix& w, const Matrix& unit_mask, double p, double c,
                        bool unbiased);

// Entry is w - |w|^(q/2) when M_ij = 0, else w + |w|^(q/2)*(1-p)/p.
Matrix perturb_bridgeout(const Matrix& w, const Matrix& weight_mask, double p, double q);

// Elementwise 1 + (q/2)*|w|^(q/2-1)*(M/p - 1)*sgn(w), the factor that
// multiplies the incoming activation in the weight gradient. The eps floor
// keeps the q < 2 singularity at w = 0 bounded.
Matrix bridgeout_weight_grad_factor(const Matrix& w, const Matrix& weight_mask, double p,
                                    double q, double eps);

// Closed-form E[W~] under the mask distribution. Identity for Dropout and
// Bridgeout; Shakeout as published shifts by c*sgn(w)*(p/(1-p) - (1-p)).
Matrix expected_perturbation(const RegularizerConfig& cfg, const Matrix& w);

// Applies the configured perturbation with the given masks.
Matrix perturb_weights(const RegularizerConfig& cfg, const Matrix& w, const MaskSet& masks);

}  // namespace bridgeout
