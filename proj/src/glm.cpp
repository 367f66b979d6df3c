#include "bridgeout/glm.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "bridgeout/errors.hpp"

namespace bridgeout {
namespace {

double sigmoid(double x) {
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

void require_mask_prob(double p, const char* op) {
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError(std::string(op) + ": p must lie strictly inside (0, 1), got " +
                          std::to_string(p));
}

double fmt_sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

const char* glm_family_name(GlmFamily f) {
    return f == GlmFamily::Linear ? "linear" : "logistic";
}

void GlmProblem::validate() const {
    if (X.rows() == 0 || X.cols() == 0) throw ConfigError("glm: empty design matrix");
    if (y.rows() != X.rows() || y.cols() != 1)
        throw ShapeError("glm: y is " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()) + ", want " + std::to_string(X.rows()) + "x1");
    if (beta.rows() != X.cols() || beta.cols() != 1)
        throw ShapeError("glm: beta is " + std::to_string(beta.rows()) + "x" +
                         std::to_string(beta.cols()) + ", want " + std::to_string(X.cols()) +
                         "x1");
    if (family == GlmFamily::Logistic)
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] != 0.0 && y[i] != 1.0)
                throw ConfigError("glm: logistic responses must be 0 or 1");
}

LogPartition log_partition(GlmFamily family, double eta) {
    if (!std::isfinite(eta)) throw ConfigError("log_partition: eta must be finite");
    if (family == GlmFamily::Linear) return {eta * eta / 2.0, eta, 1.0};
    const double s = sigmoid(eta);
    return {softplus(eta), s, s * (1.0 - s)};
}

double noise_variance(const Matrix& x_row, const Matrix& beta, double p, double q) {
    require_mask_prob(p, "noise_variance");
    if (x_row.size() != beta.size())
        throw ShapeError("noise_variance: x has " + std::to_string(x_row.size()) +
                         " entries, beta has " + std::to_string(beta.size()));
    const double lever = (1.0 - p) / p;
    double acc = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j)
        acc += std::pow(std::fabs(beta[j]), q) * x_row[j] * x_row[j];
    return lever * acc;
}

ClosedFormPenalty bridge_penalty_closed_form(const GlmProblem& prob, double p, double q) {
    prob.validate();
    require_mask_prob(p, "bridge_penalty_closed_form");
    if (!(q > 0.0)) throw ConfigError("bridge_penalty_closed_form: q must be positive");

    const std::size_t n = prob.n_samples(), d = prob.dim();
    // Diagonal of X^T D X with D_ii = A''(x_i . beta), evaluated at the
    // problem's current beta.
    std::vector<double> xtdx(d, 0.0);
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < d; ++j) eta += prob.X(i, j) * prob.beta[j];
        const LogPartition lp = log_partition(prob.family, eta);
        double row_var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double x2 = prob.X(i, j) * prob.X(i, j);
            xtdx[j] += lp.second * x2;
            row_var += std::pow(std::fabs(prob.beta[j]), q) * x2;
        }
        value += lp.second / 2.0 * ((1.0 - p) / p) * row_var;
    }

    ClosedFormPenalty out;
    out.value = value;
    out.gamma_diag.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.gamma_diag[j] = std::pow(xtdx[j], 1.0 / q);
    return out;
}

double bridge_penalty_gamma_form(const std::vector<double>& gamma_diag, const Matrix& beta,
                                 double p, double q) {
    require_mask_prob(p, "bridge_penalty_gamma_form");
    if (gamma_diag.size() != beta.size())
        throw ShapeError("bridge_penalty_gamma_form: gamma/beta length mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j)
        acc += std::pow(gamma_diag[j] * std::fabs(beta[j]), q);
    return (1.0 - p) / (2.0 * p) * acc;
}

double dropout_ridge_penalty(const GlmProblem& prob, double p) {
    prob.validate();
    require_mask_prob(p, "dropout_ridge_penalty");
    const std::size_t n = prob.n_samples(), d = prob.dim();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < d; ++j) eta += prob.X(i, j) * prob.beta[j];
        const LogPartition lp = log_partition(prob.family, eta);
        for (std::size_t j = 0; j < d; ++j)
            acc += lp.second * prob.beta[j] * prob.beta[j] * prob.X(i, j) * prob.X(i, j);
    }
    return (1.0 - p) / (2.0 * p) * acc;
}

Matrix feature_noise_row(const Matrix& x_row, const Matrix& beta, const Matrix& mask_row,
                         double p, double q) {
    require_mask_prob(p, "feature_noise_row");
    if (x_row.size() != beta.size() || mask_row.size() != beta.size())
        throw ShapeError("feature_noise_row: x, beta and mask lengths must agree");
    Matrix out = x_row;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const double s = fmt_sgn(beta[j]);
        if (s == 0.0) continue;  // sgn(0) kills the noise term
        const double scaled_mask = mask_row[j] / p;
        out[j] += x_row[j] * std::pow(std::fabs(beta[j]), (q - 2.0) / 2.0) * s *
                  (scaled_mask - 1.0);
    }
    return out;
}

PenaltyReport mc_marginalized_regularizer(const GlmProblem& prob, double p, double q,
                                          std::size_t n_samples, RngStream& rng) {
    prob.validate();
    require_mask_prob(p, "mc_marginalized_regularizer");
    if (n_samples < 100)
        throw ConfigError("mc_marginalized_regularizer: need at least 100 draws");

    const std::size_t n = prob.n_samples(), d = prob.dim();
    // Precompute the per-coordinate noise amplitude |beta_j|^(q/2) and the
    // clean linear predictors.
    std::vector<double> amp(d);
    for (std::size_t j = 0; j < d; ++j)
        amp[j] = prob.beta[j] == 0.0 ? 0.0 : std::pow(std::fabs(prob.beta[j]), q / 2.0);
    std::vector<double> eta0(n), a0(n);
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < d; ++j) eta += prob.X(i, j) * prob.beta[j];
        eta0[i] = eta;
        a0[i] = log_partition(prob.family, eta).value;
    }

    // Per draw: sum over the dataset of A(x~ . beta) - A(x . beta) with a
    // fresh mask vector for every sample, matching the per-sample
    // expectation in the marginalized loss.
    double total = 0.0, total_sq = 0.0;
    const double keep_shift = (1.0 - p) / p;  // noise when the mask keeps
    for (std::size_t s = 0; s < n_samples; ++s) {
        double draw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = eta0[i];
            for (std::size_t j = 0; j < d; ++j) {
                if (amp[j] == 0.0) continue;
                const bool keep = rng.next_double() < p;
                // (m/p - 1) is (1-p)/p when kept and -1 when dropped; the
                // sgn(beta) of the feature-noise form cancels against
                // sgn(beta)|beta| = beta, leaving |beta|^(q/2).
                eta += prob.X(i, j) * amp[j] * (keep ? keep_shift : -1.0);
            }
            draw += log_partition(prob.family, eta).value - a0[i];
        }
        total += draw;
        total_sq += draw * draw;
    }

    PenaltyReport report;
    const double mean = total / static_cast<double>(n_samples);
    const double var =
        (total_sq - total * total / static_cast<double>(n_samples)) /
        static_cast<double>(n_samples - 1);
    report.mc_estimate = mean;
    report.mc_stderr = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_samples));
    report.n_samples = n_samples;
    ClosedFormPenalty cf = bridge_penalty_closed_form(prob, p, q);
    report.closed_form = cf.value;
    report.gamma_diag = std::move(cf.gamma_diag);
    return report;
}

std::string PenaltyReport::to_record(const GlmProblem& prob, double p, double q) const {
    char buf[256];
    std::string rec = "glm_check";
    rec += " family=";
    rec += glm_family_name(prob.family);
    std::snprintf(buf, sizeof buf, " n=%zu d=%zu p=%.17g q=%.17g", prob.n_samples(), prob.dim(),
                  p, q);
    rec += buf;
    std::snprintf(buf, sizeof buf, " closed_form=%.17g mc_estimate=%.17g mc_stderr=%.17g",
                  closed_form, mc_estimate, mc_stderr);
    rec += buf;
    std::snprintf(buf, sizeof buf, " n_samples=%zu gamma_diag=", n_samples);
    rec += buf;
    for (std::size_t j = 0; j < gamma_diag.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%s%.17g", j ? "," : "", gamma_diag[j]);
        rec += buf;
    }
    return rec;
}

}  // namespace bridgeout
