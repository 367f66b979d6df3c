#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bridgeout/matrix.hpp"
#include "bridgeout/rng.hpp"

namespace bridgeout {

enum class GlmFamily { Linear, Logistic };

const char* glm_family_name(GlmFamily f);

// A generalized linear model instance: n x d design matrix, n responses,
// d coefficients. Linear responses are unconstrained reals; logistic
// responses must be 0/1.
struct GlmProblem {
    Matrix X;
    Matrix y;     // n x 1
    Matrix beta;  // d x 1
    GlmFamily family = GlmFamily::Linear;

    std::size_t n_samples() const { return X.rows(); }
    std::size_t dim() const { return X.cols(); }
    void validate() const;
};

// Log-partition function with its first two derivatives:
//   linear:   (eta^2/2, eta, 1)
//   logistic: (softplus(eta), sigma(eta), sigma(eta)(1-sigma(eta)))
struct LogPartition {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

LogPartition log_partition(GlmFamily family, double eta);

// Closed-form Var[x~ . beta] = sum_j (1-p)/p |beta_j|^q x_j^2 for a single
// design row under the retention-scaled mask noise.
double noise_variance(const Matrix& x_row, const Matrix& beta, double p, double q);

// Comparison record between the quadratic closed form and the Monte-Carlo
// marginalized regularizer.
struct PenaltyReport {
    double closed_form = 0.0;
    double mc_estimate = 0.0;
    double mc_stderr = 0.0;
    std::size_t n_samples = 0;
    std::vector<double> gamma_diag;

    // One line of key=value fields, consumed by the glm-check CLI.
    std::string to_record(const GlmProblem& prob, double p, double q) const;
};

struct ClosedFormPenalty {
    double value = 0.0;
    std::vector<double> gamma_diag;  // [(X^T D X)_jj]^(1/q)
};

// R-hat = sum_i A''(x_i . beta)/2 * Var[x~_i . beta], with the diagonal
// scaling gamma so that the identical value is reachable as
// (1-p)/(2p) * sum_j (gamma_j |beta_j|)^q.
ClosedFormPenalty bridge_penalty_closed_form(const GlmProblem& prob, double p, double q);

// The gamma-form evaluation of the same penalty; tests cross-check the two
// routes against each other.
double bridge_penalty_gamma_form(const std::vector<double>& gamma_diag, const Matrix& beta,
                                 double p, double q);

// Ridge-type Dropout penalty for GLMs: (1-p)/(2p) * sum_j beta_j^2 (X^T D X)_jj.
double dropout_ridge_penalty(const GlmProblem& prob, double p);

// Draws retention-scaled masks (1/p with probability p, else 0), forms the
// feature-noised design row, and averages A(x~ . beta) - A(x . beta) over
// n_samples independent draws of the whole dataset. Fresh masks per
// (sample, draw).
PenaltyReport mc_marginalized_regularizer(const GlmProblem& prob, double p, double q,
                                          std::size_t n_samples, RngStream& rng);

// The feature-noise view of the weight perturbation: given the same mask,
// x . perturbed(beta) == noised(x) . beta. Returns the noised design row
// for one sample; mask entries are the raw {0,1} Bernoulli values.
Matrix feature_noise_row(const Matrix& x_row, const Matrix& beta, const Matrix& mask_row,
                         double p, double q);

}  // namespace bridgeout
