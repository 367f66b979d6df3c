#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "bridgeout/matrix.hpp"
#include "bridgeout/rng.hpp"

namespace bridgeout {

// A dataset with train/validation/test splits. Classification targets are
// one-hot rows; regression targets are plain value rows; binary problems
// use a single {0,1} column.
struct Dataset {
    std::string name;
    Matrix train_inputs, train_targets;
    Matrix val_inputs, val_targets;
    Matrix test_inputs, test_targets;

    bool has_validation() const { return val_inputs.rows() > 0; }
    bool has_test() const { return test_inputs.rows() > 0; }
};

// Gaussian design, Gaussian true weights, y = X W (plus optional Gaussian
// output noise). Everything lands in the train split.
std::pair<Dataset, Matrix> gen_linear_regression(std::size_t n, std::size_t d, std::size_t out,
                                                 RngStream& rng, double noise_sigma = 0.0);

// Binary classification over {0,1}^20 where only the first three
// coordinates carry signal: label = 1 iff 2x0 + 4x1 + 4x2 - 4.8 > 0.
// Targets are a single {0,1} column.
Dataset gen_sparse_logit(std::size_t n_train, std::size_t n_test, RngStream& rng);

// The sparse-logit score function; exposed for tests that enumerate the
// relevant corners.
double sparse_logit_score(const double* x);

// Reads an IDX file (gzip accepted transparently). Label files (magic
// 0x00000801) become n x 1; 3-D image files (magic 0x00000803) are
// flattened to n x (rows*cols). Raw byte values land in [0, 255].
Matrix load_idx(const std::string& path);

// Pixels scaled to [0,1], labels one-hot over num_classes. The last 10000
// rows form the validation split; a train_n-row subset of the remaining
// pool is drawn without replacement. Test data is attached separately.
Dataset normalize_and_split(const Matrix& images, const Matrix& labels, std::size_t train_n,
                            RngStream& rng, std::size_t num_classes = 10);

Matrix one_hot(const Matrix& labels, std::size_t num_classes);

// Expected file names for the MNIST/Fashion-MNIST layouts this reader
// understands, one per line.
std::string idx_expected_files();

}  // namespace bridgeout
