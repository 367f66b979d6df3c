#include "bridgeout/data.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "bridgeout/errors.hpp"

namespace bridgeout {
namespace {

constexpr std::uint32_t kLabelMagic = 0x00000801u;
constexpr std::uint32_t kImageMagic = 0x00000803u;

struct GzFile {
    explicit GzFile(const std::string& path) : handle(gzopen(path.c_str(), "rb")) {
        if (!handle) throw DataError("load_idx: cannot open " + path);
    }
    ~GzFile() {
        if (handle) gzclose(handle);
    }
    GzFile(const GzFile&) = delete;
    GzFile& operator=(const GzFile&) = delete;
    gzFile handle;
};

// Reads exactly n bytes or throws naming the offset reached.
void read_exact(GzFile& file, const std::string& path, std::size_t offset, void* dst,
                std::size_t n) {
    const int got = gzread(file.handle, dst, static_cast<unsigned>(n));
    if (got < 0 || static_cast<std::size_t>(got) != n)
        throw DataError("load_idx: " + path + " truncated at byte offset " +
                        std::to_string(offset + (got > 0 ? static_cast<std::size_t>(got) : 0)));
}

std::uint32_t read_be32(GzFile& file, const std::string& path, std::size_t offset) {
    unsigned char b[4];
    read_exact(file, path, offset, b, 4);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

std::pair<Dataset, Matrix> gen_linear_regression(std::size_t n, std::size_t d, std::size_t out,
                                                 RngStream& rng, double noise_sigma) {
    if (n == 0 || d == 0 || out == 0)
        throw ConfigError("gen_linear_regression: dimensions must be positive");
    Dataset ds;
    ds.name = "linear_regression";
    ds.train_inputs = sample_gaussian(n, d, rng);
    Matrix true_w = sample_gaussian(d, out, rng);
    ds.train_targets = matmul(ds.train_inputs, true_w);
    if (noise_sigma > 0.0) {
        Matrix noise = sample_gaussian(n, out, rng);
        for (std::size_t i = 0; i < noise.size(); ++i)
            ds.train_targets[i] += noise_sigma * noise[i];
    }
    return {std::move(ds), std::move(true_w)};
}

double sparse_logit_score(const double* x) { return 2.0 * x[0] + 4.0 * x[1] + 4.0 * x[2] - 4.8; }

namespace {

void fill_sparse_logit(Matrix& inputs, Matrix& targets, std::size_t n, RngStream& rng) {
    inputs = Matrix(n, 20);
    targets = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 20; ++j)
            inputs(i, j) = rng.next_u64() & 1 ? 1.0 : 0.0;
        targets(i, 0) = sparse_logit_score(&inputs(i, 0)) > 0.0 ? 1.0 : 0.0;
    }
}

}  // namespace

Dataset gen_sparse_logit(std::size_t n_train, std::size_t n_test, RngStream& rng) {
    Dataset ds;
    ds.name = "sparse_logit";
    fill_sparse_logit(ds.train_inputs, ds.train_targets, n_train, rng);
    fill_sparse_logit(ds.test_inputs, ds.test_targets, n_test, rng);
    return ds;
}

Matrix load_idx(const std::string& path) {
    GzFile file(path);
    std::size_t offset = 0;
    const std::uint32_t magic = read_be32(file, path, offset);
    offset += 4;
    if (magic != kLabelMagic && magic != kImageMagic)
        throw DataError("load_idx: " + path + " has bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }() + " at byte offset 0");

    const std::size_t ndims = magic == kLabelMagic ? 1 : 3;
    std::vector<std::size_t> dims(ndims);
    std::size_t total = 1;
    for (std::size_t k = 0; k < ndims; ++k) {
        dims[k] = read_be32(file, path, offset);
        offset += 4;
        if (dims[k] == 0)
            throw DataError("load_idx: " + path + " has zero dimension " + std::to_string(k));
        if (total > (static_cast<std::size_t>(1) << 40) / dims[k])
            throw DataError("load_idx: " + path + " dimension overflow at byte offset " +
                            std::to_string(offset - 4));
        total *= dims[k];
    }

    std::vector<unsigned char> bytes(total);
    read_exact(file, path, offset, bytes.data(), total);
    // One trailing byte means the file is longer than the header promises.
    unsigned char extra;
    if (gzread(file.handle, &extra, 1) == 1)
        throw DataError("load_idx: " + path + " has trailing data after byte offset " +
                        std::to_string(offset + total));

    const std::size_t rows = dims[0];
    const std::size_t cols = total / dims[0];
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < total; ++i) out[i] = static_cast<double>(bytes[i]);
    return out;
}

Matrix one_hot(const Matrix& labels, std::size_t num_classes) {
    if (labels.cols() != 1) throw ShapeError("one_hot: labels must be a single column");
    Matrix out(labels.rows(), num_classes);
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const double v = labels(i, 0);
        const auto cls = static_cast<std::size_t>(v);
        if (v < 0.0 || v != static_cast<double>(cls) || cls >= num_classes)
            throw DataError("one_hot: label " + std::to_string(v) + " outside [0, " +
                            std::to_string(num_classes) + ") at row " + std::to_string(i));
        out(i, cls) = 1.0;
    }
    return out;
}

Dataset normalize_and_split(const Matrix& images, const Matrix& labels, std::size_t train_n,
                            RngStream& rng, std::size_t num_classes) {
    if (images.rows() != labels.rows())
        throw ShapeError("normalize_and_split: " + std::to_string(images.rows()) +
                         " images vs " + std::to_string(labels.rows()) + " labels");
    constexpr std::size_t kValRows = 10000;
    if (images.rows() <= kValRows)
        throw ConfigError("normalize_and_split: need more than 10000 rows to carve out the "
                          "validation split");
    const std::size_t pool = images.rows() - kValRows;
    if (train_n == 0 || train_n > pool)
        throw ConfigError("normalize_and_split: train_n " + std::to_string(train_n) +
                          " exceeds the " + std::to_string(pool) + "-row training pool");

    // Subset drawn without replacement from the pool; validation keeps the
    // last 10000 rows untouched.
    std::vector<std::size_t> order(pool);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = pool; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(order[i - 1], order[j]);
    }

    Dataset ds;
    ds.name = "idx";
    ds.train_inputs = Matrix(train_n, images.cols());
    Matrix train_labels(train_n, 1);
    for (std::size_t r = 0; r < train_n; ++r) {
        const std::size_t src = order[r];
        for (std::size_t c = 0; c < images.cols(); ++c)
            ds.train_inputs(r, c) = images(src, c) / 255.0;
        train_labels(r, 0) = labels(src, 0);
    }
    ds.train_targets = one_hot(train_labels, num_classes);

    ds.val_inputs = Matrix(kValRows, images.cols());
    Matrix val_labels(kValRows, 1);
    for (std::size_t r = 0; r < kValRows; ++r) {
        const std::size_t src = pool + r;
        for (std::size_t c = 0; c < images.cols(); ++c)
            ds.val_inputs(r, c) = images(src, c) / 255.0;
        val_labels(r, 0) = labels(src, 0);
    }
    ds.val_targets = one_hot(val_labels, num_classes);
    return ds;
}

std::string idx_expected_files() {
    return "train-images-idx3-ubyte[.gz]\n"
           "train-labels-idx1-ubyte[.gz]\n"
           "t10k-images-idx3-ubyte[.gz]\n"
           "t10k-labels-idx1-ubyte[.gz]\n";
}

}  // namespace bridgeout
