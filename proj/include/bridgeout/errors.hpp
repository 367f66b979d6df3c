#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bridgeout {

// Error taxonomy, mirrored by the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, DivergenceError -> 4.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
        : std::runtime_error(what), epoch(epoch), batch(batch) {}
    std::size_t epoch = 0;
    std::size_t batch = 0;
};

}  // namespace bridgeout
