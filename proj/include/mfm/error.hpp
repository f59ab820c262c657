#pragma once
#include <stdexcept>
#include <string>

namespace mfm {

// Error categories map onto CLI exit codes: usage=1, numerical=2, io=3.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct shape_error : usage_error {
    explicit shape_error(const std::string& msg) : usage_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate inputs (zero-norm vector under cosine cost, t outside [0,1], ...).
struct domain_error : numerical_error {
    explicit domain_error(const std::string& msg) : numerical_error(msg) {}
};

}  // namespace mfm
