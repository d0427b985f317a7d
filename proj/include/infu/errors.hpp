#pragma once

#include <stdexcept>
#include <string>

namespace infu {

// Bad shapes, bad configs, bad files. CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training. CLI maps this to exit code 3.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& msg, long step, double lr, unsigned long long seed)
        : std::runtime_error(msg), step(step), lr(lr), seed(seed) {}
    long step;
    double lr;
    unsigned long long seed;
};

}  // namespace infu
