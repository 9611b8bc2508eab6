#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proseforge/matrix.hpp"
#include "proseforge/rng.hpp"

namespace proseforge {

// A trainable tensor with its gradient accumulator and Adam moments.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m; // first moment
    Matrix v; // second moment

    Param() = default;
    Param(std::string n, int rows, int cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

    void init_uniform(Rng& rng, double lo, double hi) {
        for (double& x : value.d) x = rng.uniform(lo, hi);
    }

    void zero_grad() {
        std::fill(grad.d.begin(), grad.d.end(), 0.0);
    }
};

using ParamRefs = std::vector<Param*>;

void zero_grads(const ParamRefs& params);
double grad_norm(const ParamRefs& params);
bool grads_finite(const ParamRefs& params);

// FNV-1a over raw value bytes; used to assert parameters were not mutated.
std::uint64_t params_hash(const ParamRefs& params);

} // namespace proseforge
