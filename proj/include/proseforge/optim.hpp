#pragma once

#include <cstdint>

#include "proseforge/param.hpp"

namespace proseforge {

// Adam with optional global-norm gradient clipping.
class Adam {
public:
    struct Options {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double clip_norm = 0.0; // 0 disables clipping
    };

    explicit Adam(Options opts) : opts_(opts) {}

    // Applies one update from the accumulated gradients. Returns true when
    // the global-norm clip fired.
    bool step(const ParamRefs& params);

    std::int64_t steps_taken() const { return t_; }
    std::int64_t clip_events() const { return clip_events_; }
    const Options& options() const { return opts_; }

private:
    Options opts_;
    std::int64_t t_ = 0;
    std::int64_t clip_events_ = 0;
};

// Plain gradient-descent update; a zero gradient leaves values bit-unchanged.
void sgd_step(const ParamRefs& params, double lr);

} // namespace proseforge
