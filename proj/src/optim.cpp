#include "proseforge/optim.hpp"

#include <cmath>
#include <cstring>

namespace proseforge {

void zero_grads(const ParamRefs& params) {
    for (Param* p : params) p->zero_grad();
}

double grad_norm(const ParamRefs& params) {
    double sq = 0.0;
    for (const Param* p : params) {
        for (double g : p->grad.d) sq += g * g;
    }
    return std::sqrt(sq);
}

bool grads_finite(const ParamRefs& params) {
    for (const Param* p : params) {
        if (!p->grad.all_finite()) return false;
    }
    return true;
}

std::uint64_t params_hash(const ParamRefs& params) {
    std::uint64_t h = 1469598103934665603ull;
    for (const Param* p : params) {
        for (double x : p->value.d) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof(bits));
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
    }
    return h;
}

bool Adam::step(const ParamRefs& params) {
    bool clipped = false;
    double scale = 1.0;
    if (opts_.clip_norm > 0.0) {
        const double norm = grad_norm(params);
        if (norm > opts_.clip_norm) {
            scale = opts_.clip_norm / norm;
            clipped = true;
            ++clip_events_;
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (Param* p : params) {
        if (p->m.empty()) {
            p->m = Matrix(p->value.rows, p->value.cols);
            p->v = Matrix(p->value.rows, p->value.cols);
        }
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad.d[i] * scale;
            p->m.d[i] = opts_.beta1 * p->m.d[i] + (1.0 - opts_.beta1) * g;
            p->v.d[i] = opts_.beta2 * p->v.d[i] + (1.0 - opts_.beta2) * g * g;
            const double mhat = p->m.d[i] / bc1;
            const double vhat = p->v.d[i] / bc2;
            p->value.d[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
        }
    }
    return clipped;
}

void sgd_step(const ParamRefs& params, double lr) {
    for (Param* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad.d[i];
            if (g != 0.0) p->value.d[i] -= lr * g;
        }
    }
}

} // namespace proseforge
