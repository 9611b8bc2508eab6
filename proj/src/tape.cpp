#include "proseforge/tape.hpp"

#include <algorithm>
#include <cmath>

#include "proseforge/errors.hpp"

namespace proseforge {

Var Tape::push(Matrix v, std::function<void()> back) {
    nodes_.push_back(Node{std::move(v), Matrix(), std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value) {
    return push(std::move(value));
}

Var Tape::leaf(Param& p) {
    Var v = push(p.value);
    bindings_.emplace_back(v.id, &p);
    return v;
}

const Matrix& Tape::val(Var v) const {
    return nodes_.at(v.id).val;
}

double Tape::scalar(Var v) const {
    const Matrix& m = val(v);
    if (m.rows != 1 || m.cols != 1) throw ContractError("scalar: node is not 1x1");
    return m.d[0];
}

const Matrix& Tape::grad_of(Var v) const {
    return nodes_.at(v.id).grad;
}

Var Tape::add(Var a, Var b) {
    const Matrix& A = v_(a.id);
    const Matrix& B = v_(b.id);
    if (!A.same_shape(B)) throw ContractError("add: shape mismatch");
    Matrix c = A;
    for (std::size_t i = 0; i < c.size(); ++i) c.d[i] += B.d[i];
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, b, out] {
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        Matrix& gb = g(b.id);
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga.d[i] += go.d[i];
            gb.d[i] += go.d[i];
        }
    };
    return out;
}

Var Tape::sub(Var a, Var b) {
    const Matrix& A = v_(a.id);
    const Matrix& B = v_(b.id);
    if (!A.same_shape(B)) throw ContractError("sub: shape mismatch");
    Matrix c = A;
    for (std::size_t i = 0; i < c.size(); ++i) c.d[i] -= B.d[i];
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, b, out] {
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        Matrix& gb = g(b.id);
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga.d[i] += go.d[i];
            gb.d[i] -= go.d[i];
        }
    };
    return out;
}

Var Tape::hadamard(Var a, Var b) {
    const Matrix& A = v_(a.id);
    const Matrix& B = v_(b.id);
    if (!A.same_shape(B)) throw ContractError("hadamard: shape mismatch");
    Matrix c = A;
    for (std::size_t i = 0; i < c.size(); ++i) c.d[i] *= B.d[i];
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, b, out] {
        const Matrix& go = g(out.id);
        const Matrix& A2 = v_(a.id);
        const Matrix& B2 = v_(b.id);
        Matrix& ga = g(a.id);
        Matrix& gb = g(b.id);
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga.d[i] += B2.d[i] * go.d[i];
            gb.d[i] += A2.d[i] * go.d[i];
        }
    };
    return out;
}

Var Tape::scale(Var a, double k) {
    return affine(a, k, 0.0);
}

Var Tape::affine(Var a, double k1, double k2) {
    Matrix c = v_(a.id);
    for (double& x : c.d) x = k1 * x + k2;
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out, k1] {
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        for (std::size_t i = 0; i < go.size(); ++i) ga.d[i] += k1 * go.d[i];
    };
    return out;
}

Var Tape::sigmoid(Var a) {
    Matrix c = v_(a.id);
    for (double& x : c.d) x = 1.0 / (1.0 + std::exp(-x));
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out] {
        const Matrix& s = v_(out.id);
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga.d[i] += s.d[i] * (1.0 - s.d[i]) * go.d[i];
        }
    };
    return out;
}

Var Tape::tanh(Var a) {
    Matrix c = v_(a.id);
    for (double& x : c.d) x = std::tanh(x);
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out] {
        const Matrix& t = v_(out.id);
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga.d[i] += (1.0 - t.d[i] * t.d[i]) * go.d[i];
        }
    };
    return out;
}

Var Tape::log(Var a) {
    Matrix c = v_(a.id);
    for (double& x : c.d) x = std::log(x);
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out] {
        const Matrix& x = v_(a.id);
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        for (std::size_t i = 0; i < go.size(); ++i) ga.d[i] += go.d[i] / x.d[i];
    };
    return out;
}

Var Tape::matmul(Var a, Var b) {
    Var out = push(proseforge::matmul(v_(a.id), v_(b.id)));
    nodes_[out.id].back = [this, a, b, out] {
        const Matrix& go = g(out.id);
        // gA += gC * B^T ; gB += A^T * gC
        Matrix da = matmul_tb(go, v_(b.id));
        Matrix db = proseforge::matmul_ta(v_(a.id), go);
        Matrix& ga = g(a.id);
        Matrix& gb = g(b.id);
        for (std::size_t i = 0; i < da.size(); ++i) ga.d[i] += da.d[i];
        for (std::size_t i = 0; i < db.size(); ++i) gb.d[i] += db.d[i];
    };
    return out;
}

Var Tape::matmul_ta(Var a, Var b) {
    Var out = push(proseforge::matmul_ta(v_(a.id), v_(b.id)));
    nodes_[out.id].back = [this, a, b, out] {
        const Matrix& go = g(out.id);
        // C = A^T B: gA += B * gC^T ; gB += A * gC
        Matrix da = matmul_tb(v_(b.id), go);
        Matrix db = proseforge::matmul(v_(a.id), go);
        Matrix& ga = g(a.id);
        Matrix& gb = g(b.id);
        for (std::size_t i = 0; i < da.size(); ++i) ga.d[i] += da.d[i];
        for (std::size_t i = 0; i < db.size(); ++i) gb.d[i] += db.d[i];
    };
    return out;
}

Var Tape::add_col_broadcast(Var m, Var u) {
    const Matrix& M = v_(m.id);
    const Matrix& U = v_(u.id);
    if (U.cols != 1 || U.rows != M.rows) throw ContractError("add_col_broadcast: shape mismatch");
    Matrix c = M;
    for (int i = 0; i < c.rows; ++i) {
        for (int j = 0; j < c.cols; ++j) c.at(i, j) += U.at(i, 0);
    }
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, m, u, out] {
        const Matrix& go = g(out.id);
        Matrix& gm = g(m.id);
        Matrix& gu = g(u.id);
        for (std::size_t i = 0; i < go.size(); ++i) gm.d[i] += go.d[i];
        for (int i = 0; i < go.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < go.cols; ++j) s += go.at(i, j);
            gu.at(i, 0) += s;
        }
    };
    return out;
}

Var Tape::softmax_col(Var a) {
    const Matrix& X = v_(a.id);
    if (X.cols != 1) throw ContractError("softmax_col: expected a column vector");
    Matrix c = X;
    double mx = c.d[0];
    for (double x : c.d) mx = std::max(mx, x);
    double z = 0.0;
    for (double& x : c.d) {
        x = std::exp(x - mx);
        z += x;
    }
    for (double& x : c.d) x /= z;
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out] {
        const Matrix& s = v_(out.id);
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        double dot = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) dot += s.d[i] * go.d[i];
        for (std::size_t i = 0; i < s.size(); ++i) ga.d[i] += s.d[i] * (go.d[i] - dot);
    };
    return out;
}

Var Tape::concat_rows(const std::vector<Var>& vs) {
    int total = 0;
    for (Var v : vs) {
        if (v_(v.id).cols != 1) throw ContractError("concat_rows: expected column vectors");
        total += v_(v.id).rows;
    }
    Matrix c(total, 1);
    int off = 0;
    for (Var v : vs) {
        const Matrix& m = v_(v.id);
        std::copy(m.d.begin(), m.d.end(), c.d.begin() + off);
        off += m.rows;
    }
    Var out = push(std::move(c));
    std::vector<Var> parents = vs;
    nodes_[out.id].back = [this, parents, out] {
        const Matrix& go = g(out.id);
        int off2 = 0;
        for (Var v : parents) {
            Matrix& gp = g(v.id);
            for (int i = 0; i < gp.rows; ++i) gp.d[i] += go.d[off2 + i];
            off2 += gp.rows;
        }
    };
    return out;
}

Var Tape::concat_cols(const std::vector<Var>& vs) {
    if (vs.empty()) throw ContractError("concat_cols: empty list");
    const int rows = v_(vs[0].id).rows;
    Matrix c(rows, static_cast<int>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) {
        const Matrix& m = v_(vs[j].id);
        if (m.rows != rows || m.cols != 1) throw ContractError("concat_cols: shape mismatch");
        for (int i = 0; i < rows; ++i) c.at(i, static_cast<int>(j)) = m.at(i, 0);
    }
    Var out = push(std::move(c));
    std::vector<Var> parents = vs;
    nodes_[out.id].back = [this, parents, out] {
        const Matrix& go = g(out.id);
        for (std::size_t j = 0; j < parents.size(); ++j) {
            Matrix& gp = g(parents[j].id);
            for (int i = 0; i < go.rows; ++i) gp.at(i, 0) += go.at(i, static_cast<int>(j));
        }
    };
    return out;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
    const Matrix& A = v_(a.id);
    if (r0 < 0 || r1 > A.rows || r0 >= r1) throw ContractError("slice_rows: bad range");
    Matrix c(r1 - r0, A.cols);
    for (int i = r0; i < r1; ++i) {
        for (int j = 0; j < A.cols; ++j) c.at(i - r0, j) = A.at(i, j);
    }
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out, r0] {
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        for (int i = 0; i < go.rows; ++i) {
            for (int j = 0; j < go.cols; ++j) ga.at(r0 + i, j) += go.at(i, j);
        }
    };
    return out;
}

Var Tape::pick(Var a, int row) {
    const Matrix& A = v_(a.id);
    if (A.cols != 1 || row < 0 || row >= A.rows) throw ContractError("pick: index out of range");
    Matrix c(1, 1);
    c.d[0] = A.at(row, 0);
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out, row] {
        g(a.id).at(row, 0) += g(out.id).d[0];
    };
    return out;
}

Var Tape::gather(Var a, std::vector<int> rows) {
    const Matrix& A = v_(a.id);
    if (A.cols != 1) throw ContractError("gather: expected a column vector");
    Matrix c(static_cast<int>(rows.size()), 1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= A.rows) throw ContractError("gather: index out of range");
        c.d[k] = A.at(rows[k], 0);
    }
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, out, rows = std::move(rows)] {
        const Matrix& go = g(out.id);
        Matrix& ga = g(a.id);
        for (std::size_t k = 0; k < rows.size(); ++k) ga.at(rows[k], 0) += go.d[k];
    };
    return out;
}

Var Tape::lookup_row(Var table, int row) {
    const Matrix& T = v_(table.id);
    if (row < 0 || row >= T.rows) throw ContractError("lookup_row: id out of range");
    Matrix c(T.cols, 1);
    for (int j = 0; j < T.cols; ++j) c.at(j, 0) = T.at(row, j);
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, table, out, row] {
        const Matrix& go = g(out.id);
        Matrix& gt = g(table.id);
        for (int j = 0; j < go.rows; ++j) gt.at(row, j) += go.at(j, 0);
    };
    return out;
}

Var Tape::scale_by(Var a, Var s) {
    const Matrix& S = v_(s.id);
    if (S.rows != 1 || S.cols != 1) throw ContractError("scale_by: scale is not 1x1");
    Matrix c = v_(a.id);
    for (double& x : c.d) x *= S.d[0];
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, a, s, out] {
        const Matrix& go = g(out.id);
        const Matrix& A = v_(a.id);
        const double sv = v_(s.id).d[0];
        Matrix& ga = g(a.id);
        Matrix& gs = g(s.id);
        double acc = 0.0;
        for (std::size_t i = 0; i < go.size(); ++i) {
            ga.d[i] += sv * go.d[i];
            acc += A.d[i] * go.d[i];
        }
        gs.d[0] += acc;
    };
    return out;
}

Var Tape::add_all(const std::vector<Var>& vs) {
    if (vs.empty()) throw ContractError("add_all: empty list");
    Matrix c = v_(vs[0].id);
    for (std::size_t k = 1; k < vs.size(); ++k) {
        const Matrix& m = v_(vs[k].id);
        if (!m.same_shape(c)) throw ContractError("add_all: shape mismatch");
        for (std::size_t i = 0; i < c.size(); ++i) c.d[i] += m.d[i];
    }
    Var out = push(std::move(c));
    std::vector<Var> parents = vs;
    nodes_[out.id].back = [this, parents, out] {
        const Matrix& go = g(out.id);
        for (Var v : parents) {
            Matrix& gp = g(v.id);
            for (std::size_t i = 0; i < go.size(); ++i) gp.d[i] += go.d[i];
        }
    };
    return out;
}

Var Tape::cross_entropy(Var logits, int gold) {
    const Matrix& L = v_(logits.id);
    if (L.cols != 1) throw ContractError("cross_entropy: expected a logits column");
    if (gold < 0 || gold >= L.rows) throw ContractError("cross_entropy: gold id out of range");
    double mx = L.d[0];
    for (double x : L.d) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : L.d) z += std::exp(x - mx);
    const double logz = std::log(z) + mx;
    Matrix c(1, 1);
    c.d[0] = logz - L.at(gold, 0);
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, logits, out, gold, logz] {
        const double go = g(out.id).d[0];
        const Matrix& L2 = v_(logits.id);
        Matrix& gl = g(logits.id);
        for (int i = 0; i < L2.rows; ++i) {
            const double p = std::exp(L2.at(i, 0) - logz);
            gl.at(i, 0) += go * (p - (i == gold ? 1.0 : 0.0));
        }
    };
    return out;
}

Var Tape::bce_with_logits(Var z, double y) {
    const Matrix& Z = v_(z.id);
    if (Z.rows != 1 || Z.cols != 1) throw ContractError("bce_with_logits: logit is not 1x1");
    const double zv = Z.d[0];
    Matrix c(1, 1);
    c.d[0] = std::max(zv, 0.0) - zv * y + std::log1p(std::exp(-std::abs(zv)));
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, z, out, y] {
        const double zv2 = v_(z.id).d[0];
        const double s = 1.0 / (1.0 + std::exp(-zv2));
        g(z.id).d[0] += (s - y) * g(out.id).d[0];
    };
    return out;
}

Var Tape::pointer_mix(Var p_gen, Var vocab_probs, Var weights,
                      const std::vector<int>& ext_ids, int ext_size) {
    const Matrix& P = v_(vocab_probs.id);
    const Matrix& W = v_(weights.id);
    const Matrix& G = v_(p_gen.id);
    if (G.rows != 1 || G.cols != 1) throw ContractError("pointer_mix: p_gen is not 1x1");
    if (P.cols != 1 || W.cols != 1) throw ContractError("pointer_mix: expected column vectors");
    if (static_cast<int>(ext_ids.size()) != W.rows)
        throw ContractError("pointer_mix: weights/source length mismatch");
    if (ext_size < P.rows) throw ContractError("pointer_mix: extended size below vocab size");
    const double pg = G.d[0];
    Matrix c(ext_size, 1);
    for (int i = 0; i < P.rows; ++i) c.d[i] = pg * P.d[i];
    for (std::size_t s = 0; s < ext_ids.size(); ++s) {
        if (ext_ids[s] < 0 || ext_ids[s] >= ext_size)
            throw ContractError("pointer_mix: extended id out of range");
        c.d[ext_ids[s]] += (1.0 - pg) * W.d[s];
    }
    Var out = push(std::move(c));
    nodes_[out.id].back = [this, p_gen, vocab_probs, weights, out, ids = ext_ids] {
        const Matrix& go = g(out.id);
        const Matrix& P2 = v_(vocab_probs.id);
        const Matrix& W2 = v_(weights.id);
        const double pg2 = v_(p_gen.id).d[0];
        Matrix& gp = g(vocab_probs.id);
        Matrix& gw = g(weights.id);
        Matrix& gg = g(p_gen.id);
        double acc = 0.0;
        for (int i = 0; i < P2.rows; ++i) {
            gp.d[i] += pg2 * go.d[i];
            acc += P2.d[i] * go.d[i];
        }
        for (std::size_t s = 0; s < ids.size(); ++s) {
            gw.d[s] += (1.0 - pg2) * go.d[ids[s]];
            acc -= W2.d[s] * go.d[ids[s]];
        }
        gg.d[0] += acc;
    };
    return out;
}

void Tape::backward(Var loss) {
    if (backward_done_) throw ContractError("backward: tape already consumed");
    backward_done_ = true;
    const Matrix& L = val(loss);
    if (L.rows != 1 || L.cols != 1) throw ContractError("backward: loss is not scalar");
    for (Node& n : nodes_) n.grad = Matrix(n.val.rows, n.val.cols);
    nodes_[loss.id].grad.d[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        if (nodes_[i].back) nodes_[i].back();
    }
    for (auto& [id, p] : bindings_) {
        const Matrix& gn = nodes_[id].grad;
        for (std::size_t i = 0; i < gn.size(); ++i) p->grad.d[i] += gn.d[i];
    }
}

} // namespace proseforge
