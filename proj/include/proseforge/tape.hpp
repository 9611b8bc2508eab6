#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "proseforge/matrix.hpp"
#include "proseforge/param.hpp"

namespace proseforge {

// Handle to a node on a Tape.
struct Var {
    int id = -1;
};

// Dynamic computation tape. Forward runs eagerly as ops are recorded;
// backward() replays the recorded closures in reverse and accumulates
// gradients into any bound Param. One backward pass per tape.
class Tape {
public:
    Var leaf(Matrix value);
    Var leaf(Param& p); // gradient flows into p.grad on backward()

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double k);
    Var affine(Var a, double k1, double k2); // k1 * a + k2, elementwise
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var log(Var a);
    Var matmul(Var a, Var b);
    Var matmul_ta(Var a, Var b); // a^T * b
    Var add_col_broadcast(Var m, Var u); // m + u * 1^T, u is a column
    Var softmax_col(Var a); // a is (n x 1)
    Var concat_rows(const std::vector<Var>& vs); // stack columns vertically
    Var concat_cols(const std::vector<Var>& vs); // columns side by side
    Var slice_rows(Var a, int r0, int r1); // rows [r0, r1)
    Var pick(Var a, int row); // (n x 1) -> (1 x 1)
    Var gather(Var a, std::vector<int> rows); // (n x 1) -> (k x 1)
    Var lookup_row(Var table, int row); // (V x D) -> (D x 1)
    Var scale_by(Var a, Var s); // s is (1 x 1)
    Var add_all(const std::vector<Var>& vs);
    // -log softmax(logits)[gold], numerically stable, result (1 x 1)
    Var cross_entropy(Var logits, int gold);
    // Binary cross-entropy on a raw logit against label y in {0, 1}.
    Var bce_with_logits(Var z, double y);
    // Extended distribution p_gen * vocab + (1 - p_gen) * scatter(weights).
    // ext_ids maps each source position to its extended-vocabulary id.
    Var pointer_mix(Var p_gen, Var vocab_probs, Var weights,
                    const std::vector<int>& ext_ids, int ext_size);

    const Matrix& val(Var v) const;
    double scalar(Var v) const;
    const Matrix& grad_of(Var v) const; // valid after backward()
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix val;
        Matrix grad;
        std::function<void()> back;
    };

    Var push(Matrix v, std::function<void()> back = nullptr);
    Matrix& g(int id) { return nodes_[id].grad; }
    const Matrix& v_(int id) const { return nodes_[id].val; }

    std::vector<Node> nodes_;
    std::vector<std::pair<int, Param*>> bindings_;
    bool backward_done_ = false;
};

} // namespace proseforge
