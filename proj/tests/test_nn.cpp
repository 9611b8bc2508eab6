#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proseforge/errors.hpp"
#include "proseforge/matrix.hpp"
#include "proseforge/optim.hpp"
#include "proseforge/rng.hpp"
#include "proseforge/tape.hpp"

#include "test_util.hpp"

using namespace proseforge;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& x : m.d) x = rng.uniform(lo, hi);
    return m;
}

} // namespace

TEST_CASE("matmul shapes and values") {
    Matrix a(2, 3);
    a.d = {1, 2, 3, 4, 5, 6};
    Matrix b(3, 1);
    b.d = {1, 0, -1};
    Matrix c = matmul(a, b);
    CHECK(c.rows == 2);
    CHECK(c.cols == 1);
    CHECK(c.at(0, 0) == doctest::Approx(-2.0));
    CHECK(c.at(1, 0) == doctest::Approx(-2.0));

    Matrix ta = matmul_ta(a, a); // 3x3
    CHECK(ta.rows == 3);
    CHECK(ta.at(0, 0) == doctest::Approx(17.0));
    CHECK_THROWS_AS(matmul(b, a), ContractError);
}

TEST_CASE("rng is deterministic and uniform stays in range") {
    Rng a(123);
    Rng b(123);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

// Numeric gradient of a scalar-valued tape program with respect to one param.
static void check_param_grads(Param& p, const std::function<double()>& value,
                              const std::function<void()>& backward_into_grads) {
    backward_into_grads();
    const auto fd = testutil::finite_diff(p, value);
    for (std::size_t i = 0; i < fd.size(); ++i) {
        CAPTURE(i);
        CHECK(testutil::grads_close(p.grad.d[i], fd[i]));
    }
}

TEST_CASE("tape op gradients match finite differences") {
    Rng rng(42);
    Param a("a", 3, 1);
    Param b("b", 3, 1);
    Param w("w", 3, 3);
    a.value = random_matrix(rng, 3, 1);
    b.value = random_matrix(rng, 3, 1);
    w.value = random_matrix(rng, 3, 3);

    // exercises matmul, add, hadamard, sigmoid, tanh, softmax, concat, slice,
    // pick, log, scale_by in one composite program
    auto run = [&](bool backward) {
        Tape tape;
        Var va = tape.leaf(a);
        Var vb = tape.leaf(b);
        Var vw = tape.leaf(w);
        Var lin = tape.add(tape.matmul(vw, va), vb);
        Var act = tape.tanh(lin);
        Var gate = tape.sigmoid(tape.hadamard(act, vb));
        Var both = tape.concat_rows({act, gate});
        Var head = tape.slice_rows(both, 1, 5);
        Var sm = tape.softmax_col(head);
        Var picked = tape.pick(sm, 2);
        Var scaled = tape.scale_by(tape.log(sm), picked);
        Var loss = tape.add_all({tape.pick(scaled, 0), tape.pick(scaled, 3)});
        const double value = tape.scalar(loss);
        if (backward) tape.backward(loss);
        return value;
    };
    auto value = [&] { return run(false); };
    auto backward = [&] {
        zero_grads({&a, &b, &w});
        run(true);
    };
    check_param_grads(a, value, backward);
    check_param_grads(b, value, backward);
    check_param_grads(w, value, backward);
}

TEST_CASE("cross_entropy and gather and matmul_ta gradients") {
    Rng rng(7);
    Param logits("l", 6, 1);
    Param m("m", 4, 2);
    logits.value = random_matrix(rng, 6, 1);
    m.value = random_matrix(rng, 4, 2);

    auto run = [&](bool backward) {
        Tape tape;
        Var vl = tape.leaf(logits);
        Var vm = tape.leaf(m);
        Var g = tape.gather(vl, {0, 2, 4, 5});
        Var q = tape.matmul_ta(vm, tape.affine(g, 0.5, 0.1)); // 2x1
        Var padded = tape.concat_rows({q, g});
        Var ce = tape.cross_entropy(padded, 3);
        Var extra = tape.bce_with_logits(tape.pick(padded, 1), 1.0);
        Var loss = tape.add(ce, extra);
        const double value = tape.scalar(loss);
        if (backward) tape.backward(loss);
        return value;
    };
    auto value = [&] { return run(false); };
    auto backward = [&] {
        zero_grads({&logits, &m});
        run(true);
    };
    check_param_grads(logits, value, backward);
    check_param_grads(m, value, backward);
}

TEST_CASE("pointer_mix gradient and normalization") {
    Rng rng(11);
    Param logits("l", 5, 1);
    Param weights_raw("w", 4, 1);
    Param gate_raw("g", 1, 1);
    logits.value = random_matrix(rng, 5, 1);
    weights_raw.value = random_matrix(rng, 4, 1);
    gate_raw.value = random_matrix(rng, 1, 1);
    const std::vector<int> ext_ids{1, 5, 3, 5}; // two source OOV positions share a slot

    auto run = [&](bool backward) {
        Tape tape;
        Var vp = tape.softmax_col(tape.leaf(logits));
        Var vw = tape.softmax_col(tape.leaf(weights_raw));
        Var vg = tape.sigmoid(tape.leaf(gate_raw));
        Var mixed = tape.pointer_mix(vg, vp, vw, ext_ids, 6);
        double total = 0.0;
        for (double x : tape.val(mixed).d) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        Var loss = tape.log(tape.pick(mixed, 5));
        const double value = tape.scalar(loss);
        if (backward) tape.backward(loss);
        return value;
    };
    auto value = [&] { return run(false); };
    auto backward = [&] {
        zero_grads({&logits, &weights_raw, &gate_raw});
        run(true);
    };
    check_param_grads(logits, value, backward);
    check_param_grads(weights_raw, value, backward);
    check_param_grads(gate_raw, value, backward);
}

TEST_CASE("add_col_broadcast and lookup_row gradients") {
    Rng rng(3);
    Param table("t", 4, 3);
    Param u("u", 3, 1);
    table.value = random_matrix(rng, 4, 3);
    u.value = random_matrix(rng, 3, 1);

    auto run = [&](bool backward) {
        Tape tape;
        Var vt = tape.leaf(table);
        Var vu = tape.leaf(u);
        Var r0 = tape.lookup_row(vt, 1);
        Var r1 = tape.lookup_row(vt, 3);
        Var m = tape.concat_cols({r0, r1});
        Var shifted = tape.tanh(tape.add_col_broadcast(m, vu));
        Var s = tape.matmul_ta(shifted, vu); // 2x1
        Var loss = tape.pick(tape.softmax_col(s), 0);
        const double value = tape.scalar(loss);
        if (backward) tape.backward(loss);
        return value;
    };
    auto value = [&] { return run(false); };
    auto backward = [&] {
        zero_grads({&table, &u});
        run(true);
    };
    check_param_grads(table, value, backward);
    check_param_grads(u, value, backward);
}

TEST_CASE("adam minimizes a quadratic") {
    Param p("p", 4, 1);
    p.value.d = {4.0, -3.0, 2.0, -1.0};
    Adam adam(Adam::Options{0.05});
    for (int step = 0; step < 400; ++step) {
        p.zero_grad();
        for (int i = 0; i < 4; ++i) p.grad.d[i] = 2.0 * p.value.d[i];
        adam.step({&p});
    }
    for (double x : p.value.d) CHECK(std::abs(x) < 1e-2);
}

TEST_CASE("gradient clipping triggers and scales") {
    Param p("p", 2, 1);
    p.value.d = {1.0, 1.0};
    p.grad.d = {30.0, 40.0}; // norm 50
    Adam adam(Adam::Options{0.1, 0.9, 0.999, 1e-8, 5.0});
    CHECK(adam.step({&p}));
    CHECK(adam.clip_events() == 1);
}

TEST_CASE("sgd with zero gradient leaves values bit-identical") {
    Param p("p", 3, 1);
    p.value.d = {0.25, -1.5, 3.75};
    const std::vector<double> before = p.value.d;
    p.zero_grad();
    sgd_step({&p}, 0.5);
    CHECK(p.value.d == before);
}

TEST_CASE("tape rejects misuse") {
    Tape tape;
    Var a = tape.leaf(Matrix(2, 1));
    Var b = tape.leaf(Matrix(3, 1));
    CHECK_THROWS_AS(tape.add(a, b), ContractError);
    CHECK_THROWS_AS(tape.backward(a), ContractError); // not scalar
}
