#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <wtcalc/diagram.hpp>
#include <wtcalc/model.hpp>
#include <wtcalc/rules.hpp>
#include <wtcalc/semantics.hpp>

using namespace wtcalc;

namespace {

Diagram z_spider(double phase, int m, int n) { return build::lone(Node::z(phase), m, n); }
Diagram x_spider(double phase, int m, int n) { return build::lone(Node::x(phase), m, n); }

Diagram cnot_gadget_zx() {
    Diagram d;
    int z = d.add_node(Node::z(0));
    int x = d.add_node(Node::x(0));
    d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(z));
    d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(x));
    d.connect(Diagram::on_node(z), Diagram::on_boundary(d.add_output()));
    d.connect(Diagram::on_node(x), Diagram::on_boundary(d.add_output()));
    d.connect_nodes(z, x);
    return d;
}

Diagram ckz_gadget(int k) {
    Diagram d;
    std::vector<int> hlegs;
    int box = d.add_node(Node::hbox({-1, 0}));
    for (int i = 0; i < k; ++i) {
        int w = d.add_node(Node::w());
        d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(w));
        d.connect(Diagram::on_node(w), Diagram::on_boundary(d.add_output()));
        d.connect_nodes(w, box);
    }
    return d;
}

constexpr double kTight = 1e-12;

} // namespace

TEST_CASE("alpha: Z spider 1->1 is diag(1, e^{i theta})") {
    for (double th : {0.0, M_PI / 4, 1.234, M_PI}) {
        Tensor t = evaluate(z_spider(th, 1, 1), model_alpha());
        REQUIRE(t.legs == 2);
        CHECK(std::abs(t.at(0) - Complex(1, 0)) < kTight);
        CHECK(std::abs(t.at(1)) < kTight);
        CHECK(std::abs(t.at(2)) < kTight);
        CHECK(std::abs(t.at(3) - std::polar(1.0, th)) < kTight);
    }
}

TEST_CASE("alpha: X state is sqrt(2)|0>") {
    Tensor t = evaluate(x_spider(0, 0, 1), model_alpha());
    REQUIRE(t.legs == 1);
    CHECK(std::abs(t.at(0) - Complex(M_SQRT2, 0)) < kTight);
    CHECK(std::abs(t.at(1)) < kTight);
}

TEST_CASE("alpha: CNOT gadget is sub-normalised by 1/sqrt(2)") {
    Tensor t = evaluate(cnot_gadget_zx(), model_alpha());
    double c = M_SQRT1_2;
    std::vector<double> want = {c, 0, 0, 0, 0, c, 0, 0, 0, 0, 0, c, 0, 0, c, 0};
    REQUIRE(t.size() == 16);
    for (size_t i = 0; i < 16; ++i) CHECK(std::abs(t.at(i) - Complex(want[i], 0)) < kTight);
}

TEST_CASE("alpha rejects ZH generators") {
    Diagram d = build::lone(Node::hbox({2, 0}), 0, 0);
    CHECK_THROWS_AS(evaluate(d, model_alpha()), EvalError);
}

TEST_CASE("beta: degree-0 H box denotes its parameter") {
    for (Complex a : {Complex(-1, 0), Complex(0.25, -1.5), Complex(0, 0)}) {
        Tensor t = evaluate(build::lone(Node::hbox(a), 0, 0), model_beta());
        CHECK(std::abs(t.at(0) - a) < kTight);
    }
}

TEST_CASE("beta: not dot is the bit flip") {
    Tensor t = evaluate(build::lone(Node::notdot(), 1, 1), model_beta());
    CHECK(std::abs(t.at(0)) < kTight);
    CHECK(std::abs(t.at(1) - Complex(1, 0)) < kTight);
    CHECK(std::abs(t.at(2) - Complex(1, 0)) < kTight);
    CHECK(std::abs(t.at(3)) < kTight);
}

TEST_CASE("beta: gray dot 2->1 is the parity tensor") {
    // independent oracle: enumerate the 8 cells from the parity condition
    Tensor t = evaluate(build::lone(Node::gray(), 2, 1), model_beta());
    REQUIRE(t.legs == 3);
    for (int y = 0; y < 2; ++y)
        for (int x1 = 0; x1 < 2; ++x1)
            for (int x2 = 0; x2 < 2; ++x2) {
                size_t idx = size_t(y) << 2 | x1 << 1 | x2;  // legs (outputs..., inputs...)
                double want = ((y + x1 + x2) % 2 == 0) ? 1.0 : 0.0;
                CHECK(std::abs(t.at(idx) - Complex(want, 0)) < kTight);
            }
}

TEST_CASE("beta rejects ZX-only generators but accepts phase-free Z") {
    CHECK_THROWS_AS(evaluate(z_spider(0.5, 1, 1), model_beta()), EvalError);
    CHECK_THROWS_AS(evaluate(x_spider(0, 1, 1), model_beta()), EvalError);
    CHECK_THROWS_AS(evaluate(build::lone(Node::nu(1), 0, 0), model_beta()), EvalError);
    Tensor t = evaluate(z_spider(0, 1, 1), model_beta());
    CHECK(std::abs(t.at(0) - Complex(1, 0)) < kTight);
}

TEST_CASE("nu: Z spider 1->1 keeps diag(1, e^{i theta})") {
    Tensor t = evaluate(z_spider(0.77, 1, 1), model_nu());
    CHECK(std::abs(t.at(0) - Complex(1, 0)) < kTight);
    CHECK(std::abs(t.at(3) - std::polar(1.0, 0.77)) < kTight);
}

TEST_CASE("nu: X state with a nu box is exactly |0>") {
    Diagram d = x_spider(0, 0, 1);
    d.add_node(Node::nu(1));
    Tensor t = evaluate(d, model_nu());
    CHECK(std::abs(t.at(0) - Complex(1, 0)) < kTight);
    CHECK(std::abs(t.at(1)) < kTight);
}

TEST_CASE("nu: degree-1 dots are 2^{1/4}-scaled states, nu-corrected ones unit") {
    double q = std::exp2(0.25);
    Tensor tz = evaluate(z_spider(0, 0, 1), model_nu());  // 2^{1/4} |+>
    CHECK(std::abs(tz.at(0) - Complex(q * M_SQRT1_2, 0)) < kTight);
    CHECK(std::abs(tz.at(1) - Complex(q * M_SQRT1_2, 0)) < kTight);
    Tensor tx = evaluate(x_spider(0, 0, 1), model_nu());  // 2^{1/4} |0>
    CHECK(std::abs(tx.at(0) - Complex(q, 0)) < kTight);
    CHECK(std::abs(tx.at(1)) < kTight);
    // |-> via the plain H box state, nu-corrected
    Diagram d = build::lone(Node::hbox({-1, 0}), 0, 1);
    d.add_node(Node::nu(1));
    Tensor tm = evaluate(d, model_nu());
    CHECK(std::abs(tm.at(0) - Complex(M_SQRT1_2, 0)) < kTight);
    CHECK(std::abs(tm.at(1) - Complex(-M_SQRT1_2, 0)) < kTight);
}

TEST_CASE("nu: CNOT gadget is exactly CNOT") {
    Tensor t = evaluate(cnot_gadget_zx(), model_nu());
    std::vector<double> want = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0};
    for (size_t i = 0; i < 16; ++i) CHECK(std::abs(t.at(i) - Complex(want[i], 0)) < kTight);
}

TEST_CASE("nu: C^{k-1}Z gadget is diag(1,...,1,-1)") {
    for (int k = 1; k <= 4; ++k) {
        Tensor t = evaluate(ckz_gadget(k), model_nu());
        size_t dim = size_t(1) << k;
        for (size_t r = 0; r < dim; ++r)
            for (size_t c = 0; c < dim; ++c) {
                Complex want = (r == c) ? (r == dim - 1 ? Complex(-1, 0) : Complex(1, 0)) : Complex(0, 0);
                CHECK(std::abs(t.at(r * dim + c) - want) < kTight);
            }
    }
}

TEST_CASE("generator_tensor closed forms") {
    CHECK(std::abs(generator_tensor(Node::z(M_PI), 0, model_nu()).at(0)) < kTight);
    CHECK(std::abs(generator_tensor(Node::z(0), 0, model_nu()).at(0) - Complex(M_SQRT2, 0)) < kTight);
    Tensor h = generator_tensor(Node::hbox({-1, 0}), 2, model_nu());
    CHECK(std::abs(h.at(0) - Complex(M_SQRT1_2, 0)) < kTight);
    CHECK(std::abs(h.at(3) + Complex(M_SQRT1_2, 0)) < kTight);
}

TEST_CASE("nu identifies white dots with phase-free Z and Hadamard with the plain box") {
    for (int m = 0; m <= 2; ++m)
        for (int n = 0; n <= 2; ++n) {
            Tensor tw = evaluate(build::lone(Node::w(), m, n), model_nu());
            Tensor tz = evaluate(z_spider(0, m, n), model_nu());
            REQUIRE(tw.size() == tz.size());
            for (size_t i = 0; i < tw.size(); ++i) CHECK(tw.at(i) == tz.at(i));  // exact
        }
    Tensor th = evaluate(build::lone(Node::h(), 1, 1), model_nu());
    Tensor tb = evaluate(build::lone(Node::hbox({-1, 0}), 1, 1), model_nu());
    for (size_t i = 0; i < 4; ++i) CHECK(th.at(i) == tb.at(i));
}

TEST_CASE("snake equations and loops") {
    // (cap x id) o (id x cup) = wire
    Diagram idcup;  // 1 -> 3: wire and a cup
    {
        idcup.add_wire();
        int o1 = idcup.add_output();
        int o2 = idcup.add_output();
        idcup.connect(Diagram::on_boundary(o1), Diagram::on_boundary(o2));
    }
    Diagram capid;  // 3 -> 1: cap and wire
    {
        int i1 = capid.add_input();
        int i2 = capid.add_input();
        capid.connect(Diagram::on_boundary(i1), Diagram::on_boundary(i2));
        capid.add_wire();
    }
    Diagram snake = sequential(idcup, capid);
    Tensor t = evaluate(snake, model_nu());
    REQUIRE(t.legs == 2);
    CHECK(std::abs(t.at(0) - Complex(1, 0)) < kTight);
    CHECK(std::abs(t.at(1)) < kTight);
    CHECK(std::abs(t.at(2)) < kTight);
    CHECK(std::abs(t.at(3) - Complex(1, 0)) < kTight);
}

TEST_CASE("empty diagram evaluates to scalar 1") {
    Tensor t = evaluate(Diagram{}, model_nu());
    CHECK(t.legs == 0);
    CHECK(std::abs(t.at(0) - Complex(1, 0)) < kTight);
}

TEST_CASE("leg budget is enforced and env-overridable") {
    Diagram d;
    for (int i = 0; i < 8; ++i) d.add_wire();
    CHECK_NOTHROW(evaluate(d, model_nu(), 16));
    CHECK_THROWS_AS(evaluate(d, model_nu(), 14), EvalError);
}

TEST_CASE("compare verdicts") {
    Tensor a(1), b(1);
    a.at(0) = Complex(1, 0);
    a.at(1) = Complex(2, 0);
    b = a;
    CHECK(compare(a, b).equal());

    Tensor c = a;
    c.at(0) = Complex(M_SQRT1_2, 0);
    c.at(1) = Complex(2 * M_SQRT1_2, 0);
    auto r = compare(c, a);
    CHECK(r.proportional());
    CHECK(std::abs(r.lambda - Complex(M_SQRT1_2, 0)) < 1e-12);

    Tensor zero(1);
    CHECK(compare(zero, zero).equal());
    CHECK(compare(zero, a).verdict == CompareResult::Verdict::Different);

    // (Z spider deg-0 at pi under nu) vs scalar 1: Different
    Tensor s0 = evaluate(z_spider(M_PI, 0, 0), model_nu());
    CHECK(compare(s0, Tensor::scalar({1, 0})).verdict == CompareResult::Verdict::Different);
}

TEST_CASE("compare extracts the CNOT proportionality factor") {
    Tensor t = evaluate(cnot_gadget_zx(), model_alpha());
    Tensor cnot(4);
    cnot.at(0) = cnot.at(5) = cnot.at(11) = cnot.at(14) = Complex(1, 0);
    auto r = compare(t, cnot);
    REQUIRE(r.proportional());
    CHECK(std::abs(r.lambda - Complex(M_SQRT1_2, 0)) < 1e-12);
}

TEST_CASE("green_scalar closed form and 64-angle agreement") {
    CHECK(std::abs(green_scalar(0) - Complex(M_SQRT2, 0)) < kTight);
    CHECK(std::abs(green_scalar(M_PI / 2) - std::polar(1.0, M_PI / 4)) < kTight);
    CHECK(std::abs(green_scalar(M_PI)) < kTight);
    for (int i = 0; i < 64; ++i) {
        double th = 2 * M_PI * i / 64;
        Tensor t = evaluate(z_spider(th, 0, 0), model_nu());
        CHECK(std::abs(t.at(0) - green_scalar(th)) < 1e-12);
    }
}

namespace {

Diagram random_model_diagram(std::mt19937& rng, int max_legs) {
    std::uniform_int_distribution<int> nnodes(1, 3), legs(0, 2), coin(0, 1);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI);
    for (;;) {
        Diagram d;
        std::vector<int> ids;
        int n = nnodes(rng);
        for (int i = 0; i < n; ++i) {
            switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
                case 0: ids.push_back(d.add_node(Node::z(ang(rng)))); break;
                case 1: ids.push_back(d.add_node(Node::x(ang(rng)))); break;
                case 2: ids.push_back(d.add_node(Node::w())); break;
                case 3: ids.push_back(d.add_node(Node::gray())); break;
                default: ids.push_back(d.add_node(Node::hbox({ang(rng) - 3, 0}))); break;
            }
        }
        for (size_t i = 0; i + 1 < ids.size(); ++i)
            if (coin(rng)) d.connect_nodes(ids[i], ids[i + 1]);
        for (int id : ids)
            for (int l = 0, nl = legs(rng); l < nl; ++l) {
                if (coin(rng)) d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(id));
                else d.connect(Diagram::on_node(id), Diagram::on_boundary(d.add_output()));
            }
        if (d.boundary_count() <= max_legs) return d;
    }
}

} // namespace

TEST_CASE("functoriality: sequential is matrix product, parallel is tensor product") {
    std::mt19937 rng(2024);
    const Model m = model_nu();
    int done = 0;
    while (done < 200) {
        Diagram a = random_model_diagram(rng, 4);
        Diagram b = random_model_diagram(rng, 4);
        // parallel
        {
            Diagram p = parallel(a, b);
            if (p.boundary_count() <= 12) {
                Matrix mp = evaluate_matrix(p, m);
                Matrix want = kron(evaluate_matrix(a, m), evaluate_matrix(b, m));
                REQUIRE(mp.a.size() == want.a.size());
                for (size_t i = 0; i < mp.a.size(); ++i) CHECK(std::abs(mp.a[i] - want.a[i]) < 1e-10);
            }
        }
        // sequential: glue a's outputs to b's inputs when arities allow
        if (a.outputs.size() == b.inputs.size() && !a.outputs.empty()) {
            Diagram s = sequential(a, b);
            if (s.boundary_count() <= 12) {
                Matrix ms = evaluate_matrix(s, m);
                Matrix want = matmul(evaluate_matrix(b, m), evaluate_matrix(a, m));
                REQUIRE(ms.a.size() == want.a.size());
                for (size_t i = 0; i < ms.a.size(); ++i) CHECK(std::abs(ms.a[i] - want.a[i]) < 1e-10);
            }
        }
        ++done;
    }
}

TEST_CASE("topology invariance: ids, edge order, rerouting") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Diagram d = random_model_diagram(rng, 6);
        Tensor t0 = evaluate(d, model_nu());

        // permute edge list order
        Diagram d2 = d;
        std::reverse(d2.edges.begin(), d2.edges.end());
        Tensor t1 = evaluate(d2, model_nu());
        REQUIRE(t0.size() == t1.size());
        for (size_t i = 0; i < t0.size(); ++i) CHECK(std::abs(t0.at(i) - t1.at(i)) < 1e-10);

        // rename node ids via serialize/parse (fresh ids)
        Diagram d3 = parse_diagram(serialize(d));
        Tensor t2 = evaluate(d3, model_nu());
        for (size_t i = 0; i < t0.size(); ++i) CHECK(std::abs(t0.at(i) - t2.at(i)) < 1e-10);
    }

    // reroute the input wire through an extra cup/cap pair (zig-zag)
    Diagram d = build::lone(Node::z(0.3), 1, 1);
    Diagram idcup;
    {
        idcup.add_wire();
        int o1 = idcup.add_output();
        int o2 = idcup.add_output();
        idcup.connect(Diagram::on_boundary(o1), Diagram::on_boundary(o2));
    }
    Diagram capid;
    {
        int i1 = capid.add_input();
        int i2 = capid.add_input();
        capid.connect(Diagram::on_boundary(i1), Diagram::on_boundary(i2));
        capid.add_wire();
    }
    Diagram zigzag = sequential(idcup, capid);  // 1 -> 1 bent wire
    Diagram rerouted = sequential(zigzag, d);
    Tensor ta = evaluate(d, model_nu());
    Tensor tb = evaluate(rerouted, model_nu());
    REQUIRE(ta.size() == tb.size());
    for (size_t i = 0; i < ta.size(); ++i) CHECK(std::abs(ta.at(i) - tb.at(i)) < 1e-10);
}

TEST_CASE("tensor dump format") {
    Tensor t = evaluate(z_spider(M_PI, 0, 0), model_nu());
    CHECK(dump_tensor(t) == " 0 0\n");
    Tensor w(1);
    w.at(0) = Complex(1, 0);
    w.at(1) = Complex(-0.5, 0.25);
    CHECK(dump_tensor(w) == "0 1 0\n1 -0.5 0.25\n");
}
