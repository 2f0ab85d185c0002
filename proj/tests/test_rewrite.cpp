#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <wtcalc/rewrite.hpp>
#include <wtcalc/rules.hpp>
#include <wtcalc/soundness.hpp>

using namespace wtcalc;

namespace {

RuleInstance make_inst(const std::string& name, const Bindings& b = {}) {
    const RuleSchema* s = find_schema(name);
    REQUIRE(s != nullptr);
    return instantiate(*s, b);
}

Bindings fuse_bindings(int k, int l, int m, int n, double th, double de) {
    Bindings b;
    b.arity = {{"k", k}, {"l", l}, {"m", m}, {"n", n}};
    b.angle = {{"theta", th}, {"delta", de}};
    return b;
}

// host with two fuseable Z spiders: wire - Z(th) - Z(de) - wire
Diagram two_spider_host(double th, double de) {
    Diagram d;
    int a = d.add_node(Node::z(th));
    int b = d.add_node(Node::z(de));
    d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(a));
    d.connect_nodes(a, b);
    d.connect(Diagram::on_node(b), Diagram::on_boundary(d.add_output()));
    return d;
}

bool nu_equal(const Diagram& a, const Diagram& b, double tol = 1e-9) {
    return compare(evaluate(a, model_nu()), evaluate(b, model_nu()), tol).equal();
}

} // namespace

TEST_CASE("find_matches: one match on the two-spider host, deduplicated") {
    Diagram host = two_spider_host(0.3, 0.9);
    RuleInstance inst = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(1, 0, 0, 1, 0.3, 0.9));
    auto ms = find_matches(host, inst);
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].node_map.size() == 2);
}

TEST_CASE("find_matches: no match on a lone X spider") {
    Diagram host = build::lone(Node::x(0.3), 1, 1);
    RuleInstance inst = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(1, 0, 0, 1, 0.3, 0.9));
    CHECK(find_matches(host, inst).empty());
}

TEST_CASE("find_matches: phases must agree to 1e-12 mod 2pi") {
    Diagram host = two_spider_host(0.3, 0.9);
    RuleInstance bad = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(1, 0, 0, 1, 0.3, 0.91));
    CHECK(find_matches(host, bad).empty());
    RuleInstance wrapped = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(1, 0, 0, 1, 0.3 + 2 * M_PI, 0.9));
    CHECK(find_matches(host, wrapped).size() == 1);
}

TEST_CASE("find_matches: Hopf start diagram has exactly one Hopf match") {
    Bindings hb;
    hb.arity = {{"k", 1}, {"l", 1}};
    hb.angle = {{"theta", 0.0}, {"delta", 0.0}};
    RuleInstance hopf = make_inst("derived/Hopf", hb);
    auto ms = find_matches(hopf.lhs, hopf);
    REQUIRE(ms.size() == 1);
}

TEST_CASE("apply: fusing the two-spider host merges phases and preserves semantics") {
    Diagram host = two_spider_host(M_PI / 4, M_PI / 4);
    RuleInstance inst = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(1, 0, 0, 1, M_PI / 4, M_PI / 4));
    auto ms = find_matches(host, inst);
    REQUIRE(ms.size() == 1);
    Diagram out = apply(host, inst, ms[0]);
    REQUIRE(out.nodes.size() == 1);
    CHECK(out.nodes.begin()->second.phase == Catch::Approx(M_PI / 2));
    CHECK(nu_equal(host, out));
}

TEST_CASE("apply: Id_nu removes the box") {
    Diagram host;
    host.add_node(Node::nu(0));
    host.add_wire();
    RuleInstance inst = make_inst("welltempered-zx/Id_nu");
    auto ms = find_matches(host, inst);
    REQUIRE(ms.size() == 1);
    Diagram out = apply(host, inst, ms[0]);
    CHECK(out.nodes.empty());
    CHECK(out.boundary_count() == 2);
}

TEST_CASE("apply: Scale_nu on a degree-0 spider at pi/2 introduces the lambda=0 gadget") {
    Diagram host = build::lone(Node::z(M_PI / 2), 0, 0);
    Bindings b;
    b.angle = {{"theta", M_PI / 2}};
    RuleInstance inst = make_inst("welltempered-zx/Scale_nu", b);
    auto ms = find_matches(host, inst);
    REQUIRE(ms.size() == 1);
    Diagram out = apply(host, inst, ms[0]);
    bool found_nu = false;
    for (const auto& [id, n] : out.nodes)
        if (n.kind == Kind::NuBox) {
            found_nu = true;
            CHECK(n.exponent == Catch::Approx(0.0).margin(1e-12));
        }
    CHECK(found_nu);
    CHECK(nu_equal(host, out));
}

TEST_CASE("apply: stale match is rejected") {
    Diagram host = two_spider_host(0.3, 0.9);
    RuleInstance inst = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(1, 0, 0, 1, 0.3, 0.9));
    auto ms = find_matches(host, inst);
    REQUIRE(ms.size() == 1);
    Diagram changed = host;
    changed.add_node(Node::nu(1));
    CHECK_THROWS_AS(apply(changed, inst, ms[0]), RewriteError);
}

TEST_CASE("apply: fusing spiders joined by parallel edges leaves a self-loop") {
    Diagram host;
    int a = host.add_node(Node::z(0.2));
    int b = host.add_node(Node::z(0.5));
    host.connect(Diagram::on_boundary(host.add_input()), Diagram::on_node(a));
    host.connect_nodes(a, b);
    host.connect_nodes(a, b);
    host.connect(Diagram::on_node(b), Diagram::on_boundary(host.add_output()));
    RuleInstance inst = make_inst("welltempered-zx/Fuse_Z", fuse_bindings(2, 2, 0, 0, 0.2, 0.5));
    auto ms = find_matches(host, inst);
    REQUIRE_FALSE(ms.empty());
    Diagram out = apply(host, inst, ms[0]);
    REQUIRE(out.nodes.size() == 1);
    int self_loops = 0;
    for (const auto& e : out.edges)
        if (!e.a.is_boundary && !e.b.is_boundary && e.a.id == e.b.id) ++self_loops;
    CHECK(self_loops == 1);
    CHECK(nu_equal(host, out));
}

TEST_CASE("soundness of application on random hosts") {
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI);
    std::uniform_int_distribution<int> coin(0, 1);
    const Model nu = model_nu();
    int applied = 0;
    for (int trial = 0; trial < 400 && applied < 120; ++trial) {
        // random host: a chain of spiders with random extra legs
        Diagram host;
        std::vector<int> ids;
        int n = std::uniform_int_distribution<int>(2, 4)(rng);
        for (int i = 0; i < n; ++i) {
            switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
                case 0: ids.push_back(host.add_node(Node::z(ang(rng)))); break;
                case 1: ids.push_back(host.add_node(Node::x(ang(rng)))); break;
                case 2: ids.push_back(host.add_node(Node::w())); break;
                default: ids.push_back(host.add_node(Node::gray())); break;
            }
        }
        for (size_t i = 0; i + 1 < ids.size(); ++i) {
            host.connect_nodes(ids[i], ids[i + 1]);
            if (coin(rng)) host.connect_nodes(ids[i], ids[i + 1]);
        }
        for (int id : ids)
            if (coin(rng)) {
                if (coin(rng)) host.connect(Diagram::on_boundary(host.add_input()), Diagram::on_node(id));
                else host.connect(Diagram::on_node(id), Diagram::on_boundary(host.add_output()));
            }
        if (host.boundary_count() > 10 || !host.validate().empty()) continue;

        // propose candidates through the simplifier machinery and apply one
        for (const auto& cand : detail::propose(host, {"fuse", "identity", "hopf", "hcancel"})) {
            const RuleSchema* schema = simplify_schema(cand.schema);
            if (!schema) continue;
            RuleInstance inst;
            try {
                inst = instantiate(*schema, cand.bindings);
            } catch (const BindingError&) {
                continue;
            }
            auto ms = find_matches(host, inst);
            if (ms.empty()) continue;
            Diagram out = apply(host, inst, ms[0]);
            INFO(cand.schema << " on host " << serialize(host));
            CHECK(nu_equal(host, out));
            ++applied;
            break;
        }
    }
    CHECK(applied >= 100);
}

TEST_CASE("simplify: chain of four pi/4 spiders becomes one pi spider") {
    Diagram host;
    std::vector<int> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(host.add_node(Node::z(M_PI / 4)));
    host.connect(Diagram::on_boundary(host.add_input()), Diagram::on_node(ids[0]));
    for (int i = 0; i < 3; ++i) host.connect_nodes(ids[i], ids[i + 1]);
    host.connect(Diagram::on_node(ids[3]), Diagram::on_boundary(host.add_output()));

    SimplifyOptions opt;
    opt.validate = true;
    auto [out, trace] = simplify(host, opt);
    REQUIRE(out.nodes.size() == 1);
    CHECK(std::fabs(canonical_angle(out.nodes.begin()->second.phase) - M_PI) < 1e-12);
    CHECK(trace.size() == 3);
    for (const auto& t : trace) CHECK(t.validation_equal);
}

TEST_CASE("simplify: H-H pair cancels to a bare wire") {
    Diagram host;
    int h1 = host.add_node(Node::h());
    int h2 = host.add_node(Node::h());
    host.connect(Diagram::on_boundary(host.add_input()), Diagram::on_node(h1));
    host.connect_nodes(h1, h2);
    host.connect(Diagram::on_node(h2), Diagram::on_boundary(host.add_output()));
    SimplifyOptions opt;
    opt.validate = true;
    auto [out, trace] = simplify(host, opt);
    CHECK(out.nodes.empty());
    CHECK(trace.size() == 1);
}

TEST_CASE("simplify: Hopf derivation replay reaches the disconnected endpoint") {
    // chain: in - Z(0) - Z(0) == X(0) - X(0) - out, fusing first, then Hopf
    Diagram host;
    int z1 = host.add_node(Node::z(0));
    int z2 = host.add_node(Node::z(0));
    int x1 = host.add_node(Node::x(0));
    int x2 = host.add_node(Node::x(0));
    host.connect(Diagram::on_boundary(host.add_input()), Diagram::on_node(z1));
    host.connect_nodes(z1, z2);
    host.connect_nodes(z2, x1);
    host.connect_nodes(z2, x1);
    host.connect_nodes(x1, x2);
    host.connect(Diagram::on_node(x2), Diagram::on_boundary(host.add_output()));

    SimplifyOptions opt;
    opt.validate = true;
    auto [out, trace] = simplify(host, opt);
    CHECK(trace.size() >= 3);
    for (const auto& t : trace) CHECK(t.validation_equal);
    // endpoint: disconnected Z and X dots, no inner edges
    CHECK(out.nodes.size() == 2);
    for (const auto& e : out.edges) CHECK((e.a.is_boundary || e.b.is_boundary));
    CHECK(nu_equal(host, out));
}

TEST_CASE("simplify: nu boxes merge and the zero box vanishes") {
    Diagram host;
    host.add_node(Node::nu(1.5));
    host.add_node(Node::nu(-1.5));
    host.add_wire();
    SimplifyOptions opt;
    opt.strategy = {"nu-merge"};
    auto [out, trace] = simplify(host, opt);
    CHECK(out.nodes.empty());
    CHECK(trace.size() == 2);  // fuse then drop the zero box
}

TEST_CASE("simplify output is a fixpoint") {
    std::mt19937 rng(555);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI);
    for (int trial = 0; trial < 30; ++trial) {
        Diagram host;
        std::vector<int> ids;
        for (int i = 0; i < 4; ++i)
            ids.push_back(host.add_node(i % 2 ? Node::z(ang(rng)) : Node::x(ang(rng))));
        for (int i = 0; i + 1 < 4; ++i) host.connect_nodes(ids[i], ids[i + 1]);
        host.connect(Diagram::on_boundary(host.add_input()), Diagram::on_node(ids[0]));
        host.connect(Diagram::on_node(ids[3]), Diagram::on_boundary(host.add_output()));
        SimplifyOptions opt;
        auto [out, trace] = simplify(host, opt);
        auto [out2, trace2] = simplify(out, opt);
        CHECK(trace2.empty());
        CHECK(serialize(out2) == serialize(out));
    }
}

TEST_CASE("validated simplify requires the leg budget") {
    Diagram host;
    for (int i = 0; i < 8; ++i) host.add_wire();
    host.add_node(Node::nu(0));
    SimplifyOptions opt;
    opt.validate = true;
    opt.leg_budget = 14;
    CHECK_THROWS_AS(simplify(host, opt), RewriteError);
}
