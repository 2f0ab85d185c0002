#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diagram.hpp"
#include "semantics.hpp"

namespace wtcalc {

class BindingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Concrete parameter values for a schema.
struct Bindings {
    std::map<std::string, int> arity;
    std::map<std::string, double> angle;   // also used for real nu-box exponents
    std::map<std::string, Complex> cparam;

    std::string key() const {
        std::string s;
        char buf[64];
        auto app = [&](const std::string& k, const std::string& v) {
            if (!s.empty()) s += ",";
            s += k + "=" + v;
        };
        for (const auto& [k, v] : arity) app(k, std::to_string(v));
        for (const auto& [k, v] : angle) {
            std::snprintf(buf, sizeof buf, "%.9g", v);
            app(k, buf);
        }
        for (const auto& [k, v] : cparam) {
            std::snprintf(buf, sizeof buf, "%.9g%+.9gi", v.real(), v.imag());
            app(k, buf);
        }
        return s;
    }
};

struct ArityParam {
    std::string name;
    int lo = 0, hi = 3;
};

struct AngleParam {
    std::string name;
    bool avoid_odd_pi = false;  // (Scale_nu) excludes odd multiples of pi
};

struct ComplexParam {
    std::string name;
};

// A parametric rewrite: builders produce the two sides for a binding; both
// sides share the boundary signature.
struct RuleSchema {
    std::string family;  // welltempered-zx, welltempered-zh, legacy-zx, legacy-zh, idealized, derived
    std::string name;
    CalculusTag calculus = CalculusTag::Hybrid;
    std::vector<ArityParam> arities;
    std::vector<AngleParam> angles;
    std::vector<ComplexParam> cparams;
    std::function<std::pair<Diagram, Diagram>(const Bindings&)> build;

    std::string qualified() const { return family + "/" + name; }
};

struct RuleInstance {
    std::string family, schema;
    Bindings bindings;
    Diagram lhs, rhs;
};

// ---------------------------------------------------------------------------
// Closed-form side computations.

struct EulerAngles {
    double phi1, phi2, phi3, gamma;
    Complex z1, z2, z3;
};

// arg(0) is taken as 0; z3 never vanishes since |z1|^2+|z2|^2 = 2.
inline EulerAngles euler_angles(double theta, double delta) {
    auto arg0 = [](Complex z) { return z == Complex(0, 0) ? 0.0 : std::arg(z); };
    EulerAngles r;
    r.z1 = Complex(std::cos(delta), std::sin(theta));
    r.z2 = Complex(std::cos(theta), std::sin(delta));
    r.z3 = Complex(std::abs(r.z1), std::abs(r.z2));
    double a1 = arg0(r.z1), a2 = arg0(r.z2), a3 = arg0(r.z3);
    r.phi1 = a1 + a2 + M_PI / 2;
    r.phi2 = 2 * a3;
    r.phi3 = a1 - a2 + M_PI / 2;
    r.gamma = theta - a1 - a3;
    return r;
}

inline bool is_odd_multiple_of_pi(double theta, double tol = 1e-9) {
    double t = std::fabs(canonical_angle(theta));
    return std::fabs(t - M_PI) < tol;
}

// lambda = log2(sec^2(theta/2)) - 1, written via 1+cos(theta) so that it is
// branch-free; pole at odd multiples of pi.
inline double scale_nu_lambda(double theta) {
    if (is_odd_multiple_of_pi(theta))
        throw std::domain_error("scale_nu_lambda: theta is an odd multiple of pi");
    return -std::log2((1.0 + std::cos(theta)) / 2.0) - 1.0;
}

// ---------------------------------------------------------------------------
// Diagram builders.

namespace build {

inline Diagram empty() { return Diagram{}; }

inline Diagram bare_wire() {
    Diagram d;
    d.add_wire();
    return d;
}

// Single node with m input and n output legs.
inline Diagram lone(const Node& n, int m_in, int n_out) {
    Diagram d;
    int id = d.add_node(n);
    for (int i = 0; i < m_in; ++i) d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(id));
    for (int i = 0; i < n_out; ++i) d.connect(Diagram::on_node(id), Diagram::on_boundary(d.add_output()));
    return d;
}

// Scalar gadget [Z(theta) deg-1 -- X(delta) deg-1]; under nu it denotes
// e^{i theta} when delta = pi, and 1 when delta = 0.
inline void add_phase_gadget(Diagram& d, double theta, double delta) {
    int z = d.add_node(Node::z(theta));
    int x = d.add_node(Node::x(delta));
    d.connect_nodes(z, x);
}

inline void add_scalar_hbox(Diagram& d, Complex a) { d.add_node(Node::hbox(a)); }

inline std::pair<Diagram, Diagram> identity_rule(const Node& n) {
    Diagram lhs = lone(n, 1, 1);
    return {lhs, bare_wire()};
}

// Two same-kind spiders joined by one wire fuse into one; spider 1 carries
// (k inputs, m outputs), spider 2 (l inputs, n outputs).
inline std::pair<Diagram, Diagram> fuse_rule(Kind kind, int k, int l, int m, int n, double th, double de) {
    auto mk = [&](double phase) {
        Node nd;
        nd.kind = kind;
        nd.phase = phase;
        return nd;
    };
    Diagram lhs;
    int s1 = lhs.add_node(mk(th)), s2 = lhs.add_node(mk(de));
    for (int i = 0; i < k; ++i) lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(s1));
    for (int i = 0; i < l; ++i) lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(s2));
    for (int i = 0; i < m; ++i) lhs.connect(Diagram::on_node(s1), Diagram::on_boundary(lhs.add_output()));
    for (int i = 0; i < n; ++i) lhs.connect(Diagram::on_node(s2), Diagram::on_boundary(lhs.add_output()));
    lhs.connect_nodes(s1, s2);
    Diagram rhs = lone(mk(th + de), k + l, m + n);
    return {lhs, rhs};
}

// Spider with a box on every leg (color change / switch).
inline std::pair<Diagram, Diagram> change_rule(const Node& center, const Node& boxer, const Node& target,
                                               int m, int n) {
    Diagram lhs;
    int c = lhs.add_node(center);
    for (int i = 0; i < m; ++i) {
        int hb = lhs.add_node(boxer);
        lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(hb));
        lhs.connect_nodes(hb, c);
    }
    for (int i = 0; i < n; ++i) {
        int hb = lhs.add_node(boxer);
        lhs.connect_nodes(c, hb);
        lhs.connect(Diagram::on_node(hb), Diagram::on_boundary(lhs.add_output()));
    }
    return {lhs, lone(target, m, n)};
}

// Complete bipartite K_{p,q} of copy dots (inputs) against merge dots
// (outputs), against the two-spider form with the boundary colors exchanged.
inline std::pair<Diagram, Diagram> bialgebra_rule(const Node& copy, const Node& merge, int p, int q) {
    Diagram lhs;
    std::vector<int> cs, ms;
    for (int i = 0; i < p; ++i) {
        int id = lhs.add_node(copy);
        lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(id));
        cs.push_back(id);
    }
    for (int j = 0; j < q; ++j) {
        int id = lhs.add_node(merge);
        lhs.connect(Diagram::on_node(id), Diagram::on_boundary(lhs.add_output()));
        ms.push_back(id);
    }
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < q; ++j) lhs.connect_nodes(cs[i], ms[j]);

    Diagram rhs;
    int a = rhs.add_node(merge), b = rhs.add_node(copy);
    for (int i = 0; i < p; ++i) rhs.connect(Diagram::on_boundary(rhs.add_input()), Diagram::on_node(a));
    rhs.connect_nodes(a, b);
    for (int j = 0; j < q; ++j) rhs.connect(Diagram::on_node(b), Diagram::on_boundary(rhs.add_output()));
    return {lhs, rhs};
}

// Two dots of one kind joined by two parallel wires, as a 1 -> 1 map.
inline Diagram bubble(const Node& n) {
    Diagram d;
    int a = d.add_node(n), b = d.add_node(n);
    d.connect(Diagram::on_boundary(d.add_input()), Diagram::on_node(a));
    d.connect_nodes(a, b);
    d.connect_nodes(a, b);
    d.connect(Diagram::on_node(b), Diagram::on_boundary(d.add_output()));
    return d;
}

inline std::pair<Diagram, Diagram> euler_rule(double theta, double delta, bool alpha_form) {
    EulerAngles ea = euler_angles(theta, delta);
    Diagram lhs;
    {
        int z1 = lhs.add_node(Node::z(theta - delta));
        int hh = lhs.add_node(Node::h());
        int z2 = lhs.add_node(Node::z(theta + delta));
        lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(z1));
        lhs.connect_nodes(z1, hh);
        lhs.connect_nodes(hh, z2);
        lhs.connect(Diagram::on_node(z2), Diagram::on_boundary(lhs.add_output()));
        if (alpha_form) add_phase_gadget(lhs, 0.0, 0.0);  // sqrt(2) compensator
    }
    Diagram rhs;
    {
        int x1 = rhs.add_node(Node::x(ea.phi1));
        int z2 = rhs.add_node(Node::z(ea.phi2));
        int x3 = rhs.add_node(Node::x(ea.phi3));
        rhs.connect(Diagram::on_boundary(rhs.add_input()), Diagram::on_node(x1));
        rhs.connect_nodes(x1, z2);
        rhs.connect_nodes(z2, x3);
        rhs.connect(Diagram::on_node(x3), Diagram::on_boundary(rhs.add_output()));
        add_phase_gadget(rhs, ea.gamma, M_PI);  // e^{i gamma}
    }
    return {lhs, rhs};
}

inline std::pair<Diagram, Diagram> scale_nu_rule(double theta) {
    double t = canonical_angle(theta);
    double lambda = scale_nu_lambda(theta);
    Diagram lhs = lone(Node::z(theta), 0, 0);
    Diagram rhs;
    rhs.add_node(Node::nu(2 * lambda));
    add_phase_gadget(rhs, t / 2, M_PI);  // e^{i theta/2} with theta in (-pi, pi]
    return {lhs, rhs};
}

// H-box fusion: the parameter box and a plain box, joined through a plain
// degree-2 box, merge into one box carrying the parameter.
inline std::pair<Diagram, Diagram> fuse_h_rule(int k, int l, int m, int n, Complex a) {
    Diagram lhs;
    int b1 = lhs.add_node(Node::hbox(a));
    int mid = lhs.add_node(Node::hbox({-1, 0}));
    int b2 = lhs.add_node(Node::hbox({-1, 0}));
    for (int i = 0; i < k; ++i) lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(b1));
    for (int i = 0; i < l; ++i) lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(b2));
    for (int i = 0; i < m; ++i) lhs.connect(Diagram::on_node(b1), Diagram::on_boundary(lhs.add_output()));
    for (int i = 0; i < n; ++i) lhs.connect(Diagram::on_node(b2), Diagram::on_boundary(lhs.add_output()));
    lhs.connect_nodes(b1, mid);
    lhs.connect_nodes(mid, b2);
    Diagram rhs = lone(Node::hbox(a), k + l, m + n);
    // match lhs boundary order (k inputs, l inputs, m outputs, n outputs)
    return {lhs, rhs};
}

// White/H-box bialgebra with degree-2 box caps on the H side.
inline std::pair<Diagram, Diagram> bialg_zh_rule(int m, int n) {
    Diagram lhs;
    std::vector<int> ws, hs;
    for (int i = 0; i < m; ++i) {
        int id = lhs.add_node(Node::w());
        lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(id));
        ws.push_back(id);
    }
    for (int j = 0; j < n; ++j) {
        int box = lhs.add_node(Node::hbox({-1, 0}));
        int cap = lhs.add_node(Node::hbox({-1, 0}));
        lhs.connect_nodes(box, cap);
        lhs.connect(Diagram::on_node(cap), Diagram::on_boundary(lhs.add_output()));
        hs.push_back(box);
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) lhs.connect_nodes(ws[i], hs[j]);

    Diagram rhs;
    int box = rhs.add_node(Node::hbox({-1, 0}));
    int cap = rhs.add_node(Node::hbox({-1, 0}));
    int w = rhs.add_node(Node::w());
    for (int i = 0; i < m; ++i) rhs.connect(Diagram::on_boundary(rhs.add_input()), Diagram::on_node(box));
    rhs.connect_nodes(box, cap);
    rhs.connect_nodes(cap, w);
    for (int j = 0; j < n; ++j) rhs.connect(Diagram::on_node(w), Diagram::on_boundary(rhs.add_output()));
    return {lhs, rhs};
}

inline std::pair<Diagram, Diagram> not_rule() {
    Diagram lhs = lone(Node::notdot(), 1, 1);
    Diagram rhs;
    int h1 = rhs.add_node(Node::hbox({-1, 0}));
    int w = rhs.add_node(Node::w());
    int st = rhs.add_node(Node::hbox({-1, 0}));  // degree-1 plain box, the Z-flip state
    int h2 = rhs.add_node(Node::hbox({-1, 0}));
    rhs.connect(Diagram::on_boundary(rhs.add_input()), Diagram::on_node(h1));
    rhs.connect_nodes(h1, w);
    rhs.connect_nodes(w, st);
    rhs.connect_nodes(w, h2);
    rhs.connect(Diagram::on_node(h2), Diagram::on_boundary(rhs.add_output()));
    return {lhs, rhs};
}

inline std::pair<Diagram, Diagram> mult_h_rule(Complex a, Complex b) {
    Diagram lhs;
    int ha = lhs.add_node(Node::hbox(a));
    int hb = lhs.add_node(Node::hbox(b));
    int w = lhs.add_node(Node::w());
    lhs.connect_nodes(ha, w);
    lhs.connect_nodes(hb, w);
    lhs.connect(Diagram::on_node(w), Diagram::on_boundary(lhs.add_output()));
    Diagram rhs = lone(Node::hbox(a * b), 0, 1);
    return {lhs, rhs};
}

inline std::pair<Diagram, Diagram> unit_h_rule() {
    return {lone(Node::w(), 0, 1), lone(Node::hbox({1, 0}), 0, 1)};
}

// The white bubble equals a wire times the scalar sqrt(2) (a degree-0 box).
inline std::pair<Diagram, Diagram> spec_z_rule(Kind kind, bool with_sqrt2_box) {
    Node n;
    n.kind = kind;
    Diagram rhs = bare_wire();
    if (with_sqrt2_box) add_scalar_hbox(rhs, {M_SQRT2, 0});
    return {bubble(n), rhs};
}

// Closed pair [white -- H(a)]; equal to the bigger closed form
// [white -- plain box -- white] x [H(a) self-loop].
inline std::pair<Diagram, Diagram> dilem_diagrams(Complex a) {
    Diagram dec;
    {
        int w = dec.add_node(Node::w());
        int hb = dec.add_node(Node::hbox(a));
        dec.connect_nodes(w, hb);
    }
    Diagram dis;
    {
        int w1 = dis.add_node(Node::w());
        int h = dis.add_node(Node::hbox({-1, 0}));
        int w2 = dis.add_node(Node::w());
        dis.connect_nodes(w1, h);
        dis.connect_nodes(h, w2);
        int loop = dis.add_node(Node::hbox(a));
        dis.connect_nodes(loop, loop);
    }
    return {dec, dis};
}

// Triangle of a white dot against two parameter boxes sharing a bridging
// wire; the "nobridge" form carries the white-dot pair scalar instead.
inline Diagram ortho_core(Complex a, Complex b) {
    Diagram d;
    int w = d.add_node(Node::w());
    int ha = d.add_node(Node::hbox(a));
    int hb = d.add_node(Node::hbox(b));
    d.connect_nodes(w, ha);
    d.connect_nodes(w, hb);
    d.connect_nodes(ha, hb);
    d.connect(Diagram::on_node(ha), Diagram::on_boundary(d.add_output()));
    d.connect(Diagram::on_node(hb), Diagram::on_boundary(d.add_output()));
    d.connect(Diagram::on_node(w), Diagram::on_boundary(d.add_output()));
    return d;
}

inline Diagram ortho_nobridge(Complex a, Complex b) {
    Diagram d = ortho_core(a, b);
    int c1 = d.add_node(Node::w());
    int c2 = d.add_node(Node::w());
    d.connect_nodes(c1, c2);
    return d;
}

// White dot with a self-loop through two parameter boxes; averages the box
// parameters with 1.
inline Diagram avg_loop(Complex a, Complex b) {
    Diagram d;
    int w = d.add_node(Node::w());
    int ha = d.add_node(Node::hbox(a));
    int hb = d.add_node(Node::hbox(b));
    d.connect(Diagram::on_node(w), Diagram::on_boundary(d.add_output()));
    d.connect_nodes(w, ha);
    d.connect_nodes(ha, hb);
    d.connect_nodes(hb, w);
    return d;
}

inline Diagram avg_prep(Complex a, Complex b) { return lone(Node::hbox((Complex(1, 0) + a * b) / 2.0), 0, 1); }

// Unit law: a degree-1 dot absorbed into a same-kind degree-3 dot is a wire.
inline std::pair<Diagram, Diagram> unit_law_rule(Kind kind) {
    Node n;
    n.kind = kind;
    Diagram lhs;
    int big = lhs.add_node(n);
    int unit = lhs.add_node(n);
    lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(big));
    lhs.connect_nodes(unit, big);
    lhs.connect(Diagram::on_node(big), Diagram::on_boundary(lhs.add_output()));
    return {lhs, bare_wire()};
}

// An X state copied through a copy dot equals two X states.
inline std::pair<Diagram, Diagram> copy_zr_rule(Kind copy_kind) {
    Node c;
    c.kind = copy_kind;
    Diagram lhs;
    int st = lhs.add_node(Node::x(0));
    int cp = lhs.add_node(c);
    lhs.connect_nodes(st, cp);
    lhs.connect(Diagram::on_node(cp), Diagram::on_boundary(lhs.add_output()));
    lhs.connect(Diagram::on_node(cp), Diagram::on_boundary(lhs.add_output()));
    Diagram rhs;
    int s1 = rhs.add_node(Node::x(0));
    int s2 = rhs.add_node(Node::x(0));
    rhs.connect(Diagram::on_node(s1), Diagram::on_boundary(rhs.add_output()));
    rhs.connect(Diagram::on_node(s2), Diagram::on_boundary(rhs.add_output()));
    return {lhs, rhs};
}

// Z(theta) deg-1 against a phase-free X deg-1 is the empty diagram (scalar 1
// under nu).
inline std::pair<Diagram, Diagram> proj_z_rule(double theta) {
    Diagram lhs;
    add_phase_gadget(lhs, theta, 0.0);
    return {lhs, empty()};
}

// Two parallel wires between a Z-family and an X-family dot vanish.
inline std::pair<Diagram, Diagram> hopf_rule(Kind zkind, Kind xkind, int k, int l, double th, double de) {
    auto mk = [](Kind kd, double phase) {
        Node n;
        n.kind = kd;
        n.phase = phase;
        return n;
    };
    Diagram lhs;
    int z = lhs.add_node(mk(zkind, th));
    int x = lhs.add_node(mk(xkind, de));
    for (int i = 0; i < k; ++i) lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(z));
    for (int i = 0; i < l; ++i) lhs.connect(Diagram::on_node(x), Diagram::on_boundary(lhs.add_output()));
    lhs.connect_nodes(z, x);
    lhs.connect_nodes(z, x);
    Diagram rhs;
    int z2 = rhs.add_node(mk(zkind, th));
    int x2 = rhs.add_node(mk(xkind, de));
    for (int i = 0; i < k; ++i) rhs.connect(Diagram::on_boundary(rhs.add_input()), Diagram::on_node(z2));
    for (int i = 0; i < l; ++i) rhs.connect(Diagram::on_node(x2), Diagram::on_boundary(rhs.add_output()));
    return {lhs, rhs};
}

} // namespace build

// ---------------------------------------------------------------------------
// Catalogue.

namespace detail {

inline int arg_arity(const Bindings& b, const std::string& k) {
    auto it = b.arity.find(k);
    if (it == b.arity.end()) throw BindingError("missing arity parameter '" + k + "'");
    return it->second;
}
inline double arg_angle(const Bindings& b, const std::string& k) {
    auto it = b.angle.find(k);
    if (it == b.angle.end()) throw BindingError("missing angle parameter '" + k + "'");
    return it->second;
}
inline Complex arg_cparam(const Bindings& b, const std::string& k) {
    auto it = b.cparam.find(k);
    if (it == b.cparam.end()) throw BindingError("missing complex parameter '" + k + "'");
    return it->second;
}

inline std::vector<RuleSchema> make_catalogue() {
    std::vector<RuleSchema> cat;
    auto add = [&](RuleSchema s) { cat.push_back(std::move(s)); };
    using P = std::pair<Diagram, Diagram>;

    const std::vector<ArityParam> fuse_arities = {{"k", 0, 16}, {"l", 0, 16}, {"m", 0, 16}, {"n", 0, 16}};
    const std::vector<ArityParam> mn_arities = {{"m", 0, 16}, {"n", 0, 16}};
    const std::vector<ArityParam> pq_arities = {{"p", 1, 16}, {"q", 1, 16}};

    // ----- well-tempered ZX (sound under nu) -----
    add({"welltempered-zx", "Id_Z", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::z(0)); }});
    add({"welltempered-zx", "Id_X", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::x(0)); }});
    add({"welltempered-zx", "Change", CalculusTag::ZX, mn_arities, {{"theta"}}, {},
         [](const Bindings& b) -> P {
             return build::change_rule(Node::z(arg_angle(b, "theta")), Node::h(),
                                       Node::x(arg_angle(b, "theta")), arg_arity(b, "m"), arg_arity(b, "n"));
         }});
    add({"welltempered-zx", "Fuse_Z", CalculusTag::ZX, fuse_arities, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::fuse_rule(Kind::ZSpider, arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                     arg_arity(b, "n"), arg_angle(b, "theta"), arg_angle(b, "delta"));
         }});
    add({"welltempered-zx", "Proj_Z", CalculusTag::ZX, {}, {{"theta"}}, {},
         [](const Bindings& b) -> P { return build::proj_z_rule(arg_angle(b, "theta")); }});
    add({"welltempered-zx", "Id_nu", CalculusTag::ZX, {}, {}, {}, [](const Bindings&) -> P {
             Diagram lhs;
             lhs.add_node(Node::nu(0));
             return {lhs, build::empty()};
         }});
    add({"welltempered-zx", "Bialg", CalculusTag::ZX, pq_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::bialgebra_rule(Node::z(0), Node::x(0), arg_arity(b, "p"), arg_arity(b, "q"));
         }});
    add({"welltempered-zx", "Euler", CalculusTag::ZX, {}, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::euler_rule(arg_angle(b, "theta"), arg_angle(b, "delta"), false);
         }});
    add({"welltempered-zx", "Fuse_nu", CalculusTag::ZX, {}, {{"h"}, {"k"}}, {}, [](const Bindings& b) -> P {
             Diagram lhs;
             lhs.add_node(Node::nu(arg_angle(b, "h")));
             lhs.add_node(Node::nu(arg_angle(b, "k")));
             Diagram rhs;
             rhs.add_node(Node::nu(arg_angle(b, "h") + arg_angle(b, "k")));
             return {lhs, rhs};
         }});
    add({"welltempered-zx", "Scale_nu", CalculusTag::ZX, {}, {{"theta", true}}, {},
         [](const Bindings& b) -> P { return build::scale_nu_rule(arg_angle(b, "theta")); }});

    // ----- well-tempered ZH (sound under nu) -----
    add({"welltempered-zh", "Id_Z", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::w()); }});
    add({"welltempered-zh", "Id_H", CalculusTag::ZH, {}, {}, {}, [](const Bindings&) -> P {
             Diagram lhs;
             int h1 = lhs.add_node(Node::hbox({-1, 0}));
             int h2 = lhs.add_node(Node::hbox({-1, 0}));
             lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(h1));
             lhs.connect_nodes(h1, h2);
             lhs.connect(Diagram::on_node(h2), Diagram::on_boundary(lhs.add_output()));
             return {lhs, build::bare_wire()};
         }});
    add({"welltempered-zh", "Unit_H", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::unit_h_rule(); }});
    add({"welltempered-zh", "Mult_H", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}},
         [](const Bindings& b) -> P { return build::mult_h_rule(arg_cparam(b, "a"), arg_cparam(b, "b")); }});
    add({"welltempered-zh", "Fuse_Z", CalculusTag::ZH, fuse_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::fuse_rule(Kind::WhiteDot, arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                     arg_arity(b, "n"), 0, 0);
         }});
    add({"welltempered-zh", "Spec_Z", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::spec_z_rule(Kind::WhiteDot, true); }});
    add({"welltempered-zh", "Fuse_H", CalculusTag::ZH, fuse_arities, {}, {{"a"}},
         [](const Bindings& b) -> P {
             return build::fuse_h_rule(arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                       arg_arity(b, "n"), arg_cparam(b, "a"));
         }});
    add({"welltempered-zh", "Bialg_ZH", CalculusTag::ZH, pq_arities, {}, {},
         [](const Bindings& b) -> P { return build::bialg_zh_rule(arg_arity(b, "p"), arg_arity(b, "q")); }});
    add({"welltempered-zh", "Change", CalculusTag::ZH, mn_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::change_rule(Node::w(), Node::hbox({-1, 0}), Node::gray(), arg_arity(b, "m"),
                                       arg_arity(b, "n"));
         }});
    add({"welltempered-zh", "Bialg_ZX", CalculusTag::ZH, pq_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::bialgebra_rule(Node::w(), Node::gray(), arg_arity(b, "p"), arg_arity(b, "q"));
         }});
    add({"welltempered-zh", "Not", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::not_rule(); }});
    add({"welltempered-zh", "Dilem", CalculusTag::ZH, {}, {}, {{"a"}},
         [](const Bindings& b) -> P { return build::dilem_diagrams(arg_cparam(b, "a")); }});
    add({"welltempered-zh", "Ortho", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}}, [](const Bindings& b) -> P {
             Complex a = arg_cparam(b, "a"), bb = arg_cparam(b, "b");
             Diagram rhs = build::ortho_core(a, bb);
             build::add_scalar_hbox(rhs, {M_SQRT2, 0});
             return {build::ortho_nobridge(a, bb), rhs};
         }});
    add({"welltempered-zh", "Avg", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}}, [](const Bindings& b) -> P {
             Complex a = arg_cparam(b, "a"), bb = arg_cparam(b, "b");
             Diagram rhs = build::avg_prep(a, bb);
             build::add_scalar_hbox(rhs, {M_SQRT2, 0});
             return {build::avg_loop(a, bb), rhs};
         }});

    // ----- legacy ZX (Fig. 1 style; sound under alpha) -----
    add({"legacy-zx", "X_a", CalculusTag::ZX, mn_arities, {{"theta"}}, {},
         [](const Bindings& b) -> P {
             return build::change_rule(Node::z(arg_angle(b, "theta")), Node::h(),
                                       Node::x(arg_angle(b, "theta")), arg_arity(b, "m"), arg_arity(b, "n"));
         }});
    add({"legacy-zx", "Ig_a", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::z(0)); }});
    add({"legacy-zx", "Ir_a", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::x(0)); }});
    add({"legacy-zx", "B_a", CalculusTag::ZX, pq_arities, {}, {}, [](const Bindings& b) -> P {
             auto [lhs, rhs] = build::bialgebra_rule(Node::z(0), Node::x(0), arg_arity(b, "p"), arg_arity(b, "q"));
             // one sqrt(2) gadget per missing power of 2^{1/2}: the square is
             // short by 2^{(p-1)(q-1)/2} under alpha
             int count = (arg_arity(b, "p") - 1) * (arg_arity(b, "q") - 1);
             for (int i = 0; i < count; ++i) build::add_phase_gadget(lhs, 0.0, 0.0);
             return {lhs, rhs};
         }});
    add({"legacy-zx", "C_r_a", CalculusTag::ZX, {}, {}, {}, [](const Bindings&) -> P {
             auto [lhs, rhs] = build::copy_zr_rule(Kind::ZSpider);
             build::add_phase_gadget(lhs, 0.0, 0.0);
             return {lhs, rhs};
         }});
    add({"legacy-zx", "E_a", CalculusTag::ZX, {}, {}, {}, [](const Bindings&) -> P {
             Diagram lhs;
             int z = lhs.add_node(Node::z(M_PI / 2));
             int x = lhs.add_node(Node::x(-M_PI / 2));
             lhs.connect_nodes(z, x);
             lhs.connect_nodes(z, x);
             return {lhs, build::empty()};
         }});
    add({"legacy-zx", "F_g_a", CalculusTag::ZX, fuse_arities, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::fuse_rule(Kind::ZSpider, arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                     arg_arity(b, "n"), arg_angle(b, "theta"), arg_angle(b, "delta"));
         }});
    add({"legacy-zx", "S_g_a", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::spec_z_rule(Kind::ZSpider, false); }});
    add({"legacy-zx", "EU_a", CalculusTag::ZX, {}, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::euler_rule(arg_angle(b, "theta"), arg_angle(b, "delta"), true);
         }});

    // ----- legacy ZH (Fig. 2 style; sound under beta) -----
    auto with_two_boxes = [](Diagram d, int count) {
        for (int i = 0; i < count; ++i) build::add_scalar_hbox(d, {2, 0});
        return d;
    };
    add({"legacy-zh", "I_z_b", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::w()); }});
    add({"legacy-zh", "F_z_b", CalculusTag::ZH, fuse_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::fuse_rule(Kind::WhiteDot, arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                     arg_arity(b, "n"), 0, 0);
         }});
    add({"legacy-zh", "S_z_b", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::spec_z_rule(Kind::WhiteDot, false); }});
    add({"legacy-zh", "X_b", CalculusTag::ZH, mn_arities, {}, {}, [with_two_boxes](const Bindings& b) -> P {
             auto [lhs, rhs] = build::change_rule(Node::w(), Node::hbox({-1, 0}), Node::gray(),
                                                  arg_arity(b, "m"), arg_arity(b, "n"));
             return {lhs, with_two_boxes(rhs, 1)};
         }});
    add({"legacy-zh", "I_h_b", CalculusTag::ZH, {}, {}, {}, [with_two_boxes](const Bindings&) -> P {
             Diagram lhs;
             int h1 = lhs.add_node(Node::hbox({-1, 0}));
             int h2 = lhs.add_node(Node::hbox({-1, 0}));
             lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(h1));
             lhs.connect_nodes(h1, h2);
             lhs.connect(Diagram::on_node(h2), Diagram::on_boundary(lhs.add_output()));
             return {lhs, with_two_boxes(build::bare_wire(), 1)};
         }});
    add({"legacy-zh", "F_h_b", CalculusTag::ZH, fuse_arities, {}, {{"a"}},
         [with_two_boxes](const Bindings& b) -> P {
             auto [lhs, rhs] = build::fuse_h_rule(arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                                  arg_arity(b, "n"), arg_cparam(b, "a"));
             return {lhs, with_two_boxes(rhs, 1)};
         }});
    add({"legacy-zh", "U_b", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::unit_h_rule(); }});
    add({"legacy-zh", "M_b", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}},
         [](const Bindings& b) -> P { return build::mult_h_rule(arg_cparam(b, "a"), arg_cparam(b, "b")); }});
    add({"legacy-zh", "BA1_b", CalculusTag::ZH, pq_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::bialgebra_rule(Node::w(), Node::gray(), arg_arity(b, "p"), arg_arity(b, "q"));
         }});
    add({"legacy-zh", "BA2_b", CalculusTag::ZH, pq_arities, {}, {}, [with_two_boxes](const Bindings& b) -> P {
             auto [lhs, rhs] = build::bialg_zh_rule(arg_arity(b, "p"), arg_arity(b, "q"));
             return {lhs, with_two_boxes(rhs, arg_arity(b, "q") - 1)};
         }});
    add({"legacy-zh", "N_b", CalculusTag::ZH, {}, {}, {}, [with_two_boxes](const Bindings&) -> P {
             auto [dot, gadget] = build::not_rule();
             return {gadget, with_two_boxes(dot, 1)};
         }});
    add({"legacy-zh", "D_b", CalculusTag::ZH, {}, {}, {{"a"}}, [with_two_boxes](const Bindings& b) -> P {
             auto [dec, dis] = build::dilem_diagrams(arg_cparam(b, "a"));
             return {dis, with_two_boxes(dec, 1)};
         }});
    add({"legacy-zh", "O_b", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}}, [with_two_boxes](const Bindings& b) -> P {
             Complex a = arg_cparam(b, "a"), bb = arg_cparam(b, "b");
             return {build::ortho_nobridge(a, bb), with_two_boxes(build::ortho_core(a, bb), 1)};
         }});
    add({"legacy-zh", "A_b", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}}, [with_two_boxes](const Bindings& b) -> P {
             Complex a = arg_cparam(b, "a"), bb = arg_cparam(b, "b");
             return {build::avg_loop(a, bb), with_two_boxes(build::avg_prep(a, bb), 1)};
         }});

    // ----- idealized rewrites (scalar-free wish list) -----
    add({"idealized", "Id_Z", CalculusTag::Hybrid, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::w()); }});
    add({"idealized", "Id_R", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::identity_rule(Node::x(0)); }});
    add({"idealized", "Id_H", CalculusTag::ZH, {}, {}, {}, [](const Bindings&) -> P {
             Diagram lhs;
             int h1 = lhs.add_node(Node::hbox({-1, 0}));
             int h2 = lhs.add_node(Node::hbox({-1, 0}));
             lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(h1));
             lhs.connect_nodes(h1, h2);
             lhs.connect(Diagram::on_node(h2), Diagram::on_boundary(lhs.add_output()));
             return {lhs, build::bare_wire()};
         }});
    add({"idealized", "Not", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::not_rule(); }});
    add({"idealized", "Switch_ZR", CalculusTag::ZX, mn_arities, {{"theta"}}, {},
         [](const Bindings& b) -> P {
             return build::change_rule(Node::z(arg_angle(b, "theta")), Node::h(),
                                       Node::x(arg_angle(b, "theta")), arg_arity(b, "m"), arg_arity(b, "n"));
         }});
    add({"idealized", "Switch_ZG", CalculusTag::ZH, mn_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::change_rule(Node::w(), Node::hbox({-1, 0}), Node::gray(), arg_arity(b, "m"),
                                       arg_arity(b, "n"));
         }});
    add({"idealized", "Bialg_ZG", CalculusTag::ZH, pq_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::bialgebra_rule(Node::w(), Node::gray(), arg_arity(b, "p"), arg_arity(b, "q"));
         }});
    add({"idealized", "Copy_ZR", CalculusTag::Hybrid, {}, {}, {},
         [](const Bindings&) -> P { return build::copy_zr_rule(Kind::WhiteDot); }});
    add({"idealized", "Bialg_ZR", CalculusTag::Hybrid, pq_arities, {}, {},
         [](const Bindings& b) -> P {
             return build::bialgebra_rule(Node::w(), Node::x(0), arg_arity(b, "p"), arg_arity(b, "q"));
         }});
    add({"idealized", "Fuse_Z", CalculusTag::ZX, fuse_arities, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::fuse_rule(Kind::ZSpider, arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                     arg_arity(b, "n"), arg_angle(b, "theta"), arg_angle(b, "delta"));
         }});
    add({"idealized", "Mult_ZH", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}},
         [](const Bindings& b) -> P { return build::mult_h_rule(arg_cparam(b, "a"), arg_cparam(b, "b")); }});
    add({"idealized", "Unit_ZH", CalculusTag::ZH, {}, {}, {},
         [](const Bindings&) -> P { return build::unit_h_rule(); }});
    add({"idealized", "Bialg_ZH", CalculusTag::ZH, pq_arities, {}, {},
         [](const Bindings& b) -> P { return build::bialg_zh_rule(arg_arity(b, "p"), arg_arity(b, "q")); }});
    add({"idealized", "Fuse_H", CalculusTag::ZH, fuse_arities, {}, {{"a"}},
         [](const Bindings& b) -> P {
             return build::fuse_h_rule(arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                       arg_arity(b, "n"), arg_cparam(b, "a"));
         }});
    add({"idealized", "Empty_ZR", CalculusTag::ZX, {}, {{"theta"}}, {},
         [](const Bindings& b) -> P { return build::proj_z_rule(arg_angle(b, "theta")); }});
    add({"idealized", "Special_Z", CalculusTag::Hybrid, {}, {}, {},
         [](const Bindings&) -> P { return build::spec_z_rule(Kind::WhiteDot, false); }});
    add({"idealized", "Special_Z_green", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::spec_z_rule(Kind::ZSpider, false); }});
    add({"idealized", "Dilem_ZH", CalculusTag::ZH, {}, {}, {{"a"}},
         [](const Bindings& b) -> P { return build::dilem_diagrams(arg_cparam(b, "a")); }});
    add({"idealized", "Euler", CalculusTag::ZX, {}, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::euler_rule(arg_angle(b, "theta"), arg_angle(b, "delta"), false);
         }});
    add({"idealized", "Orth_ZH", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}}, [](const Bindings& b) -> P {
             Complex a = arg_cparam(b, "a"), bb = arg_cparam(b, "b");
             return {build::ortho_core(a, bb), build::ortho_nobridge(a, bb)};
         }});
    add({"idealized", "Avg_ZH", CalculusTag::ZH, {}, {}, {{"a"}, {"b"}}, [](const Bindings& b) -> P {
             Complex a = arg_cparam(b, "a"), bb = arg_cparam(b, "b");
             return {build::avg_prep(a, bb), build::avg_loop(a, bb)};
         }});
    add({"idealized", "Unit_R", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::unit_law_rule(Kind::XSpider); }});
    add({"idealized", "Counit_Z", CalculusTag::ZX, {}, {}, {},
         [](const Bindings&) -> P { return build::unit_law_rule(Kind::ZSpider); }});

    // ----- derived rules (validated under nu at load time) -----
    add({"derived", "Hopf", CalculusTag::ZX, {{"k", 0, 16}, {"l", 0, 16}}, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::hopf_rule(Kind::ZSpider, Kind::XSpider, arg_arity(b, "k"), arg_arity(b, "l"),
                                     arg_angle(b, "theta"), arg_angle(b, "delta"));
         }});
    add({"derived", "Hopf_WG", CalculusTag::ZH, {{"k", 0, 16}, {"l", 0, 16}}, {}, {},
         [](const Bindings& b) -> P {
             return build::hopf_rule(Kind::WhiteDot, Kind::GrayDot, arg_arity(b, "k"), arg_arity(b, "l"), 0, 0);
         }});
    add({"derived", "Fuse_X", CalculusTag::ZX, fuse_arities, {{"theta"}, {"delta"}}, {},
         [](const Bindings& b) -> P {
             return build::fuse_rule(Kind::XSpider, arg_arity(b, "k"), arg_arity(b, "l"), arg_arity(b, "m"),
                                     arg_arity(b, "n"), arg_angle(b, "theta"), arg_angle(b, "delta"));
         }});

    return cat;
}

} // namespace detail

inline const std::vector<RuleSchema>& catalogue() {
    static const std::vector<RuleSchema> cat = detail::make_catalogue();
    return cat;
}

// Accepts "family/name" or a bare name; bare names resolve in family order
// (well-tempered first, then legacy, idealized, derived). Spaces are treated
// as underscores, and "nu"/unicode nu are interchangeable.
inline const RuleSchema* find_schema(const std::string& request) {
    std::string want = request;
    for (auto& c : want)
        if (c == ' ') c = '_';
    auto norm = [](std::string s) {
        std::string r;
        for (size_t i = 0; i < s.size(); ++i) {
            // unicode nu (U+03BD) -> "nu"
            if (i + 1 < s.size() && (unsigned char)s[i] == 0xCE && (unsigned char)s[i + 1] == 0xBD) {
                r += "nu";
                ++i;
            } else {
                r += s[i];
            }
        }
        return r;
    };
    want = norm(want);
    static const std::vector<std::string> order = {"welltempered-zx", "welltempered-zh", "legacy-zx",
                                                   "legacy-zh", "idealized", "derived"};
    for (const auto& s : catalogue())
        if (norm(s.qualified()) == want) return &s;
    for (const auto& fam : order)
        for (const auto& s : catalogue())
            if (s.family == fam && norm(s.name) == want) return &s;
    return nullptr;
}

inline RuleInstance instantiate(const RuleSchema& schema, const Bindings& b) {
    for (const auto& ap : schema.arities) {
        auto it = b.arity.find(ap.name);
        if (it == b.arity.end()) throw BindingError("missing arity parameter '" + ap.name + "'");
        if (it->second < ap.lo || it->second > ap.hi)
            throw BindingError("arity parameter '" + ap.name + "' = " + std::to_string(it->second) +
                               " out of range [" + std::to_string(ap.lo) + "," + std::to_string(ap.hi) + "]");
    }
    for (const auto& anp : schema.angles) {
        auto it = b.angle.find(anp.name);
        if (it == b.angle.end()) throw BindingError("missing angle parameter '" + anp.name + "'");
        if (anp.avoid_odd_pi && is_odd_multiple_of_pi(it->second))
            throw BindingError("angle parameter '" + anp.name + "' must not be an odd multiple of pi");
    }
    for (const auto& cp : schema.cparams)
        if (!b.cparam.count(cp.name)) throw BindingError("missing complex parameter '" + cp.name + "'");

    auto [lhs, rhs] = schema.build(b);
    lhs.ensure_valid();
    rhs.ensure_valid();
    if (lhs.inputs.size() != rhs.inputs.size() || lhs.outputs.size() != rhs.outputs.size())
        throw BindingError("schema " + schema.qualified() + ": boundary signature mismatch");
    return RuleInstance{schema.family, schema.name, b, std::move(lhs), std::move(rhs)};
}

} // namespace wtcalc
