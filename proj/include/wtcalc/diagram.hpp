#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace wtcalc {

using Complex = std::complex<double>;

enum class Kind {
    ZSpider,   // "Z"    phase in radians
    XSpider,   // "X"    phase in radians
    Hadamard,  // "H"    degree exactly 2
    NuBox,     // "NU"   degree 0, real exponent
    WhiteDot,  // "W"
    HBox,      // "HBOX" complex parameter, default -1
    GrayDot,   // "GRAY"
    NotDot,    // "NOT"  degree exactly 2
};

struct Node {
    Kind kind = Kind::ZSpider;
    double phase = 0.0;        // ZSpider / XSpider
    Complex param{-1.0, 0.0};  // HBox
    double exponent = 1.0;     // NuBox

    static Node z(double theta) { Node n; n.kind = Kind::ZSpider; n.phase = theta; return n; }
    static Node x(double theta) { Node n; n.kind = Kind::XSpider; n.phase = theta; return n; }
    static Node h() { Node n; n.kind = Kind::Hadamard; return n; }
    static Node nu(double k) { Node n; n.kind = Kind::NuBox; n.exponent = k; return n; }
    static Node w() { Node n; n.kind = Kind::WhiteDot; return n; }
    static Node hbox(Complex a) { Node n; n.kind = Kind::HBox; n.param = a; return n; }
    static Node gray() { Node n; n.kind = Kind::GrayDot; return n; }
    static Node notdot() { Node n; n.kind = Kind::NotDot; return n; }
};

inline const char* kind_name(Kind k) {
    switch (k) {
        case Kind::ZSpider: return "Z";
        case Kind::XSpider: return "X";
        case Kind::Hadamard: return "H";
        case Kind::NuBox: return "NU";
        case Kind::WhiteDot: return "W";
        case Kind::HBox: return "HBOX";
        case Kind::GrayDot: return "GRAY";
        case Kind::NotDot: return "NOT";
    }
    return "?";
}

// One end of an edge: either a generator node or a boundary point.
struct Endpoint {
    bool is_boundary = false;
    int id = -1;

    friend bool operator==(const Endpoint& a, const Endpoint& b) {
        return a.is_boundary == b.is_boundary && a.id == b.id;
    }
    friend bool operator<(const Endpoint& a, const Endpoint& b) {
        return std::tie(a.is_boundary, a.id) < std::tie(b.is_boundary, b.id);
    }
};

struct Edge {
    Endpoint a, b;
};

struct Violation {
    std::string message;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An open multigraph of generator nodes with ordered boundary wires.
// Immutable by convention once built: all operations return new diagrams.
// Edges are unordered pairs; parallel edges and self-loops are allowed, and
// an edge may join two boundary points (a bare wire, or a cup/cap when both
// ends are outputs/inputs). `bare_loops` counts closed wire loops with no
// node on them; these only arise through composition and each denotes the
// scalar 2.
class Diagram {
public:
    std::map<int, Node> nodes;
    std::vector<Edge> edges;
    std::vector<int> inputs;    // boundary ids, in order
    std::vector<int> outputs;
    int bare_loops = 0;

    static Endpoint on_node(int id) { return Endpoint{false, id}; }
    static Endpoint on_boundary(int id) { return Endpoint{true, id}; }

    int add_node(const Node& n) {
        int id = next_node_id_++;
        nodes.emplace(id, n);
        return id;
    }
    int add_input() {
        int id = next_boundary_id_++;
        inputs.push_back(id);
        return id;
    }
    int add_output() {
        int id = next_boundary_id_++;
        outputs.push_back(id);
        return id;
    }
    void connect(Endpoint a, Endpoint b) { edges.push_back(Edge{a, b}); }
    void connect_nodes(int a, int b) { connect(on_node(a), on_node(b)); }

    // A bare input-to-output wire.
    void add_wire() {
        int i = add_input();
        int o = add_output();
        connect(on_boundary(i), on_boundary(o));
    }

    int degree(int node_id) const {
        int d = 0;
        for (const auto& e : edges) {
            if (!e.a.is_boundary && e.a.id == node_id) ++d;
            if (!e.b.is_boundary && e.b.id == node_id) ++d;
        }
        return d;
    }

    int boundary_count() const { return int(inputs.size() + outputs.size()); }

    std::vector<Violation> validate() const;
    bool valid() const { return validate().empty(); }
    void ensure_valid() const {
        auto v = validate();
        if (!v.empty()) throw ValidationError("invalid diagram: " + v.front().message);
    }

private:
    int next_node_id_ = 0;
    int next_boundary_id_ = 0;
};

inline std::vector<Violation> Diagram::validate() const {
    std::vector<Violation> out;
    std::map<int, int> boundary_use;   // edge incidences per boundary id
    std::map<int, int> boundary_listed;
    for (int b : inputs) boundary_listed[b]++;
    for (int b : outputs) boundary_listed[b]++;
    for (auto& [b, c] : boundary_listed)
        if (c != 1)
            out.push_back({"boundary b" + std::to_string(b) + " listed " + std::to_string(c) + " times"});

    auto check_ep = [&](const Endpoint& p) {
        if (p.is_boundary) {
            boundary_use[p.id]++;
            if (!boundary_listed.count(p.id))
                out.push_back({"edge references unknown boundary b" + std::to_string(p.id)});
        } else if (!nodes.count(p.id)) {
            out.push_back({"edge references unknown node n" + std::to_string(p.id)});
        }
    };
    for (const auto& e : edges) {
        check_ep(e.a);
        check_ep(e.b);
    }
    for (auto& [b, c] : boundary_listed) {
        int used = boundary_use.count(b) ? boundary_use[b] : 0;
        if (used != 1)
            out.push_back({"boundary b" + std::to_string(b) + " has " + std::to_string(used) +
                           " incident edges (wants exactly 1)"});
    }
    for (const auto& [id, n] : nodes) {
        int d = degree(id);
        if ((n.kind == Kind::Hadamard || n.kind == Kind::NotDot) && d != 2)
            out.push_back({std::string(kind_name(n.kind)) + " node n" + std::to_string(id) +
                           " degree != 2 (is " + std::to_string(d) + ")"});
        if (n.kind == Kind::NuBox && d != 0)
            out.push_back({"NU node n" + std::to_string(id) + " degree != 0"});
        if (!std::isfinite(n.phase) || !std::isfinite(n.exponent) ||
            !std::isfinite(n.param.real()) || !std::isfinite(n.param.imag()))
            out.push_back({"node n" + std::to_string(id) + " has a non-finite parameter"});
    }
    if (bare_loops < 0) out.push_back({"negative bare loop count"});
    return out;
}

// ---------------------------------------------------------------------------
// Serialization (UTF-8 JSON). Node ids are written as "n<k>", boundaries as
// "b<k>"; parsing accepts any distinct strings for ids.

inline std::string serialize(const Diagram& d) {
    nlohmann::json j;
    // canonical names by position, so serialization is stable under internal
    // id renumbering
    std::map<int, int> bpos, npos;
    for (int b : d.inputs) bpos.emplace(b, int(bpos.size()));
    for (int b : d.outputs) bpos.emplace(b, int(bpos.size()));
    for (const auto& [id, n] : d.nodes) npos.emplace(id, int(npos.size()));
    auto bname = [&](int b) { return "b" + std::to_string(bpos.at(b)); };
    auto nname = [&](int n) { return "n" + std::to_string(npos.at(n)); };
    j["inputs"] = nlohmann::json::array();
    for (int b : d.inputs) j["inputs"].push_back(bname(b));
    j["outputs"] = nlohmann::json::array();
    for (int b : d.outputs) j["outputs"].push_back(bname(b));
    j["nodes"] = nlohmann::json::array();
    for (const auto& [id, n] : d.nodes) {
        nlohmann::json jn;
        jn["id"] = nname(id);
        jn["kind"] = kind_name(n.kind);
        if (n.kind == Kind::ZSpider || n.kind == Kind::XSpider) {
            if (n.phase != 0.0) jn["phase"] = n.phase;
        } else if (n.kind == Kind::HBox) {
            if (n.param != Complex(-1.0, 0.0)) jn["param"] = {n.param.real(), n.param.imag()};
        } else if (n.kind == Kind::NuBox) {
            if (n.exponent != 1.0) jn["exponent"] = n.exponent;
        }
        j["nodes"].push_back(jn);
    }
    // canonical edge order: normalized within each pair, then sorted
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : d.edges) {
        auto pname = [&](const Endpoint& p) { return p.is_boundary ? bname(p.id) : nname(p.id); };
        std::string x = pname(e.a), y = pname(e.b);
        auto lt = [](const std::string& a, const std::string& b) {
            return a.size() != b.size() ? a.size() < b.size() : a < b;
        };
        if (lt(y, x)) std::swap(x, y);
        edges.push_back({x, y});
    }
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
        auto lt = [](const std::string& x, const std::string& y) {
            return x.size() != y.size() ? x.size() < y.size() : x < y;
        };
        if (a.first != b.first) return lt(a.first, b.first);
        return lt(a.second, b.second);
    });
    j["edges"] = nlohmann::json::array();
    for (const auto& [x, y] : edges) j["edges"].push_back({x, y});
    if (d.bare_loops > 0) j["loops"] = d.bare_loops;
    return j.dump(2) + "\n";
}

inline Diagram parse_diagram(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("JSON parse error: ") + e.what());
    }
    Diagram d;
    std::map<std::string, int> bmap, nmap;
    auto reg_boundary = [&](const nlohmann::json& arr, bool input) {
        if (arr.is_null()) return;
        if (!arr.is_array()) throw ParseError(input ? "\"inputs\" must be an array" : "\"outputs\" must be an array");
        for (const auto& v : arr) {
            std::string s = v.get<std::string>();
            if (bmap.count(s)) throw ParseError("duplicate boundary id '" + s + "'");
            int id = input ? d.add_input() : d.add_output();
            bmap[s] = id;
        }
    };
    reg_boundary(j.value("inputs", nlohmann::json::array()), true);
    reg_boundary(j.value("outputs", nlohmann::json::array()), false);

    for (const auto& jn : j.value("nodes", nlohmann::json::array())) {
        std::string sid = jn.at("id").get<std::string>();
        if (nmap.count(sid) || bmap.count(sid)) throw ParseError("duplicate id '" + sid + "'");
        std::string kind = jn.at("kind").get<std::string>();
        Node n;
        if (kind == "Z") n = Node::z(jn.value("phase", 0.0));
        else if (kind == "X") n = Node::x(jn.value("phase", 0.0));
        else if (kind == "H") n = Node::h();
        else if (kind == "W") n = Node::w();
        else if (kind == "GRAY") n = Node::gray();
        else if (kind == "NOT") n = Node::notdot();
        else if (kind == "NU") n = Node::nu(jn.value("exponent", 1.0));
        else if (kind == "HBOX") {
            Complex a(-1.0, 0.0);
            if (jn.contains("param")) {
                auto p = jn["param"];
                if (!p.is_array() || p.size() != 2) throw ParseError("HBOX param must be [re, im]");
                a = Complex(p[0].get<double>(), p[1].get<double>());
            }
            n = Node::hbox(a);
        } else {
            throw ParseError("unknown node kind \"" + kind + "\"");
        }
        nmap[sid] = d.add_node(n);
    }

    for (const auto& je : j.value("edges", nlohmann::json::array())) {
        if (!je.is_array() || je.size() != 2) throw ParseError("edge must be a pair of ids");
        auto resolve = [&](const std::string& s) -> Endpoint {
            if (auto it = nmap.find(s); it != nmap.end()) return Diagram::on_node(it->second);
            if (auto it = bmap.find(s); it != bmap.end()) return Diagram::on_boundary(it->second);
            throw ParseError("edge references unknown id '" + s + "'");
        };
        d.connect(resolve(je[0].get<std::string>()), resolve(je[1].get<std::string>()));
    }
    d.bare_loops = j.value("loops", 0);

    auto v = d.validate();
    if (!v.empty()) throw ValidationError("invalid diagram: " + v.front().message);
    return d;
}

// ---------------------------------------------------------------------------
// Composition.

inline Diagram parallel(const Diagram& d1, const Diagram& d2) {
    Diagram r;
    std::map<int, int> nm1, nm2, bm1, bm2;
    for (const auto& [id, n] : d1.nodes) nm1[id] = r.add_node(n);
    for (const auto& [id, n] : d2.nodes) nm2[id] = r.add_node(n);
    for (int b : d1.inputs) bm1[b] = r.add_input();
    for (int b : d2.inputs) bm2[b] = r.add_input();
    for (int b : d1.outputs) bm1[b] = r.add_output();
    for (int b : d2.outputs) bm2[b] = r.add_output();
    auto remap = [](const std::map<int, int>& nm, const std::map<int, int>& bm, const Endpoint& p) {
        return p.is_boundary ? Diagram::on_boundary(bm.at(p.id)) : Diagram::on_node(nm.at(p.id));
    };
    for (const auto& e : d1.edges) r.connect(remap(nm1, bm1, e.a), remap(nm1, bm1, e.b));
    for (const auto& e : d2.edges) r.connect(remap(nm2, bm2, e.a), remap(nm2, bm2, e.b));
    r.bare_loops = d1.bare_loops + d2.bare_loops;
    return r;
}

// Glues d1's outputs to d2's inputs pairwise in order.
inline Diagram sequential(const Diagram& d1, const Diagram& d2) {
    if (d1.outputs.size() != d2.inputs.size())
        throw std::invalid_argument("sequential: arity mismatch (" + std::to_string(d1.outputs.size()) +
                                    " outputs vs " + std::to_string(d2.inputs.size()) + " inputs)");
    Diagram r;
    std::map<int, int> nm1, nm2, bm1, bm2;
    for (const auto& [id, n] : d1.nodes) nm1[id] = r.add_node(n);
    for (const auto& [id, n] : d2.nodes) nm2[id] = r.add_node(n);
    for (int b : d1.inputs) bm1[b] = r.add_input();
    for (int b : d2.outputs) bm2[b] = r.add_output();
    r.bare_loops = d1.bare_loops + d2.bare_loops;

    // Glued boundary points become junctions, later spliced away.
    // Junction keys: negative ids, one per glued pair.
    std::map<int, int> junction1, junction2;  // old boundary id -> junction key
    for (size_t i = 0; i < d1.outputs.size(); ++i) {
        junction1[d1.outputs[i]] = -int(i) - 1;
        junction2[d2.inputs[i]] = -int(i) - 1;
    }

    // Endpoint encoding for splicing: (tag, id) with tag 0 = node, 1 = final
    // boundary, 2 = junction.
    struct Pt { int tag; int id; };
    std::vector<std::pair<Pt, Pt>> work;
    auto conv = [&](const Endpoint& p, const std::map<int, int>& nm, const std::map<int, int>& bm,
                    const std::map<int, int>& junction) -> Pt {
        if (!p.is_boundary) return Pt{0, nm.at(p.id)};
        if (auto it = junction.find(p.id); it != junction.end()) return Pt{2, it->second};
        return Pt{1, bm.at(p.id)};
    };
    for (const auto& e : d1.edges) work.push_back({conv(e.a, nm1, bm1, junction1), conv(e.b, nm1, bm1, junction1)});
    for (const auto& e : d2.edges) work.push_back({conv(e.a, nm2, bm2, junction2), conv(e.b, nm2, bm2, junction2)});

    // Splice junctions: each junction has exactly two incident edge slots;
    // repeatedly merge its two edges into one. A cycle of junction-only edges
    // collapses to a bare loop.
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < work.size() && !changed; ++i) {
            auto is_j = [](const Pt& p) { return p.tag == 2; };
            Pt* jp = nullptr;
            if (is_j(work[i].first)) jp = &work[i].first;
            else if (is_j(work[i].second)) jp = &work[i].second;
            if (!jp) continue;
            int key = jp->id;
            // self-edge through the same junction: bare loop
            if (work[i].first.tag == 2 && work[i].second.tag == 2 &&
                work[i].first.id == key && work[i].second.id == key) {
                r.bare_loops += 1;
                work.erase(work.begin() + i);
                changed = true;
                break;
            }
            // find partner edge slot with the same junction key
            for (size_t k = 0; k < work.size(); ++k) {
                if (k == i) continue;
                Pt* qp = nullptr;
                if (work[k].first.tag == 2 && work[k].first.id == key) qp = &work[k].first;
                else if (work[k].second.tag == 2 && work[k].second.id == key) qp = &work[k].second;
                if (!qp) continue;
                Pt far1 = (jp == &work[i].first) ? work[i].second : work[i].first;
                Pt far2 = (qp == &work[k].first) ? work[k].second : work[k].first;
                work[i] = {far1, far2};
                work.erase(work.begin() + k);
                changed = true;
                break;
            }
            if (changed) break;
        }
    }

    for (const auto& [p, q] : work) {
        auto back = [](const Pt& p) {
            return p.tag == 0 ? Diagram::on_node(p.id) : Diagram::on_boundary(p.id);
        };
        r.connect(back(p), back(q));
    }
    return r;
}

} // namespace wtcalc
