#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "model.hpp"
#include "rules.hpp"
#include "semantics.hpp"
#include "soundness.hpp"
#include "tensor.hpp"

namespace wtcalc {

class RewriteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// (edge index, end) with end 0 = .a, 1 = .b
struct Half {
    int edge = -1;
    int end = 0;
    friend bool operator<(const Half& a, const Half& b) { return std::tie(a.edge, a.end) < std::tie(b.edge, b.end); }
    friend bool operator==(const Half& a, const Half& b) { return a.edge == b.edge && a.end == b.end; }
};

inline Endpoint half_endpoint(const Diagram& d, Half h) {
    const Edge& e = d.edges[h.edge];
    return h.end == 0 ? e.a : e.b;
}

inline Half other_half(Half h) { return Half{h.edge, 1 - h.end}; }

inline std::map<int, std::vector<Half>> node_halves(const Diagram& d) {
    std::map<int, std::vector<Half>> m;
    for (size_t i = 0; i < d.edges.size(); ++i) {
        const Edge& e = d.edges[i];
        if (!e.a.is_boundary) m[e.a.id].push_back(Half{int(i), 0});
        if (!e.b.is_boundary) m[e.b.id].push_back(Half{int(i), 1});
    }
    for (auto& [id, v] : d.nodes)
        m.try_emplace(id);  // degree-0 nodes
    return m;
}

inline bool phases_match(double a, double b, double tol = 1e-12) {
    double d = std::fabs(canonical_angle(a) - canonical_angle(b));
    return d < tol || std::fabs(d - 2 * M_PI) < tol;
}

inline bool nodes_match(const Node& p, const Node& h) {
    if (p.kind != h.kind) return false;
    switch (p.kind) {
        case Kind::ZSpider:
        case Kind::XSpider: return phases_match(p.phase, h.phase);
        case Kind::HBox: return std::abs(p.param - h.param) < 1e-12;
        case Kind::NuBox: return std::fabs(p.exponent - h.exponent) < 1e-12;
        default: return true;
    }
}

// A short structural fingerprint, used to detect stale matches.
inline size_t diagram_hash(const Diagram& d) {
    size_t h = 1469598103934665603ull;
    auto mix = [&](size_t v) { h = (h ^ v) * 1099511628211ull; };
    for (const auto& [id, n] : d.nodes) {
        mix(size_t(id));
        mix(size_t(n.kind));
        mix(std::hash<double>{}(n.phase));
        mix(std::hash<double>{}(n.param.real()));
        mix(std::hash<double>{}(n.param.imag()));
        mix(std::hash<double>{}(n.exponent));
    }
    for (const auto& e : d.edges) {
        mix(size_t(e.a.is_boundary) * 2 + e.a.id * 4);
        mix(size_t(e.b.is_boundary) * 2 + e.b.id * 4);
    }
    mix(d.inputs.size());
    mix(d.outputs.size());
    mix(size_t(d.bare_loops));
    return h;
}

} // namespace detail

// Where a pattern boundary lands in the host: the host half-edge whose far
// side continues outside the matched image.
struct FrontierAttach {
    int pattern_boundary = -1;
    detail::Half host_half;  // half-edge on the matched node's side
};

struct Match {
    std::string rule;  // family/name
    Bindings bindings;
    std::map<int, int> node_map;  // pattern node id -> host node id
    std::vector<FrontierAttach> frontier;
    size_t host_hash = 0;

    int min_host_node() const {
        int m = std::numeric_limits<int>::max();
        for (auto& [p, h] : node_map) m = std::min(m, h);
        return m;
    }
};

// All injective embeddings of the instance's LHS into the host: node kinds
// and parameters match exactly (phases within 1e-12, mod 2pi), every pattern
// edge maps to a distinct host edge, and matched host nodes have no edges
// beyond the mapped ones except through the frontier. Spider legs are
// unordered, so matches differing only by a leg permutation collapse to one.
inline std::vector<Match> find_matches(const Diagram& host, const RuleInstance& inst) {
    const Diagram& pat = inst.lhs;
    std::vector<Match> out;
    if (pat.nodes.empty()) return out;  // nothing anchors an empty pattern

    auto pat_halves = detail::node_halves(pat);
    auto host_halves = detail::node_halves(host);

    std::vector<int> pat_ids;
    for (auto& [id, n] : pat.nodes) pat_ids.push_back(id);
    // match more-connected pattern nodes first
    std::stable_sort(pat_ids.begin(), pat_ids.end(), [&](int a, int b) {
        return pat_halves[a].size() > pat_halves[b].size();
    });

    std::map<int, int> node_map;
    std::set<int> used_hosts;
    std::map<int, detail::Half> half_map;  // pattern half (encoded) -> host half
    auto hcode = [](detail::Half h) { return h.edge * 2 + h.end; };

    std::set<std::string> seen;  // dedup by node map + frontier signature

    std::function<void(size_t)> rec = [&](size_t idx) {
        if (idx == pat_ids.size()) {
            // assemble the frontier: pattern boundary half-edges
            Match m;
            m.rule = inst.family + "/" + inst.schema;
            m.bindings = inst.bindings;
            m.node_map = node_map;
            for (size_t ei = 0; ei < pat.edges.size(); ++ei) {
                const Edge& pe = pat.edges[ei];
                for (int end = 0; end < 2; ++end) {
                    Endpoint p = end == 0 ? pe.a : pe.b;
                    if (!p.is_boundary) continue;
                    // the node side of this boundary edge
                    detail::Half nodeside = detail::other_half(detail::Half{int(ei), end});
                    Endpoint q = detail::half_endpoint(pat, nodeside);
                    if (q.is_boundary) {
                        // bare pattern wire cannot anchor; refuse such patterns
                        return;
                    }
                    auto it = half_map.find(hcode(nodeside));
                    if (it == half_map.end()) return;
                    m.frontier.push_back({p.id, it->second});
                }
            }
            std::sort(m.frontier.begin(), m.frontier.end(),
                      [](const FrontierAttach& a, const FrontierAttach& b) {
                          return a.pattern_boundary < b.pattern_boundary;
                      });
            m.host_hash = detail::diagram_hash(host);
            // dedup up to symmetric leg permutations and label-preserving
            // pattern automorphisms: what matters is which host nodes play
            // which generator role and where the frontier attaches
            std::ostringstream key;
            std::map<int, std::string> role;  // host node -> pattern label, sorted by host id
            for (auto& [p, h] : m.node_map) {
                const Node& pn = pat.nodes.at(p);
                std::ostringstream lbl;
                lbl << int(pn.kind) << ":" << canonical_angle(pn.phase) << ":" << pn.param.real() << ":"
                    << pn.param.imag() << ":" << pn.exponent;
                role[h] = lbl.str();
            }
            for (auto& [h, lbl] : role) key << h << ">" << lbl << ";";
            std::map<int, std::multiset<std::pair<int, int>>> per_node;
            for (const auto& f : m.frontier) {
                Endpoint far = detail::half_endpoint(host, detail::other_half(f.host_half));
                Endpoint near = detail::half_endpoint(host, f.host_half);
                per_node[near.id].insert({far.is_boundary ? 1 : 0, far.id});
            }
            for (auto& [nid, ms] : per_node) {
                key << "|" << nid << ":";
                for (auto& [t, i] : ms) key << t << "." << i << ",";
            }
            if (seen.insert(key.str()).second) out.push_back(std::move(m));
            return;
        }
        int pid = pat_ids[idx];
        const Node& pnode = pat.nodes.at(pid);
        const auto& phs = pat_halves[pid];
        for (const auto& [hid, hnode] : host.nodes) {
            if (used_hosts.count(hid)) continue;
            if (!detail::nodes_match(pnode, hnode)) continue;
            const auto& hhs = host_halves[hid];
            if (hhs.size() != phs.size()) continue;  // exact degree match

            // try assignments of pattern halves to host halves
            std::vector<int> perm(hhs.size());
            for (size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
            std::vector<bool> used(hhs.size(), false);
            std::vector<std::pair<int, detail::Half>> placed;  // rollback log

            std::function<bool(size_t)> assign = [&](size_t k) -> bool {
                if (k == phs.size()) return rec(idx + 1), false;
                detail::Half ph = phs[k];
                // if the pattern half's edge partner is already mapped, the
                // host half is forced to pair consistently
                for (size_t j = 0; j < hhs.size(); ++j) {
                    if (used[j]) continue;
                    detail::Half hh = hhs[j];
                    // consistency: if pattern partner half is assigned, host
                    // halves must share the edge correspondingly
                    detail::Half pp = detail::other_half(ph);
                    Endpoint ppe = detail::half_endpoint(pat, pp);
                    auto pit = half_map.find(hcode(pp));
                    if (!ppe.is_boundary) {
                        if (pit != half_map.end()) {
                            // partner already placed: must be the other end of
                            // the same host edge
                            if (!(pit->second == detail::other_half(hh))) continue;
                        } else if (!ppe.is_boundary && node_map.count(ppe.id)) {
                            // partner node matched but its half not yet bound:
                            // host far end must be that node
                            Endpoint hfar = detail::half_endpoint(host, detail::other_half(hh));
                            if (hfar.is_boundary || hfar.id != node_map.at(ppe.id)) continue;
                        } else {
                            // partner node not yet matched: host far end must
                            // not be an already-used host node... it may be
                            // anything else; defer the check
                        }
                    }
                    half_map[hcode(ph)] = hh;
                    used[j] = true;
                    placed.push_back({hcode(ph), hh});
                    assign(k + 1);
                    used[j] = false;
                    half_map.erase(hcode(ph));
                    placed.pop_back();
                }
                return false;
            };

            node_map[pid] = hid;
            used_hosts.insert(hid);
            assign(0);
            node_map.erase(pid);
            used_hosts.erase(hid);
        }
    };
    rec(0);

    // final consistency: inner pattern edges must map to host edges whose far
    // ends are the mapped nodes (enforced incrementally above), and frontier
    // attachment is read off half_map, so reaching rec(end) is sufficient.
    return out;
}

// Excises the matched LHS image and splices the instance's RHS along the
// frontier. Node ids of the spliced part are fresh; untouched host structure
// keeps its ids.
inline Diagram apply(const Diagram& host, const RuleInstance& inst, const Match& match) {
    if (detail::diagram_hash(host) != match.host_hash)
        throw RewriteError("stale match: host diagram changed");
    const Diagram& rhs = inst.rhs;
    const Diagram& lhs = inst.lhs;

    Diagram out;
    out.bare_loops = host.bare_loops;
    std::set<int> removed;
    for (auto& [p, h] : match.node_map) removed.insert(h);

    std::map<int, int> host_node_map;
    for (const auto& [id, n] : host.nodes)
        if (!removed.count(id)) host_node_map[id] = out.add_node(n);
    std::map<int, int> host_boundary_map;
    for (int b : host.inputs) host_boundary_map[b] = out.add_input();
    for (int b : host.outputs) host_boundary_map[b] = out.add_output();

    // edges of the host that are consumed by the match: the images of all
    // pattern edges (inner edges and frontier edges)
    std::set<int> consumed;
    for (const auto& f : match.frontier) consumed.insert(f.host_half.edge);
    for (size_t ei = 0; ei < host.edges.size(); ++ei) {
        const Edge& e = host.edges[ei];
        bool a_in = !e.a.is_boundary && removed.count(e.a.id);
        bool b_in = !e.b.is_boundary && removed.count(e.b.id);
        if (a_in && b_in) consumed.insert(int(ei));  // inner image edge
        else if ((a_in || b_in) && !consumed.count(int(ei)))
            throw RewriteError("match image has an unmapped incident edge");
    }

    auto remap_host = [&](const Endpoint& p) -> Endpoint {
        return p.is_boundary ? Diagram::on_boundary(host_boundary_map.at(p.id))
                             : Diagram::on_node(host_node_map.at(p.id));
    };
    for (size_t ei = 0; ei < host.edges.size(); ++ei) {
        if (consumed.count(int(ei))) continue;
        const Edge& e = host.edges[ei];
        out.connect(remap_host(e.a), remap_host(e.b));
    }

    // Splice in the RHS. Every pattern boundary is a junction joining its
    // host-side wire to its RHS-side wire; splicing is the same wire-chasing
    // as in sequential composition.
    std::map<int, int> rhs_node_map;
    for (const auto& [id, n] : rhs.nodes) rhs_node_map[id] = out.add_node(n);
    out.bare_loops += rhs.bare_loops;

    // pattern boundary <-> rhs boundary correspondence is positional within
    // the shared signature
    std::map<int, int> rhs_to_pat_boundary;
    for (size_t i = 0; i < lhs.inputs.size(); ++i) rhs_to_pat_boundary[rhs.inputs[i]] = lhs.inputs[i];
    for (size_t i = 0; i < lhs.outputs.size(); ++i) rhs_to_pat_boundary[rhs.outputs[i]] = lhs.outputs[i];

    struct Pt {
        int tag;  // 0 = concrete endpoint in `out`, 1 = junction (pattern boundary id)
        Endpoint ep;
        int junction;
    };
    auto concrete = [](Endpoint e) { return Pt{0, e, -1}; };
    auto junction = [](int pb) { return Pt{1, Endpoint{}, pb}; };
    std::vector<std::pair<Pt, Pt>> work;

    // host-side wires of the frontier
    {
        std::map<int, std::vector<const FrontierAttach*>> by_edge;
        for (const auto& f : match.frontier) by_edge[f.host_half.edge].push_back(&f);
        for (auto& [eid, fs] : by_edge) {
            if (fs.size() == 2) {
                work.push_back({junction(fs[0]->pattern_boundary), junction(fs[1]->pattern_boundary)});
            } else {
                Endpoint far = detail::half_endpoint(host, detail::other_half(fs[0]->host_half));
                work.push_back({concrete(remap_host(far)), junction(fs[0]->pattern_boundary)});
            }
        }
    }
    // rhs-side wires
    for (const auto& e : rhs.edges) {
        auto conv = [&](const Endpoint& p) -> Pt {
            if (p.is_boundary) return junction(rhs_to_pat_boundary.at(p.id));
            return concrete(Diagram::on_node(rhs_node_map.at(p.id)));
        };
        work.push_back({conv(e.a), conv(e.b)});
    }

    // splice: each junction has exactly two slots
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < work.size() && !changed; ++i) {
            Pt* jp = nullptr;
            if (work[i].first.tag == 1) jp = &work[i].first;
            else if (work[i].second.tag == 1) jp = &work[i].second;
            if (!jp) continue;
            int key = jp->junction;
            if (work[i].first.tag == 1 && work[i].second.tag == 1 && work[i].first.junction == key &&
                work[i].second.junction == key) {
                out.bare_loops += 1;
                work.erase(work.begin() + i);
                changed = true;
                break;
            }
            for (size_t k = 0; k < work.size(); ++k) {
                if (k == i) continue;
                Pt* qp = nullptr;
                if (work[k].first.tag == 1 && work[k].first.junction == key) qp = &work[k].first;
                else if (work[k].second.tag == 1 && work[k].second.junction == key) qp = &work[k].second;
                if (!qp) continue;
                Pt far1 = (jp == &work[i].first) ? work[i].second : work[i].first;
                Pt far2 = (qp == &work[k].first) ? work[k].second : work[k].first;
                work[i] = {far1, far2};
                work.erase(work.begin() + k);
                changed = true;
                break;
            }
            if (changed) break;
            throw RewriteError("internal: junction with a single slot");
        }
    }
    for (const auto& [p, q] : work) {
        if (p.tag != 0 || q.tag != 0) throw RewriteError("internal: unresolved junction");
        out.connect(p.ep, q.ep);
    }

    auto v = out.validate();
    if (!v.empty()) throw RewriteError("rewrite produced invalid diagram: " + v.front().message);
    return out;
}

// ---------------------------------------------------------------------------
// Simplification strategy: fuse / identity / hopf / hcancel / nu-merge.

struct TraceStep {
    std::string rule;
    std::string binding;
    Diagram after;
    bool validated = false;
    bool validation_equal = false;
};

struct SimplifyOptions {
    std::set<std::string> strategy = {"fuse", "identity", "hopf", "hcancel", "nu-merge"};
    bool validate = false;
    Model model = model_nu();
    double tol = 1e-9;
    int leg_budget = kDefaultLegBudget;
    int max_steps = 10000;
};

namespace detail {

// Candidate rewrites the strategy components propose on the current host.
// Each candidate carries the schema-lookup name and concrete bindings so the
// generic matcher does the rest.
struct Candidate {
    std::string schema;
    Bindings bindings;
};

inline std::vector<Candidate> propose(const Diagram& host, const std::set<std::string>& strategy) {
    std::vector<Candidate> cands;
    auto count_shared = [&](int a, int b) {
        int c = 0;
        for (const auto& e : host.edges)
            if (!e.a.is_boundary && !e.b.is_boundary &&
                ((e.a.id == a && e.b.id == b) || (e.a.id == b && e.b.id == a)))
                ++c;
        return c;
    };

    if (strategy.count("fuse")) {
        std::set<std::pair<int, int>> seen;
        for (const auto& e : host.edges) {
            if (e.a.is_boundary || e.b.is_boundary || e.a.id == e.b.id) continue;
            int a = std::min(e.a.id, e.b.id), b = std::max(e.a.id, e.b.id);
            if (!seen.insert({a, b}).second) continue;
            const Node& na = host.nodes.at(a);
            const Node& nb = host.nodes.at(b);
            if (na.kind != nb.kind) continue;
            std::string schema;
            if (na.kind == Kind::ZSpider) schema = "welltempered-zx/Fuse_Z";
            else if (na.kind == Kind::XSpider) schema = "derived/Fuse_X";
            else if (na.kind == Kind::WhiteDot) schema = "welltempered-zh/Fuse_Z";
            else continue;
            int da = host.degree(a), db = host.degree(b);
            // the fuse pattern consumes one connecting edge; extra parallel
            // edges pass through and come back as self-loops on the merged
            // spider
            Bindings bnd;
            bnd.arity["k"] = da - 1;
            bnd.arity["l"] = db - 1;
            bnd.arity["m"] = 0;
            bnd.arity["n"] = 0;
            if (na.kind != Kind::WhiteDot) {
                bnd.angle["theta"] = na.phase;
                bnd.angle["delta"] = nb.phase;
            }
            cands.push_back({schema, bnd});
        }
    }
    if (strategy.count("identity")) {
        std::set<std::string> pushed;
        for (const auto& [id, n] : host.nodes) {
            bool idlike = (n.kind == Kind::ZSpider && phases_match(n.phase, 0)) ||
                          (n.kind == Kind::XSpider && phases_match(n.phase, 0)) || n.kind == Kind::WhiteDot;
            if (!idlike || host.degree(id) != 2) continue;
            if (count_shared(id, id) > 0) continue;  // self-looped dot, nothing to join
            std::string schema = n.kind == Kind::ZSpider ? "welltempered-zx/Id_Z"
                                 : n.kind == Kind::XSpider ? "welltempered-zx/Id_X"
                                                           : "welltempered-zh/Id_Z";
            if (pushed.insert(schema).second) cands.push_back({schema, Bindings{}});
        }
    }
    if (strategy.count("hopf")) {
        std::set<std::pair<int, int>> seen;
        for (const auto& e : host.edges) {
            if (e.a.is_boundary || e.b.is_boundary || e.a.id == e.b.id) continue;
            int a = e.a.id, b = e.b.id;
            const Node& na = host.nodes.at(a);
            const Node& nb = host.nodes.at(b);
            int z = -1, x = -1;
            if ((na.kind == Kind::ZSpider && nb.kind == Kind::XSpider)) z = a, x = b;
            else if ((nb.kind == Kind::ZSpider && na.kind == Kind::XSpider)) z = b, x = a;
            else if (na.kind == Kind::WhiteDot && nb.kind == Kind::GrayDot) z = a, x = b;
            else if (nb.kind == Kind::WhiteDot && na.kind == Kind::GrayDot) z = b, x = a;
            else continue;
            if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
            if (count_shared(a, b) < 2) continue;
            const Node& zn = host.nodes.at(z);
            Bindings bnd;
            bnd.arity["k"] = host.degree(z) - 2;
            bnd.arity["l"] = host.degree(x) - 2;
            if (zn.kind == Kind::ZSpider) {
                bnd.angle["theta"] = zn.phase;
                bnd.angle["delta"] = host.nodes.at(x).phase;
                cands.push_back({"derived/Hopf", bnd});
            } else {
                cands.push_back({"derived/Hopf_WG", bnd});
            }
        }
    }
    if (strategy.count("hcancel")) {
        std::set<std::pair<int, int>> seen;
        for (const auto& e : host.edges) {
            if (e.a.is_boundary || e.b.is_boundary || e.a.id == e.b.id) continue;
            int a = std::min(e.a.id, e.b.id), b = std::max(e.a.id, e.b.id);
            const Node& na = host.nodes.at(a);
            const Node& nb = host.nodes.at(b);
            bool had = na.kind == Kind::Hadamard && nb.kind == Kind::Hadamard;
            bool hbox = na.kind == Kind::HBox && nb.kind == Kind::HBox &&
                        std::abs(na.param - Complex(-1, 0)) < 1e-12 &&
                        std::abs(nb.param - Complex(-1, 0)) < 1e-12 && host.degree(a) == 2 &&
                        host.degree(b) == 2;
            if (!had && !hbox) continue;
            if (count_shared(a, b) != 1) continue;
            if (!seen.insert({a, b}).second) continue;
            cands.push_back({had ? std::string("derived/HH") : std::string("welltempered-zh/Id_H"), Bindings{}});
        }
    }
    if (strategy.count("nu-merge")) {
        std::vector<int> nus;
        for (const auto& [id, n] : host.nodes)
            if (n.kind == Kind::NuBox) nus.push_back(id);
        for (int id : nus) {
            if (std::fabs(host.nodes.at(id).exponent) <= 1e-12) {
                Bindings bnd;  // Id_nu matches only exponent 0 patterns
                cands.push_back({"welltempered-zx/Id_nu", bnd});
                break;
            }
        }
        if (nus.size() >= 2) {
            Bindings bnd;
            bnd.angle["h"] = host.nodes.at(nus[0]).exponent;
            bnd.angle["k"] = host.nodes.at(nus[1]).exponent;
            cands.push_back({"welltempered-zx/Fuse_nu", bnd});
        }
    }
    return cands;
}

} // namespace detail

// Hadamard-pair cancellation schema lives outside the published families;
// registered lazily here.
inline const RuleSchema& hh_schema() {
    static const RuleSchema s = [] {
        RuleSchema r;
        r.family = "derived";
        r.name = "HH";
        r.calculus = CalculusTag::ZX;
        r.build = [](const Bindings&) -> std::pair<Diagram, Diagram> {
            Diagram lhs;
            int h1 = lhs.add_node(Node::h());
            int h2 = lhs.add_node(Node::h());
            lhs.connect(Diagram::on_boundary(lhs.add_input()), Diagram::on_node(h1));
            lhs.connect_nodes(h1, h2);
            lhs.connect(Diagram::on_node(h2), Diagram::on_boundary(lhs.add_output()));
            Diagram rhs;
            rhs.add_wire();
            return {lhs, rhs};
        };
        return r;
    }();
    return s;
}

// Derived rules are not axioms; they are validated once per process against
// the nu model before the simplifier may use them.
inline void ensure_derived_validated() {
    static const bool ok = [] {
        Sampling s;
        s.arity_cap = 2;
        for (const auto& schema : catalogue()) {
            if (schema.family != "derived") continue;
            if (check_schema(schema, model_nu(), s, 1e-9).aggregate != Verdict::Sound)
                throw RewriteError("derived rule " + schema.qualified() + " failed validation");
        }
        if (check_schema(hh_schema(), model_nu(), s, 1e-9).aggregate != Verdict::Sound)
            throw RewriteError("derived rule derived/HH failed validation");
        return true;
    }();
    (void)ok;
}

inline const RuleSchema* simplify_schema(const std::string& name) {
    if (name == "derived/HH") return &hh_schema();
    return find_schema(name);
}

// Applies the chosen strategy components until no match remains. Steps are
// deterministic: among all candidate matches, lowest host node id first.
// With validation on, every step is checked Equal under the model.
inline std::pair<Diagram, std::vector<TraceStep>> simplify(const Diagram& host0, const SimplifyOptions& opt) {
    ensure_derived_validated();
    Diagram host = host0;
    std::vector<TraceStep> trace;
    if (opt.validate && host.boundary_count() > opt.leg_budget)
        throw RewriteError("validation needs the diagram within the leg budget");

    for (int step = 0; step < opt.max_steps; ++step) {
        std::vector<std::pair<Match, RuleInstance>> found;
        for (const auto& cand : detail::propose(host, opt.strategy)) {
            const RuleSchema* schema = simplify_schema(cand.schema);
            if (!schema) continue;
            RuleInstance inst;
            try {
                inst = instantiate(*schema, cand.bindings);
            } catch (const BindingError&) {
                continue;  // out of declared range (oversized spiders etc.)
            }
            for (auto& m : find_matches(host, inst)) found.push_back({std::move(m), inst});
        }
        if (found.empty()) break;
        std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
            if (a.first.min_host_node() != b.first.min_host_node())
                return a.first.min_host_node() < b.first.min_host_node();
            if (a.first.rule != b.first.rule) return a.first.rule < b.first.rule;
            return a.first.bindings.key() < b.first.bindings.key();
        });
        const auto& [m, inst] = found.front();
        Diagram next = apply(host, inst, m);

        TraceStep ts;
        ts.rule = m.rule;
        ts.binding = m.bindings.key();
        if (opt.validate) {
            Tensor before = evaluate(host, opt.model, opt.leg_budget);
            Tensor after = evaluate(next, opt.model, opt.leg_budget);
            CompareResult c = compare(before, after, opt.tol);
            ts.validated = true;
            ts.validation_equal = c.verdict == CompareResult::Verdict::Equal;
            if (!ts.validation_equal)
                throw RewriteError("validated step is not semantics-preserving: " + m.rule);
        }
        ts.after = next;
        trace.push_back(std::move(ts));
        host = std::move(next);
    }
    return {host, trace};
}

} // namespace wtcalc
