#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "diagram.hpp"
#include "model.hpp"
#include "tensor.hpp"

namespace wtcalc {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr int kDefaultLegBudget = 14;

// Canonicalize an angle to (-pi, pi].
inline double canonical_angle(double t) {
    t = std::fmod(t, 2 * M_PI);
    if (t <= -M_PI) t += 2 * M_PI;
    if (t > M_PI) t -= 2 * M_PI;
    return t;
}

// e^{i t}, exact at multiples of pi/2 so that phases like pi cancel without
// residue in the spider tensors.
inline Complex cis(double t) {
    double c = canonical_angle(t);
    const double eps = 1e-12;
    if (std::fabs(c) < eps) return {1, 0};
    if (std::fabs(c - M_PI / 2) < eps) return {0, 1};
    if (std::fabs(c - M_PI) < eps || std::fabs(c + M_PI) < eps) return {-1, 0};
    if (std::fabs(c + M_PI / 2) < eps) return {0, -1};
    return std::polar(1.0, t);
}

// Scalar denoted by a degree-0 Z spider with phase theta under the nu model:
// sqrt(1+cos theta) * e^{i theta/2}, with theta taken in (-pi, pi].
inline Complex green_scalar(double theta) {
    double t = canonical_angle(theta);
    double mag = std::sqrt(std::max(0.0, 1.0 + std::cos(t)));
    return mag * std::polar(1.0, t / 2.0);
}

// The symmetric tensor a generator denotes at the given degree. Entry order
// follows Tensor indexing; all generators here are invariant under leg
// permutation.
inline Tensor generator_tensor(const Node& n, int degree, const Model& m) {
    if (!m.allows(n))
        throw EvalError(std::string("generator ") + kind_name(n.kind) + " not licensed by model '" + m.name + "'");
    if ((n.kind == Kind::Hadamard || n.kind == Kind::NotDot) && degree != 2)
        throw EvalError(std::string(kind_name(n.kind)) + " requires degree 2");
    if (n.kind == Kind::NuBox && degree != 0) throw EvalError("NU requires degree 0");

    Tensor t(degree);
    size_t last = t.size() - 1;
    switch (n.kind) {
        case Kind::ZSpider: {
            double c = m.u.at(degree);
            t.at(0) += c;
            t.at(last) += c * cis(n.phase);
            break;
        }
        case Kind::WhiteDot: {
            double c = m.u.at(degree);
            t.at(0) += c;
            t.at(last) += c;
            break;
        }
        case Kind::XSpider: {
            double c = m.v.at(degree) * std::exp2(-degree / 2.0);
            Complex ph = cis(n.phase);
            for (size_t i = 0; i < t.size(); ++i) {
                int w = __builtin_popcountll(i);
                t.at(i) = c * (Complex(1, 0) + ph * ((w & 1) ? -1.0 : 1.0));
            }
            break;
        }
        case Kind::GrayDot: {
            double c = m.g.at(degree);
            for (size_t i = 0; i < t.size(); ++i)
                if ((__builtin_popcountll(i) & 1) == 0) t.at(i) = c;
            break;
        }
        case Kind::HBox: {
            double c = m.h.at(degree);
            if (degree == 0) {
                t.at(0) = c * n.param;  // a degree-0 H box denotes the scalar a
            } else {
                for (size_t i = 0; i < t.size(); ++i) t.at(i) = c;
                t.at(last) = c * n.param;
            }
            break;
        }
        case Kind::Hadamard: {
            double c = m.hadamard_scale * M_SQRT1_2;
            t.at(0) = c; t.at(1) = c; t.at(2) = c; t.at(3) = -c;
            break;
        }
        case Kind::NotDot: {
            double c = m.xi();
            t.at(1) = c;
            t.at(2) = c;
            break;
        }
        case Kind::NuBox: {
            t.at(0) = std::exp2(-n.exponent / 4.0);
            break;
        }
    }
    return t;
}

namespace detail {

// A tensor whose legs are labeled by edge ids. Each edge id occurs at most
// twice across all work tensors; duplicate labels inside one tensor are
// traced out eagerly.
struct Work {
    std::vector<int> legs;
    Tensor t;
};

inline void trace_duplicates(Work& w) {
    for (;;) {
        int i = -1, j = -1;
        for (size_t a = 0; a < w.legs.size() && i < 0; ++a)
            for (size_t b = a + 1; b < w.legs.size(); ++b)
                if (w.legs[a] == w.legs[b]) { i = int(a); j = int(b); break; }
        if (i < 0) return;
        int n = w.t.legs;
        Tensor r(n - 2);
        std::vector<int> rl;
        for (int k = 0; k < n; ++k)
            if (k != i && k != j) rl.push_back(w.legs[k]);
        for (size_t idx = 0; idx < r.size(); ++idx) {
            // scatter idx bits into the surviving positions
            size_t full = 0;
            int src = n - 3;
            for (int k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                size_t bit = (idx >> src) & 1;
                full |= bit << (n - 1 - k);
                --src;
            }
            Complex s = 0;
            for (size_t d = 0; d < 2; ++d) {
                size_t f = full | (d << (n - 1 - i)) | (d << (n - 1 - j));
                s += w.t.at(f);
            }
            r.at(idx) = s;
        }
        w.t = std::move(r);
        w.legs = std::move(rl);
    }
}

// Contract two work tensors over all shared edge ids.
inline Work contract_pair(const Work& a, const Work& b) {
    std::vector<int> shared;
    for (int la : a.legs)
        if (std::find(b.legs.begin(), b.legs.end(), la) != b.legs.end()) shared.push_back(la);

    std::vector<int> afree, bfree;
    std::vector<int> apos_s, bpos_s, apos_f, bpos_f;
    for (size_t i = 0; i < a.legs.size(); ++i) {
        if (std::find(shared.begin(), shared.end(), a.legs[i]) != shared.end()) apos_s.push_back(int(i));
        else { afree.push_back(a.legs[i]); apos_f.push_back(int(i)); }
    }
    for (int s : shared) {
        auto it = std::find(b.legs.begin(), b.legs.end(), s);
        bpos_s.push_back(int(it - b.legs.begin()));
    }
    // align apos_s with `shared` order
    {
        std::vector<int> aligned;
        for (int s : shared) {
            auto it = std::find(a.legs.begin(), a.legs.end(), s);
            aligned.push_back(int(it - a.legs.begin()));
        }
        apos_s = aligned;
    }
    for (size_t i = 0; i < b.legs.size(); ++i)
        if (std::find(shared.begin(), shared.end(), b.legs[i]) == shared.end()) { bfree.push_back(b.legs[i]); bpos_f.push_back(int(i)); }

    int na = a.t.legs, nb = b.t.legs, ns = int(shared.size());
    Work r;
    r.legs = afree;
    r.legs.insert(r.legs.end(), bfree.begin(), bfree.end());
    r.t = Tensor(int(r.legs.size()));

    size_t n_af = afree.size(), n_bf = bfree.size();
    for (size_t ia = 0; ia < (size_t(1) << n_af); ++ia)
        for (size_t ib = 0; ib < (size_t(1) << n_bf); ++ib) {
            Complex s = 0;
            for (size_t is = 0; is < (size_t(1) << ns); ++is) {
                size_t fa = 0, fb = 0;
                for (size_t k = 0; k < n_af; ++k) fa |= ((ia >> (n_af - 1 - k)) & 1) << (na - 1 - apos_f[k]);
                for (size_t k = 0; k < size_t(ns); ++k) {
                    size_t bit = (is >> (ns - 1 - k)) & 1;
                    fa |= bit << (na - 1 - apos_s[k]);
                    fb |= bit << (nb - 1 - bpos_s[k]);
                }
                for (size_t k = 0; k < n_bf; ++k) fb |= ((ib >> (n_bf - 1 - k)) & 1) << (nb - 1 - bpos_f[k]);
                s += a.t.at(fa) * b.t.at(fb);
            }
            r.t.at((ia << n_bf) | ib) = s;
        }
    return r;
}

} // namespace detail

inline int leg_budget_from_env() {
    if (const char* s = std::getenv("WT_LEG_BUDGET")) {
        int v = std::atoi(s);
        if (v > 0) return v;
    }
    return kDefaultLegBudget;
}

// Contracts the diagram's tensor network under the model. Wires are
// identities, crossings are implicit, cups and caps come out of the edge
// formalism for free. Result legs are ordered (outputs..., inputs...).
// Contraction order is greedy by smallest intermediate tensor; correctness is
// order-independent.
inline Tensor evaluate(const Diagram& d, const Model& m, int leg_budget = kDefaultLegBudget) {
    d.ensure_valid();
    if (d.boundary_count() > leg_budget)
        throw EvalError("diagram has " + std::to_string(d.boundary_count()) + " open legs, budget is " +
                        std::to_string(leg_budget));
    int cap = std::max(leg_budget, 16);

    // incident edge ids per node; boundary slot -> edge id
    std::map<int, std::vector<int>> node_legs;
    std::map<int, int> boundary_edge;
    std::map<int, int> edge_boundary_count;
    for (size_t ei = 0; ei < d.edges.size(); ++ei) {
        const Edge& ed = d.edges[ei];
        for (const Endpoint* p : {&ed.a, &ed.b}) {
            if (p->is_boundary) {
                boundary_edge[p->id] = int(ei);
                edge_boundary_count[int(ei)]++;
            } else {
                node_legs[p->id].push_back(int(ei));
            }
        }
    }

    std::vector<detail::Work> work;
    for (const auto& [id, n] : d.nodes) {
        detail::Work w;
        w.legs = node_legs.count(id) ? node_legs[id] : std::vector<int>{};
        w.t = generator_tensor(n, int(w.legs.size()), m);
        detail::trace_duplicates(w);
        work.push_back(std::move(w));
    }

    // contract while any pair shares an edge, smallest result first
    for (;;) {
        int bi = -1, bj = -1, best = 1 << 30;
        for (size_t i = 0; i < work.size(); ++i)
            for (size_t j = i + 1; j < work.size(); ++j) {
                int ns = 0;
                for (int l : work[i].legs)
                    if (std::find(work[j].legs.begin(), work[j].legs.end(), l) != work[j].legs.end()) ++ns;
                if (ns == 0) continue;
                int result = int(work[i].legs.size()) + int(work[j].legs.size()) - 2 * ns;
                if (result < best) { best = result; bi = int(i); bj = int(j); }
            }
        if (bi < 0) break;
        if (best > cap) throw EvalError("intermediate tensor exceeds leg budget");
        detail::Work merged = detail::contract_pair(work[bi], work[bj]);
        detail::trace_duplicates(merged);
        work.erase(work.begin() + bj);
        work.erase(work.begin() + bi);
        work.push_back(std::move(merged));
    }

    // fold disconnected components into one tensor (plain outer product)
    detail::Work total;
    total.t = Tensor::scalar(std::pow(2.0, d.bare_loops));
    for (auto& w : work) {
        if (int(total.legs.size() + w.legs.size()) > cap) throw EvalError("tensor exceeds leg budget");
        total = detail::contract_pair(total, w);
    }

    // final legs in boundary order (outputs then inputs); bare boundary-to-
    // boundary wires appear as identity constraints between two slots.
    std::vector<int> slots;
    for (int b : d.outputs) slots.push_back(b);
    for (int b : d.inputs) slots.push_back(b);
    int nb = int(slots.size());

    Tensor out(nb);
    std::map<int, int> legpos;  // edge id -> position in total.legs
    for (size_t i = 0; i < total.legs.size(); ++i) legpos[total.legs[i]] = int(i);

    int nt = total.t.legs;
    for (size_t idx = 0; idx < out.size(); ++idx) {
        // bit per boundary slot, MSB first
        std::map<int, int> edge_val;
        bool consistent = true;
        for (int k = 0; k < nb; ++k) {
            int bit = int((idx >> (nb - 1 - k)) & 1);
            int eid = boundary_edge.at(slots[k]);
            auto it = edge_val.find(eid);
            if (it == edge_val.end()) edge_val[eid] = bit;
            else if (it->second != bit) { consistent = false; break; }
        }
        if (!consistent) continue;  // bare wire forces equal bits
        size_t full = 0;
        bool covered = true;
        for (auto& [eid, bit] : edge_val) {
            if (edge_boundary_count[eid] == 2) continue;  // pure wire, no tensor leg
            auto it = legpos.find(eid);
            if (it == legpos.end()) { covered = false; break; }
            full |= size_t(bit) << (nt - 1 - it->second);
        }
        if (!covered) throw EvalError("internal error: dangling boundary leg");
        out.at(idx) = total.t.at(full);
    }
    return out;
}

// Matrix of a diagram: rows indexed by output bits, columns by input bits.
inline Matrix evaluate_matrix(const Diagram& d, const Model& m, int leg_budget = kDefaultLegBudget) {
    return as_matrix(evaluate(d, m, leg_budget), int(d.outputs.size()));
}

} // namespace wtcalc
