#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "rational.hpp"
#include "rules.hpp"
#include "soundness.hpp"

namespace wtcalc {

// Variables are quarter-log2 exponents x_{f,k} for f in {u,v,g,h}, k = 0..K,
// plus x_xi. The coefficient conditions of the idealized rewrites are
// multiplicative in powers of 2^{1/4}, hence linear here.

enum class Family : int { U = 0, V = 1, G = 2, H = 3 };

struct VarId {
    bool is_xi = false;
    Family f = Family::U;
    int k = 0;

    int code() const { return is_xi ? 1'000'000 : int(f) * 1000 + k; }
    friend bool operator<(const VarId& a, const VarId& b) { return a.code() < b.code(); }
    friend bool operator==(const VarId& a, const VarId& b) { return a.code() == b.code(); }

    std::string str() const {
        if (is_xi) return "xi";
        static const char* fam = "uvgh";
        return std::string(1, fam[int(f)]) + std::to_string(k);
    }
    static VarId xi() { VarId v; v.is_xi = true; return v; }
    static VarId of(Family f, int k) { VarId v; v.f = f; v.k = k; return v; }
};

struct Equation {
    std::map<VarId, Rat> coeffs;
    Rat rhs{0};
    std::string provenance;

    std::string str() const {
        std::string s;
        bool first = true;
        for (const auto& [v, c] : coeffs) {
            if (c == Rat(0)) continue;
            if (!first) s += " + ";
            if (c != Rat(1)) s += rational_str(c) + "*";
            s += v.str();
            first = false;
        }
        if (first) s = "0";
        s += " = " + rational_str(rhs);
        return s;
    }
};

struct ConstraintSystem {
    int K = 6;
    std::vector<Equation> equations;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Constraint registry. Each named constraint is the exact coefficient
// condition under which the matching idealized rewrite is sound; `schema`
// names the rewrite the soundness checker uses to cross-validate.

struct ConstraintSpec {
    std::string name;
    std::string schema;  // empty when the constraint is not a single rewrite
    std::function<std::vector<Equation>(int K)> make;
};

namespace detail {

inline Equation eq1(VarId v, Rat rhs, std::string prov) {
    Equation e;
    e.coeffs[v] = Rat(1);
    e.rhs = rhs;
    e.provenance = std::move(prov);
    return e;
}

inline std::vector<ConstraintSpec> make_registry() {
    using F = Family;
    std::vector<ConstraintSpec> r;
    auto add = [&](std::string name, std::string schema,
                   std::function<std::vector<Equation>(int)> f) {
        r.push_back({std::move(name), std::move(schema), std::move(f)});
    };

    add("IdZ", "idealized/Id_Z", [](int) {
        return std::vector<Equation>{eq1(VarId::of(F::U, 2), Rat(0), "IdZ")};
    });
    add("UnitR_CounitZ", "idealized/Unit_R", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::U, 3)] = Rat(1);
        e.coeffs[VarId::of(F::U, 1)] = Rat(1);
        e.rhs = Rat(0);
        e.provenance = "UnitR_CounitZ";
        return std::vector<Equation>{e};
    });
    add("CopyZR", "idealized/Copy_ZR", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::U, 3)] = Rat(1);
        e.coeffs[VarId::of(F::U, 1)] = Rat(-1);
        e.rhs = Rat(2);
        e.provenance = "CopyZR";
        return std::vector<Equation>{e};
    });
    add("BialgZR", "idealized/Bialg_ZR", [](int) {
        return std::vector<Equation>{eq1(VarId::of(F::U, 3), Rat(1), "BialgZR")};
    });
    add("FuseZ", "idealized/Fuse_Z", [](int K) {
        std::vector<Equation> es;
        for (int k = 0; k <= K; ++k) {
            if (k == 1) continue;  // x_{u,1} = x_{u,1}
            Equation e;
            e.coeffs[VarId::of(F::U, k)] = Rat(1);
            e.coeffs[VarId::of(F::U, 1)] += Rat(k - 2);
            e.rhs = Rat(0);
            e.provenance = "FuseZ[k=" + std::to_string(k) + "]";
            es.push_back(e);
        }
        return es;
    });
    add("SpecialZ", "idealized/Special_Z", [](int) {
        return std::vector<Equation>{eq1(VarId::of(F::U, 3), Rat(0), "SpecialZ")};
    });
    add("IdH", "idealized/Id_H", [](int) {
        return std::vector<Equation>{eq1(VarId::of(F::H, 2), Rat(-2), "IdH")};
    });
    add("Not", "idealized/Not", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::U, 3)] = Rat(1);
        e.coeffs[VarId::of(F::H, 1)] = Rat(1);
        e.coeffs[VarId::of(F::H, 2)] = Rat(2);
        e.rhs = Rat(-4);
        e.provenance = "Not";
        return std::vector<Equation>{e};
    });
    add("SwitchZG", "idealized/Switch_ZG", [](int K) {
        std::vector<Equation> es;
        for (int k = 0; k <= K; ++k) {
            Equation e;
            e.coeffs[VarId::of(F::G, k)] = Rat(1);
            e.coeffs[VarId::of(F::H, 2)] = Rat(-k);
            e.coeffs[VarId::of(F::U, k)] += Rat(-1);
            e.rhs = Rat(4);
            e.provenance = "SwitchZG[k=" + std::to_string(k) + "]";
            es.push_back(e);
        }
        return es;
    });
    add("MultZH", "idealized/Mult_ZH", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::H, 1)] = Rat(1);
        e.coeffs[VarId::of(F::U, 3)] = Rat(1);
        e.rhs = Rat(0);
        e.provenance = "MultZH";
        return std::vector<Equation>{e};
    });
    add("UnitZH", "idealized/Unit_ZH", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::H, 1)] = Rat(1);
        e.coeffs[VarId::of(F::U, 1)] = Rat(-1);
        e.rhs = Rat(0);
        e.provenance = "UnitZH";
        return std::vector<Equation>{e};
    });
    add("BialgZG", "idealized/Bialg_ZG", [](int K) {
        std::vector<Equation> es;
        for (int k = 1; k <= K; ++k) {
            Equation e;
            e.coeffs[VarId::of(F::G, k)] = Rat(1);
            e.coeffs[VarId::of(F::U, k)] = Rat(1);
            e.rhs = Rat(0);
            e.provenance = "BialgZG[g" + std::to_string(k) + "]";
            es.push_back(e);
            if (k != 1) {
                Equation e2;
                e2.coeffs[VarId::of(F::U, k)] = Rat(1);
                e2.coeffs[VarId::of(F::U, 1)] += Rat(k - 2);
                e2.rhs = Rat(0);
                e2.provenance = "BialgZG[u" + std::to_string(k) + "]";
                es.push_back(e2);
            }
        }
        return es;
    });
    add("BialgZH", "idealized/Bialg_ZH", [](int K) {
        std::vector<Equation> es;
        for (int k = 1; k <= K; ++k) {
            Equation e;
            e.coeffs[VarId::of(F::U, k)] = Rat(1);
            e.coeffs[VarId::of(F::H, k)] = Rat(1);
            e.rhs = Rat(-2);
            e.provenance = "BialgZH[h" + std::to_string(k) + "]";
            es.push_back(e);
            if (k != 1) {
                Equation e2;
                e2.coeffs[VarId::of(F::U, k)] = Rat(1);
                e2.coeffs[VarId::of(F::U, 1)] += Rat(k - 2);
                e2.rhs = Rat(0);
                e2.provenance = "BialgZH[u" + std::to_string(k) + "]";
                es.push_back(e2);
            }
        }
        return es;
    });
    add("FuseH", "idealized/Fuse_H", [](int K) {
        std::vector<Equation> es;
        for (int k = 0; k <= K; ++k)
            es.push_back(eq1(VarId::of(F::H, k), Rat(-k), "FuseH[k=" + std::to_string(k) + "]"));
        return es;
    });
    add("OrthZH", "idealized/Orth_ZH", [](int) {
        return std::vector<Equation>{eq1(VarId::of(F::U, 1), Rat(-2), "OrthZH")};
    });
    add("DilemZH", "idealized/Dilem_ZH", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::U, 1)] = Rat(1);
        e.coeffs[VarId::of(F::H, 1)] = Rat(-1);
        e.coeffs[VarId::of(F::H, 2)] = Rat(2);
        e.rhs = Rat(-4);
        e.provenance = "DilemZH";
        return std::vector<Equation>{e};
    });
    add("AvgZH", "idealized/Avg_ZH", [](int) {
        Equation e;
        e.coeffs[VarId::of(F::U, 3)] = Rat(1);
        e.coeffs[VarId::of(F::H, 1)] = Rat(-1);
        e.coeffs[VarId::of(F::H, 2)] = Rat(2);
        e.rhs = Rat(-4);
        e.provenance = "AvgZH";
        return std::vector<Equation>{e};
    });
    // Denotational block: identity/NOT/Hadamard denotations, CNOT and
    // C^{k-1}Z gadgets exact, degree-0 boxes denote their parameter.
    add("Denotational", "", [](int K) {
        std::vector<Equation> es;
        es.push_back(eq1(VarId::of(F::U, 2), Rat(0), "Denotational[u2]"));
        es.push_back(eq1(VarId::of(F::V, 2), Rat(0), "Denotational[v2]"));
        es.push_back(eq1(VarId::xi(), Rat(0), "Denotational[xi]"));
        es.push_back(eq1(VarId::of(F::U, 3), Rat(1), "Denotational[u3]"));
        es.push_back(eq1(VarId::of(F::V, 3), Rat(1), "Denotational[v3]"));
        es.push_back(eq1(VarId::of(F::G, 3), Rat(-1), "Denotational[g3]"));
        for (int k = 0; k <= K; ++k)
            es.push_back(eq1(VarId::of(F::H, k), Rat(-k), "Denotational[h" + std::to_string(k) + "]"));
        return es;
    });
    // Both colour-switch rewrites: u_k = v_k and g_k = 2 h_2^k u_k.
    add("Change", "idealized/Switch_ZR", [](int K) {
        std::vector<Equation> es;
        for (int k = 0; k <= K; ++k) {
            Equation e;
            e.coeffs[VarId::of(F::U, k)] = Rat(1);
            e.coeffs[VarId::of(F::V, k)] = Rat(-1);
            e.rhs = Rat(0);
            e.provenance = "Change[uv" + std::to_string(k) + "]";
            es.push_back(e);
            Equation e2;
            e2.coeffs[VarId::of(F::G, k)] = Rat(1);
            e2.coeffs[VarId::of(F::H, 2)] = Rat(-k);
            e2.coeffs[VarId::of(F::U, k)] += Rat(-1);
            e2.rhs = Rat(4);
            e2.provenance = "Change[g" + std::to_string(k) + "]";
            es.push_back(e2);
        }
        return es;
    });
    add("KetZeroExact", "", [](int) {
        return std::vector<Equation>{eq1(VarId::of(F::U, 1), Rat(-2), "KetZeroExact")};
    });
    return r;
}

} // namespace detail

inline const std::vector<ConstraintSpec>& constraint_registry() {
    static const std::vector<ConstraintSpec> r = detail::make_registry();
    return r;
}

inline const ConstraintSpec* find_constraint(const std::string& name) {
    for (const auto& c : constraint_registry())
        if (c.name == name) return &c;
    return nullptr;
}

inline ConstraintSystem compile(const std::vector<std::string>& names, int K = 6) {
    if (K < 4) throw SolverError("K must be at least 4");
    ConstraintSystem sys;
    sys.K = K;
    for (const auto& n : names) {
        const ConstraintSpec* c = find_constraint(n);
        if (!c) throw SolverError("unknown constraint '" + n + "'");
        for (auto& e : c->make(K)) sys.equations.push_back(std::move(e));
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Exact Gaussian elimination.

struct Conflict {
    // The contradiction presented as a pair of provenance-tagged facts.
    std::string derived;                    // e.g. "u3 = 1"
    std::vector<std::string> derived_from;  // provenances supporting it
    std::string clashing;                   // e.g. "u3 = 0"
    std::string clashing_from;
    std::vector<std::string> support;       // deletion-minimal original equation set
};

struct Solution {
    bool unsat = false;
    std::map<VarId, Rat> determined;
    std::vector<VarId> free_vars;
    std::vector<std::string> relations;  // residual relations among free variables
    Conflict conflict;                   // when unsat
};

namespace detail {

struct Row {
    std::map<VarId, Rat> c;
    Rat rhs{0};
    std::set<size_t> prov;  // original equation indices
};

inline void row_cleanup(Row& r) {
    for (auto it = r.c.begin(); it != r.c.end();)
        it = (it->second == Rat(0)) ? r.c.erase(it) : std::next(it);
}

// Returns reduced rows; sets *bad to the index of a contradictory row if any.
inline std::vector<Row> eliminate(std::vector<Row> rows, int* bad) {
    *bad = -1;
    std::vector<Row> done;
    std::set<VarId> used_pivots;
    for (;;) {
        // pick the lowest-coded unused pivot variable present in any row
        const VarId* pivot_var = nullptr;
        size_t pivot_row = 0;
        for (size_t i = 0; i < rows.size(); ++i) {
            row_cleanup(rows[i]);
            if (rows[i].c.empty()) continue;
            const VarId& v = rows[i].c.begin()->first;
            if (used_pivots.count(v)) continue;
            if (!pivot_var || v < *pivot_var) {
                pivot_var = &rows[i].c.begin()->first;
                pivot_row = i;
            }
        }
        if (!pivot_var) break;
        VarId pv = *pivot_var;
        Row prow = rows[pivot_row];
        rows.erase(rows.begin() + pivot_row);
        Rat pc = prow.c.at(pv);
        for (auto& [v, cc] : prow.c) cc /= pc;
        prow.rhs /= pc;
        for (auto& r : rows) {
            auto it = r.c.find(pv);
            if (it == r.c.end()) continue;
            Rat f = it->second;
            for (const auto& [v, cc] : prow.c) r.c[v] -= f * cc;
            r.rhs -= f * prow.rhs;
            r.prov.insert(prow.prov.begin(), prow.prov.end());
            row_cleanup(r);
        }
        for (auto& r : done) {
            auto it = r.c.find(pv);
            if (it == r.c.end()) continue;
            Rat f = it->second;
            for (const auto& [v, cc] : prow.c) r.c[v] -= f * cc;
            r.rhs -= f * prow.rhs;
            r.prov.insert(prow.prov.begin(), prow.prov.end());
            row_cleanup(r);
        }
        done.push_back(std::move(prow));
        used_pivots.insert(pv);
    }
    // any remaining rows are 0 = rhs
    for (auto& r : rows) {
        if (r.rhs != Rat(0)) {
            done.push_back(r);
            *bad = int(done.size()) - 1;
            return done;
        }
    }
    return done;
}

inline bool subset_unsat(const std::vector<Equation>& eqs, const std::set<size_t>& keep) {
    std::vector<Row> rows;
    for (size_t i : keep) {
        Row r;
        for (const auto& [v, c] : eqs[i].coeffs) r.c[v] = c;
        r.rhs = eqs[i].rhs;
        r.prov = {i};
        rows.push_back(std::move(r));
    }
    int bad = -1;
    eliminate(std::move(rows), &bad);
    return bad >= 0;
}

} // namespace detail

// Exact elimination over rationals. On inconsistency: reports the clash as a
// pair of provenance-tagged equations plus a deletion-minimal set of original
// equations (removing any one member makes the rest satisfiable).
inline Solution solve(const ConstraintSystem& sys) {
    Solution sol;
    std::vector<detail::Row> rows;
    for (size_t i = 0; i < sys.equations.size(); ++i) {
        detail::Row r;
        for (const auto& [v, c] : sys.equations[i].coeffs) r.c[v] = c;
        r.rhs = sys.equations[i].rhs;
        r.prov = {i};
        rows.push_back(std::move(r));
    }
    int bad = -1;
    std::vector<detail::Row> red = detail::eliminate(std::move(rows), &bad);

    if (bad >= 0) {
        sol.unsat = true;
        std::set<size_t> support = red[bad].prov;
        // deletion-based shrink, deterministic under provenance order
        for (size_t cand : std::set<size_t>(support)) {
            std::set<size_t> test = support;
            test.erase(cand);
            if (detail::subset_unsat(sys.equations, test)) support = test;
        }
        // present as a derived pair: reduce the last member against the rest
        size_t last = *support.rbegin();
        std::set<size_t> rest = support;
        rest.erase(last);
        std::vector<detail::Row> rrows;
        for (size_t i : rest) {
            detail::Row r;
            for (const auto& [v, c] : sys.equations[i].coeffs) r.c[v] = c;
            r.rhs = sys.equations[i].rhs;
            r.prov = {i};
            rrows.push_back(std::move(r));
        }
        int bad2 = -1;
        std::vector<detail::Row> rred = detail::eliminate(std::move(rrows), &bad2);
        // substitute determined values into the last equation
        Equation derived;
        derived.coeffs = sys.equations[last].coeffs;
        Rat rhs = sys.equations[last].rhs;
        detail::Row lr;
        for (const auto& [v, c] : derived.coeffs) lr.c[v] = c;
        lr.rhs = rhs;
        for (const auto& pr : rred) {
            if (pr.c.empty()) continue;
            VarId pv = pr.c.begin()->first;
            auto it = lr.c.find(pv);
            if (it == lr.c.end()) continue;
            Rat f = it->second;
            for (const auto& [v, cc] : pr.c) lr.c[v] -= f * cc;
            lr.rhs -= f * pr.rhs;
            detail::row_cleanup(lr);
        }
        // lr is now 0 = residual; the implied fact is lhs(last) = rhs - residual
        Equation implied;
        implied.coeffs = sys.equations[last].coeffs;
        implied.rhs = sys.equations[last].rhs - lr.rhs;
        sol.conflict.derived = implied.str();
        for (size_t i : rest) sol.conflict.derived_from.push_back(sys.equations[i].provenance);
        sol.conflict.clashing = sys.equations[last].str();
        sol.conflict.clashing_from = sys.equations[last].provenance;
        for (size_t i : support) sol.conflict.support.push_back(sys.equations[i].provenance);
        return sol;
    }

    // classify variables
    std::set<VarId> universe;
    for (int k = 0; k <= sys.K; ++k)
        for (Family f : {Family::U, Family::V, Family::G, Family::H}) universe.insert(VarId::of(f, k));
    universe.insert(VarId::xi());

    std::set<VarId> pivots, in_some_row;
    for (const auto& r : red) {
        if (r.c.empty()) continue;
        pivots.insert(r.c.begin()->first);
        for (const auto& [v, c] : r.c) in_some_row.insert(v);
    }
    for (const auto& r : red) {
        if (r.c.empty()) continue;
        if (r.c.size() == 1) {
            sol.determined[r.c.begin()->first] = r.rhs / r.c.begin()->second;
        } else {
            Equation rel;
            rel.coeffs = r.c;
            rel.rhs = r.rhs;
            sol.relations.push_back(rel.str());
        }
    }
    for (const auto& v : universe)
        if (!sol.determined.count(v)) sol.free_vars.push_back(v);
    return sol;
}

// ---------------------------------------------------------------------------
// Cross-check: rebuild a model from a solution's exponents and run the
// soundness checker on the named constraints' rewrites (or any schema name).

struct CrossCheckEntry {
    std::string name;
    CheckReport report;
};

inline Model model_from_solution(const Solution& sol, int K) {
    Model m;
    m.name = "solved";
    m.tag = CalculusTag::Hybrid;
    bool v_any = false;
    for (int k = 0; k <= K; ++k)
        if (sol.determined.count(VarId::of(Family::V, k))) v_any = true;
    for (int k = 0; k <= K; ++k) {
        auto get = [&](Family f) -> std::optional<Rat> {
            auto it = sol.determined.find(VarId::of(f, k));
            if (it == sol.determined.end()) return std::nullopt;
            return it->second;
        };
        if (auto q = get(Family::U)) m.u.overrides[k] = *q;
        if (auto q = get(Family::V)) m.v.overrides[k] = *q;
        else if (!v_any) {
            // Ockhamic ZX convention: red dots share the green family
            if (auto q = get(Family::U)) m.v.overrides[k] = *q;
        }
        if (auto q = get(Family::G)) m.g.overrides[k] = *q;
        if (auto q = get(Family::H)) m.h.overrides[k] = *q;
    }
    // base power law zero; only the overrides carry values
    m.u.a = m.u.b = m.v.a = m.v.b = m.g.a = m.g.b = m.h.a = m.h.b = Rat(0);
    if (auto it = sol.determined.find(VarId::xi()); it != sol.determined.end()) m.xi_exp = it->second;
    return m;
}

inline std::vector<CrossCheckEntry> cross_check(const Solution& sol, const std::vector<std::string>& names,
                                                int K = 6, double tol = 1e-9) {
    if (sol.unsat) throw SolverError("cross_check: solution is unsat");
    Model m = model_from_solution(sol, K);

    std::vector<CrossCheckEntry> out;
    for (const auto& n : names) {
        std::string schema_name = n;
        if (const ConstraintSpec* c = find_constraint(n)) {
            if (c->schema.empty()) continue;  // no single rewrite attached
            // precondition: every variable in the compiled equations is pinned
            for (const auto& e : c->make(K))
                for (const auto& [v, coeff] : e.coeffs) {
                    if (coeff == Rat(0)) continue;
                    bool have = sol.determined.count(v) ||
                                (v.f == Family::V && !v.is_xi && sol.determined.count(VarId::of(Family::U, v.k)));
                    if (!have)
                        throw SolverError("cross_check: free variable " + v.str() + " needed by " + n);
                }
            schema_name = c->schema;
        }
        const RuleSchema* schema = find_schema(schema_name);
        if (!schema) throw SolverError("cross_check: unknown rule '" + n + "'");
        Sampling s;
        s.max_degree = K;  // the rebuilt families are only pinned up to degree K
        out.push_back({n, check_schema(*schema, m, s, tol)});
    }
    return out;
}

// A pure power-law family x_{f,k} = a*k + b satisfies a for-all-k condition
// exactly when the linear forms match; since every registry equation is
// affine in k, checking k = 0..K+1 in rational arithmetic decides it.
inline bool powerlaw_satisfies(const std::string& constraint, const Model& m, int K = 8) {
    const ConstraintSpec* c = find_constraint(constraint);
    if (!c) throw SolverError("unknown constraint '" + constraint + "'");
    auto exp_of = [&](const VarId& v) -> Rat {
        if (v.is_xi) return m.xi_exp;
        const CoeffFamily* f = v.f == Family::U ? &m.u : v.f == Family::V ? &m.v : v.f == Family::G ? &m.g : &m.h;
        return f->exponent(v.k);
    };
    for (const auto& e : c->make(K)) {
        Rat lhs{0};
        for (const auto& [v, coeff] : e.coeffs) lhs += coeff * exp_of(v);
        if (lhs != e.rhs) return false;
    }
    return true;
}

} // namespace wtcalc
