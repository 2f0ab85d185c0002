#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "model.hpp"
#include "rules.hpp"
#include "semantics.hpp"
#include "tensor.hpp"

namespace wtcalc {

enum class Verdict { Sound, ProportionallySound, Unsound };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Sound: return "Sound";
        case Verdict::ProportionallySound: return "ProportionallySound";
        case Verdict::Unsound: return "Unsound";
    }
    return "?";
}

struct InstanceRecord {
    std::string binding_key;
    Verdict verdict;
    Complex lambda{1, 0};
    double max_dev = 0;
};

struct CheckReport {
    std::string schema;   // family/name
    std::string model;
    std::string grid;     // human-readable sampling description
    std::vector<InstanceRecord> records;
    Verdict aggregate = Verdict::Sound;
    bool lambda_constant = false;
    Complex lambda{1, 0};  // meaningful when aggregate is ProportionallySound and constant

    std::string to_text() const {
        std::ostringstream os;
        os << "rule: " << schema << "\n";
        os << "model: " << model << "\n";
        os << "grid: " << grid << "\n";
        for (const auto& r : records) {
            os << "instance " << (r.binding_key.empty() ? "-" : r.binding_key) << ": " << verdict_name(r.verdict);
            if (r.verdict == Verdict::ProportionallySound)
                os << " lambda=" << r.lambda.real() << "," << r.lambda.imag();
            if (r.verdict == Verdict::Unsound) os << " dev=" << r.max_dev;
            os << "\n";
        }
        os << "aggregate: " << verdict_name(aggregate);
        if (aggregate == Verdict::ProportionallySound && lambda_constant)
            os << " lambda=" << lambda.real() << "," << lambda.imag();
        os << " (" << records.size() << " instances)\n";
        return os.str();
    }
};

inline InstanceRecord check_instance(const RuleInstance& inst, const Model& m, double tol = 1e-9,
                                     int leg_budget = kDefaultLegBudget) {
    Tensor tl = evaluate(inst.lhs, m, leg_budget);
    Tensor tr = evaluate(inst.rhs, m, leg_budget);
    CompareResult c = compare(tl, tr, tol);
    InstanceRecord r;
    r.binding_key = inst.bindings.key();
    switch (c.verdict) {
        case CompareResult::Verdict::Equal: r.verdict = Verdict::Sound; break;
        case CompareResult::Verdict::Proportional: r.verdict = Verdict::ProportionallySound; break;
        case CompareResult::Verdict::Different: r.verdict = Verdict::Unsound; break;
    }
    r.lambda = c.lambda;
    r.max_dev = c.max_dev;
    return r;
}

struct Sampling {
    int arity_cap = 3;        // per-parameter upper bound (intersected with the schema range)
    int max_legs = 12;        // skip instances with more open legs
    int max_degree = 0;       // skip instances with a node of higher degree (0 = unlimited)
    std::vector<double> phases;    // empty -> default set + 2 seeded random
    std::vector<Complex> hparams;  // empty -> default set + 1 seeded random
    int jobs = 1;
    int leg_budget = kDefaultLegBudget;
};

inline std::vector<double> default_phases(std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(0.0, 2 * M_PI);
    return {0.0, M_PI / 4, M_PI / 2, M_PI, 3 * M_PI / 2, uni(rng), uni(rng)};
}

inline std::vector<Complex> default_hparams(std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    return {{-1, 0}, {0, 0}, {1, 0}, {0, 1}, {2, 0}, {uni(rng), uni(rng)}};
}

// Enumerates the sampling grid for a schema: arity parameters over their
// declared ranges capped at `arity_cap`, angles over the phase samples
// (skipping excluded points), H-box parameters over the complex samples.
inline std::vector<Bindings> sample_bindings(const RuleSchema& schema, const Sampling& s) {
    std::mt19937 rng(std::hash<std::string>{}(schema.qualified()) & 0x7fffffff);
    std::vector<double> phases = s.phases.empty() ? default_phases(rng) : s.phases;
    std::vector<Complex> hparams = s.hparams.empty() ? default_hparams(rng) : s.hparams;

    std::vector<Bindings> out{Bindings{}};
    for (const auto& ap : schema.arities) {
        std::vector<Bindings> next;
        for (const auto& b : out)
            for (int v = ap.lo; v <= std::min(ap.hi, s.arity_cap); ++v) {
                Bindings nb = b;
                nb.arity[ap.name] = v;
                next.push_back(std::move(nb));
            }
        out = std::move(next);
    }
    for (const auto& an : schema.angles) {
        std::vector<Bindings> next;
        for (const auto& b : out)
            for (double v : phases) {
                if (an.avoid_odd_pi && is_odd_multiple_of_pi(v)) continue;
                Bindings nb = b;
                nb.angle[an.name] = v;
                next.push_back(std::move(nb));
            }
        out = std::move(next);
    }
    for (const auto& cp : schema.cparams) {
        std::vector<Bindings> next;
        for (const auto& b : out)
            for (Complex v : hparams) {
                Bindings nb = b;
                nb.cparam[cp.name] = v;
                next.push_back(std::move(nb));
            }
        out = std::move(next);
    }
    return out;
}

inline CheckReport check_schema(const RuleSchema& schema, const Model& m, const Sampling& s = Sampling{},
                                double tol = 1e-9) {
    CheckReport rep;
    rep.schema = schema.qualified();
    rep.model = m.name;
    {
        std::ostringstream g;
        g << "arities 0.." << s.arity_cap << " capped at " << s.max_legs << " legs, "
          << (s.phases.empty() ? 7 : int(s.phases.size())) << " phase samples, "
          << (s.hparams.empty() ? 6 : int(s.hparams.size())) << " H-box params";
        rep.grid = g.str();
    }

    std::vector<Bindings> grid = sample_bindings(schema, s);
    std::vector<RuleInstance> insts;
    for (const auto& b : grid) {
        RuleInstance inst = instantiate(schema, b);
        if (inst.lhs.boundary_count() > s.max_legs) continue;
        if (s.max_degree > 0) {
            int dmax = 0;
            for (const Diagram* d : {&inst.lhs, &inst.rhs})
                for (const auto& [id, n] : d->nodes) dmax = std::max(dmax, d->degree(id));
            if (dmax > s.max_degree) continue;
        }
        insts.push_back(std::move(inst));
    }

    rep.records.resize(insts.size());
    int jobs = std::max(1, s.jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < insts.size(); ++i) rep.records[i] = check_instance(insts[i], m, tol, s.leg_budget);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= insts.size()) return;
                rep.records[i] = check_instance(insts[i], m, tol, s.leg_budget);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::stable_sort(rep.records.begin(), rep.records.end(),
                     [](const InstanceRecord& a, const InstanceRecord& b) {
                         return a.binding_key < b.binding_key;
                     });

    rep.aggregate = Verdict::Sound;
    bool first_prop = true;
    rep.lambda_constant = true;
    for (const auto& r : rep.records) {
        if (r.verdict == Verdict::Unsound) rep.aggregate = Verdict::Unsound;
        if (r.verdict == Verdict::ProportionallySound) {
            if (rep.aggregate == Verdict::Sound) rep.aggregate = Verdict::ProportionallySound;
            if (first_prop) {
                rep.lambda = r.lambda;
                first_prop = false;
            } else if (std::abs(r.lambda - rep.lambda) > 1e-7 * std::max(1.0, std::abs(rep.lambda))) {
                rep.lambda_constant = false;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Condition tables: each idealized rewrite is sound exactly when one
// coefficient condition holds. A row perturbs one axis by exact quarter-log2
// steps and checks that the verdict flips precisely at the stated value.

struct ConditionAxis {
    std::string description;               // e.g. "u3"
    std::function<Model(Rat)> make_model;   // model with the axis at quarter-log q
    std::function<bool(Rat)> expected_sound;
    Rat exact;  // the quarter-log value where the rule is sound
};

struct ConditionCell {
    Rat value;
    bool expected_sound;
    bool observed_sound;
    bool ok() const { return expected_sound == observed_sound; }
};

struct ConditionRowResult {
    std::string table;  // "zx" or "zh"
    std::string rule;
    std::string axis;
    std::vector<ConditionCell> cells;
    bool ok() const {
        for (const auto& c : cells)
            if (!c.ok()) return false;
        return true;
    }
};

inline std::vector<ConditionCell> verify_condition_table(const RuleSchema& rule, const ConditionAxis& axis,
                                                         const std::vector<Rat>& values,
                                                         const Sampling& s = Sampling{}, double tol = 1e-9) {
    std::vector<ConditionCell> cells;
    for (const Rat& q : values) {
        Model m = axis.make_model(q);
        CheckReport rep = check_schema(rule, m, s, tol);
        cells.push_back({q, axis.expected_sound(q), rep.aggregate == Verdict::Sound});
    }
    return cells;
}

struct TableRowSpec {
    std::string table;
    std::string rule;  // idealized schema name
    ConditionAxis axis;
};

// Registry of all condition-table rows. Axis models start from the nu-model
// coefficients; ZX rows share one family between green and red dots.
inline std::vector<TableRowSpec> condition_table_registry() {
    std::vector<TableRowSpec> rows;
    auto zx_single = [](int k) {
        return [k](Rat q) { return ockhamic_zx({{k, q}}); };
    };
    auto zh_u = [](int k) {
        return [k](Rat q) { return ockhamic_zh({{k, q}}); };
    };
    auto zh_g = [](int k) {
        return [k](Rat q) { return ockhamic_zh({}, {{k, q}}); };
    };
    auto zh_h = [](int k) {
        return [k](Rat q) { return ockhamic_zh({}, {}, {{k, q}}); };
    };
    auto eq = [](Rat want) {
        return [want](Rat q) { return q == want; };
    };

    // ZX table
    rows.push_back({"zx", "Id_Z", {"u2", zx_single(2), eq(Rat(0)), Rat(0)}});
    rows.push_back({"zx", "Unit_R", {"u3", zx_single(3), eq(Rat(1)), Rat(1)}});      // u3 = u1^{-1}, u1 at nu default
    rows.push_back({"zx", "Counit_Z", {"u3", zx_single(3), eq(Rat(1)), Rat(1)}});
    rows.push_back({"zx", "Copy_ZR", {"u3", zx_single(3), eq(Rat(1)), Rat(1)}});     // u3 = sqrt2 * u1
    rows.push_back({"zx", "Bialg_ZR", {"u3", zx_single(3), eq(Rat(1)), Rat(1)}});    // u3 = 2^{1/4}
    rows.push_back({"zx", "Fuse_Z", {"u4 (family)", zx_single(4), eq(Rat(2)), Rat(2)}});  // u_k = u1^{2-k}
    rows.push_back({"zx", "Special_Z_green", {"u3", zx_single(3), eq(Rat(0)), Rat(0)}});  // u3 = 1

    // ZH table
    rows.push_back({"zh", "Id_Z", {"u2", zh_u(2), eq(Rat(0)), Rat(0)}});
    rows.push_back({"zh", "Id_H", {"h2", zh_h(2), eq(Rat(-2)), Rat(-2)}});            // h2 = 2^{-1/2}
    rows.push_back({"zh", "Not", {"u3", zh_u(3), eq(Rat(1)), Rat(1)}});               // u3 = (2 h1 h2^2)^{-1}
    rows.push_back({"zh", "Switch_ZG", {"g2", zh_g(2), eq(Rat(0)), Rat(0)}});         // g_k = 2 h2^k u_k
    rows.push_back({"zh", "Mult_ZH", {"h1", zh_h(1), eq(Rat(-1)), Rat(-1)}});         // h1 = u3^{-1}
    rows.push_back({"zh", "Unit_ZH", {"h1", zh_h(1), eq(Rat(-1)), Rat(-1)}});         // h1 = u1
    rows.push_back({"zh", "Bialg_ZG", {"g3 (family)", zh_g(3), eq(Rat(-1)), Rat(-1)}});  // g_k = u_k^{-1} = u1^{k-2}
    rows.push_back({"zh", "Bialg_ZH", {"h3 (family)", zh_h(3), eq(Rat(-3)), Rat(-3)}});  // u_k = (sqrt2 h_k)^{-1}
    rows.push_back({"zh", "Fuse_Z", {"u4 (family)", zh_u(4), eq(Rat(2)), Rat(2)}});
    rows.push_back({"zh", "Special_Z", {"u3", zh_u(3), eq(Rat(0)), Rat(0)}});
    rows.push_back({"zh", "Fuse_H", {"h3 (family)", zh_h(3), eq(Rat(-3)), Rat(-3)}});  // h_k = 2^{-k/4}
    rows.push_back({"zh", "Orth_ZH", {"u1", zh_u(1), eq(Rat(-2)), Rat(-2)}});          // u1 = 2^{-1/2}
    rows.push_back({"zh", "Dilem_ZH", {"u1", zh_u(1), eq(Rat(-1)), Rat(-1)}});         // u1 = h1 (2 h2^2)^{-1}
    rows.push_back({"zh", "Avg_ZH", {"u3", zh_u(3), eq(Rat(-1)), Rat(-1)}});           // u3 = h1 (2 h2^2)^{-1}
    return rows;
}

// Runs every registry row at {exact, exact+1, exact-1} quarter-log values.
inline std::vector<ConditionRowResult> run_condition_tables(const Sampling& s = Sampling{}, double tol = 1e-9) {
    std::vector<ConditionRowResult> out;
    for (const auto& row : condition_table_registry()) {
        const RuleSchema* schema = find_schema("idealized/" + row.rule);
        if (!schema) throw std::logic_error("condition table references unknown rule " + row.rule);
        ConditionRowResult r;
        r.table = row.table;
        r.rule = row.rule;
        r.axis = row.axis.description;
        r.cells = verify_condition_table(*schema, row.axis,
                                         {row.axis.exact, row.axis.exact + 1, row.axis.exact - 1}, s, tol);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Named suites.

struct SuiteSpec {
    std::string name;
    std::string family;
    std::string default_model;
};

inline std::vector<SuiteSpec> suites() {
    return {
        {"welltempered-zx", "welltempered-zx", "nu"},
        {"welltempered-zh", "welltempered-zh", "nu"},
        {"legacy-zx", "legacy-zx", "alpha"},
        {"legacy-zh", "legacy-zh", "beta"},
    };
}

inline std::vector<CheckReport> check_suite(const std::string& family, const Model& m,
                                            const Sampling& s = Sampling{}, double tol = 1e-9) {
    std::vector<CheckReport> out;
    for (const auto& schema : catalogue())
        if (schema.family == family) out.push_back(check_schema(schema, m, s, tol));
    return out;
}

} // namespace wtcalc
