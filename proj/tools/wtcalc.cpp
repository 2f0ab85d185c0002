// Command-line surface: eval, compare, check-rule, check-suite, solve,
// simplify. Exit codes: 0 success/Sound/Equal, 1 Unsound/Different/Unsat,
// 2 usage or I/O error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <wtcalc/diagram.hpp>
#include <wtcalc/model.hpp>
#include <wtcalc/rewrite.hpp>
#include <wtcalc/rules.hpp>
#include <wtcalc/semantics.hpp>
#include <wtcalc/solver.hpp>
#include <wtcalc/soundness.hpp>

using namespace wtcalc;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
}

std::string fmt_complex(Complex z) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", z.real(), z.imag());
    return buf;
}

std::string fmt_exponent(const Rat& q) {
    // value 2^{q/4} printed with a reduced exponent
    Rat e = q / 4;
    if (e == Rat(0)) return "1";
    return "2^{" + rational_str(e) + "}";
}

int run_eval(const std::string& in, const std::string& model_spec, const std::string& out_path) {
    Model m = load_model(model_spec);
    Diagram d = parse_diagram(read_file(in));
    Tensor t = evaluate(d, m, leg_budget_from_env());
    std::string dump = dump_tensor(t);
    if (out_path.empty()) std::cout << dump;
    else write_file(out_path, dump);
    return 0;
}

int run_compare(const std::string& a, const std::string& b, const std::string& model_spec, double tol) {
    Model m = load_model(model_spec);
    Diagram da = parse_diagram(read_file(a));
    Diagram db = parse_diagram(read_file(b));
    if (da.inputs.size() != db.inputs.size() || da.outputs.size() != db.outputs.size()) {
        std::cerr << "error: boundary signature mismatch\n";
        return 2;
    }
    int budget = leg_budget_from_env();
    CompareResult r = compare(evaluate(da, m, budget), evaluate(db, m, budget), tol);
    switch (r.verdict) {
        case CompareResult::Verdict::Equal:
            std::cout << "Equal\n";
            return 0;
        case CompareResult::Verdict::Proportional:
            std::cout << "Proportional lambda=" << fmt_complex(r.lambda) << "\n";
            return 1;
        case CompareResult::Verdict::Different:
            std::cout << "Different dev=" << r.max_dev << "\n";
            return 1;
    }
    return 2;
}

int run_check_rule(const std::string& rule, const std::string& model_spec, double tol, int jobs) {
    const RuleSchema* schema = find_schema(rule);
    if (!schema) {
        std::cerr << "error: unknown rule '" << rule << "'\n";
        return 2;
    }
    Model m = load_model(model_spec);
    Sampling s;
    s.jobs = jobs;
    s.leg_budget = leg_budget_from_env();
    CheckReport rep = check_schema(*schema, m, s, tol);
    std::cout << rep.to_text();
    return rep.aggregate == Verdict::Sound ? 0 : 1;
}

int run_check_suite(const std::string& suite, std::string model_spec, double tol, int jobs) {
    Sampling s;
    s.jobs = jobs;
    s.leg_budget = leg_budget_from_env();
    if (suite == "tables") {
        bool all_ok = true;
        for (const auto& row : run_condition_tables(s, tol)) {
            for (const auto& c : row.cells) {
                std::cout << "table " << row.table << " (" << row.rule << ") axis " << row.axis << ": value "
                          << fmt_exponent(c.value) << " expected "
                          << (c.expected_sound ? "sound" : "unsound") << " observed "
                          << (c.observed_sound ? "sound" : "unsound") << (c.ok() ? " OK" : " MISMATCH")
                          << "\n";
                all_ok = all_ok && c.ok();
            }
        }
        std::cout << (all_ok ? "tables: all rows match\n" : "tables: MISMATCHES FOUND\n");
        return all_ok ? 0 : 1;
    }
    std::string family;
    for (const auto& sp : suites())
        if (sp.name == suite) {
            family = sp.family;
            if (model_spec.empty()) model_spec = sp.default_model;
        }
    if (family.empty()) {
        std::cerr << "error: unknown suite '" << suite
                  << "' (want welltempered-zx|welltempered-zh|legacy-zx|legacy-zh|tables)\n";
        return 2;
    }
    Model m = load_model(model_spec);
    bool all_sound = true;
    for (const auto& rep : check_suite(family, m, s, tol)) {
        std::cout << rep.schema << ": " << verdict_name(rep.aggregate) << " (" << rep.records.size()
                  << " instances)\n";
        all_sound = all_sound && rep.aggregate == Verdict::Sound;
    }
    std::cout << "suite " << suite << ": " << (all_sound ? "Sound" : "NOT sound") << "\n";
    return all_sound ? 0 : 1;
}

int run_solve(const std::string& constraints, int K) {
    std::vector<std::string> names;
    std::stringstream ss(constraints);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) names.push_back(item);
    ConstraintSystem sys = compile(names, K);
    Solution sol = solve(sys);
    if (sol.unsat) {
        std::cout << "UNSAT: " << sol.conflict.derived << "  [";
        for (size_t i = 0; i < sol.conflict.derived_from.size(); ++i)
            std::cout << (i ? ", " : "") << sol.conflict.derived_from[i];
        std::cout << "]  conflicts with  " << sol.conflict.clashing << "  [" << sol.conflict.clashing_from
                  << "]\n";
        std::cout << "minimal support:";
        for (const auto& p : sol.conflict.support) std::cout << " " << p;
        std::cout << "\n";
        return 1;
    }
    for (const auto& [v, q] : sol.determined) {
        if (v.is_xi) std::cout << "xi = " << fmt_exponent(q) << "\n";
        else {
            static const char* fam = "uvgh";
            std::cout << fam[int(v.f)] << " " << v.k << " = " << fmt_exponent(q) << "\n";
        }
    }
    if (!sol.free_vars.empty()) {
        std::cout << "free:";
        for (const auto& v : sol.free_vars) std::cout << " " << v.str();
        std::cout << "\n";
    }
    for (const auto& r : sol.relations) std::cout << "relation: " << r << "\n";
    return 0;
}

int run_simplify(const std::string& in, const std::string& out, const std::string& validate,
                 const std::string& strategy, const std::string& trace_path) {
    Diagram d = parse_diagram(read_file(in));
    SimplifyOptions opt;
    opt.leg_budget = leg_budget_from_env();
    if (!strategy.empty()) {
        opt.strategy.clear();
        std::stringstream ss(strategy);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) opt.strategy.insert(item);
    }
    if (!validate.empty() && validate != "off") {
        opt.validate = true;
        opt.model = load_model(validate);
    }
    auto [result, trace] = simplify(d, opt);
    write_file(out, serialize(result));
    if (!trace_path.empty()) {
        std::ostringstream ts;
        for (size_t i = 0; i < trace.size(); ++i) {
            ts << i << " " << trace[i].rule << " [" << trace[i].binding << "] "
               << (trace[i].validated ? (trace[i].validation_equal ? "Equal" : "NotEqual") : "unchecked")
               << "\n";
        }
        write_file(trace_path, ts.str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"well-tempered ZX/ZH diagram calculator"};
    app.require_subcommand(1);

    std::string in, out, a, b, model, rule, suite, constraints, validate, strategy, trace;
    double tol = 1e-9;
    int K = 6, jobs = 1;

    auto* c_eval = app.add_subcommand("eval", "evaluate a diagram to a tensor dump");
    c_eval->add_option("--in", in, "diagram file")->required();
    c_eval->add_option("--model", model, "alpha|beta|nu|FILE")->required();
    c_eval->add_option("--out", out, "write the dump here instead of stdout");

    auto* c_cmp = app.add_subcommand("compare", "compare two diagrams under a model");
    c_cmp->add_option("--a", a, "first diagram")->required();
    c_cmp->add_option("--b", b, "second diagram")->required();
    c_cmp->add_option("--model", model, "alpha|beta|nu|FILE")->required();
    c_cmp->add_option("--tol", tol, "tolerance");

    auto* c_rule = app.add_subcommand("check-rule", "soundness-check one rule schema");
    c_rule->add_option("--rule", rule, "rule name, optionally family-qualified")->required();
    c_rule->add_option("--model", model, "alpha|beta|nu|FILE")->required();
    c_rule->add_option("--tol", tol, "tolerance");
    c_rule->add_option("--jobs", jobs, "worker threads for instance checks");

    auto* c_suite = app.add_subcommand("check-suite", "run a named rule suite");
    c_suite->add_option("suite", suite, "welltempered-zx|welltempered-zh|legacy-zx|legacy-zh|tables")
        ->required();
    c_suite->add_option("--model", model, "override the suite's default model");
    c_suite->add_option("--tol", tol, "tolerance");
    c_suite->add_option("--jobs", jobs, "worker threads for instance checks");

    auto* c_solve = app.add_subcommand("solve", "solve a coefficient constraint system exactly");
    c_solve->add_option("--constraints", constraints, "comma-separated constraint names")->required();
    c_solve->add_option("--K", K, "family truncation degree (default 6)");

    auto* c_simpl = app.add_subcommand("simplify", "apply the simplification strategy to a fixpoint");
    c_simpl->add_option("--in", in, "input diagram")->required();
    c_simpl->add_option("--out", out, "output diagram")->required();
    c_simpl->add_option("--validate", validate, "nu|alpha|beta|FILE|off (default off)");
    c_simpl->add_option("--strategy", strategy, "comma list of fuse,identity,hopf,hcancel,nu-merge");
    c_simpl->add_option("--trace", trace, "write a step-by-step trace here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help is a success, anything else is usage
    }

    try {
        if (c_eval->parsed()) return run_eval(in, model, out);
        if (c_cmp->parsed()) return run_compare(a, b, model, tol);
        if (c_rule->parsed()) return run_check_rule(rule, model, tol, jobs);
        if (c_suite->parsed()) return run_check_suite(suite, model, tol, jobs);
        if (c_solve->parsed()) return run_solve(constraints, K);
        if (c_simpl->parsed()) return run_simplify(in, out, validate, strategy, trace);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EvalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
