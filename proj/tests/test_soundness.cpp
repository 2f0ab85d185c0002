#include <catch2/catch_amalgamated.hpp>

#include <wtcalc/model.hpp>
#include <wtcalc/rules.hpp>
#include <wtcalc/soundness.hpp>

using namespace wtcalc;

namespace {

RuleInstance inst_of(const std::string& name, const Bindings& b = {}) {
    const RuleSchema* s = find_schema(name);
    REQUIRE(s != nullptr);
    return instantiate(*s, b);
}

} // namespace

TEST_CASE("check_instance: page-3 Spec_Z with its sqrt(2) box is Sound under nu") {
    auto rec = check_instance(inst_of("welltempered-zh/Spec_Z"), model_nu());
    CHECK(rec.verdict == Verdict::Sound);
}

TEST_CASE("check_instance: idealized Special Z is proportionally sound with sqrt(2)") {
    auto rec = check_instance(inst_of("idealized/Special_Z"), model_nu());
    REQUIRE(rec.verdict == Verdict::ProportionallySound);
    CHECK(std::abs(rec.lambda - Complex(M_SQRT2, 0)) < 1e-10);
    auto rec2 = check_instance(inst_of("idealized/Special_Z_green"), model_nu());
    REQUIRE(rec2.verdict == Verdict::ProportionallySound);
    CHECK(std::abs(rec2.lambda - Complex(M_SQRT2, 0)) < 1e-10);
}

TEST_CASE("check_instance: idealized Fuse H at (1,1,1,1) under beta has factor 2") {
    Bindings b;
    b.arity = {{"k", 1}, {"l", 1}, {"m", 1}, {"n", 1}};
    b.cparam = {{"a", {-1, 0}}};
    auto rec = check_instance(inst_of("idealized/Fuse_H", b), model_beta());
    REQUIRE(rec.verdict == Verdict::ProportionallySound);
    CHECK(std::abs(rec.lambda - Complex(2, 0)) < 1e-10);
}

TEST_CASE("check_schema: Bialg sound under nu across the grid") {
    auto rep = check_schema(*find_schema("welltempered-zx/Bialg"), model_nu());
    CHECK(rep.aggregate == Verdict::Sound);
    CHECK(rep.records.size() >= 9);
}

TEST_CASE("check_schema: legacy bialgebra with its scalar gadget sound under alpha") {
    auto rep = check_schema(*find_schema("legacy-zx/B_a"), model_alpha());
    CHECK(rep.aggregate == Verdict::Sound);
}

TEST_CASE("check_schema: idealized Orth ZH proportionally sound with 1/sqrt(2) under nu") {
    auto rep = check_schema(*find_schema("idealized/Orth_ZH"), model_nu());
    REQUIRE(rep.aggregate == Verdict::ProportionallySound);
    CHECK(rep.lambda_constant);
    CHECK(std::abs(rep.lambda - Complex(M_SQRT1_2, 0)) < 1e-10);
}

TEST_CASE("check_schema: idealized Avg ZH proportionally sound with 1/sqrt(2) under nu") {
    auto rep = check_schema(*find_schema("idealized/Avg_ZH"), model_nu());
    REQUIRE(rep.aggregate == Verdict::ProportionallySound);
    CHECK(rep.lambda_constant);
    CHECK(std::abs(rep.lambda - Complex(M_SQRT1_2, 0)) < 1e-10);
}

TEST_CASE("full well-tempered suites are sound under nu") {
    for (const char* fam : {"welltempered-zx", "welltempered-zh"}) {
        for (const auto& rep : check_suite(fam, model_nu())) {
            INFO(rep.schema);
            CHECK(rep.aggregate == Verdict::Sound);
        }
    }
}

TEST_CASE("legacy suites are sound under their own models") {
    for (const auto& rep : check_suite("legacy-zx", model_alpha())) {
        INFO(rep.schema);
        CHECK(rep.aggregate == Verdict::Sound);
    }
    for (const auto& rep : check_suite("legacy-zh", model_beta())) {
        INFO(rep.schema);
        CHECK(rep.aggregate == Verdict::Sound);
    }
}

TEST_CASE("derived rules are sound under nu") {
    for (const auto& rep : check_suite("derived", model_nu())) {
        INFO(rep.schema);
        CHECK(rep.aggregate == Verdict::Sound);
    }
}

TEST_CASE("condition tables reproduce every row") {
    for (const auto& row : run_condition_tables()) {
        INFO(row.table << " " << row.rule << " axis " << row.axis);
        for (const auto& c : row.cells) {
            INFO("value 2^{" << rational_str(c.value) << "/4} expected "
                             << (c.expected_sound ? "sound" : "unsound"));
            CHECK(c.expected_sound == c.observed_sound);
        }
    }
}

TEST_CASE("verify_condition_table: Special Z flips at u3 = 1 vs 2^{1/4}") {
    const RuleSchema* sz = find_schema("idealized/Special_Z");
    ConditionAxis axis{"u3", [](Rat q) { return ockhamic_zh({{3, q}}); }, [](Rat q) { return q == Rat(0); },
                       Rat(0)};
    auto cells = verify_condition_table(*sz, axis, {Rat(0), Rat(1)});
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].observed_sound);       // u3 = 1
    CHECK_FALSE(cells[1].observed_sound); // u3 = 2^{1/4}
}

TEST_CASE("verify_condition_table: Bialg ZG on and off the family manifold") {
    const RuleSchema* bg = find_schema("idealized/Bialg_ZG");
    // on-manifold: g_k = u_k^{-1} = u1^{k-2} (the nu defaults); off: perturb g3
    auto cells = verify_condition_table(
        *bg, {"g-family", [](Rat q) { return ockhamic_zh({}, {{3, q}}); }, [](Rat q) { return q == Rat(-1); },
              Rat(-1)},
        {Rat(-1), Rat(0), Rat(-2)});
    CHECK(cells[0].observed_sound);
    CHECK_FALSE(cells[1].observed_sound);
    CHECK_FALSE(cells[2].observed_sound);
}

TEST_CASE("verify_condition_table: Unit R / Counit Z flip together at u3 = u1^{-1}") {
    for (const char* rule : {"idealized/Unit_R", "idealized/Counit_Z"}) {
        const RuleSchema* s = find_schema(rule);
        auto cells = verify_condition_table(
            *s, {"u3", [](Rat q) { return ockhamic_zx({{3, q}}); }, [](Rat q) { return q == Rat(1); }, Rat(1)},
            {Rat(1), Rat(2), Rat(0)});
        INFO(rule);
        CHECK(cells[0].observed_sound);
        CHECK_FALSE(cells[1].observed_sound);
        CHECK_FALSE(cells[2].observed_sound);
    }
}

TEST_CASE("bialgebra and specialness exclude each other on tested models") {
    const RuleSchema* bi = find_schema("idealized/Bialg_ZR");
    const RuleSchema* sp = find_schema("idealized/Special_Z");
    Sampling s;
    s.arity_cap = 2;
    for (Rat u3 : {Rat(-2), Rat(-1), Rat(0), Rat(1), Rat(2)}) {
        for (Rat u1 : {Rat(-2), Rat(-1), Rat(0)}) {
            Model m = ockhamic_zx({{1, u1}, {3, u3}});
            bool bialg_ok = check_schema(*bi, m, s).aggregate == Verdict::Sound;
            bool spec_ok = check_schema(*sp, m, s).aggregate == Verdict::Sound;
            INFO("u1=2^{" << rational_str(u1) << "/4} u3=2^{" << rational_str(u3) << "/4}");
            CHECK_FALSE((bialg_ok && spec_ok));
        }
    }
}

TEST_CASE("with u1 = 2^{-1/2}: at most one of each incompatible family is sound") {
    Sampling s;
    s.arity_cap = 2;
    for (Rat u3 : {Rat(-2), Rat(-1), Rat(0), Rat(1), Rat(2)}) {
        Model m = ockhamic_zx({{1, Rat(-2)}, {3, u3}});
        int basis_group = 0;
        for (const char* r : {"idealized/Counit_Z", "idealized/Bialg_ZR", "idealized/Copy_ZR"})
            if (check_schema(*find_schema(r), m, s).aggregate == Verdict::Sound) ++basis_group;
        int frob_group = 0;
        // Fuse_Z needs the whole family on its manifold; pin u_k = u1^{2-k}
        std::map<int, Rat> fam;
        for (int k = 0; k <= 8; ++k) fam[k] = Rat(2 - k) * Rat(-2);
        fam[3] = u3;
        fam[1] = Rat(-2);
        Model mf = ockhamic_zx(fam);
        if (check_schema(*find_schema("idealized/Fuse_Z"), mf, s).aggregate == Verdict::Sound) ++frob_group;
        if (check_schema(*find_schema("idealized/Special_Z"), mf, s).aggregate == Verdict::Sound) ++frob_group;
        INFO("u3 = 2^{" << rational_str(u3) << "/4}");
        CHECK(basis_group <= 1);
        CHECK(frob_group <= 1);
    }
}

TEST_CASE("reports state the grid and order instances deterministically") {
    auto rep = check_schema(*find_schema("welltempered-zh/Mult_H"), model_nu());
    CHECK(rep.grid.find("phase samples") != std::string::npos);
    std::string text = rep.to_text();
    CHECK(text.find("rule: welltempered-zh/Mult_H") != std::string::npos);
    CHECK(text.find("aggregate: Sound") != std::string::npos);
    auto rep2 = check_schema(*find_schema("welltempered-zh/Mult_H"), model_nu());
    CHECK(rep.to_text() == rep2.to_text());  // deterministic bytes
}

TEST_CASE("parallel instance checking matches serial") {
    Sampling serial, par;
    par.jobs = 4;
    auto a = check_schema(*find_schema("welltempered-zx/Fuse_Z"), model_nu(), serial);
    auto b = check_schema(*find_schema("welltempered-zx/Fuse_Z"), model_nu(), par);
    CHECK(a.to_text() == b.to_text());
}

TEST_CASE("proportionally-sound schema with instance-dependent factor is reported per instance") {
    // under beta the idealized Fuse_H factor is the constant 2 across arities
    auto rep = check_schema(*find_schema("idealized/Fuse_H"), model_beta());
    REQUIRE(rep.aggregate == Verdict::ProportionallySound);
    CHECK(rep.lambda_constant);
    CHECK(std::abs(rep.lambda - Complex(2, 0)) < 1e-9);
    for (const auto& r : rep.records)
        if (r.verdict == Verdict::ProportionallySound) CHECK(std::abs(r.lambda - Complex(2, 0)) < 1e-9);
}
