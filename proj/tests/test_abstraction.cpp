#include <doctest.h>

#include "cak/abstraction.hpp"
#include "cak/errors.hpp"
#include "cak/fixtures.hpp"
#include "cak/ops.hpp"
#include "cak/rng.hpp"

#include <cmath>

using namespace cak;

namespace {
Suite cellwise_input_suite(const fixtures::CircuitsFixture& f) {
    // all input-cell interventions on the binary circuit
    std::vector<InterventionPtr> items;
    const auto& sig = f.binary.sig();
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; b <= 3; ++b)
            for (int c = 0; c <= 3; ++c)
                for (int d = 0; d <= 3; ++d) {
                    Setting s(sig);
                    int vals[4] = {a, b, c, d};
                    for (int i = 0; i < 4; ++i) {
                        s.set("X" + std::to_string(i + 1) + "b1", Value((vals[i] >> 1) & 1));
                        s.set("X" + std::to_string(i + 1) + "b2", Value(vals[i] & 1));
                    }
                    items.push_back(Intervention::hard(std::move(s)));
                }
    return Suite(std::move(items));
}
} // namespace

TEST_CASE("identity alignment induces the identity tau") {
    auto m = fixtures::toy_chain();
    auto a = Alignment::identity(m.sig());
    Setting t(m.sig());
    t.set("X", Value(1.0));
    t.set("Y", Value(2.0));
    auto mapped = induced_tau(a, t, 0.0);
    REQUIRE(mapped.has_value());
    CHECK(*mapped == t);
}

TEST_CASE("circuit alignment maps 101 on the S1 cell to 5") {
    auto f = fixtures::arithmetic_circuits_fixture();
    Setting i(f.binary.sig());
    i.set("S1b1", Value(1.0));
    i.set("S1b2", Value(0.0));
    i.set("S1b3", Value(1.0));
    auto omega = induced_omega(f.alignment, HardIntervention(i), 0.0);
    REQUIRE(omega.has_value());
    CHECK(omega->values.at("S1") == Value(5.0));
    CHECK(omega->values.assigned_count() == 1);
}

TEST_CASE("omega is undefined on proper sub-cells and maps null to null") {
    auto f = fixtures::arithmetic_circuits_fixture();
    Setting partial(f.binary.sig());
    partial.set("S1b1", Value(1.0));
    CHECK_FALSE(induced_omega(f.alignment, HardIntervention(partial), 0.0).has_value());

    Setting none(f.binary.sig());
    auto omega = induced_omega(f.alignment, HardIntervention(none), 0.0);
    REQUIRE(omega.has_value());
    CHECK(omega->is_null());
}

TEST_CASE("omega preserves the restriction order on the circuit alignment") {
    auto f = fixtures::arithmetic_circuits_fixture();
    Setting i(f.binary.sig());
    i.set("X1b1", Value(1.0));
    i.set("X1b2", Value(0.0));
    Setting j = i;
    j.set("S1b1", Value(0.0));
    j.set("S1b2", Value(1.0));
    j.set("S1b3", Value(1.0));
    auto oi = induced_omega(f.alignment, HardIntervention(i), 0.0);
    auto oj = induced_omega(f.alignment, HardIntervention(j), 0.0);
    REQUIRE(oi.has_value());
    REQUIRE(oj.has_value());
    CHECK(leq(*oi, *oj));
}

TEST_CASE("strict omega agrees with the cellwise rule on the circuit alignment") {
    auto f = fixtures::arithmetic_circuits_fixture();
    Setting i(f.binary.sig());
    i.set("S2b1", Value(0.0));
    i.set("S2b2", Value(1.0));
    i.set("S2b3", Value(1.0));
    auto cellwise = induced_omega(f.alignment, HardIntervention(i), 0.0);
    auto strict = induced_omega_strict(f.alignment, HardIntervention(i), 0.0);
    REQUIRE(cellwise.has_value());
    REQUIRE(strict.has_value());
    CHECK(cellwise->values == strict->values);
}

TEST_CASE("unary circuit exactly abstracts the binary circuit on input cells") {
    auto f = fixtures::arithmetic_circuits_fixture();
    auto report = verify_constructive(f.binary, f.unary, f.alignment,
                                      cellwise_input_suite(f));
    CHECK(report.passed);
    CHECK(report.suite_size == 256);
}

TEST_CASE("glut marginalization fails verification with the listed witness") {
    auto m = fixtures::glut_model();
    auto [marg, align] = marginalize(m, {"X"});
    std::vector<InterventionPtr> items;
    items.push_back(Intervention::null(m.sig()));
    Setting y2(m.sig());
    y2.set("Y", Value(2.0));
    items.push_back(Intervention::hard(y2));
    Setting z3(m.sig());
    z3.set("Z", Value(3.0));
    items.push_back(Intervention::hard(z3));
    auto report = verify_constructive(m, marg, align, Suite(std::move(items)));
    CHECK_FALSE(report.passed);
    CHECK(report.fail_count > 0);
    REQUIRE(report.first_counterexample.has_value());
}

TEST_CASE("constructive translation of the value-collapse counterexample") {
    // X in {0,1} collapsed to {True}; Y = X + 2 keeps both values
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "Y"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}),
            ValueRange::enumerated({Value(2.0), Value(3.0)})});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(Expr::var("X") + Expr::lit(Value(2.0))));
    CausalModel low(sig, std::move(mechs), 0.0, "collapse_counterexample");

    auto high_sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "Y"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value("True")}),
            ValueRange::enumerated({Value(2.0), Value(3.0)})});
    std::vector<std::vector<VarId>> cells = {{0}, {1}};
    std::vector<CellMap> maps;
    maps.push_back(CellMap::table({{Value(0.0), Value("True")},
                                   {Value(1.0), Value("True")}}));
    maps.push_back(CellMap::identity());
    Alignment a(sig, high_sig, std::move(cells), {}, std::move(maps));

    CausalModel high = constructive_translate(low, a);
    auto sols = high.solve();
    REQUIRE(sols.size() == 2);
    CHECK(sols[0].at("X") == Value("True"));
    CHECK(sols[0].at("Y") == Value(2.0));
    CHECK(sols[1].at("Y") == Value(3.0));

    // tau of the low solutions is a strict subset: not a constructive abstraction
    auto report = verify_constructive(low, high, a, Suite({Intervention::null(sig)}));
    CHECK_FALSE(report.passed);
}

TEST_CASE("constructive translation with the identity alignment is solve-equivalent") {
    auto m = fixtures::toy_chain();
    auto high = constructive_translate(m, Alignment::identity(m.sig()));
    auto a = m.solve();
    auto b = high.solve();
    REQUIRE(a.size() == b.size());
    CHECK(Setting::equal(a[0], b[0], 0.0));
}

TEST_CASE("bijective translation by the unrotation yields the identity hidden map") {
    auto f = fixtures::conjunction_rotation_fixture();
    CausalModel translated = bijective_translate(f.rotated, f.unrotate);

    Rng rng(5);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        double x1 = static_cast<double>(rng.below(2));
        double x2 = static_cast<double>(rng.below(2));
        Setting iv(translated.sig());
        iv.set("X1", Value(x1));
        iv.set("X2", Value(x2));
        Setting sol = cak::apply(translated, HardIntervention(iv)).solve_unique();
        worst = std::max(worst, std::fabs(sol.at("H1").num() - x1));
        worst = std::max(worst, std::fabs(sol.at("H2").num() - x2));
    }
    CHECK(worst <= 1e-9);

    // unrotating the rotated model recovers the plain model extensionally
    for (const auto& input : f.low_inputs) {
        Setting a = cak::apply(translated, HardIntervention(input)).solve_unique();
        Setting b = cak::apply(f.plain, HardIntervention(input)).solve_unique();
        CHECK(Setting::equal(a, b, 1e-9));
    }
}

TEST_CASE("identity bijection leaves mechanisms extensionally unchanged") {
    auto f = fixtures::conjunction_rotation_fixture();
    CausalModel translated =
        bijective_translate(f.rotated, Bijection::identity(f.rotated.sig()));
    for (const auto& input : f.low_inputs) {
        Setting a = cak::apply(translated, HardIntervention(input)).solve_unique();
        Setting b = cak::apply(f.rotated, HardIntervention(input)).solve_unique();
        CHECK(Setting::equal(a, b, 1e-12));
    }
}

TEST_CASE("bad bijections are rejected") {
    auto f = fixtures::conjunction_rotation_fixture();
    Bijection broken = f.unrotate;
    broken.inverse = [](const Setting& t) { return t; };
    CHECK_THROWS_AS(bijective_translate(f.rotated, broken), NotInverse);
}

TEST_CASE("canonical interventional flips the conjunction output") {
    auto f = fixtures::conjunction_rotation_fixture();
    Setting istar(f.rotated.sig());
    istar.set("H2", Value(1.0));
    auto pairs = canonical_pairs(f.rotated, f.unrotate);
    InterventionPtr psi = pairs.make(HardIntervention(istar));

    Setting base(f.rotated.sig());
    base.set("X1", Value(1.0));
    base.set("X2", Value(0.0));
    CHECK(cak::apply(f.rotated, HardIntervention(base)).solve_unique().at("O") ==
          Value(0.0));
    CausalModel patched = cak::apply(cak::apply(f.rotated, psi), HardIntervention(base));
    CHECK(patched.solve_unique().at("O") == Value(1.0));
}

TEST_CASE("canonical interventional for the null intervention acts as the original") {
    auto f = fixtures::conjunction_rotation_fixture();
    auto pairs = canonical_pairs(f.rotated, f.unrotate);
    InterventionPtr psi = pairs.make(HardIntervention(Setting(f.rotated.sig())));
    for (const auto& input : f.low_inputs) {
        Setting a = cak::apply(cak::apply(f.rotated, psi), HardIntervention(input))
                        .solve_unique();
        Setting b = cak::apply(f.rotated, HardIntervention(input)).solve_unique();
        CHECK(Setting::equal(a, b, 1e-9));
    }
}

TEST_CASE("bijective translations are exact transformations (Thm 3 instance)") {
    auto f = fixtures::conjunction_rotation_fixture();
    CausalModel translated = bijective_translate(f.rotated, f.unrotate);
    auto pairs = canonical_pairs(f.rotated, f.unrotate);

    std::vector<InterventionPtr> suite;
    for (const auto& input : f.low_inputs)
        suite.push_back(pairs.make(HardIntervention(input)));
    for (double h2 : {0.0, 1.0}) {
        for (const auto& input : f.low_inputs) {
            Setting istar = input;
            istar.set("H2", Value(h2));
            suite.push_back(pairs.make(HardIntervention(istar)));
        }
    }
    suite.push_back(pairs.make(HardIntervention(Setting(f.rotated.sig()))));

    VerifyOptions opts;
    opts.tolerance = 1e-9;
    auto report = verify_exact(f.rotated, translated, pairs.to, Suite(std::move(suite)), opts);
    CHECK(report.passed);
}

TEST_CASE("composition of exact transformations verifies on the composed suite") {
    // binary circuit -> unary circuit -> output-only marginalization; the
    // composed domain is the O-cell interventions plus null
    auto f = fixtures::arithmetic_circuits_fixture();
    auto [marg, marg_align] = marginalize(f.unary, {"X1", "X2", "X3", "X4", "S1", "S2"});

    TauOmega composed =
        compose_tau_omega(tau_omega_from(f.alignment, 0.0), tau_omega_from(marg_align, 0.0));
    std::vector<InterventionPtr> items;
    items.push_back(Intervention::null(f.binary.sig()));
    for (int v = 0; v <= 12; ++v) {
        Setting s(f.binary.sig());
        for (int b = 0; b < 4; ++b)
            s.set("Ob" + std::to_string(b + 1), Value((v >> (3 - b)) & 1));
        items.push_back(Intervention::hard(std::move(s)));
    }
    auto report = verify_exact(f.binary, marg, composed, Suite(std::move(items)));
    CHECK(report.passed);
}
