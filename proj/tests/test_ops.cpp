#include <doctest.h>

#include "cak/errors.hpp"
#include "cak/fixtures.hpp"
#include "cak/ops.hpp"
#include "cak/rng.hpp"

#include <cmath>

using namespace cak;

namespace {
// random acyclic enum model: chain-ish tables over <= 4 vars, <= 4 values
CausalModel random_acyclic_model(uint64_t seed, int n_vars, int n_vals) {
    Rng rng(seed);
    std::vector<std::string> names;
    std::vector<ValueRange> ranges;
    std::vector<Value> vals;
    for (int v = 0; v < n_vals; ++v) vals.push_back(Value(static_cast<double>(v)));
    for (int i = 0; i < n_vars; ++i) {
        names.push_back("V" + std::to_string(i));
        ranges.push_back(ValueRange::enumerated(vals));
    }
    auto sig = std::make_shared<Signature>(names, ranges);
    std::vector<Mechanism> mechs;
    for (int i = 0; i < n_vars; ++i) {
        if (i == 0) {
            mechs.push_back(Mechanism::constant(vals[rng.below(n_vals)]));
            continue;
        }
        // table over all earlier variables
        std::vector<VarId> parents;
        for (int p = 0; p < i; ++p) parents.push_back(p);
        std::vector<TableRow> rows;
        for_each_assignment(sig, parents, kDefaultBudget, [&](const Setting& s) {
            rows.push_back(TableRow{project(s, parents), vals[rng.below(n_vals)]});
        });
        mechs.push_back(Mechanism::expression(Expr::table(std::move(rows), false, Value(0.0))));
    }
    return CausalModel(sig, std::move(mechs), 0.0, "random" + std::to_string(seed));
}

std::vector<VarId> all_vars(const SignaturePtr& sig) {
    std::vector<VarId> out;
    for (VarId v = 0; v < sig->size(); ++v) out.push_back(v);
    return out;
}
} // namespace

TEST_CASE("marginalizing nothing is solve-equivalent") {
    auto m = fixtures::toy_chain();
    auto [marg, align] = marginalize(m, {});
    auto a = m.solve();
    auto b = marg.solve();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(Setting::equal(project(a[i], align.bot_cell()).assigned_count() == 0
                                 ? a[i]
                                 : a[i],
                             b[i], 0.0));
}

TEST_CASE("max example: dropping the third unit folds it into the readout") {
    auto f = fixtures::max_relu_fixture();
    auto [marg, align] = marginalize(f.real_model, {"Y3"});
    // f_Z becomes (y1 + y2 + x1 + x2)/2 for positive inputs
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        double x1 = 0.5 + 3.0 * rng.uniform();
        double x2 = 0.5 + 3.0 * rng.uniform();
        Setting iv(marg.sig());
        iv.set("X1", Value(x1));
        iv.set("X2", Value(x2));
        Setting sol = cak::apply(marg, HardIntervention(iv)).solve_unique();
        double y1 = sol.at("Y1").num(), y2 = sol.at("Y2").num();
        CHECK(sol.at("Z").num() ==
              doctest::Approx(0.5 * (y1 + y2 + x1 + x2)).epsilon(1e-12));
        CHECK(sol.at("Z").num() == doctest::Approx(std::max(x1, x2)).epsilon(1e-12));
    }
}

TEST_CASE("max example merge bundles the ReLU pair") {
    auto f = fixtures::max_relu_fixture();
    auto [marg, malign] = marginalize(f.real_model, {"Y3"});
    MergePartition p;
    p.cells.emplace_back("X1", std::vector<std::string>{"X1"});
    p.cells.emplace_back("X2", std::vector<std::string>{"X2"});
    p.cells.emplace_back("Ystar", std::vector<std::string>{"Y1", "Y2"});
    p.cells.emplace_back("Z", std::vector<std::string>{"Z"});
    auto [merged, align] = variable_merge(marg, p);

    Setting iv(merged.sig());
    iv.set("X1", Value(3.0));
    iv.set("X2", Value(1.0));
    Setting sol = cak::apply(merged, HardIntervention(iv)).solve_unique();
    CHECK(sol.at("Ystar") == Value(Value::Vec{2.0, 0.0}));
    CHECK(sol.at("Z").num() == doctest::Approx(3.0));
}

TEST_CASE("all-singleton merge is isomorphic") {
    auto m = fixtures::toy_chain();
    MergePartition p;
    p.cells.emplace_back("A", std::vector<std::string>{"X"});
    p.cells.emplace_back("B", std::vector<std::string>{"Y"});
    auto [merged, align] = variable_merge(m, p);
    auto sol = merged.solve_unique();
    CHECK(sol.at("A") == Value(0.0));
    CHECK(sol.at("B") == Value(0.0));
}

TEST_CASE("variable merge lemma holds exhaustively on random enum fixtures") {
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        CausalModel m = random_acyclic_model(seed, 4, 4);
        Rng rng(seed * 77);
        // random 2-cell partition
        MergePartition p;
        std::vector<std::string> cell_a, cell_b;
        for (int v = 0; v < 4; ++v)
            (rng.below(2) == 0 ? cell_a : cell_b).push_back("V" + std::to_string(v));
        if (cell_a.empty()) cell_a.push_back(cell_b.back()), cell_b.pop_back();
        if (cell_b.empty()) cell_b.push_back(cell_a.back()), cell_a.pop_back();
        p.cells.emplace_back("A", cell_a);
        p.cells.emplace_back("B", cell_b);
        auto [merged, align] = variable_merge(m, p);

        // exhaustive cellwise interventions: none, each cell, both cells
        Suite suite = all_partial_interventions(m.sig(), all_vars(m.sig()));
        uint64_t checked = 0;
        for (uint64_t i = 0; i < suite.size(); ++i) {
            auto iv = suite.at(i);
            auto mapped = induced_omega(align, iv->hard_part(), 0.0);
            if (!mapped) continue; // not a union of complete cells
            ++checked;
            auto low_sols = cak::apply(m, iv).solve();
            auto high_sols =
                cak::apply(merged, Intervention::hard(mapped->values)).solve();
            std::vector<Setting> lhs;
            for (const auto& s : low_sols) {
                auto t = induced_tau(align, s, 0.0);
                REQUIRE(t.has_value());
                lhs.push_back(*t);
            }
            REQUIRE(lhs.size() == high_sols.size());
            std::sort(lhs.begin(), lhs.end(), [](const Setting& a, const Setting& b) {
                return Setting::compare(a, b) < 0;
            });
            for (size_t k = 0; k < lhs.size(); ++k)
                CHECK(Setting::equal(lhs[k], high_sols[k], 0.0));
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("marginalization lemma holds on unique-solution fixtures") {
    for (uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        CausalModel m = random_acyclic_model(seed, 4, 3);
        std::vector<VarId> kept = {0, 1, 3}; // drop V2
        Suite domain = all_partial_interventions(m.sig(), kept);
        REQUIRE(has_unique_solutions(m, domain));

        auto [marg, align] = marginalize(m, {"V2"});
        CHECK(has_unique_solutions(
            marg, all_partial_interventions(marg.sig(), all_vars(marg.sig()))));
        for (uint64_t i = 0; i < domain.size(); ++i) {
            auto iv = domain.at(i);
            auto low_sols = cak::apply(m, iv).solve();
            REQUIRE(low_sols.size() == 1);
            Setting projected = project(low_sols[0], std::vector<std::string>{"V0", "V1", "V3"});
            Setting high_iv(marg.sig());
            for (VarId v : iv->hard_part().values.domain())
                high_iv.set(m.sig()->name(v), iv->hard_part().values.at(v));
            auto high_sols = cak::apply(marg, HardIntervention(high_iv)).solve();
            REQUIRE(high_sols.size() == 1);
            for (VarId v = 0; v < marg.sig()->size(); ++v)
                CHECK(high_sols[0].at(v) == projected.at(m.sig()->id(marg.sig()->name(v))));
        }
    }
}

TEST_CASE("glut model is outside the unique-solution class") {
    auto m = fixtures::glut_model();
    Suite domain = all_partial_interventions(m.sig(), all_vars(m.sig()));
    CHECK_FALSE(has_unique_solutions(m, domain));
}

TEST_CASE("acyclic fixtures pass the unique-solution check") {
    auto m = fixtures::toy_chain();
    CHECK(has_unique_solutions(m, all_partial_interventions(m.sig(), all_vars(m.sig()))));
}

TEST_CASE("identity value merge is solve-equivalent") {
    auto m = fixtures::toy_chain();
    ValueMergeFamily d;
    auto [vm, align] = value_merge(m, d);
    auto a = m.solve();
    auto b = vm.solve();
    REQUIRE(a.size() == b.size());
    CHECK(Setting::equal(a[0], b[0], 0.0));
}

TEST_CASE("collapse counterexample: not viable, witness X:0 vs X:1") {
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "Y"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}),
            ValueRange::enumerated({Value(2.0), Value(3.0)})});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(Expr::var("X") + Expr::lit(Value(2.0))));
    CausalModel low(sig, std::move(mechs), 0.0, "collapse_counterexample");

    ValueMergeFamily d;
    d.maps.emplace_back(
        "X", ValueMap{CellMap::table({{Value(0.0), Value("True")},
                                      {Value(1.0), Value("True")}}),
                      ValueRange::enumerated({Value("True")}), false});
    auto report = value_merge_viable(low, d);
    CHECK_FALSE(report.viable);
    REQUIRE_FALSE(report.witnesses.empty());
    CHECK(report.witnesses[0].lhs->hard_part().values.at("X") == Value(0.0));
    CHECK(report.witnesses[0].rhs->hard_part().values.at("X") == Value(1.0));

    // Lemma C, failing direction: the merge does not verify on a suite
    // containing the witness pair
    auto [vm, align] = value_merge(low, d);
    Setting x0(sig), x1(sig);
    x0.set("X", Value(0.0));
    x1.set("X", Value(1.0));
    auto verify = verify_constructive(
        low, vm, align, Suite({Intervention::hard(x0), Intervention::hard(x1)}));
    CHECK_FALSE(verify.passed);
}

TEST_CASE("indistinguishable values merge viably and verify") {
    // X in {0,1,2}; Y fires on X >= 1; merging {1,2} is invisible to Y
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "Y"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0), Value(2.0)}),
            ValueRange::enumerated({Value(0.0), Value(5.0)})});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(
        Expr::lit(Value(5.0)) *
        Expr::make(ExprOp::Ge, {Expr::var("X"), Expr::lit(Value(1.0))})));
    CausalModel low(sig, std::move(mechs), 0.0, "threshold_merge");

    ValueMergeFamily d;
    d.maps.emplace_back(
        "X", ValueMap{CellMap::table({{Value(0.0), Value("lo")},
                                      {Value(1.0), Value("hi")},
                                      {Value(2.0), Value("hi")}}),
                      ValueRange::enumerated({Value("lo"), Value("hi")}), false});
    auto report = value_merge_viable(low, d);
    CHECK(report.viable);

    auto [vm, align] = value_merge(low, d);
    Suite suite = all_partial_interventions(sig, all_vars(sig));
    auto verify = verify_constructive(low, vm, align, suite);
    CHECK(verify.passed);
}

TEST_CASE("max fixture: claimed merged model matches on the input suite") {
    auto f = fixtures::max_relu_fixture();
    // the family is viable over the input-realized suite
    std::vector<std::pair<InterventionPtr, InterventionPtr>> pairs;
    for (size_t i = 0; i < f.enum_inputs.size(); ++i) {
        // extend both sides of each merged-value pair by the realizing input
        const auto& in = f.enum_inputs[i];
        Setting a = in, b = in;
        Setting sol = cak::apply(f.merged_enum, HardIntervention(in)).solve_unique();
        a.set("Ystar", sol.at("Ystar"));
        b.set("Ystar", sol.at("Ystar"));
        pairs.emplace_back(Intervention::hard(a), Intervention::hard(b));
    }
    auto viability = value_merge_viable(f.merged_enum, f.family, &pairs);
    CHECK(viability.viable);

    // and the worked-example model commutes over the input interventions
    std::vector<std::vector<VarId>> cells;
    std::vector<CellMap> maps;
    const auto& msig = f.merged_enum.sig();
    for (VarId v = 0; v < msig->size(); ++v) {
        cells.push_back({v});
        const ValueMap* vm = f.family.find(msig->name(v));
        maps.push_back(vm ? vm->map : CellMap::identity());
    }
    Alignment align(msig, f.claimed_merged.sig(), std::move(cells), {}, std::move(maps));
    std::vector<InterventionPtr> items;
    for (const auto& in : f.enum_inputs) items.push_back(Intervention::hard(in));
    auto verify = verify_constructive(f.merged_enum, f.claimed_merged, align,
                                      Suite(std::move(items)));
    CHECK(verify.passed);
}

TEST_CASE("decomposition pipeline reproduces the induced tau (circuit alignment)") {
    auto f = fixtures::arithmetic_circuits_fixture();
    auto pipe = decompose_alignment(f.alignment);
    REQUIRE(pipe.stages.size() == 3);
    CHECK(pipe.marginalize_set.empty());

    // every enumerable total setting maps identically through the pipeline
    uint64_t checked = 0;
    std::vector<VarId> vars = all_vars(f.binary.sig());
    for_each_assignment(f.binary.sig(), vars, kDefaultBudget, [&](const Setting& t) {
        auto direct = induced_tau(f.alignment, t, 0.0);
        auto piped = pipe.composed_tau(t, 0.0);
        CHECK(direct.has_value() == piped.has_value());
        if (direct && piped) CHECK(Setting::equal(*direct, *piped, 0.0));
        ++checked;
    });
    CHECK(checked == (1u << 18));
}

TEST_CASE("identity alignment decomposes into trivial stages") {
    auto m = fixtures::toy_chain();
    auto pipe = decompose_alignment(Alignment::identity(m.sig()));
    CHECK(pipe.marginalize_set.empty());
    CHECK(pipe.merge_partition.cells.size() == 2);
    for (const auto& [name, members] : pipe.merge_partition.cells)
        CHECK(members.size() == 1);
    Setting t(m.sig());
    t.set("X", Value(1.0));
    t.set("Y", Value(0.0));
    auto piped = pipe.composed_tau(t, 0.0);
    REQUIRE(piped.has_value());
    CHECK(Setting::equal(*piped, t, 0.0));
}
