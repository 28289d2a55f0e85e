#include <doctest.h>

#include "cak/errors.hpp"
#include "cak/fixtures.hpp"
#include "cak/interchange.hpp"

#include <cmath>

using namespace cak;
using fixtures::HierEqFixture;

namespace {
std::vector<std::string> cell_names(const HierEqFixture& f, const char* high_var) {
    std::vector<std::string> out;
    for (VarId v : f.alignment.cell(f.high.sig()->id(high_var)))
        out.push_back(f.low.sig()->name(v));
    return out;
}
} // namespace

TEST_CASE("unpatched base labels False; Y1 patched from the source flips it") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting base = embed_input(f.low, f.net, {"pentagon", "pentagon", "triangle", "square"});
    Setting source = embed_input(f.low, f.net, {"square", "pentagon", "triangle", "triangle"});

    CHECK(cak::apply(f.low, HardIntervention(base)).solve_unique().at("label") ==
          Value("False"));

    InterchangeSpec spec;
    spec.base = base;
    spec.sources = {source};
    spec.targets = {cell_names(f, "Y1")};
    HardIntervention patch = interchange(f.low, spec);
    Setting patched_run = base.overwritten_by(patch.values);
    CHECK(cak::apply(f.low, HardIntervention(patched_run)).solve_unique().at("label") ==
          Value("True"));
}

TEST_CASE("interchange with source equal to base leaves the run unchanged") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting base = embed_input(f.low, f.net, {"square", "triangle", "pentagon", "pentagon"});
    InterchangeSpec spec;
    spec.base = base;
    spec.sources = {base};
    spec.targets = {cell_names(f, "Y1")};
    HardIntervention patch = interchange(f.low, spec);
    auto plain = cak::apply(f.low, HardIntervention(base)).solve_unique();
    auto patched = cak::apply(f.low, HardIntervention(base.overwritten_by(patch.values)))
                       .solve_unique();
    CHECK(Setting::equal(plain, patched, 1e-12));
}

TEST_CASE("interchange rejects input targets and overlapping groups") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting base = embed_input(f.low, f.net, {"square", "square", "square", "square"});
    InterchangeSpec bad;
    bad.base = base;
    bad.sources = {base};
    bad.targets = {{"n_in_1"}};
    CHECK_THROWS_AS(interchange(f.low, bad), DomainViolation);

    InterchangeSpec overlap;
    overlap.base = base;
    overlap.sources = {base, base};
    overlap.targets = {{"n_h1_1"}, {"n_h1_1"}};
    CHECK_THROWS_AS(interchange(f.low, overlap), DomainViolation);
}

TEST_CASE("recursive interchange with null subs equals plain interchange") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting source = embed_input(f.low, f.net, {"triangle", "triangle", "square", "square"});
    InterchangeSpec spec;
    spec.base = embed_input(f.low, f.net, {"pentagon", "square", "triangle", "square"});
    spec.sources = {source};
    spec.targets = {cell_names(f, "Y1")};
    HardIntervention direct = interchange(f.low, spec);
    HardIntervention rec = recursive_interchange(
        f.low, {source}, {cell_names(f, "Y1")}, {HardIntervention(Setting(f.low.sig()))});
    CHECK(rec.values == direct.values);
}

TEST_CASE("depth-2 recursion reproduces brute-force two-stage substitution") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting s1 = embed_input(f.low, f.net, {"square", "pentagon", "square", "pentagon"});
    Setting s2 = embed_input(f.low, f.net, {"triangle", "triangle", "pentagon", "square"});

    InterchangeSpec inner;
    inner.base = s1;
    inner.sources = {s2};
    inner.targets = {cell_names(f, "Y2")};
    HardIntervention i1 = interchange(f.low, inner);

    HardIntervention nested =
        recursive_interchange(f.low, {s1}, {cell_names(f, "Y1")}, {i1});

    // oracle: manual two-pass evaluation
    Setting run1 = cak::apply(f.low, HardIntervention(s1.overwritten_by(i1.values)))
                       .solve_unique();
    for (const auto& name : cell_names(f, "Y1"))
        CHECK(nested.values.at(name) == run1.at(name));
}

TEST_CASE("the interchange alignment maps the zero cell value to True") {
    auto f = fixtures::hierarchical_equality_fixture();
    VarId y1 = f.high.sig()->id("Y1");
    Setting zero_cell(f.low.sig());
    for (VarId v : f.alignment.cell(y1)) zero_cell.set(v, Value(0.0));
    auto mapped = f.alignment.map(y1).apply(zero_cell, f.alignment.cell(y1), 1e-9);
    REQUIRE(mapped.has_value());
    CHECK(*mapped == Value("True"));
}

TEST_CASE("identity toy network induces identity-like maps") {
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "H", "O"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}), ValueRange::real(1),
            ValueRange::real(1)});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(Expr::var("X")));
    mechs.push_back(Mechanism::expression(Expr::var("H")));
    CausalModel model(sig, std::move(mechs), 1e-9, "copy_chain");

    std::vector<std::vector<VarId>> cells = {{0}, {1}, {2}};
    std::vector<CellMap> maps = {CellMap::identity(), CellMap::identity(),
                                 CellMap::identity()};
    Alignment partial(sig, sig, std::move(cells), {}, std::move(maps));
    Alignment built = build_interchange_alignment(model, model, partial, {"H"});
    Setting probe(sig);
    probe.set("H", Value(1.0));
    auto v = built.map(1).apply(probe, built.cell(1), 1e-9);
    REQUIRE(v.has_value());
    CHECK(*v == Value(1.0));
}

TEST_CASE("conflicting realized values raise AlignmentConflict") {
    auto low_sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "H", "O"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}), ValueRange::real(1),
            ValueRange::real(1)});
    std::vector<Mechanism> lm;
    lm.push_back(Mechanism::constant(Value(0.0)));
    // both inputs hit the same hidden value
    lm.push_back(Mechanism::expression(Expr::lit(Value(7.0)) +
                                       Expr::lit(Value(0.0)) * Expr::var("X")));
    lm.push_back(Mechanism::expression(Expr::var("X")));
    CausalModel low(low_sig, std::move(lm), 1e-9, "clash_low");

    auto high_sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "H", "O"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}),
            ValueRange::enumerated({Value(0.0), Value(1.0)}),
            ValueRange::enumerated({Value(0.0), Value(1.0)})});
    std::vector<Mechanism> hm;
    hm.push_back(Mechanism::constant(Value(0.0)));
    hm.push_back(Mechanism::expression(Expr::var("X"))); // high H varies with input
    hm.push_back(Mechanism::expression(Expr::var("H")));
    CausalModel high(high_sig, std::move(hm), 0.0, "clash_high");

    std::vector<std::vector<VarId>> cells = {{0}, {1}, {2}};
    std::vector<CellMap> maps;
    maps.push_back(CellMap::identity());
    maps.push_back(CellMap::identity());
    maps.push_back(CellMap::table({{Value(0.0), Value(0.0)}, {Value(1.0), Value(1.0)}}));
    Alignment partial(low_sig, high_sig, std::move(cells), {}, std::move(maps));
    CHECK_THROWS_AS(build_interchange_alignment(low, high, partial, {"H"}),
                    AlignmentConflict);
}

TEST_CASE("IIA is exactly 1 on a restricted slice of the interchange domain") {
    auto f = fixtures::hierarchical_equality_fixture();
    Suite full = interchange_domain_suite(f.low, f.high, f.alignment, {"Y1", "Y2"});
    CHECK(full.size() == 81ull + 2ull * 81 * 81 + 81ull * 81 * 81);
    uint64_t n = 81 + 4000; // inputs plus part of the single-source class
    Suite slice(n, [full](uint64_t i) { return full.at(i); });
    IIAConfig cfg;
    cfg.suite = slice;
    cfg.outputs = {"Z"};
    auto r = iia(f.low, f.high, f.alignment, cfg);
    CHECK(r.iia == 1.0);
    CHECK(r.matches == n);
}

TEST_CASE("base-equals-source suite reduces IIA to input-output accuracy") {
    auto f = fixtures::hierarchical_equality_fixture();
    std::vector<InterventionPtr> items;
    for (const auto& input : f.low_inputs) items.push_back(Intervention::hard(input));
    IIAConfig cfg;
    cfg.suite = Suite(std::move(items));
    cfg.outputs = {"Z"};
    auto r = iia(f.low, f.high, f.alignment, cfg);
    CHECK(r.iia == 1.0); // the handcrafted net classifies every input correctly
}

TEST_CASE("corrupting the Y1 map lowers IIA by the brute-force mismatch count") {
    auto f = fixtures::hierarchical_equality_fixture();
    Alignment corrupted = f.alignment;
    VarId y1 = f.high.sig()->id("Y1");
    std::vector<std::pair<Value, Value>> swapped;
    for (const auto& [k, v] : f.alignment.map(y1).table_entries())
        swapped.emplace_back(k, Value(v.sym() == "True" ? "False" : "True"));
    corrupted.maps()[y1] = CellMap::table(swapped);

    Suite full = interchange_domain_suite(f.low, f.high, corrupted, {"Y1", "Y2"});
    uint64_t n = 81 + 3000;
    Suite slice(n, [full](uint64_t i) { return full.at(i); });
    IIAConfig cfg;
    cfg.suite = slice;
    cfg.outputs = {"Z"};
    auto r = iia(f.low, f.high, corrupted, cfg);

    // brute-force recount through the direct definition
    TauOmega to = tau_omega_from(corrupted, 1e-9);
    uint64_t matches = 0;
    VarId z = f.high.sig()->id("Z");
    for (uint64_t i = 0; i < n; ++i) {
        auto iv = slice.at(i);
        auto hi = to.omega(iv);
        REQUIRE(hi.has_value());
        Setting ls = cak::apply(f.low, iv).solve_unique();
        Setting hs = cak::apply(f.high, *hi).solve_unique();
        auto mapped = to.tau(ls);
        if (mapped && Value::equal(mapped->at(z), hs.at(z), 1e-9)) ++matches;
    }
    CHECK(r.iia ==
          doctest::Approx(static_cast<double>(matches) / static_cast<double>(n))
              .epsilon(1e-12));
    CHECK(r.iia < 1.0);
}

TEST_CASE("distributed interchange with identity features equals the hard patch") {
    auto f = fixtures::conjunction_rotation_fixture();
    Setting base = f.low_inputs[1];   // (0,1)
    Setting source = f.low_inputs[2]; // (1,0)

    DistributedSpec spec;
    spec.tau = Bijection::identity(f.rotated.sig());
    spec.sources = {source};
    spec.feature_blocks = {{"H2", "V", "O"}, {"H1"}};
    InterventionPtr dii = distributed_interchange(f.rotated, spec);

    InterchangeSpec hard;
    hard.base = base;
    hard.sources = {source};
    hard.targets = {{"H1"}};
    HardIntervention patch = interchange(f.rotated, hard);

    Setting a = cak::apply(cak::apply(f.rotated, dii), HardIntervention(base)).solve_unique();
    Setting b = cak::apply(f.rotated, HardIntervention(base.overwritten_by(patch.values)))
                    .solve_unique();
    CHECK(Value::equal(a.at("O"), b.at("O"), 1e-9));
    CHECK(Value::equal(a.at("V"), b.at("V"), 1e-9));
}

TEST_CASE("DII through the unrotation flips the conjunct like the boolean patch") {
    auto f = fixtures::conjunction_rotation_fixture();
    Setting base = f.low_inputs[2];   // x = (1,0)
    Setting source = f.low_inputs[3]; // x = (1,1)

    DistributedSpec spec;
    spec.tau = f.unrotate;
    spec.sources = {source};
    spec.feature_blocks = {{"H1", "V", "O"}, {"H2"}}; // patch the second feature
    InterventionPtr dii = distributed_interchange(f.rotated, spec);
    Setting run = cak::apply(cak::apply(f.rotated, dii), HardIntervention(base))
                      .solve_unique();
    CHECK(run.at("O") == Value(1.0)); // second conjunct now true

    DistributedSpec spec2 = spec;
    spec2.sources = {f.low_inputs[0]}; // a 0-source keeps it false
    Setting run2 =
        cak::apply(cak::apply(f.rotated, distributed_interchange(f.rotated, spec2)),
                   HardIntervention(base))
            .solve_unique();
    CHECK(run2.at("O") == Value(0.0));
}

TEST_CASE("path patching matches the hand-computed two-step substitution") {
    // 3x3 fully connected toy with one input and one output
    std::vector<std::string> names = {"b"};
    std::vector<ValueRange> ranges = {ValueRange::real(1)};
    for (int r = 1; r <= 3; ++r)
        for (int c = 1; c <= 3; ++c) {
            names.push_back("h" + std::to_string(r) + std::to_string(c));
            ranges.push_back(ValueRange::real(1));
        }
    names.push_back("o");
    ranges.push_back(ValueRange::real(1));
    auto sig = std::make_shared<Signature>(names, ranges);

    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    for (int c = 1; c <= 3; ++c)
        mechs.push_back(Mechanism::expression(
            Expr::lit(Value(static_cast<double>(c))) * Expr::var("b")));
    for (int r = 2; r <= 3; ++r) {
        for (int c = 1; c <= 3; ++c) {
            std::string p = std::to_string(r - 1);
            mechs.push_back(Mechanism::expression(
                Expr::var("h" + p + "1") +
                Expr::lit(Value(static_cast<double>(c))) * Expr::var("h" + p + "2") +
                Expr::var("h" + p + "3")));
        }
    }
    mechs.push_back(Mechanism::expression(Expr::var("h31") + Expr::var("h32") +
                                          Expr::var("h33")));
    CausalModel m(sig, std::move(mechs), 1e-9, "grid3");

    Setting base(sig), source(sig);
    base.set("b", Value(1.0));
    source.set("b", Value(2.0));

    PathPatchSpec spec;
    spec.base = base;
    spec.source = source;
    spec.senders = {"h11"};
    spec.receivers = {"h32"};
    spec.freeze = {"h22"};
    spec.outputs = {"o"};
    auto result = path_patch(m, spec);

    // oracle: fix h11 from the source and h22 from the base, read h32, then
    // run the base with only h32 replaced
    Setting step1 = base;
    step1.set("h11", cak::apply(m, HardIntervention(source)).solve_unique().at("h11"));
    step1.set("h22", cak::apply(m, HardIntervention(base)).solve_unique().at("h22"));
    Value h32 = cak::apply(m, HardIntervention(step1)).solve_unique().at("h32");
    Setting step2 = base;
    step2.set("h32", h32);
    Value expected = cak::apply(m, HardIntervention(step2)).solve_unique().at("o");
    CHECK(Value::equal(result.outputs.at("o"), expected, 1e-9));

    // freezing every other mediator with no senders reproduces the plain run
    PathPatchSpec noop;
    noop.base = base;
    noop.source = source;
    noop.senders = {};
    noop.receivers = {"h32"};
    noop.freeze = {"h11", "h12", "h13", "h21", "h22", "h23"};
    noop.outputs = {"o"};
    auto plain = path_patch(m, noop);
    CHECK(Value::equal(plain.outputs.at("o"),
                       cak::apply(m, HardIntervention(base)).solve_unique().at("o"), 1e-9));

    // with no freeze the receiver patch equals the recursive interchange form
    PathPatchSpec nofreeze;
    nofreeze.base = base;
    nofreeze.source = source;
    nofreeze.senders = {"h11"};
    nofreeze.receivers = {"h32"};
    nofreeze.outputs = {"o"};
    auto nf = path_patch(m, nofreeze);
    InterchangeSpec inner;
    inner.base = base;
    inner.sources = {source, base};
    inner.targets = {{"h11"}, {}};
    HardIntervention i1 = interchange(m, inner);
    HardIntervention rec = recursive_interchange(m, {base}, {{"h32"}}, {i1});
    CHECK(rec.values == nf.receiver_patch.values);
}
