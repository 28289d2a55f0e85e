#include "cak/fixtures.hpp"

#include "cak/dsl.hpp"
#include "cak/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cak {
namespace fixtures {

namespace {
SignaturePtr make_sig(std::vector<std::string> names, std::vector<ValueRange> ranges) {
    return std::make_shared<Signature>(std::move(names), std::move(ranges));
}

ValueRange num_range(std::initializer_list<double> xs) {
    std::vector<Value> vals;
    for (double x : xs) vals.push_back(Value(x));
    return ValueRange::enumerated(std::move(vals));
}

ValueRange int_range(int lo, int hi) {
    std::vector<Value> vals;
    for (int i = lo; i <= hi; ++i) vals.push_back(Value(static_cast<double>(i)));
    return ValueRange::enumerated(std::move(vals));
}

ValueRange sym_range(std::initializer_list<const char*> syms) {
    std::vector<Value> vals;
    for (const char* s : syms) vals.push_back(Value(s));
    return ValueRange::enumerated(std::move(vals));
}
} // namespace

// ─── Small models ────────────────────────────────────────────────────────

CausalModel toy_chain() {
    auto sig = make_sig({"X", "Y"}, {int_range(0, 2), int_range(0, 2)});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(Expr::var("X")));
    return CausalModel(sig, std::move(mechs), 0.0, "toy_chain");
}

CausalModel glut_model() {
    // values 0,1,2,3,star; two distinguished worlds fix the tables
    ValueRange r = ValueRange::enumerated(
        {Value(0.0), Value(1.0), Value(2.0), Value(3.0), Value("star")});
    auto sig = make_sig({"X", "Y", "Z"}, {r, r, r});

    auto key = [&](double x, double y, double z) {
        Setting s(sig);
        s.set("X", Value(x));
        s.set("Y", Value(y));
        s.set("Z", Value(z));
        return s;
    };
    auto table_for = [&](Value at0, Value at1) {
        std::vector<TableRow> rows;
        rows.push_back(TableRow{key(0, 2, 3), at0});
        rows.push_back(TableRow{key(1, 2, 3), at1});
        return Expr::table(std::move(rows), true, Value("star"));
    };
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::expression(table_for(Value(0.0), Value(1.0)))); // X
    mechs.push_back(Mechanism::expression(table_for(Value(2.0), Value(3.0)))); // Y
    mechs.push_back(Mechanism::expression(table_for(Value(2.0), Value(3.0)))); // Z
    return CausalModel(sig, std::move(mechs), 0.0, "glut");
}

CausalModel threshold_example_model() {
    auto sig = make_sig({"X", "Y"}, {int_range(0, 9), sym_range({"True", "False"})});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(
        Expr::if_(Expr::make(ExprOp::Gt, {Expr::var("X"), Expr::lit(Value(5.0))}),
                  Expr::lit(Value("True")), Expr::lit(Value("False")))));
    return CausalModel(sig, std::move(mechs), 0.0, "threshold_example");
}

// ─── Addition vs mod-10 addition ─────────────────────────────────────────

AdditionFixture addition_mod10_fixture() {
    auto low_sig =
        make_sig({"A1", "A2", "S"}, {int_range(0, 9), int_range(0, 9), int_range(0, 18)});
    auto mk_adder = [&](SignaturePtr sig, const char* name) {
        std::vector<Mechanism> mechs;
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::expression(Expr::var("A1") + Expr::var("A2")));
        return CausalModel(sig, std::move(mechs), 0.0, name);
    };
    AdditionFixture f;
    f.low = mk_adder(low_sig, "addition");
    f.high = mk_adder(low_sig, "addition_mod10_view");

    auto mod10 = [](double x) { return x >= 10.0 ? x - 10.0 : x; };
    SignaturePtr sig = low_sig;
    f.to.provenance = "mod10";
    f.to.tau = [sig, mod10](const Setting& t) -> std::optional<Setting> {
        Setting out = t;
        out.set("S", Value(mod10(t.at("S").num())));
        return out;
    };
    f.to.omega = [sig, mod10](const InterventionPtr& iv) -> std::optional<InterventionPtr> {
        if (!iv->is_hard()) return std::nullopt;
        Setting out = iv->hard_part().values;
        if (out.has(sig->id("S"))) out.set("S", Value(mod10(out.at("S").num())));
        return Intervention::hard(std::move(out));
    };

    std::vector<InterventionPtr> items;
    for (int a = 0; a <= 9; ++a) {
        for (int b = 0; b <= 9; ++b) {
            Setting s(low_sig);
            s.set("A1", Value(static_cast<double>(a)));
            s.set("A2", Value(static_cast<double>(b)));
            items.push_back(Intervention::hard(std::move(s)));
        }
    }
    f.suite = Suite(std::move(items));
    return f;
}

// ─── Arithmetic circuits ─────────────────────────────────────────────────

namespace {
// MSB-first bit expressions for a bounded non-negative integer expression.
std::vector<ExprPtr> bits_of(const ExprPtr& value, int bit_count) {
    std::vector<ExprPtr> bits;
    ExprPtr rest = value;
    for (int b = bit_count - 1; b >= 0; --b) {
        double w = std::pow(2.0, b);
        ExprPtr bit = Expr::make(ExprOp::Ge, {rest, Expr::lit(Value(w))});
        bits.push_back(bit);
        rest = rest - Expr::lit(Value(w)) * bit;
    }
    return bits;
}
} // namespace

CircuitsFixture arithmetic_circuits_fixture() {
    // unary circuit
    auto unary_sig = make_sig({"X1", "X2", "X3", "X4", "S1", "S2", "O"},
                              {int_range(0, 3), int_range(0, 3), int_range(0, 3),
                               int_range(0, 3), int_range(0, 6), int_range(0, 6),
                               int_range(0, 12)});
    std::vector<Mechanism> um;
    for (int i = 0; i < 4; ++i) um.push_back(Mechanism::constant(Value(0.0)));
    um.push_back(Mechanism::expression(Expr::var("X1") + Expr::var("X2")));
    um.push_back(Mechanism::expression(Expr::var("X3") + Expr::var("X4")));
    um.push_back(Mechanism::expression(Expr::var("S1") + Expr::var("S2")));
    CausalModel unary(unary_sig, std::move(um), 0.0, "unary_circuit");

    // binary circuit (MSB-first bit variables)
    std::vector<std::string> bnames;
    std::vector<ValueRange> branges;
    for (int i = 1; i <= 4; ++i)
        for (int b = 1; b <= 2; ++b) {
            bnames.push_back("X" + std::to_string(i) + "b" + std::to_string(b));
            branges.push_back(num_range({0, 1}));
        }
    for (int i = 1; i <= 2; ++i)
        for (int b = 1; b <= 3; ++b) {
            bnames.push_back("S" + std::to_string(i) + "b" + std::to_string(b));
            branges.push_back(num_range({0, 1}));
        }
    for (int b = 1; b <= 4; ++b) {
        bnames.push_back("Ob" + std::to_string(b));
        branges.push_back(num_range({0, 1}));
    }
    auto binary_sig = make_sig(bnames, branges);

    auto decode2 = [](const std::string& v) {
        return Expr::lit(Value(2.0)) * Expr::var(v + "b1") + Expr::var(v + "b2");
    };
    std::vector<Mechanism> bm;
    for (int i = 0; i < 8; ++i) bm.push_back(Mechanism::constant(Value(0.0)));
    {
        ExprPtr s1 = decode2("X1") + decode2("X2");
        for (auto& bit : bits_of(s1, 3)) bm.push_back(Mechanism::expression(bit));
        ExprPtr s2 = decode2("X3") + decode2("X4");
        for (auto& bit : bits_of(s2, 3)) bm.push_back(Mechanism::expression(bit));
        ExprPtr s1v = Expr::lit(Value(4.0)) * Expr::var("S1b1") +
                      Expr::lit(Value(2.0)) * Expr::var("S1b2") + Expr::var("S1b3");
        ExprPtr s2v = Expr::lit(Value(4.0)) * Expr::var("S2b1") +
                      Expr::lit(Value(2.0)) * Expr::var("S2b2") + Expr::var("S2b3");
        for (auto& bit : bits_of(s1v + s2v, 4)) bm.push_back(Mechanism::expression(bit));
    }
    CausalModel binary(binary_sig, std::move(bm), 0.0, "binary_circuit");

    // alignment: bit cells decode MSB-first; out-of-range codes stay unmapped
    std::vector<std::vector<VarId>> cells(unary_sig->size());
    std::vector<CellMap> maps;
    auto bit_tuple = [](int value, int bits) {
        Value::Tuple t;
        for (int b = bits - 1; b >= 0; --b)
            t.push_back(Value(static_cast<double>((value >> b) & 1)));
        return Value::tuple(std::move(t));
    };
    for (VarId h = 0; h < unary_sig->size(); ++h) {
        const std::string& hname = unary_sig->name(h);
        std::vector<std::string> members;
        int bits = 0, top = 0;
        if (hname[0] == 'X') {
            bits = 2;
            top = 3;
            members = {hname + "b1", hname + "b2"};
        } else if (hname[0] == 'S') {
            bits = 3;
            top = 6;
            members = {hname + "b1", hname + "b2", hname + "b3"};
        } else {
            bits = 4;
            top = 12;
            members = {"Ob1", "Ob2", "Ob3", "Ob4"};
        }
        for (const auto& mname : members) cells[h].push_back(binary_sig->id(mname));
        std::vector<std::pair<Value, Value>> entries;
        for (int v = 0; v <= top; ++v)
            entries.emplace_back(bit_tuple(v, bits), Value(static_cast<double>(v)));
        maps.push_back(CellMap::table(std::move(entries)));
    }
    Alignment alignment(binary_sig, unary_sig, std::move(cells), {}, std::move(maps));
    return CircuitsFixture{std::move(unary), std::move(binary), std::move(alignment)};
}

// ─── Conjunction with rotated hidden basis ───────────────────────────────

ConjunctionFixture conjunction_rotation_fixture(double theta_deg) {
    double th = theta_deg * 3.141592653589793 / 180.0;
    double c = std::cos(th), s = std::sin(th);

    auto mk_sig = [&] {
        return make_sig({"X1", "X2", "H1", "H2", "V", "O"},
                        {num_range({0, 1}), num_range({0, 1}), ValueRange::real(1),
                         ValueRange::real(1), ValueRange::real(1), num_range({0, 1})});
    };

    auto out_exprs = [&](double unrot_c, double unrot_s) {
        // V = (h R(-θ))·[1,1] − 2 in the rotated model; identity when θ = 0
        ExprPtr u1 = Expr::lit(Value(unrot_c)) * Expr::var("H1") -
                     Expr::lit(Value(unrot_s)) * Expr::var("H2");
        ExprPtr u2 = Expr::lit(Value(unrot_s)) * Expr::var("H1") +
                     Expr::lit(Value(unrot_c)) * Expr::var("H2");
        return u1 + u2 - Expr::lit(Value(2.0));
    };

    ConjunctionFixture f;
    f.theta_deg = theta_deg;
    {
        // rotated: H = x·R(θ) (row convention)
        auto sig = mk_sig();
        std::vector<Mechanism> mechs;
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::expression(Expr::lit(Value(c)) * Expr::var("X1") +
                                              Expr::lit(Value(s)) * Expr::var("X2")));
        mechs.push_back(Mechanism::expression(Expr::lit(Value(-s)) * Expr::var("X1") +
                                              Expr::lit(Value(c)) * Expr::var("X2")));
        mechs.push_back(Mechanism::expression(out_exprs(c, s)));
        mechs.push_back(Mechanism::expression(
            Expr::if_(Expr::make(ExprOp::Ge, {Expr::var("V"), Expr::lit(Value(0.0))}),
                      Expr::lit(Value(1.0)), Expr::lit(Value(0.0)))));
        f.rotated = CausalModel(sig, std::move(mechs), 1e-9, "conjunction_rotated");

        // unrotating bijection on the hidden block; row convention puts
        // R(-θ) = [[c, s], [-s, c]]
        std::vector<std::vector<double>> fwd{{c, s}, {-s, c}};
        std::vector<std::vector<double>> inv{{c, -s}, {s, c}};
        f.unrotate = Bijection::block_linear(sig, {sig->id("H1"), sig->id("H2")}, fwd, inv);
    }
    {
        // plain reference: H = x, V = h1 + h2 − 2
        auto sig = mk_sig();
        std::vector<Mechanism> mechs;
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::expression(Expr::var("X1")));
        mechs.push_back(Mechanism::expression(Expr::var("X2")));
        mechs.push_back(Mechanism::expression(Expr::var("H1") + Expr::var("H2") -
                                              Expr::lit(Value(2.0))));
        mechs.push_back(Mechanism::expression(
            Expr::if_(Expr::make(ExprOp::Ge, {Expr::var("V"), Expr::lit(Value(0.0))}),
                      Expr::lit(Value(1.0)), Expr::lit(Value(0.0)))));
        f.plain = CausalModel(sig, std::move(mechs), 1e-9, "conjunction_plain");
    }
    {
        // high conjunction algorithm
        auto sig = make_sig({"X1", "X2", "C1", "C2", "O"},
                            {num_range({0, 1}), num_range({0, 1}), num_range({0, 1}),
                             num_range({0, 1}), num_range({0, 1})});
        std::vector<Mechanism> mechs;
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::constant(Value(0.0)));
        mechs.push_back(Mechanism::expression(Expr::var("X1")));
        mechs.push_back(Mechanism::expression(Expr::var("X2")));
        mechs.push_back(Mechanism::expression(Expr::make(
            ExprOp::Ge, {Expr::var("C1") + Expr::var("C2"), Expr::lit(Value(2.0))})));
        f.high = CausalModel(sig, std::move(mechs), 0.0, "conjunction_algorithm");
    }
    for (int a = 0; a <= 1; ++a) {
        for (int b = 0; b <= 1; ++b) {
            Setting lo(f.rotated.sig());
            lo.set("X1", Value(static_cast<double>(a)));
            lo.set("X2", Value(static_cast<double>(b)));
            f.low_inputs.push_back(lo);
            Setting hi(f.high.sig());
            hi.set("X1", Value(static_cast<double>(a)));
            hi.set("X2", Value(static_cast<double>(b)));
            f.high_inputs.push_back(hi);
        }
    }
    return f;
}

// ─── Max-of-two ReLU example ─────────────────────────────────────────────

MaxReluFixture max_relu_fixture() {
    MaxReluFixture f;
    {
        auto sig = make_sig({"X1", "X2", "Y1", "Y2", "Y3", "Z"},
                            {ValueRange::real(1), ValueRange::real(1), ValueRange::real(1),
                             ValueRange::real(1), ValueRange::real(1), ValueRange::real(1)});
        std::vector<Mechanism> mechs;
        mechs.push_back(Mechanism::constant(Value(1.0)));
        mechs.push_back(Mechanism::constant(Value(1.0)));
        mechs.push_back(Mechanism::expression(
            Expr::make(ExprOp::Relu, {Expr::var("X1") - Expr::var("X2")})));
        mechs.push_back(Mechanism::expression(
            Expr::make(ExprOp::Relu, {Expr::var("X2") - Expr::var("X1")})));
        mechs.push_back(Mechanism::expression(
            Expr::make(ExprOp::Relu, {Expr::var("X1") + Expr::var("X2")})));
        mechs.push_back(Mechanism::expression(
            Expr::lit(Value(0.5)) *
            (Expr::var("Y1") + Expr::var("Y2") + Expr::var("Y3"))));
        f.real_model = CausalModel(sig, std::move(mechs), 1e-9, "max_relu");
    }
    {
        // marginalized (+Y3 dropped) and merged variant on a finite grid:
        // Ystar is the bundled ReLU pair, Z averages it with the inputs
        std::vector<Value> dvals = {Value(1.0), Value(2.0), Value(3.0)};
        std::vector<Value> pair_vals;
        for (double a : {1.0, 2.0, 3.0})
            for (double b : {1.0, 2.0, 3.0}) {
                Value v = Value(Value::Vec{a > b ? a - b : 0.0, b > a ? b - a : 0.0});
                bool seen = false;
                for (const auto& u : pair_vals)
                    if (u == v) seen = true;
                if (!seen) pair_vals.push_back(v);
            }
        std::set<double> zset;
        for (const auto& p : pair_vals)
            for (double a : {1.0, 2.0, 3.0})
                for (double b : {1.0, 2.0, 3.0})
                    zset.insert(0.5 * (p.vec()[0] + p.vec()[1] + a + b));
        std::vector<Value> zvals;
        for (double z : zset) zvals.push_back(Value(z));

        auto sig = make_sig({"X1", "X2", "Ystar", "Z"},
                            {ValueRange::enumerated(dvals), ValueRange::enumerated(dvals),
                             ValueRange::enumerated(pair_vals),
                             ValueRange::enumerated(zvals)});
        std::vector<Mechanism> mechs;
        mechs.push_back(Mechanism::constant(Value(1.0)));
        mechs.push_back(Mechanism::constant(Value(1.0)));
        mechs.push_back(Mechanism::expression(Expr::make(
            ExprOp::Vec, {Expr::make(ExprOp::Relu, {Expr::var("X1") - Expr::var("X2")}),
                          Expr::make(ExprOp::Relu, {Expr::var("X2") - Expr::var("X1")})})));
        mechs.push_back(Mechanism::expression(
            Expr::lit(Value(0.5)) *
            (Expr::proj(0, Expr::var("Ystar")) + Expr::proj(1, Expr::var("Ystar")) +
             Expr::var("X1") + Expr::var("X2"))));
        f.merged_enum = CausalModel(sig, std::move(mechs), 1e-9, "max_relu_merged_enum");

        // tail family: the hidden pair collapses to its comparison bit
        std::vector<std::pair<Value, Value>> entries;
        for (const auto& p : pair_vals)
            entries.emplace_back(p, Value(p.vec()[0] >= p.vec()[1] ? 1.0 : 0.0));
        ValueMap vm{CellMap::table(std::move(entries)), num_range({0, 1}), false};
        f.family.maps.emplace_back("Ystar", vm);

        // the worked-example target model
        auto hsig = make_sig({"X1", "X2", "Ystar", "Z"},
                             {ValueRange::enumerated(dvals), ValueRange::enumerated(dvals),
                              num_range({0, 1}), ValueRange::enumerated(zvals)});
        std::vector<Mechanism> hm;
        hm.push_back(Mechanism::constant(Value(1.0)));
        hm.push_back(Mechanism::constant(Value(1.0)));
        hm.push_back(Mechanism::expression(
            Expr::make(ExprOp::Ge, {Expr::var("X1"), Expr::var("X2")})));
        hm.push_back(Mechanism::expression(
            Expr::var("Ystar") * Expr::var("X1") +
            (Expr::lit(Value(1.0)) - Expr::var("Ystar")) * Expr::var("X2")));
        f.claimed_merged = CausalModel(hsig, std::move(hm), 1e-9, "max_relu_claimed");

        for (double a : {1.0, 2.0, 3.0}) {
            for (double b : {1.0, 2.0, 3.0}) {
                Setting in(sig);
                in.set("X1", Value(a));
                in.set("X2", Value(b));
                f.enum_inputs.push_back(in);
            }
        }
    }
    return f;
}

// ─── Hierarchical equality ───────────────────────────────────────────────

namespace {
DenseNet hier_eq_net(double epsilon, ReadoutConvention conv) {
    DenseNet net;
    net.embeddings["pentagon"] = {0.012, -0.301};
    net.embeddings["square"] = {-0.812, 0.456};
    net.embeddings["triangle"] = {0.682, 0.333};
    net.symbol_slots = 4;
    net.var_prefix = "n";

    auto zeros = [](int r, int c) {
        return std::vector<std::vector<double>>(r, std::vector<double>(c, 0.0));
    };
    DenseLayer w1{zeros(8, 8), true};
    // pairwise differences within each symbol pair
    int idx[8][2] = {{0, 2}, {1, 3}, {2, 0}, {3, 1}, {4, 6}, {5, 7}, {6, 4}, {7, 5}};
    for (int j = 0; j < 8; ++j) {
        w1.weights[idx[j][0]][j] = 1.0;
        w1.weights[idx[j][1]][j] = -1.0;
    }
    DenseLayer w2{zeros(8, 8), true};
    for (int i = 0; i < 4; ++i) {
        w2.weights[i][0] = 1.0;
        w2.weights[i][1] = -1.0;
        w2.weights[i][3] = 1.0;
    }
    for (int i = 4; i < 8; ++i) {
        w2.weights[i][0] = -1.0;
        w2.weights[i][1] = 1.0;
        w2.weights[i][2] = 1.0;
    }
    DenseLayer w3{zeros(8, 2), false};
    // |p−q| pieces feed the first logit with weight 1; the (1−ε) rows carry
    // the resolved sign of the displayed formula
    w3.weights[0][0] = 1.0;
    w3.weights[1][0] = 1.0;
    w3.weights[2][0] = -(1.0 - epsilon);
    w3.weights[3][0] = -(1.0 - epsilon);
    net.layers = {w1, w2, w3};

    net.readout.enabled = true;
    net.readout.variable = "label";
    switch (conv) {
        case ReadoutConvention::TrueIsFirstStrict:
            net.readout.labels = {Value("True"), Value("False")};
            net.readout.tie_index = 1;
            break;
        case ReadoutConvention::TrueIsFirstNonStrict:
            net.readout.labels = {Value("True"), Value("False")};
            net.readout.tie_index = 0;
            break;
        case ReadoutConvention::TrueIsSecondStrict:
            net.readout.labels = {Value("False"), Value("True")};
            net.readout.tie_index = 0;
            break;
        case ReadoutConvention::TrueIsSecondNonStrict:
            net.readout.labels = {Value("False"), Value("True")};
            net.readout.tie_index = 1;
            break;
    }
    return net;
}

CausalModel hier_eq_high() {
    ValueRange shapes = sym_range({"pentagon", "square", "triangle"});
    ValueRange boolean = sym_range({"True", "False"});
    auto sig = make_sig({"X1", "X2", "X3", "X4", "Y1", "Y2", "Z"},
                        {shapes, shapes, shapes, shapes, boolean, boolean, boolean});
    auto eq_expr = [](const char* a, const char* b) {
        return Expr::if_(Expr::make(ExprOp::Eq, {Expr::var(a), Expr::var(b)}),
                         Expr::lit(Value("True")), Expr::lit(Value("False")));
    };
    std::vector<Mechanism> mechs;
    for (int i = 0; i < 4; ++i) mechs.push_back(Mechanism::constant(Value("pentagon")));
    mechs.push_back(Mechanism::expression(eq_expr("X1", "X2")));
    mechs.push_back(Mechanism::expression(eq_expr("X3", "X4")));
    mechs.push_back(Mechanism::expression(eq_expr("Y1", "Y2")));
    return CausalModel(sig, std::move(mechs), 0.0, "hier_eq_algorithm");
}
} // namespace

HierEqFixture hierarchical_equality_fixture(double epsilon, ReadoutConvention convention) {
    HierEqFixture f;
    f.epsilon = epsilon;
    f.convention = convention;
    f.net = hier_eq_net(epsilon, convention);
    f.low = net_to_model(f.net, 1e-9);
    f.high = hier_eq_high();

    const auto& low_sig = f.low.sig();
    const auto& high_sig = f.high.sig();

    std::vector<std::vector<VarId>> cells(high_sig->size());
    std::vector<CellMap> maps;
    maps.reserve(high_sig->size());
    std::vector<VarId> bot;

    const char* shapes[3] = {"pentagon", "square", "triangle"};
    for (int k = 0; k < 4; ++k) {
        VarId h = high_sig->id("X" + std::to_string(k + 1));
        cells[h] = {low_sig->id("n_in_" + std::to_string(2 * k + 1)),
                    low_sig->id("n_in_" + std::to_string(2 * k + 2))};
    }
    for (int j = 0; j < 4; ++j)
        cells[high_sig->id("Y1")].push_back(low_sig->id("n_h1_" + std::to_string(j + 1)));
    for (int j = 4; j < 8; ++j)
        cells[high_sig->id("Y2")].push_back(low_sig->id("n_h1_" + std::to_string(j + 1)));
    cells[high_sig->id("Z")] = {low_sig->id("n_out_1"), low_sig->id("n_out_2")};
    for (int j = 1; j <= 8; ++j) bot.push_back(low_sig->id("n_h2_" + std::to_string(j)));
    bot.push_back(low_sig->id("label"));

    for (VarId h = 0; h < high_sig->size(); ++h) {
        const std::string& name = high_sig->name(h);
        if (name[0] == 'X') {
            std::vector<std::pair<Value, Value>> entries;
            for (const char* sym : shapes) {
                const auto& e = f.net.embeddings.at(sym);
                entries.emplace_back(Value(Value::Vec{e[0], e[1]}), Value(sym));
            }
            maps.push_back(CellMap::table(std::move(entries)));
        } else if (name == "Z") {
            maps.push_back(CellMap::argmax(f.net.readout.labels, f.net.readout.tie_index));
        } else {
            maps.push_back(CellMap::identity()); // replaced by the induced build
        }
    }
    Alignment partial(low_sig, high_sig, std::move(cells), std::move(bot), std::move(maps));
    f.alignment = build_interchange_alignment(f.low, f.high, partial, {"Y1", "Y2"});

    f.low_inputs = enumerate_low_inputs(f.low, f.alignment);
    for (const auto& li : f.low_inputs) {
        auto hi = Setting(high_sig);
        for (int k = 0; k < 4; ++k) {
            VarId h = high_sig->id("X" + std::to_string(k + 1));
            auto v = f.alignment.map(h).apply(li, f.alignment.cell(h), 1e-9);
            hi.set(h, *v);
        }
        f.high_inputs.push_back(std::move(hi));
    }
    return f;
}

std::vector<std::pair<double, ReadoutConvention>> hierarchical_equality_sweep(
    const std::vector<double>& epsilons, uint64_t max_items) {
    std::vector<std::pair<double, ReadoutConvention>> passing;
    for (double eps : epsilons) {
        for (auto conv : {ReadoutConvention::TrueIsFirstStrict,
                          ReadoutConvention::TrueIsFirstNonStrict,
                          ReadoutConvention::TrueIsSecondStrict,
                          ReadoutConvention::TrueIsSecondNonStrict}) {
            HierEqFixture f;
            try {
                f = hierarchical_equality_fixture(eps, conv);
            } catch (const AlignmentConflict&) {
                continue;
            }
            Suite full = interchange_domain_suite(f.low, f.high, f.alignment, {"Y1", "Y2"});
            uint64_t n = full.size();
            if (max_items > 0 && n > max_items) n = max_items;
            Suite trimmed(n, [full](uint64_t i) { return full.at(i); });
            IIAConfig cfg;
            cfg.suite = trimmed;
            IIAResult r = iia(f.low, f.high, f.alignment, cfg);
            if (r.iia == 1.0) passing.emplace_back(eps, conv);
        }
    }
    return passing;
}

// ─── Synthetic CEBaB ─────────────────────────────────────────────────────

CebabFixture cebab_synthetic_fixture() {
    CebabFixture f;
    f.concepts = {"C_food", "C_service", "C_noise", "C_ambiance"};
    ValueRange cvals = sym_range({"plus", "minus", "unknown"});
    std::vector<std::string> reviews;
    for (int i = 0; i < 81; ++i) reviews.push_back("review_" + std::to_string(i));
    std::vector<Value> review_vals;
    for (const auto& r : reviews) review_vals.push_back(Value(r));

    auto sig = make_sig({"C_food", "C_service", "C_noise", "C_ambiance", "In", "H", "Out"},
                        {cvals, cvals, cvals, cvals, ValueRange::enumerated(review_vals),
                         int_range(0, 80), int_range(1, 5)});

    const char* cv[3] = {"plus", "minus", "unknown"};
    auto concept_score = [](int c) { return c == 0 ? 1 : (c == 1 ? -1 : 0); };

    std::vector<TableRow> in_rows, h_rows, out_rows;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int cidx = 0; cidx < 3; ++cidx)
                for (int d = 0; d < 3; ++d) {
                    int code = ((a * 3 + b) * 3 + cidx) * 3 + d;
                    Setting key(sig);
                    key.set("C_food", Value(cv[a]));
                    key.set("C_service", Value(cv[b]));
                    key.set("C_noise", Value(cv[cidx]));
                    key.set("C_ambiance", Value(cv[d]));
                    in_rows.push_back(TableRow{key, Value(reviews[code])});

                    Setting in_key(sig);
                    in_key.set("In", Value(reviews[code]));
                    h_rows.push_back(TableRow{in_key, Value(static_cast<double>(code))});

                    int rating = 3 + 2 * concept_score(a) + concept_score(b) -
                                 concept_score(cidx);
                    rating = std::max(1, std::min(5, rating));
                    Setting h_key(sig);
                    h_key.set("H", Value(static_cast<double>(code)));
                    out_rows.push_back(TableRow{h_key, Value(static_cast<double>(rating))});
                }

    std::vector<Mechanism> mechs;
    for (int i = 0; i < 4; ++i) mechs.push_back(Mechanism::constant(Value("unknown")));
    mechs.push_back(Mechanism::expression(Expr::table(std::move(in_rows), false, Value(0.0))));
    mechs.push_back(Mechanism::expression(Expr::table(std::move(h_rows), false, Value(0.0))));
    mechs.push_back(Mechanism::expression(Expr::table(std::move(out_rows), false, Value(0.0))));
    f.model = CausalModel(sig, std::move(mechs), 0.0, "cebab_synthetic");
    return f;
}

// ─── Bubble sort ─────────────────────────────────────────────────────────

namespace {
const Value kBot = Value("bot");

bool is_bot(const Value& v) { return v.is_sym() && v.sym() == "bot"; }

std::string xn(int j, int i) { return "x_" + std::to_string(j) + "_" + std::to_string(i); }
std::string yn(int j, int i) { return "y_" + std::to_string(j) + "_" + std::to_string(i); }
std::string zn(int j, int i) { return "z_" + std::to_string(j) + "_" + std::to_string(i); }

ValueRange bubble_value_range(int max_value) {
    std::vector<Value> vals;
    for (int v = 1; v <= max_value; ++v) vals.push_back(Value(static_cast<double>(v)));
    vals.push_back(kBot);
    return ValueRange::enumerated(std::move(vals));
}

ValueRange bubble_bool_range() {
    return ValueRange::enumerated({Value("True"), Value("False"), kBot});
}
} // namespace

BubbleFixture bubble_fixture(int length, int rows, int max_value) {
    BubbleFixture f;
    f.length = length;
    f.rows = rows == 0 ? length + 1 : rows;
    f.max_value = max_value;
    const int L = f.length, R = f.rows;

    // full model: rows of X plus comparison/carry variables between rows
    std::vector<std::string> names;
    std::vector<ValueRange> ranges;
    for (int j = 1; j <= R; ++j)
        for (int i = 1; i <= L; ++i) {
            names.push_back(xn(j, i));
            ranges.push_back(bubble_value_range(max_value));
        }
    for (int j = 1; j <= R - 1; ++j)
        for (int i = 1; i <= L - 1; ++i) {
            names.push_back(yn(j, i));
            ranges.push_back(bubble_value_range(max_value));
            names.push_back(zn(j, i));
            ranges.push_back(bubble_bool_range());
        }
    auto sig = make_sig(names, ranges);

    // carried value entering position i of row j: the first element for i=1
    auto carried_name = [&](int j, int i) { return i == 1 ? xn(j, 1) : yn(j, i - 1); };

    std::vector<Mechanism> mechs(sig->size(), Mechanism::constant(kBot));
    auto set_mech = [&](const std::string& name, Mechanism m) {
        mechs[sig->id(name)] = std::move(m);
    };

    for (int j = 1; j <= R - 1; ++j) {
        for (int i = 1; i <= L - 1; ++i) {
            std::string carry = carried_name(j, i);
            std::string next = xn(j, i + 1);
            // comparison: carried > next element
            set_mech(zn(j, i), Mechanism::host(
                [carry, next, sig](const Setting& t) {
                    const Value& a = t.at(carry);
                    const Value& b = t.at(next);
                    if (is_bot(a) || is_bot(b)) return kBot;
                    return Value(a.num() > b.num() ? "True" : "False");
                },
                {carry, next}));
            // carry out: the larger of carried and next
            std::string z = zn(j, i);
            set_mech(yn(j, i), Mechanism::host(
                [carry, next, z, sig](const Setting& t) {
                    const Value& cmp = t.at(z);
                    if (is_bot(cmp)) return kBot;
                    return cmp.sym() == "True" ? t.at(carry) : t.at(next);
                },
                {carry, next, z}));
        }
        // next row settles positions; the tail receives the bubbled carry
        for (int i = 1; i <= L; ++i) {
            std::string carry = carried_name(j, i);
            if (i <= L - 1) {
                std::string next = xn(j, i + 1);
                std::string z = zn(j, i);
                set_mech(xn(j + 1, i), Mechanism::host(
                    [carry, next, z, sig](const Setting& t) {
                        const Value& cmp = t.at(z);
                        if (is_bot(cmp)) {
                            const Value& c = t.at(carry);
                            return is_bot(c) ? kBot : c;
                        }
                        return cmp.sym() == "True" ? t.at(next) : t.at(carry);
                    },
                    {carry, next, z}));
            } else {
                set_mech(xn(j + 1, i), Mechanism::host(
                    [carry, sig](const Setting& t) {
                        const Value& c = t.at(carry);
                        return is_bot(c) ? kBot : c;
                    },
                    {carry}));
            }
        }
    }
    f.full = CausalModel(sig, std::move(mechs), 0.0, "bubble_full");

    // marginalize away the comparison/carry grid
    std::vector<std::string> drop;
    for (int j = 1; j <= R - 1; ++j)
        for (int i = 1; i <= L - 1; ++i) {
            drop.push_back(yn(j, i));
            drop.push_back(zn(j, i));
        }
    auto [marg, marg_align] = marginalize(f.full, drop);
    f.marginalized = std::move(marg);
    f.marg_alignment = std::move(marg_align);

    // direct carried-max recursion over the kept rows
    {
        std::vector<std::string> mnames;
        std::vector<ValueRange> mranges;
        for (int j = 1; j <= R; ++j)
            for (int i = 1; i <= L; ++i) {
                mnames.push_back(xn(j, i));
                mranges.push_back(bubble_value_range(max_value));
            }
        auto msig = make_sig(mnames, mranges);
        std::vector<Mechanism> mm(msig->size(), Mechanism::constant(kBot));
        for (int j = 1; j <= R - 1; ++j) {
            for (int i = 1; i <= L; ++i) {
                std::vector<std::string> prev;
                for (int k = 1; k <= std::min(i + 1, L); ++k) prev.push_back(xn(j, k));
                int limit = i;
                bool has_next = i + 1 <= L;
                std::string next = has_next ? xn(j, i + 1) : "";
                mm[msig->id(xn(j + 1, i))] = Mechanism::host(
                    [prev, limit, has_next, next](const Setting& t) {
                        // carried maximum of the first `limit` entries
                        double carried = 0;
                        bool any = false;
                        for (int k = 0; k < limit; ++k) {
                            const Value& v = t.at(prev[k]);
                            if (is_bot(v)) { any = false; break; }
                            carried = k == 0 ? v.num() : std::max(carried, v.num());
                            any = true;
                        }
                        if (!any) return kBot;
                        if (!has_next) return Value(carried);
                        const Value& nx = t.at(next);
                        if (is_bot(nx)) return Value(carried);
                        return Value(std::min(carried, nx.num()));
                    },
                    prev);
            }
        }
        f.marginalized_direct = CausalModel(msig, std::move(mm), 0.0, "bubble_marginalized");
    }

    // merge the row history of each position (rows 2..R)
    for (int i = 1; i <= L; ++i) {
        std::vector<std::string> members;
        for (int j = 2; j <= R; ++j) members.push_back(xn(j, i));
        f.merge_partition.cells.emplace_back("hist_" + std::to_string(i), members);
    }
    for (int i = 1; i <= L; ++i)
        f.merge_partition.cells.emplace_back(xn(1, i), std::vector<std::string>{xn(1, i)});
    auto [merged, merge_align] = variable_merge(f.marginalized, f.merge_partition);
    f.merged = std::move(merged);
    f.merge_alignment = std::move(merge_align);

    // stabilized-tail value maps for the history tuples
    {
        for (int i = 1; i <= L; ++i) {
            std::string var = "hist_" + std::to_string(i);
            const auto& range = f.merged.sig()->range(f.merged.sig()->id(var));
            std::vector<std::pair<Value, Value>> entries;
            for (const auto& tuple : range.values()) {
                const auto& t = tuple.tup();
                // stabilized when the last two rows agree
                if (t.size() >= 2 && t[t.size() - 1] == t[t.size() - 2])
                    entries.emplace_back(tuple, t.back());
            }
            ValueMap vm{CellMap::table(std::move(entries)), bubble_value_range(max_value),
                        false};
            f.tail_family.maps.emplace_back(var, vm);
        }
    }

    // sorted-output model (inputs in, order statistics out)
    {
        std::vector<std::string> vnames;
        std::vector<ValueRange> vranges;
        for (int i = 1; i <= L; ++i) {
            vnames.push_back(xn(1, i));
            vranges.push_back(bubble_value_range(max_value));
        }
        for (int i = 1; i <= L; ++i) {
            vnames.push_back("hist_" + std::to_string(i));
            vranges.push_back(bubble_value_range(max_value));
        }
        auto vsig = make_sig(vnames, vranges);
        std::vector<Mechanism> vm(vsig->size(), Mechanism::constant(kBot));
        std::vector<std::string> inputs;
        for (int i = 1; i <= L; ++i) inputs.push_back(xn(1, i));
        for (int i = 1; i <= L; ++i) {
            int pos = i - 1;
            vm[vsig->id("hist_" + std::to_string(i))] = Mechanism::host(
                [inputs, pos](const Setting& t) {
                    std::vector<double> xs;
                    for (const auto& name : inputs) {
                        const Value& v = t.at(name);
                        if (!is_bot(v)) xs.push_back(v.num());
                    }
                    std::sort(xs.begin(), xs.end());
                    if (pos >= static_cast<int>(xs.size())) return kBot;
                    return Value(xs[pos]);
                },
                inputs);
        }
        f.value_merged = CausalModel(vsig, std::move(vm), 0.0, "bubble_sorted");
    }

    // value alignment: identity on inputs, tail maps on histories
    {
        const auto& msig = f.merged.sig();
        const auto& vsig = f.value_merged.sig();
        std::vector<std::vector<VarId>> cells(vsig->size());
        std::vector<CellMap> maps;
        for (VarId h = 0; h < vsig->size(); ++h) {
            cells[h] = {msig->id(vsig->name(h))};
            const ValueMap* vmp = f.tail_family.find(vsig->name(h));
            maps.push_back(vmp ? vmp->map : CellMap::identity());
        }
        f.value_alignment = Alignment(msig, vsig, std::move(cells), {}, std::move(maps));
    }
    return f;
}

Setting bubble_input(const BubbleFixture& f, const std::vector<int>& input) {
    if (input.empty() || static_cast<int>(input.size()) > f.length)
        throw DomainViolation("bubble input length out of range");
    Setting s(f.full.sig());
    for (int i = 1; i <= f.length; ++i) {
        if (i <= static_cast<int>(input.size()))
            s.set(xn(1, i), Value(static_cast<double>(input[i - 1])));
        else
            s.set(xn(1, i), kBot);
    }
    return s;
}

BubbleRun bubble_solve(const BubbleFixture& f, const std::vector<int>& input) {
    Setting in = bubble_input(f, input);
    // the full model's sig contains the same X grid names
    Setting sol = apply(f.full, HardIntervention(in)).solve_unique();
    BubbleRun run;
    run.rows.resize(f.rows);
    for (int j = 1; j <= f.rows; ++j) {
        for (int i = 1; i <= f.length; ++i) {
            const Value& v = sol.at(xn(j, i));
            run.rows[j - 1].push_back(is_bot(v) ? std::nullopt
                                                : std::optional<int>(static_cast<int>(v.num())));
        }
    }
    for (int j = 0; j + 1 < f.rows; ++j) {
        if (run.rows[j] == run.rows[j + 1]) {
            run.stabilized_row = j + 1; // 1-based row index
            break;
        }
    }
    if (run.stabilized_row < 0)
        throw CakError("bubble run did not stabilize within the row budget");
    for (const auto& v : run.rows[run.stabilized_row - 1])
        if (v) run.sorted.push_back(*v);
    return run;
}

bool bubble_merged_is_solution(const BubbleFixture& f,
                               const std::vector<std::vector<std::optional<int>>>& histories,
                               const std::vector<int>& input) {
    const auto& sig = f.merged.sig();
    Setting t(sig);
    for (int i = 1; i <= f.length; ++i) {
        if (i <= static_cast<int>(input.size()))
            t.set(xn(1, i), Value(static_cast<double>(input[i - 1])));
        else
            t.set(xn(1, i), kBot);
    }
    for (int i = 1; i <= f.length; ++i) {
        Value::Tuple tup;
        for (const auto& entry : histories[i - 1])
            tup.push_back(entry ? Value(static_cast<double>(*entry)) : kBot);
        t.set("hist_" + std::to_string(i), Value::tuple(std::move(tup)));
    }
    // inputs are interventions; only the history equations are in force
    for (int i = 1; i <= f.length; ++i) {
        VarId hv = sig->id("hist_" + std::to_string(i));
        if (!Value::equal(f.merged.eval_mechanism(hv, t), t.at(hv), 0.0)) return false;
    }
    return true;
}

// ─── Bundles ─────────────────────────────────────────────────────────────

std::vector<std::string> fixture_names() {
    return {"toy_chain", "glut", "addition_mod10", "arithmetic_circuits",
            "conjunction_rotation", "max_relu", "hierarchical_equality",
            "cebab_synthetic", "bubble"};
}

std::vector<FixtureDoc> fixture_documents(const std::string& name) {
    std::vector<FixtureDoc> docs;
    if (name == "toy_chain") {
        docs.push_back({"toy_chain.cam.json", dsl::serialize_model(toy_chain())});
    } else if (name == "glut") {
        docs.push_back({"glut.cam.json", dsl::serialize_model(glut_model())});
        auto m = glut_model();
        std::vector<InterventionPtr> suite;
        suite.push_back(Intervention::null(m.sig()));
        Setting y2(m.sig());
        y2.set("Y", Value(2.0));
        suite.push_back(Intervention::hard(y2));
        Setting z3(m.sig());
        z3.set("Z", Value(3.0));
        suite.push_back(Intervention::hard(z3));
        docs.push_back({"glut_marginalization.suite.json", dsl::serialize_suite(suite)});
    } else if (name == "addition_mod10") {
        auto f = addition_mod10_fixture();
        docs.push_back({"addition.cam.json", dsl::serialize_model(f.low)});
        docs.push_back({"addition_mod10_view.cam.json", dsl::serialize_model(f.high)});
        std::vector<InterventionPtr> suite;
        for (uint64_t i = 0; i < f.suite.size(); ++i) suite.push_back(f.suite.at(i));
        docs.push_back({"addition_pairs.suite.json", dsl::serialize_suite(suite)});
    } else if (name == "arithmetic_circuits") {
        auto f = arithmetic_circuits_fixture();
        docs.push_back({"unary_circuit.cam.json", dsl::serialize_model(f.unary)});
        docs.push_back({"binary_circuit.cam.json", dsl::serialize_model(f.binary)});
        docs.push_back({"circuits.align.json", dsl::serialize_alignment(f.alignment)});
    } else if (name == "conjunction_rotation") {
        auto f = conjunction_rotation_fixture();
        docs.push_back({"conjunction_rotated.cam.json", dsl::serialize_model(f.rotated)});
        docs.push_back({"conjunction_plain.cam.json", dsl::serialize_model(f.plain)});
        docs.push_back({"conjunction_algorithm.cam.json", dsl::serialize_model(f.high)});
    } else if (name == "max_relu") {
        auto f = max_relu_fixture();
        docs.push_back({"max_relu.cam.json", dsl::serialize_model(f.real_model)});
        docs.push_back({"max_relu_merged_enum.cam.json", dsl::serialize_model(f.merged_enum)});
        docs.push_back({"max_relu_claimed.cam.json", dsl::serialize_model(f.claimed_merged)});
    } else if (name == "hierarchical_equality") {
        auto f = hierarchical_equality_fixture();
        docs.push_back({"hier_eq_net.cam.json",
                        dsl::serialize_dense(f.net, 1e-9, "hier_eq_net")});
        docs.push_back({"hier_eq_algorithm.cam.json", dsl::serialize_model(f.high)});
        docs.push_back(
            {"hier_eq.align.json", dsl::serialize_alignment(f.alignment, {"Y1", "Y2"})});
    } else if (name == "cebab_synthetic") {
        auto f = cebab_synthetic_fixture();
        docs.push_back({"cebab_synthetic.cam.json", dsl::serialize_model(f.model)});
    } else if (name == "bubble") {
        auto f = bubble_fixture();
        docs.push_back({"bubble_full.cam.json",
                        dsl::serialize_model(dsl::materialize_tables(f.full))});
        docs.push_back({"bubble_marginalized.cam.json",
                        dsl::serialize_model(dsl::materialize_tables(f.marginalized_direct))});
        docs.push_back({"bubble_sorted.cam.json",
                        dsl::serialize_model(dsl::materialize_tables(f.value_merged))});
    } else {
        throw UnknownFixture("unknown fixture: " + name);
    }
    return docs;
}

} // namespace fixtures
} // namespace cak
