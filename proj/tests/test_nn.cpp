#include <doctest.h>

#include "cak/errors.hpp"
#include "cak/fixtures.hpp"
#include "cak/nn.hpp"
#include "cak/rng.hpp"

#include <cmath>

using namespace cak;

TEST_CASE("a one-layer identity net copies its input") {
    DenseNet net;
    net.embeddings["a"] = {1.0, 0.0};
    net.embeddings["b"] = {0.0, 1.0};
    net.symbol_slots = 1;
    net.layers = {DenseLayer{{{1.0, 0.0}, {0.0, 1.0}}, false}};
    CausalModel m = net_to_model(net);
    Setting in = embed_input(m, net, {"a"});
    Setting sol = cak::apply(m, HardIntervention(in)).solve_unique();
    CHECK(sol.at("n_out_1") == Value(1.0));
    CHECK(sol.at("n_out_2") == Value(0.0));
}

TEST_CASE("network evaluation equals the direct matrix pipeline bit for bit") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting in = embed_input(f.low, f.net, {"square", "pentagon", "triangle", "square"});
    Setting sol = cak::apply(f.low, HardIntervention(in)).solve_unique();

    // row-vector x matrix, left-to-right accumulation
    std::vector<double> x;
    for (int i = 1; i <= 8; ++i) x.push_back(in.at("n_in_" + std::to_string(i)).num());
    auto forward = [](const std::vector<double>& v,
                      const std::vector<std::vector<double>>& w, bool relu) {
        std::vector<double> out(w[0].size(), 0.0);
        for (size_t j = 0; j < out.size(); ++j) {
            double acc = 0;
            for (size_t i = 0; i < v.size(); ++i) {
                if (w[i][j] == 0.0) continue;
                acc += w[i][j] * v[i];
            }
            out[j] = relu && acc < 0 ? 0.0 : acc;
        }
        return out;
    };
    auto h1 = forward(x, f.net.layers[0].weights, true);
    auto h2 = forward(h1, f.net.layers[1].weights, true);
    auto o = forward(h2, f.net.layers[2].weights, false);
    for (int j = 0; j < 8; ++j) {
        CHECK(sol.at("n_h1_" + std::to_string(j + 1)).num() == h1[j]);
        CHECK(sol.at("n_h2_" + std::to_string(j + 1)).num() == h2[j]);
    }
    CHECK(sol.at("n_out_1").num() == o[0]);
    CHECK(sol.at("n_out_2").num() == o[1]);
}

TEST_CASE("fixture embeddings read back verbatim") {
    auto f = fixtures::hierarchical_equality_fixture();
    CHECK(f.net.embeddings.at("pentagon") == std::vector<double>{0.012, -0.301});
    CHECK(f.net.embeddings.at("square") == std::vector<double>{-0.812, 0.456});
    CHECK(f.net.embeddings.at("triangle") == std::vector<double>{0.682, 0.333});
}

TEST_CASE("the algorithm answers the both-equal case True") {
    auto f = fixtures::hierarchical_equality_fixture();
    Setting in(f.high.sig());
    in.set("X1", Value("pentagon"));
    in.set("X2", Value("pentagon"));
    in.set("X3", Value("triangle"));
    in.set("X4", Value("triangle"));
    Setting sol = cak::apply(f.high, HardIntervention(in)).solve_unique();
    CHECK(sol.at("Y1") == Value("True"));
    CHECK(sol.at("Y2") == Value("True"));
    CHECK(sol.at("Z") == Value("True"));
}

TEST_CASE("pre-readout value follows the distance formula on all 81 inputs") {
    auto f = fixtures::hierarchical_equality_fixture();
    const char* shapes[3] = {"pentagon", "square", "triangle"};
    double eps = f.epsilon;
    auto l1 = [&](const char* a, const char* b) {
        const auto& ea = f.net.embeddings.at(a);
        const auto& eb = f.net.embeddings.at(b);
        return std::fabs(ea[0] - eb[0]) + std::fabs(ea[1] - eb[1]);
    };
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) {
                    Setting in = embed_input(
                        f.low, f.net, {shapes[a], shapes[b], shapes[c], shapes[d]});
                    Setting sol = cak::apply(f.low, HardIntervention(in)).solve_unique();
                    double p = l1(shapes[a], shapes[b]);
                    double q = l1(shapes[c], shapes[d]);
                    double expected = std::fabs(p - q) - (1 - eps) * (p + q);
                    CHECK(sol.at("n_out_1").num() == doctest::Approx(expected).epsilon(1e-9));
                    CHECK(sol.at("n_out_2").num() == 0.0);
                }
}

TEST_CASE("the epsilon/convention sweep singles out the working readout") {
    // a thin slice of the interchange suite is enough to reject the three
    // broken conventions
    auto passing = fixtures::hierarchical_equality_sweep({0.3, 0.5, 0.9}, 81 + 500);
    bool found_default = false;
    for (const auto& [eps, conv] : passing) {
        CHECK(conv == fixtures::ReadoutConvention::TrueIsSecondNonStrict);
        if (eps == 0.5) found_default = true;
    }
    CHECK(found_default);
    // the near-1 epsilon breaks the both-unequal case
    for (const auto& [eps, conv] : passing) CHECK(eps != 0.9);
}

TEST_CASE("givens rotations compose to identity and featurizers verify") {
    auto q = givens(2, 0, 1, 20.0);
    auto qi = givens(2, 0, 1, -20.0);
    // q * qi = I within float error
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = 0;
            for (int k = 0; k < 2; ++k) acc += q[i][k] * qi[k][j];
            CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
        }

    auto f = fixtures::conjunction_rotation_fixture();
    Featurizer feat = rotation_featurizer(f.rotated.sig(), {"H1", "H2"}, q);
    check_bijection(feat.bijection, {});

    std::vector<std::vector<double>> skewed = {{1.0, 0.5}, {0.0, 1.0}};
    CHECK_THROWS_AS(rotation_featurizer(f.rotated.sig(), {"H1", "H2"}, skewed),
                    NotOrthogonal);
}

TEST_CASE("rotating the hidden block by the fixture angle undoes the mixing") {
    auto f = fixtures::conjunction_rotation_fixture();
    auto q = givens(2, 0, 1, f.theta_deg);
    Featurizer feat = rotation_featurizer(f.rotated.sig(), {"H1", "H2"}, q);
    // featurized hidden values equal the raw inputs
    for (const auto& input : f.low_inputs) {
        Setting sol = cak::apply(f.rotated, HardIntervention(input)).solve_unique();
        Setting feats = feat.bijection.forward(sol);
        CHECK(feats.at("H1").num() ==
              doctest::Approx(input.at("X1").num()).epsilon(1e-9));
        CHECK(feats.at("H2").num() ==
              doctest::Approx(input.at("X2").num()).epsilon(1e-9));
    }
}

TEST_CASE("pca featurizer on one-hot activations returns signed axes") {
    // model whose hidden block walks the axes as the input varies
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "H"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}), ValueRange::real(2)});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(Expr::make(
        ExprOp::Vec, {Expr::var("X"),
                      Expr::lit(Value(1.0)) - Expr::var("X")})));
    CausalModel m(sig, std::move(mechs), 1e-9, "axis_walk");

    std::vector<Setting> pool;
    for (double x : {0.0, 1.0}) {
        Setting s(sig);
        s.set("X", Value(x));
        pool.push_back(s);
    }
    auto pca = pca_featurizer(m, {"H"}, pool);
    CHECK(pca.degenerate); // both axes carry equal mass
    REQUIRE(pca.eigenvalues.size() == 2);
    CHECK(pca.eigenvalues[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(pca.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-9));
    // components are the signed axes, tie broken by index
    CHECK(std::fabs(pca.featurizer.matrix[0][0]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::fabs(pca.featurizer.matrix[1][1]) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pca first component aligns with a linear pool") {
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "H"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(1.0), Value(2.0), Value(3.0)}),
            ValueRange::real(2)});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(1.0)));
    mechs.push_back(Mechanism::expression(Expr::make(
        ExprOp::Vec, {Expr::var("X"), Expr::lit(Value(2.0)) * Expr::var("X")})));
    CausalModel m(sig, std::move(mechs), 1e-9, "line_walk");

    std::vector<Setting> pool;
    for (double x : {1.0, 2.0, 3.0}) {
        Setting s(sig);
        s.set("X", Value(x));
        pool.push_back(s);
    }
    auto pca = pca_featurizer(m, {"H"}, pool);
    // first component parallel to (1, 2)/sqrt(5)
    double n = std::sqrt(5.0);
    CHECK(std::fabs(pca.featurizer.matrix[0][0]) == doctest::Approx(1.0 / n).epsilon(1e-9));
    CHECK(std::fabs(pca.featurizer.matrix[1][0]) == doctest::Approx(2.0 / n).epsilon(1e-9));
    // round trip through the orthonormal basis
    check_bijection(pca.featurizer.bijection, {});
}

TEST_CASE("probe featurizer spans rowspace then nullspace") {
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"H"}, std::vector<ValueRange>{ValueRange::real(2)});
    double r = 1.0 / std::sqrt(2.0);
    auto probe = probe_featurizer({{r, r}}, sig, {"H"});
    CHECK(probe.rank == 1);
    // first feature is the normalized sum direction
    CHECK(probe.featurizer.matrix[0][0] == doctest::Approx(r).epsilon(1e-9));
    CHECK(probe.featurizer.matrix[1][0] == doctest::Approx(r).epsilon(1e-9));
    check_bijection(probe.featurizer.bijection, {});

    auto ident = probe_featurizer({{1.0, 0.0}, {0.0, 1.0}}, sig, {"H"});
    CHECK(ident.rank == 2);

    CHECK_THROWS_AS(probe_featurizer({{0.0, 0.0}}, sig, {"H"}), RankDeficient);
}

TEST_CASE("sae pair evaluation measures reconstruction error") {
    auto sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "H"},
        std::vector<ValueRange>{
            ValueRange::enumerated({Value(0.0), Value(1.0)}), ValueRange::real(2)});
    std::vector<Mechanism> mechs;
    mechs.push_back(Mechanism::constant(Value(0.0)));
    mechs.push_back(Mechanism::expression(Expr::make(
        ExprOp::Vec, {Expr::lit(Value(3.0)) * Expr::var("X"),
                      Expr::lit(Value(4.0)) * Expr::var("X")})));
    CausalModel m(sig, std::move(mechs), 1e-9, "sae_host");
    std::vector<Setting> pool;
    for (double x : {0.0, 1.0}) {
        Setting s(sig);
        s.set("X", Value(x));
        pool.push_back(s);
    }
    auto ident = [](const std::vector<double>& v) { return v; };
    auto res = sae_pair_eval(ident, ident, m, {"H"}, pool);
    CHECK(res.reconstruction_error == 0.0);
    CHECK(res.featurizer.has_value());

    auto zero = [](const std::vector<double>& v) {
        return std::vector<double>(v.size(), 0.0);
    };
    auto res0 = sae_pair_eval(ident, zero, m, {"H"}, pool);
    // mean norm of the activations: (0 + 5) / 2
    CHECK(res0.reconstruction_error == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_FALSE(res0.featurizer.has_value());

    auto doubled = [](const std::vector<double>& v) {
        std::vector<double> out = v;
        for (double& d : out) d *= 2.0;
        return out;
    };
    auto res2 = sae_pair_eval(ident, doubled, m, {"H"}, pool);
    CHECK(res2.reconstruction_error == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("das search recovers the planted rotation angle with zero loss") {
    auto f = fixtures::conjunction_rotation_fixture();
    DasConfig cfg;
    cfg.block = {"H1", "H2"};
    cfg.grid_step_deg = 0.25;
    cfg.feature_coords = {{0}, {1}};
    cfg.high_targets = {"C1", "C2"};
    cfg.high_outputs = {"O"};
    auto result = das_search(f.rotated, f.high, f.low_inputs, f.high_inputs, cfg);
    CHECK(result.loss == 0);
    CHECK(result.angle_deg >= 19.0);
    CHECK(result.angle_deg <= 21.0);

    // the reported loss equals an independent recount at the same angle
    CHECK(das_loss_at(f.rotated, f.high, f.low_inputs, f.high_inputs, cfg,
                      result.angle_deg) == result.loss);
}

TEST_CASE("das on an unrotated fixture recovers the zero angle") {
    auto f = fixtures::conjunction_rotation_fixture(0.0);
    DasConfig cfg;
    cfg.block = {"H1", "H2"};
    cfg.grid_step_deg = 0.25;
    cfg.feature_coords = {{0}, {1}};
    cfg.high_targets = {"C1", "C2"};
    cfg.high_outputs = {"O"};
    auto result = das_search(f.rotated, f.high, f.low_inputs, f.high_inputs, cfg);
    CHECK(result.loss == 0);
    CHECK(std::min(result.angle_deg, 360.0 - result.angle_deg) ==
          doctest::Approx(0.0).epsilon(1e-6));
}
