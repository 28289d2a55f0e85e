#include <doctest.h>

#include "cak/dsl.hpp"
#include "cak/errors.hpp"
#include "cak/fixtures.hpp"
#include "cak/rng.hpp"

using namespace cak;

TEST_CASE("a minimal constant model parses and solves") {
    std::string doc = R"({
      "format": "cam/1",
      "signature": [{"name": "X", "values": [0, 1]}],
      "mechanisms": {"X": 1}
    })";
    auto parsed = dsl::parse_model(doc);
    auto sols = parsed.model.solve();
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].at("X") == Value(1.0));
}

TEST_CASE("glut round-trips and reproduces its solution sets") {
    auto m = fixtures::glut_model();
    std::string text = dsl::serialize_model(m);
    auto parsed = dsl::parse_model(text);
    CHECK(dsl::serialize_model(parsed.model) == text);

    auto sols = parsed.model.solve();
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].at("X") == Value("star"));

    Setting y2(parsed.model.sig());
    y2.set("Y", Value(2.0));
    CHECK(cak::apply(parsed.model, HardIntervention(y2)).solve().size() == 2);
}

TEST_CASE("every fixture document round-trips byte-identically") {
    for (const auto& name : fixtures::fixture_names()) {
        for (const auto& doc : fixtures::fixture_documents(name)) {
            INFO(doc.filename);
            CHECK(dsl::canonicalize(doc.text) == doc.text);
            if (doc.filename.find(".cam.json") != std::string::npos) {
                auto parsed = dsl::parse_model(doc.text);
                if (parsed.dense) {
                    CHECK(dsl::serialize_dense(*parsed.dense, parsed.model.tolerance(),
                                               parsed.name) == doc.text);
                } else {
                    CHECK(dsl::serialize_model(parsed.model, parsed.name) == doc.text);
                }
            }
        }
    }
}

TEST_CASE("dense documents rebuild the equality network") {
    auto f = fixtures::hierarchical_equality_fixture();
    std::string text = dsl::serialize_dense(f.net, 1e-9, "hier_eq_net");
    auto parsed = dsl::parse_model(text);
    REQUIRE(parsed.dense.has_value());
    Setting in = embed_input(parsed.model, *parsed.dense,
                             {"pentagon", "pentagon", "triangle", "square"});
    CHECK(cak::apply(parsed.model, HardIntervention(in)).solve_unique().at("label") ==
          Value("False"));
}

TEST_CASE("alignment documents round-trip including induced markers") {
    auto f = fixtures::arithmetic_circuits_fixture();
    std::string text = dsl::serialize_alignment(f.alignment);
    auto parsed = dsl::parse_alignment(text, f.binary.sig(), f.unary.sig());
    CHECK(parsed.induced.empty());
    CHECK(dsl::serialize_alignment(parsed.alignment) == text);

    auto h = fixtures::hierarchical_equality_fixture();
    std::string htext = dsl::serialize_alignment(h.alignment, {"Y1", "Y2"});
    auto hparsed = dsl::parse_alignment(htext, h.low.sig(), h.high.sig());
    CHECK(hparsed.induced == std::vector<std::string>{"Y1", "Y2"});
}

TEST_CASE("identity alignment shorthand expands to singleton cells") {
    auto m = fixtures::toy_chain();
    std::string doc = R"({"format": "cam/1", "identity": true})";
    auto parsed = dsl::parse_alignment(doc, m.sig(), m.sig());
    CHECK(parsed.alignment.cell(0).size() == 1);
    CHECK(parsed.alignment.bot_cell().empty());
}

TEST_CASE("overlapping cells raise PartitionError naming the variable") {
    auto m = fixtures::toy_chain();
    std::string doc = R"({
      "format": "cam/1",
      "cells": {"X": ["X", "Y"], "Y": ["Y"]},
      "maps": {}
    })";
    try {
        dsl::parse_alignment(doc, m.sig(), m.sig());
        FAIL("expected PartitionError");
    } catch (const PartitionError& e) {
        CHECK(std::string(e.what()).find("Y") != std::string::npos);
    }
}

TEST_CASE("malformed op names raise ParseError naming the key") {
    std::string doc = R"({
      "format": "cam/1",
      "signature": [{"name": "X", "values": [0, 1]}],
      "mechanisms": {"X": {"frobnicate": [1, 2]}}
    })";
    try {
        dsl::parse_model(doc);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
    }
}

TEST_CASE("undeclared variables are rejected") {
    std::string doc = R"({
      "format": "cam/1",
      "signature": [{"name": "X", "values": [0, 1]}],
      "mechanisms": {"X": {"var": "Ghost"}}
    })";
    CHECK_THROWS_AS(dsl::parse_model(doc), UndeclaredVariable);
}

TEST_CASE("json syntax errors carry line and column positions") {
    std::string doc = "{\n  \"format\": \"cam/1\",\n  broken\n}";
    try {
        dsl::parse_model(doc);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line >= 2);
    }
}

TEST_CASE("suite and setting documents round-trip") {
    auto m = fixtures::glut_model();
    Setting y2(m.sig());
    y2.set("Y", Value(2.0));
    std::vector<InterventionPtr> suite = {Intervention::null(m.sig()),
                                          Intervention::hard(y2)};
    std::string text = dsl::serialize_suite(suite);
    auto parsed = dsl::parse_suite(text, m.sig());
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0]->hard_part().is_null());
    CHECK(parsed[1]->hard_part().values.at("Y") == Value(2.0));
    CHECK(dsl::serialize_suite(parsed) == text);

    std::string stext = dsl::serialize_setting(y2);
    Setting back = dsl::parse_setting(stext, m.sig());
    CHECK(back == y2);
}

TEST_CASE("mutated fixture documents never crash the parser") {
    // fuzz: flip bytes in valid documents; every outcome is a clean parse or
    // a documented error class
    std::vector<std::string> seeds;
    for (const auto& name : {"glut", "toy_chain", "arithmetic_circuits"})
        for (const auto& doc : fixtures::fixture_documents(name)) seeds.push_back(doc.text);

    Rng rng(2024);
    int runs = 0;
    for (int k = 0; k < 10000; ++k) {
        const std::string& base = seeds[k % seeds.size()];
        std::string mutated = base;
        int flips = 1 + static_cast<int>(rng.below(3));
        for (int f = 0; f < flips; ++f) {
            size_t pos = rng.below(mutated.size());
            mutated[pos] = static_cast<char>(32 + rng.below(95));
        }
        try {
            auto parsed = dsl::parse_model(mutated);
            (void)parsed;
        } catch (const ParseError&) {
        } catch (const TypeError&) {
        } catch (const CakError&) {
            // range/partition/type violations from semantic validation
        }
        ++runs;
    }
    CHECK(runs == 10000);
}
