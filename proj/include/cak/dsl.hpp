#pragma once

#include "cak/abstraction.hpp"
#include "cak/nn.hpp"
#include "cak/ops.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cak {
namespace dsl {

// JSON-carried model/alignment/suite format ("cam/1"). Serialization is
// canonical: object keys sorted, arrays in declaration order, numbers in
// shortest round-trip decimal.

struct ParsedModel {
    CausalModel model;
    std::optional<DenseNet> dense; // present when the doc used the dense form
    std::string name;
};

ParsedModel parse_model(const std::string& text);

struct ParsedAlignment {
    Alignment alignment;
    // high variables whose maps are declared "interchange-induced" and must
    // be built against the models before use
    std::vector<std::string> induced;
};

ParsedAlignment parse_alignment(const std::string& text, const SignaturePtr& low,
                                const SignaturePtr& high);

// Hard-intervention suites plus single settings.
std::vector<InterventionPtr> parse_suite(const std::string& text, const SignaturePtr& sig);
Setting parse_setting(const std::string& text, const SignaturePtr& sig);

// Canonical serializers.
std::string serialize_model(const CausalModel& m, const std::string& name = "");
std::string serialize_dense(const DenseNet& net, double tolerance, const std::string& name = "");
std::string serialize_alignment(const Alignment& a, const std::vector<std::string>& induced = {});
std::string serialize_suite(const std::vector<InterventionPtr>& suite);
std::string serialize_setting(const Setting& s);
std::string serialize_report(const AbstractionReport& r);

// Canonicalizes any cam/1 document (parse + re-dump).
std::string canonicalize(const std::string& text);

// Value-merge families: {"maps": {"X": {"table": [[k,v],...],
// "codomain": {"values": [...] | "real": d}} | {"identity": true}}}.
ValueMergeFamily parse_value_merge(const std::string& text, const SignaturePtr& sig);

// Variable maps for scrubbing: {"map": {"low": "high", ...}}.
std::map<std::string, std::string> parse_var_map(const std::string& text);

std::string serialize_solutions(const std::vector<Setting>& sols);

// Converts host/table mechanisms into explicit tables over the parents'
// enumerated assignments so the model becomes serializable.
CausalModel materialize_tables(const CausalModel& m, uint64_t budget = 0);

} // namespace dsl
} // namespace cak
