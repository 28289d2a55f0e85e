#pragma once

#include "cak/abstraction.hpp"
#include "cak/approx.hpp"
#include "cak/interchange.hpp"
#include "cak/nn.hpp"
#include "cak/ops.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cak {
namespace fixtures {

// ─── Small models ────────────────────────────────────────────────────────

// Two-variable chain: X constant 0, Y copies X.
CausalModel toy_chain();

// The three-variable table model whose marginalizations cannot commute
// (values {0,1,2,3,star}).
CausalModel glut_model();

// §2.1 running example: X in 0..9 constant 0, Y = [X > 5].
CausalModel threshold_example_model();

// ─── Addition vs mod-10 addition ─────────────────────────────────────────

struct AdditionFixture {
    CausalModel low;   // true addition of two digits
    CausalModel high;  // digit addition compared through mod-10 translation
    TauOmega to;
    Suite suite;       // all 100 digit pairs
    double expected_mean = 4.5;
    double expected_max = 10.0;
};
AdditionFixture addition_mod10_fixture();

// ─── Unary / binary arithmetic circuits ──────────────────────────────────

struct CircuitsFixture {
    CausalModel unary;
    CausalModel binary;
    Alignment alignment; // binary cells -> unary variables (MSB-first decode)
};
CircuitsFixture arithmetic_circuits_fixture();

// ─── Boolean conjunction with a rotated hidden basis ─────────────────────

struct ConjunctionFixture {
    CausalModel rotated;      // hidden layer stores a rotated copy of the inputs
    CausalModel plain;        // identity-basis reference model
    Bijection unrotate;       // bijection carrying rotated -> plain
    CausalModel high;         // boolean conjunction algorithm (C1, C2, O)
    double theta_deg = 20.0;
    std::vector<Setting> low_inputs;
    std::vector<Setting> high_inputs;
};
ConjunctionFixture conjunction_rotation_fixture(double theta_deg = 20.0);

// ─── Max-of-two-numbers ReLU example ─────────────────────────────────────

struct MaxReluFixture {
    CausalModel real_model;       // X1, X2 real; three ReLU units; averaged output
    CausalModel merged_enum;      // marginalized+merged variant over a finite grid
    ValueMergeFamily family;      // collapses the merged hidden pair to a bit
    CausalModel claimed_merged;   // the worked-example target model
    std::vector<Setting> enum_inputs;
};
MaxReluFixture max_relu_fixture();

// ─── Hierarchical equality network (Fig. 5) ──────────────────────────────

enum class ReadoutConvention {
    TrueIsFirstStrict,
    TrueIsFirstNonStrict,
    TrueIsSecondStrict,
    TrueIsSecondNonStrict,
};

struct HierEqFixture {
    DenseNet net;
    CausalModel low;   // 26 neurons + label readout
    CausalModel high;  // X1..X4, Y1, Y2, Z over {pentagon, square, triangle}
    Alignment alignment;
    double epsilon;
    ReadoutConvention convention;
    std::vector<Setting> low_inputs;  // all 81 embedded inputs
    std::vector<Setting> high_inputs;
};
HierEqFixture hierarchical_equality_fixture(
    double epsilon = 0.5,
    ReadoutConvention convention = ReadoutConvention::TrueIsSecondNonStrict);

// Sweeps epsilon x convention; returns the pairs achieving IIA = 1 on the
// single-source suite restricted to `max_items` items (0 = full).
std::vector<std::pair<double, ReadoutConvention>> hierarchical_equality_sweep(
    const std::vector<double>& epsilons, uint64_t max_items = 0);

// ─── Synthetic CEBaB-style concept model ─────────────────────────────────

struct CebabFixture {
    CausalModel model; // four concepts -> review symbol -> code -> rating
    std::vector<std::string> concepts;
    std::string outcome = "Out";
};
CebabFixture cebab_synthetic_fixture();

// ─── Bubble sort (§2.7) ──────────────────────────────────────────────────

struct BubbleFixture {
    int length = 3;   // max list length L
    int rows = 4;     // row budget R (default L+1)
    int max_value = 3;
    CausalModel full;               // X/Y/Z grid with the reconstructed tail rule
    CausalModel marginalized;       // Y/Z solved out (via ops::marginalize)
    Alignment marg_alignment;
    CausalModel marginalized_direct; // carried-max Min/Max recursion, built directly
    MergePartition merge_partition;  // row-history merge X*_i = {X_2_i..X_R_i}
    CausalModel merged;              // cyclic tuple-valued model
    Alignment merge_alignment;
    ValueMergeFamily tail_family;    // stabilized-tail value maps
    CausalModel value_merged;        // Fig-14d sorted-output model, built directly
    Alignment value_alignment;
};
BubbleFixture bubble_fixture(int length = 3, int rows = 0, int max_value = 3);

// Row-by-row evaluation: returns the sorted list plus the full row trace.
struct BubbleRun {
    std::vector<int> sorted;
    std::vector<std::vector<std::optional<int>>> rows;
    int stabilized_row = -1;
};
BubbleRun bubble_solve(const BubbleFixture& f, const std::vector<int>& input);

// Input intervention for a (possibly shorter) list.
Setting bubble_input(const BubbleFixture& f, const std::vector<int>& input);

// Checks the cyclic merged model's equations for a per-column assignment of
// row-history tuples under the given input.
bool bubble_merged_is_solution(const BubbleFixture& f,
                               const std::vector<std::vector<std::optional<int>>>& histories,
                               const std::vector<int>& input);

// ─── Bundles ─────────────────────────────────────────────────────────────

struct FixtureDoc {
    std::string filename;
    std::string text; // canonical dsl serialization
};

// Serializes a named fixture into its dsl documents (models, alignments,
// suites, metadata). Throws UnknownFixture.
std::vector<FixtureDoc> fixture_documents(const std::string& name);

std::vector<std::string> fixture_names();

} // namespace fixtures
} // namespace cak
