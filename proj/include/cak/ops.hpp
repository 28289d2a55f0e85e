#pragma once

#include "cak/abstraction.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cak {

// ─── Marginalization (Def. 21) ───────────────────────────────────────────

// Drops `drop` into the ⊥-cell; identity cells elsewhere. Returns the model
// and the alignment that produced it.
std::pair<CausalModel, Alignment> marginalize(const CausalModel& m,
                                              const std::vector<std::string>& drop,
                                              const ConstructiveOptions& opts = {});

// ─── Variable merge (Def. 22) ────────────────────────────────────────────

// Ordered list of (new variable, member variables). Cells must partition the
// old variable set; member lists are normalized to declaration order.
struct MergePartition {
    std::vector<std::pair<std::string, std::vector<std::string>>> cells;
};

std::pair<CausalModel, Alignment> variable_merge(const CausalModel& m, const MergePartition& p,
                                                 const ConstructiveOptions& opts = {});

// Val(cell): product range for enumerated members, stacked reals otherwise.
ValueRange merged_range(const SignaturePtr& sig, const std::vector<VarId>& cell,
                        uint64_t budget);

// ─── Value merge (Def. 23) ───────────────────────────────────────────────

struct ValueMap {
    CellMap map;          // applied to the variable's value
    ValueRange codomain;  // declared B_X
    bool identity = false;
};

struct ValueMergeFamily {
    // One entry per variable (by name); missing entries default to identity.
    std::vector<std::pair<std::string, ValueMap>> maps;
    const ValueMap* find(const std::string& name) const;
};

std::pair<CausalModel, Alignment> value_merge(const CausalModel& m, const ValueMergeFamily& d,
                                              const ConstructiveOptions& opts = {});

// ─── Viability and uniqueness ────────────────────────────────────────────

struct ViabilityWitness {
    InterventionPtr lhs;
    InterventionPtr rhs;
    std::string detail;
};

struct ViabilityReport {
    bool viable = true;
    uint64_t pairs_checked = 0;
    std::vector<ViabilityWitness> witnesses;
};

// Optional explicit suite of intervention pairs differing in one merged
// value; the default suite is, per variable, every single-variable pair
// {X:x} vs {X:x'} with equal δ-images.
ViabilityReport value_merge_viable(
    const CausalModel& m, const ValueMergeFamily& d,
    const std::vector<std::pair<InterventionPtr, InterventionPtr>>* suite = nullptr,
    uint64_t budget = 0);

// True iff every intervention in the domain yields exactly one solution.
bool has_unique_solutions(const CausalModel& m, const Suite& domain, uint64_t budget = 0);

// All partial hard interventions over subsets of `vars` (the marginalization
// τ-domain when vars = kept variables).
Suite all_partial_interventions(const SignaturePtr& sig, const std::vector<VarId>& vars,
                                uint64_t budget = 0);

// ─── Alignment decomposition (Prop. 1) ───────────────────────────────────

struct DecompositionPipeline {
    std::vector<std::string> marginalize_set;
    MergePartition merge_partition;
    ValueMergeFamily value_family;
    // Stage alignments: low→kept, kept→merged, merged→high.
    std::vector<Alignment> stages;
    // Pipeline-composed τ.
    std::optional<Setting> composed_tau(const Setting& low_total, double tol) const;
};

DecompositionPipeline decompose_alignment(const Alignment& a, uint64_t budget = 0);

} // namespace cak
