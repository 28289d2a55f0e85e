#pragma once

#include "cak/abstraction.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cak {

// Variables with no parents (inputs) and with no children (outputs).
std::vector<VarId> model_inputs(const CausalModel& m);
std::vector<VarId> model_outputs(const CausalModel& m);

// ─── Interchange interventions (Defs 27-29) ──────────────────────────────

struct InterchangeSpec {
    std::vector<Setting> sources;                 // input settings s_1..s_k
    std::vector<std::vector<std::string>> targets; // pairwise-disjoint non-input sets
    Setting base;                                  // evaluation context
};

// ⋃_j Proj(Solve(m_{s_j}), X_j); requires a unique solution per source.
HardIntervention interchange(const CausalModel& m, const InterchangeSpec& spec,
                             uint64_t budget = 0);

// ⋃_j Proj(Solve(m_{s_j ∘ i_j}), X_j) for already-materialized sub-interventions.
HardIntervention recursive_interchange(const CausalModel& m,
                                       const std::vector<Setting>& sources,
                                       const std::vector<std::vector<std::string>>& targets,
                                       const std::vector<HardIntervention>& sub,
                                       uint64_t budget = 0);

// Def. 29: featurized interchange through an input-preserving bijection.
struct DistributedSpec {
    Bijection tau;
    std::vector<Setting> sources;
    // feature blocks X*_0 (untouched) .. X*_k (patched from source j)
    std::vector<std::vector<std::string>> feature_blocks;
};

InterventionPtr distributed_interchange(const CausalModel& m, const DistributedSpec& spec,
                                        uint64_t budget = 0);

// ─── Interchange-intervention alignments (Def. 30) ───────────────────────

// Fills in the cell maps named in `induced`: a cell value realized under
// some input maps to the high value realized under the corresponding
// high input. Conflicting witnesses raise AlignmentConflict. Maps not named
// stay as given (input and output cells keep their fixed maps).
Alignment build_interchange_alignment(const CausalModel& low, const CausalModel& high,
                                       const Alignment& partial,
                                       const std::vector<std::string>& induced,
                                       uint64_t budget = 0);

// Low input settings in canonical order: the product of the input cells'
// map domains.
std::vector<Setting> enumerate_low_inputs(const CausalModel& low, const Alignment& a,
                                          uint64_t budget = 0);

// dom(ω^π) as generated by interchange interventions: all input
// interventions, plus for every nonempty subset of the patchable
// (interchange-aligned) high variables, every base x per-cell-source
// combination.
Suite interchange_domain_suite(const CausalModel& low, const CausalModel& high,
                               const Alignment& a,
                               const std::vector<std::string>& patchable,
                               uint64_t budget = 0);

// ─── Interchange intervention accuracy (Def. 31) ─────────────────────────

struct IIAConfig {
    Suite suite;                      // low interventions in dom(ω^π)
    std::vector<double> weights;      // empty = uniform
    std::vector<std::string> outputs; // high output variables; empty = derived
    int jobs = 0;
    uint64_t budget = 0;
};

struct IIAResult {
    double iia = 0.0;
    uint64_t suite_size = 0;
    uint64_t matches = 0; // meaningful for uniform weights
};

IIAResult iia(const CausalModel& low, const CausalModel& high, const Alignment& a,
              const IIAConfig& cfg);

// ─── Path patching (§3.4.2) ──────────────────────────────────────────────

struct PathPatchSpec {
    Setting base;
    Setting source;
    std::vector<std::string> senders;
    std::vector<std::string> receivers;
    std::vector<std::string> freeze;
    std::vector<std::string> outputs;
};

// Returns the projected outputs of the patched run; the composed receiver
// intervention is exposed for structural tests.
struct PathPatchResult {
    Setting outputs;
    HardIntervention receiver_patch;
};

PathPatchResult path_patch(const CausalModel& m, const PathPatchSpec& spec,
                           uint64_t budget = 0);

} // namespace cak
