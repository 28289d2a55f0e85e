#pragma once

#include "cak/abstraction.hpp"
#include "cak/intervene.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cak {

// ─── Causal scrubbing (§3.5.3) ───────────────────────────────────────────

struct ScrubSetup {
    CausalModel low;
    CausalModel high;
    // δ: partial surjective low variable -> high variable
    std::map<std::string, std::string> var_map;
    // translates a low input setting into a high input setting; identity on
    // shared names when absent
    std::function<Setting(const Setting&)> input_map;
    std::vector<Setting> pool; // finite input pool sampled uniformly
    std::vector<std::string> outputs; // low output variables compared
    // output-match predicate; tolerance equality when absent
    std::function<bool(const Setting&, const Setting&)> output_equal;
    uint64_t budget = 0;
};

// One full recursive scrub pass for a base input, fully determined by seed.
Setting scrub(const ScrubSetup& s, const Setting& base, uint64_t seed);

struct ScrubReport {
    double faithfulness = 0.0;
    uint64_t samples = 0;
    uint64_t seed = 0;
    uint64_t matches = 0;
};

// Mean over K seeded scrubs of the output-match indicator against the plain
// base run; per-sample RNG derives from (seed, sample index) so the worker
// count cannot change results.
ScrubReport scrub_faithfulness(const ScrubSetup& s, uint64_t samples, uint64_t seed,
                               int jobs = 0);

// ─── Concept erasure (§3.5.1) ────────────────────────────────────────────

struct ErasureSetup {
    CausalModel low;
    std::vector<std::string> targets; // ablated variables
    InterventionPtr ablation;         // the ablation intervention(al)
    // degraded behavior: input setting -> output setting (partial)
    std::vector<std::pair<Setting, Setting>> degraded;
    std::vector<Setting> inputs;      // finite input universe for the suite
    std::vector<std::string> outputs; // watched outputs; empty = childless vars
    bool undefined_is_bot = false;    // sub-circuit flavor: ⊥ outside dom(ℬ)
    uint64_t budget = 0;
};

struct ErasureAbstraction {
    CausalModel high; // X -> Y collider with erasure bit Z
    TauOmega to;
    Suite suite;
};

ErasureAbstraction erasure_abstraction(const ErasureSetup& e);

// ─── Sub-circuit analysis (§3.5.2) ───────────────────────────────────────

struct SubcircuitSetup {
    CausalModel low;
    // kept connections; everything else between non-input variables is severed
    std::vector<std::pair<std::string, std::string>> kept_edges;
    Setting ablation_values; // ĝ for severed sources
    // preserved behavior table (input -> output), partial
    std::vector<std::pair<Setting, Setting>> behavior;
    uint64_t budget = 0;
};

// Mechanism edit feeding severed parents from ĝ and kept parents live.
InterventionPtr subcircuit_interventional(const SubcircuitSetup& s);

// The paired three-variable abstraction for a sub-circuit claim.
ErasureAbstraction subcircuit_abstraction(const SubcircuitSetup& s);

} // namespace cak
