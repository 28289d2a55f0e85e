#pragma once

#include "cak/model.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace cak {

// Hard interventions are partial settings (Def. 7). The empty setting is the
// null intervention.
struct HardIntervention {
    Setting values;

    HardIntervention() = default;
    explicit HardIntervention(Setting s) : values(std::move(s)) {}
    bool is_null() const { return values.assigned_count() == 0; }
    std::vector<VarId> targets() const { return values.domain(); }
};

// Soft interventions replace targeted mechanisms by given functions (Def. 8).
struct SoftIntervention {
    std::map<std::string, Mechanism> replacements;
};

// Interventionals map old mechanisms of the declared targets to new
// mechanisms (Def. 9). The editor sees exactly the old target mechanisms.
struct InterventionalFn {
    std::vector<std::string> targets;
    std::function<std::map<std::string, Mechanism>(
        const std::map<std::string, Mechanism>&)> editor;
    std::string label; // identity for equality/reporting
};

class Intervention;
using InterventionPtr = std::shared_ptr<const Intervention>;

// Unified intervention object: hard, soft, interventional, or a left-to-right
// sequence of those.
class Intervention {
public:
    using Node = std::variant<HardIntervention, SoftIntervention, InterventionalFn,
                              std::vector<InterventionPtr>>;

    static InterventionPtr hard(Setting s);
    static InterventionPtr null(SignaturePtr sig);
    static InterventionPtr soft(SoftIntervention s);
    static InterventionPtr interventional(InterventionalFn f);
    static InterventionPtr sequence(std::vector<InterventionPtr> seq);

    bool is_hard() const { return std::holds_alternative<HardIntervention>(node_); }
    bool is_soft() const { return std::holds_alternative<SoftIntervention>(node_); }
    bool is_interventional() const { return std::holds_alternative<InterventionalFn>(node_); }
    bool is_sequence() const { return std::holds_alternative<std::vector<InterventionPtr>>(node_); }

    const HardIntervention& hard_part() const { return std::get<HardIntervention>(node_); }
    const SoftIntervention& soft_part() const { return std::get<SoftIntervention>(node_); }
    const InterventionalFn& intal_part() const { return std::get<InterventionalFn>(node_); }
    const std::vector<InterventionPtr>& seq_part() const {
        return std::get<std::vector<InterventionPtr>>(node_);
    }

    std::string str() const;

private:
    explicit Intervention(Node n) : node_(std::move(n)) {}
    Node node_;
};

// Defs 7-9: returns a new model with targeted mechanisms replaced; the input
// model is untouched.
CausalModel apply(const CausalModel& m, const HardIntervention& iv);
CausalModel apply(const CausalModel& m, const SoftIntervention& iv);
CausalModel apply(const CausalModel& m, const InterventionalFn& iv);
CausalModel apply(const CausalModel& m, const Intervention& iv);
CausalModel apply(const CausalModel& m, const InterventionPtr& iv);

// Left-to-right composition: a is applied first, then b; b wins on a shared
// hard target. Hard/hard and same-variable soft/soft pairs simplify
// symbolically, everything else becomes a sequence.
InterventionPtr compose(const InterventionPtr& a, const InterventionPtr& b);

// Semi-lattice order on hard interventions: p <= q iff p is a restriction of q.
bool leq(const HardIntervention& p, const HardIntervention& q, double tol = 0.0);

// Section 3.7: mechanism -> mechanism + fixed offset on a real variable.
struct SteeringIntervention {
    std::string target;
    std::vector<double> offset;
};
InterventionPtr steering_interventional(const SteeringIntervention& s, const CausalModel& m);

// Section 3.5 ablations.
struct AblationSpec {
    enum class Kind { Zero, Constant, Resample, Noise };
    Kind kind = Kind::Zero;
    std::vector<std::string> targets;
    Setting constant_values;  // Constant
    Setting source_input;     // Resample
    uint64_t seed = 0;        // Noise
    double scale = 1.0;       // Noise
};
InterventionPtr ablation_interventional(const AblationSpec& a, const CausalModel& m);

// Deterministic per-(seed, variable, component) standard normal draw used by
// noise ablation; versioned so reports stay reproducible.
double noise_offset(uint64_t seed, const std::string& variable, int component);

} // namespace cak
