#pragma once

#include "cak/abstraction.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cak {

// ─── Approximate transformation metric (Def. 25) ─────────────────────────

struct Similarity {
    enum class Kind { ExactMatch01, AbsDiffOn, OutputMatch01, OutputMismatch01 };
    Kind kind = Kind::ExactMatch01;
    std::string variable;              // AbsDiffOn
    std::vector<std::string> outputs;  // OutputMatch01 / OutputMismatch01

    static Similarity exact_match() { return {Kind::ExactMatch01, "", {}}; }
    static Similarity abs_diff_on(std::string var) { return {Kind::AbsDiffOn, std::move(var), {}}; }
    static Similarity output_match(std::vector<std::string> outs) {
        return {Kind::OutputMatch01, "", std::move(outs)};
    }
    // distance flavor: 0 on matching outputs, 1 otherwise (the LIME shape)
    static Similarity output_mismatch(std::vector<std::string> outs) {
        return {Kind::OutputMismatch01, "", std::move(outs)};
    }
};

enum class Statistic { Mean, Max, Min };

struct ApproxConfig {
    Similarity sim;
    Suite suite;
    std::vector<double> weights; // empty = uniform; must sum to 1 otherwise
    Statistic stat = Statistic::Mean;
    std::optional<double> eta;
    int jobs = 0;
    uint64_t budget = 0;
};

struct ApproxResult {
    double metric = 0.0;
    uint64_t suite_size = 0;
    std::optional<bool> eta_pass;
};

ApproxResult approx_metric(const CausalModel& low, const CausalModel& high,
                           const TauOmega& to, const ApproxConfig& cfg);

// ─── LIME fidelity (§3.3.1) ──────────────────────────────────────────────

using OutputDistance = std::function<double(const Setting&, const Setting&)>;

// 0 when the projected outputs agree within tol, else 1.
OutputDistance mismatch_distance(double tol);
// Sum of absolute differences over numeric output coordinates.
OutputDistance l1_distance();

double lime_fidelity(const CausalModel& low, const CausalModel& high,
                     const std::vector<Setting>& neighborhood, const OutputDistance& distance,
                     uint64_t budget = 0);

// ─── Mediation (§3.4.1) ──────────────────────────────────────────────────

struct EffectTriple {
    std::vector<double> total;
    std::vector<double> direct;
    std::vector<double> indirect;
};

EffectTriple mediation_effects(const CausalModel& m, const Setting& x, const Setting& x_prime,
                               const std::vector<std::string>& outcome,
                               const std::vector<std::string>& mediator, uint64_t budget = 0);

// ─── Integrated gradients (§3.3.2) ───────────────────────────────────────

struct IGOptions {
    int steps = 512;
    double fd_step = 1e-5;
    uint64_t budget = 0;
};

// Midpoint quadrature of central-difference partials along the straight path
// from baseline to mediator values.
std::vector<double> integrated_gradients(const CausalModel& m, const Setting& input,
                                         const std::vector<std::string>& mediators,
                                         const std::vector<double>& values,
                                         const std::vector<double>& baseline,
                                         const std::string& output, const IGOptions& opts = {});

} // namespace cak
