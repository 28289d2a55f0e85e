#include "cak/approx.hpp"

#include "cak/errors.hpp"
#include "cak/interchange.hpp"
#include "cak/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cak {

namespace {

void canonical_sort(std::vector<Setting>& v) {
    std::sort(v.begin(), v.end(),
              [](const Setting& a, const Setting& b) { return Setting::compare(a, b) < 0; });
}

bool set_equal(std::vector<Setting> a, std::vector<Setting> b, double tol) {
    canonical_sort(a);
    canonical_sort(b);
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!Setting::equal(a[i], b[i], tol)) return false;
    return true;
}

} // namespace

ApproxResult approx_metric(const CausalModel& low, const CausalModel& high,
                           const TauOmega& to, const ApproxConfig& cfg) {
    uint64_t n = cfg.suite.size();
    if (!cfg.weights.empty()) {
        if (cfg.weights.size() != n) throw DomainViolation("weights size mismatch");
        double sum = 0;
        for (double w : cfg.weights) {
            if (w < 0) throw DomainViolation("negative weight");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw DomainViolation("weights must sum to 1");
    }
    double tol = std::max(low.tolerance(), high.tolerance());

    std::vector<double> scores(n, 0.0);
    parallel_for(n, cfg.jobs, [&](uint64_t i) {
        InterventionPtr iv = cfg.suite.at(i);
        auto hi = to.omega(iv);
        if (!hi) throw DomainViolation("suite item outside dom(omega): " + iv->str());
        auto low_sols = cak::apply(low, iv).solve(cfg.budget);
        auto high_sols = cak::apply(high, *hi).solve(cfg.budget);
        std::vector<Setting> mapped;
        bool undefined = false;
        for (const auto& s : low_sols) {
            auto m = to.tau(s);
            if (!m) { undefined = true; break; }
            mapped.push_back(std::move(*m));
        }
        switch (cfg.sim.kind) {
            case Similarity::Kind::ExactMatch01:
                scores[i] = (!undefined && set_equal(mapped, high_sols, tol)) ? 1.0 : 0.0;
                break;
            case Similarity::Kind::OutputMatch01:
            case Similarity::Kind::OutputMismatch01: {
                bool mismatch_flavor = cfg.sim.kind == Similarity::Kind::OutputMismatch01;
                if (undefined) { scores[i] = mismatch_flavor ? 1.0 : 0.0; break; }
                std::vector<VarId> outs;
                for (const auto& name : cfg.sim.outputs) outs.push_back(high.sig()->id(name));
                std::vector<Setting> lhs, rhs;
                for (const auto& s : mapped) lhs.push_back(project(s, outs));
                for (const auto& s : high_sols) rhs.push_back(project(s, outs));
                bool same = set_equal(lhs, rhs, tol);
                scores[i] = mismatch_flavor ? (same ? 0.0 : 1.0) : (same ? 1.0 : 0.0);
                break;
            }
            case Similarity::Kind::AbsDiffOn: {
                if (undefined)
                    throw DomainViolation("tau undefined on a solution under AbsDiff");
                if (mapped.size() != 1 || high_sols.size() != 1)
                    throw AmbiguousSolution("AbsDiff needs singleton solution sets");
                VarId v = high.sig()->id(cfg.sim.variable);
                Value a = mapped[0].at(v);
                Value b = high_sols[0].at(v);
                if (!a.is_num() || !b.is_num())
                    throw NonNumericOutcome("AbsDiff variable must be numeric");
                scores[i] = std::fabs(a.num() - b.num());
                break;
            }
        }
    });

    ApproxResult res;
    res.suite_size = n;
    switch (cfg.stat) {
        case Statistic::Mean: {
            double acc = 0;
            if (cfg.weights.empty()) {
                for (uint64_t i = 0; i < n; ++i) acc += scores[i];
                res.metric = n == 0 ? 0.0 : acc / static_cast<double>(n);
            } else {
                for (uint64_t i = 0; i < n; ++i) acc += scores[i] * cfg.weights[i];
                res.metric = acc;
            }
            break;
        }
        case Statistic::Max: {
            double best = -std::numeric_limits<double>::infinity();
            for (uint64_t i = 0; i < n; ++i) {
                if (!cfg.weights.empty() && cfg.weights[i] == 0.0) continue;
                best = std::max(best, scores[i]);
            }
            res.metric = n == 0 ? 0.0 : best;
            break;
        }
        case Statistic::Min: {
            double best = std::numeric_limits<double>::infinity();
            for (uint64_t i = 0; i < n; ++i) {
                if (!cfg.weights.empty() && cfg.weights[i] == 0.0) continue;
                best = std::min(best, scores[i]);
            }
            res.metric = n == 0 ? 0.0 : best;
            break;
        }
    }
    if (cfg.eta) res.eta_pass = res.metric >= *cfg.eta;
    return res;
}

OutputDistance mismatch_distance(double tol) {
    return [tol](const Setting& a, const Setting& b) {
        return Setting::equal(a, b, tol) ? 0.0 : 1.0;
    };
}

OutputDistance l1_distance() {
    return [](const Setting& a, const Setting& b) {
        double acc = 0;
        for (VarId v : a.domain()) {
            auto xa = a.at(v).as_vec();
            // match by name across signatures
            auto xb = b.at(b.sig()->id(a.sig()->name(v))).as_vec();
            if (xa.size() != xb.size()) throw DimensionMismatch("output dimension mismatch");
            for (size_t i = 0; i < xa.size(); ++i) acc += std::fabs(xa[i] - xb[i]);
        }
        return acc;
    };
}

double lime_fidelity(const CausalModel& low, const CausalModel& high,
                     const std::vector<Setting>& neighborhood, const OutputDistance& distance,
                     uint64_t budget) {
    if (neighborhood.empty()) return 0.0;
    auto louts = model_outputs(low);
    auto houts = model_outputs(high);
    double acc = 0;
    for (const auto& input : neighborhood) {
        Setting ls = apply(low, HardIntervention(input)).solve_unique(budget);
        Setting hi_input(high.sig());
        for (VarId v : input.domain()) hi_input.set(high.sig()->id(input.sig()->name(v)),
                                                    input.at(v));
        Setting hs = apply(high, HardIntervention(hi_input)).solve_unique(budget);
        acc += distance(project(ls, louts), project(hs, houts));
    }
    return acc / static_cast<double>(neighborhood.size());
}

namespace {
std::vector<double> project_numeric(const Setting& s, const std::vector<VarId>& vars) {
    std::vector<double> out;
    for (VarId v : vars) {
        Value val = s.at(v);
        if (val.is_sym()) throw NonNumericOutcome("outcome variable is symbolic");
        auto x = val.as_vec();
        out.insert(out.end(), x.begin(), x.end());
    }
    return out;
}
} // namespace

EffectTriple mediation_effects(const CausalModel& m, const Setting& x, const Setting& x_prime,
                               const std::vector<std::string>& outcome,
                               const std::vector<std::string>& mediator, uint64_t budget) {
    std::vector<VarId> yvars, zvars;
    for (const auto& n : outcome) yvars.push_back(m.sig()->id(n));
    for (const auto& n : mediator) zvars.push_back(m.sig()->id(n));

    auto outcome_under = [&](const Setting& iv) {
        Setting sol = apply(m, HardIntervention(iv)).solve_unique(budget);
        return project_numeric(sol, yvars);
    };
    auto mediator_under = [&](const Setting& iv) {
        Setting sol = apply(m, HardIntervention(iv)).solve_unique(budget);
        return project(sol, zvars);
    };
    auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> out(a.size());
        for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
        return out;
    };

    std::vector<double> out_xp = outcome_under(x_prime);
    EffectTriple t;
    t.total = diff(out_xp, outcome_under(x));
    t.direct = diff(out_xp, outcome_under(x.overwritten_by(mediator_under(x_prime))));
    t.indirect = diff(out_xp, outcome_under(x_prime.overwritten_by(mediator_under(x))));
    return t;
}

std::vector<double> integrated_gradients(const CausalModel& m, const Setting& input,
                                         const std::vector<std::string>& mediators,
                                         const std::vector<double>& values,
                                         const std::vector<double>& baseline,
                                         const std::string& output, const IGOptions& opts) {
    std::vector<VarId> med;
    for (const auto& n : mediators) {
        VarId v = m.sig()->id(n);
        if (m.sig()->range(v).is_enum() || m.sig()->range(v).real_dim() != 1)
            throw NonRealMediator("integrated gradients needs scalar real mediators");
        med.push_back(v);
    }
    if (values.size() != med.size() || baseline.size() != med.size())
        throw DimensionMismatch("mediator value vectors must match the mediator list");
    VarId out_var = m.sig()->id(output);

    auto out_at = [&](const std::vector<double>& v) {
        Setting iv = input;
        for (size_t i = 0; i < med.size(); ++i) iv.set(med[i], Value(v[i]));
        Setting sol = apply(m, HardIntervention(iv)).solve_unique(opts.budget);
        return sol.at(out_var).num();
    };

    std::vector<double> ig(med.size(), 0.0);
    for (size_t i = 0; i < med.size(); ++i) {
        double span = values[i] - baseline[i];
        if (span == 0.0) continue;
        double acc = 0;
        for (int k = 0; k < opts.steps; ++k) {
            double delta = (k + 0.5) / opts.steps;
            std::vector<double> point(med.size());
            for (size_t j = 0; j < med.size(); ++j)
                point[j] = delta * values[j] + (1 - delta) * baseline[j];
            std::vector<double> hi = point, lo = point;
            hi[i] += opts.fd_step;
            lo[i] -= opts.fd_step;
            acc += (out_at(hi) - out_at(lo)) / (2 * opts.fd_step);
        }
        ig[i] = span * acc / opts.steps;
    }
    return ig;
}

} // namespace cak
