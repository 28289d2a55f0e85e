#include "cak/scrub.hpp"

#include "cak/errors.hpp"
#include "cak/interchange.hpp"
#include "cak/parallel.hpp"
#include "cak/rng.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cak {

// ─── Causal scrubbing ────────────────────────────────────────────────────

namespace {

struct ScrubContext {
    const ScrubSetup& setup;
    std::vector<VarId> low_inputs;
    std::vector<VarId> delta_image; // δ(var) per low var, -1 outside dom(δ)
    std::vector<std::vector<char>> edge_in_circuit; // [G][H]
    // conditioning partitions: per δ-mapped low var, high value -> pool indices
    std::vector<std::map<std::string, std::vector<size_t>>> pool_by_value;
    std::vector<Setting> pool_high_sols;

    Setting high_input_of(const Setting& low_input) const {
        if (setup.input_map) return setup.input_map(low_input);
        Setting hi(setup.high.sig());
        for (VarId v : low_input.domain())
            hi.set(setup.high.sig()->id(low_input.sig()->name(v)), low_input.at(v));
        return hi;
    }

    Setting high_solution(const Setting& low_input) const {
        return cak::apply(setup.high, HardIntervention(high_input_of(low_input)))
            .solve_unique(setup.budget);
    }
};

ScrubContext make_context(const ScrubSetup& s) {
    ScrubContext ctx{s, {}, {}, {}, {}, {}};
    if (s.pool.empty()) throw DomainViolation("scrub needs a non-empty input pool");
    ctx.low_inputs = model_inputs(s.low);

    int n = s.low.sig()->size();
    ctx.delta_image.assign(n, -1);
    for (const auto& [lo, hi] : s.var_map)
        ctx.delta_image[s.low.sig()->id(lo)] = s.high.sig()->id(hi);

    // circuit C = {(G,H): δ(G) is a high-level parent of δ(H)}
    ctx.edge_in_circuit.assign(n, std::vector<char>(n, 0));
    for (VarId g = 0; g < n; ++g) {
        if (ctx.delta_image[g] < 0) continue;
        for (VarId h = 0; h < n; ++h) {
            if (ctx.delta_image[h] < 0) continue;
            const auto& hp = s.high.order().syntactic_parents[ctx.delta_image[h]];
            if (std::find(hp.begin(), hp.end(), ctx.delta_image[g]) != hp.end())
                ctx.edge_in_circuit[g][h] = 1;
        }
    }

    // pool partitions by realized high value, per δ-mapped variable
    ctx.pool_by_value.resize(n);
    for (const auto& input : s.pool) ctx.pool_high_sols.push_back(ctx.high_solution(input));
    for (VarId lv = 0; lv < n; ++lv) {
        if (ctx.delta_image[lv] < 0) continue;
        for (size_t i = 0; i < s.pool.size(); ++i)
            ctx.pool_by_value[lv][ctx.pool_high_sols[i].at(ctx.delta_image[lv]).str()]
                .push_back(i);
    }
    return ctx;
}

Setting scrub_rec(const ScrubContext& ctx, const Setting& base, const Setting& base_high_sol,
                  const std::vector<VarId>& targets, Rng& rng);

Value scrub_value(const ScrubContext& ctx, const Setting& base, const Setting& base_high_sol,
                  VarId h, Rng& rng) {
    const auto& low = ctx.setup.low;
    if (std::find(ctx.low_inputs.begin(), ctx.low_inputs.end(), h) != ctx.low_inputs.end()) {
        if (base.has(h)) return base.at(h);
        return low.eval_mechanism(h, base); // untouched default input
    }
    Setting parent_values(low.sig());
    const auto& parents = low.order().syntactic_parents[h];
    // unimportant parents: a fresh uniform sample each
    for (VarId g : parents) {
        if (ctx.edge_in_circuit[g][h]) continue;
        size_t i = rng.below(ctx.setup.pool.size());
        Setting piece =
            scrub_rec(ctx, ctx.setup.pool[i], ctx.pool_high_sols[i], {g}, rng);
        parent_values = parent_values.overwritten_by(piece);
    }
    // important parents: one shared sample agreeing with the base on δ(h)
    if (ctx.delta_image[h] >= 0) {
        VarId hv = ctx.delta_image[h];
        std::string key = base_high_sol.at(hv).str();
        auto it = ctx.pool_by_value[h].find(key);
        if (it == ctx.pool_by_value[h].end() || it->second.empty())
            throw EmptyConditionedSet("no pool input realizes " +
                                      ctx.setup.high.sig()->name(hv) + " = " + key);
        size_t i = it->second[rng.below(it->second.size())];
        std::vector<VarId> important;
        for (VarId g : parents)
            if (ctx.edge_in_circuit[g][h]) important.push_back(g);
        Setting piece =
            scrub_rec(ctx, ctx.setup.pool[i], ctx.pool_high_sols[i], important, rng);
        parent_values = parent_values.overwritten_by(piece);
    }
    return low.eval_mechanism(h, parent_values);
}

Setting scrub_rec(const ScrubContext& ctx, const Setting& base, const Setting& base_high_sol,
                  const std::vector<VarId>& targets, Rng& rng) {
    Setting out(ctx.setup.low.sig());
    for (VarId h : targets) out.set(h, scrub_value(ctx, base, base_high_sol, h, rng));
    return out;
}

} // namespace

Setting scrub(const ScrubSetup& s, const Setting& base, uint64_t seed) {
    ScrubContext ctx = make_context(s);
    Rng rng(seed);
    std::vector<VarId> outs;
    for (const auto& name : s.outputs) outs.push_back(s.low.sig()->id(name));
    Setting base_high = ctx.high_solution(base);
    return scrub_rec(ctx, base, base_high, outs, rng);
}

ScrubReport scrub_faithfulness(const ScrubSetup& s, uint64_t samples, uint64_t seed,
                               int jobs) {
    ScrubContext ctx = make_context(s);
    std::vector<VarId> outs;
    for (const auto& name : s.outputs) outs.push_back(s.low.sig()->id(name));

    std::vector<Setting> plain(s.pool.size(), Setting(s.low.sig()));
    parallel_for(s.pool.size(), jobs, [&](uint64_t i) {
        plain[i] = cak::apply(s.low, HardIntervention(s.pool[i])).solve_unique(s.budget);
    });

    auto equal = [&](const Setting& a, const Setting& b) {
        if (s.output_equal) return s.output_equal(a, b);
        return Setting::equal(a, b, s.low.tolerance());
    };

    std::vector<char> match(samples, 0);
    parallel_for(samples, jobs, [&](uint64_t k) {
        Rng rng(mix_seed(seed, k));
        size_t base_idx = rng.below(s.pool.size());
        const Setting& base = s.pool[base_idx];
        Setting scrubbed = scrub_rec(ctx, base, ctx.pool_high_sols[base_idx], outs, rng);
        match[k] = equal(project(scrubbed, outs), project(plain[base_idx], outs)) ? 1 : 0;
    });

    ScrubReport rep;
    rep.samples = samples;
    rep.seed = seed;
    for (char c : match) rep.matches += c;
    rep.faithfulness =
        samples == 0 ? 1.0 : static_cast<double>(rep.matches) / static_cast<double>(samples);
    return rep;
}

// ─── Concept erasure ─────────────────────────────────────────────────────

ErasureAbstraction erasure_abstraction(const ErasureSetup& e) {
    const auto& low = e.low;
    auto low_sig = low.sig();
    std::vector<VarId> in_vars = model_inputs(low);
    std::vector<VarId> out_vars;
    if (e.outputs.empty()) {
        out_vars = model_outputs(low);
    } else {
        for (const auto& n : e.outputs) out_vars.push_back(low_sig->id(n));
    }
    std::vector<VarId> target_vars;
    for (const auto& n : e.targets) target_vars.push_back(low_sig->id(n));

    if (e.inputs.empty()) throw DomainViolation("erasure needs an input universe");

    std::vector<Setting> plain_sols, ablated_sols;
    for (const auto& input : e.inputs) {
        plain_sols.push_back(cak::apply(low, HardIntervention(input)).solve_unique(e.budget));
        CausalModel ab = cak::apply(cak::apply(low, HardIntervention(input)), e.ablation);
        ablated_sols.push_back(ab.solve_unique(e.budget));
    }

    auto degraded_for = [&](const Setting& input) -> std::optional<Setting> {
        for (const auto& [in, out] : e.degraded)
            if (Setting::equal(project(input, in.domain()), in, low.tolerance())) return out;
        return std::nullopt;
    };

    // high signature: X over input tuples, Z binary, Y over output tuples
    std::vector<Value> x_values;
    for (const auto& input : e.inputs) x_values.push_back(cell_value(input, in_vars));
    std::vector<Value> y_values;
    double tol = low.tolerance();
    auto push_y = [&](const Value& v) {
        for (const auto& u : y_values)
            if (Value::equal(u, v, tol)) return;
        y_values.push_back(v);
    };
    for (const auto& sol : plain_sols) push_y(cell_value(sol, out_vars));
    for (const auto& sol : ablated_sols) push_y(cell_value(sol, out_vars));
    for (const auto& [in, out_setting] : e.degraded) {
        (void)in;
        push_y(cell_value(out_setting, out_vars));
    }
    if (e.undefined_is_bot) push_y(Value("bot"));
    auto high_sig = std::make_shared<Signature>(
        std::vector<std::string>{"X", "Z", "Y"},
        std::vector<ValueRange>{ValueRange::enumerated(x_values),
                                ValueRange::enumerated({Value(0.0), Value(1.0)}),
                                ValueRange::enumerated(y_values)});

    auto x_vals = std::make_shared<std::vector<Value>>(x_values);
    auto plain_y = std::make_shared<std::vector<Value>>();
    auto degraded_y = std::make_shared<std::vector<Value>>();
    for (size_t i = 0; i < e.inputs.size(); ++i) {
        plain_y->push_back(cell_value(plain_sols[i], out_vars));
        auto deg = degraded_for(e.inputs[i]);
        if (deg)
            degraded_y->push_back(cell_value(*deg, out_vars));
        else
            degraded_y->push_back(e.undefined_is_bot ? Value("bot")
                                                     : cell_value(plain_sols[i], out_vars));
    }
    std::vector<Mechanism> high_mechs;
    high_mechs.push_back(Mechanism::constant(x_values.front())); // arbitrary default
    high_mechs.push_back(Mechanism::constant(Value(0.0)));
    high_mechs.push_back(Mechanism::host(
        [x_vals, plain_y, degraded_y, tol](const Setting& t) {
            const Value& x = t.at("X");
            double z = t.at("Z").num();
            for (size_t i = 0; i < x_vals->size(); ++i) {
                if (Value::equal((*x_vals)[i], x, tol))
                    return z != 0.0 ? (*degraded_y)[i] : (*plain_y)[i];
            }
            throw DomainViolation("input outside the erasure universe");
        },
        std::vector<std::string>{"X", "Z"}));
    CausalModel high(high_sig, std::move(high_mechs), tol, "erasure-collider");

    // τ: Z = 0 exactly when the targets carry their input-determined values
    auto realized_targets = std::make_shared<std::vector<Setting>>();
    for (size_t i = 0; i < e.inputs.size(); ++i)
        realized_targets->push_back(project(plain_sols[i], target_vars));
    auto in_vars_copy = std::make_shared<std::vector<VarId>>(in_vars);
    auto out_vars_copy = std::make_shared<std::vector<VarId>>(out_vars);
    auto tvars = std::make_shared<std::vector<VarId>>(target_vars);

    TauOmega to;
    to.provenance = "erasure";
    to.tau = [x_vals, realized_targets, in_vars_copy, out_vars_copy, tvars, high_sig,
              tol](const Setting& t) -> std::optional<Setting> {
        Value x = cell_value(t, *in_vars_copy);
        int idx = -1;
        for (size_t i = 0; i < x_vals->size(); ++i)
            if (Value::equal((*x_vals)[i], x, tol)) idx = static_cast<int>(i);
        if (idx < 0) return std::nullopt;
        bool intact =
            Setting::equal(project(t, *tvars), (*realized_targets)[idx], tol);
        Setting hi(high_sig);
        hi.set("X", x);
        hi.set("Z", Value(intact ? 0.0 : 1.0));
        hi.set("Y", cell_value(t, *out_vars_copy));
        return hi;
    };

    std::string ablation_label = e.ablation->str();
    InterventionPtr ablation = e.ablation;
    to.omega = [x_vals, in_vars_copy, high_sig, ablation_label,
                tol](const InterventionPtr& iv) -> std::optional<InterventionPtr> {
        auto map_input = [&](const Setting& s) -> std::optional<Value> {
            Value x = cell_value(s, *in_vars_copy);
            for (const auto& v : *x_vals)
                if (Value::equal(v, x, tol)) return x;
            return std::nullopt;
        };
        if (iv->is_hard()) {
            for (VarId v : iv->hard_part().values.domain())
                if (std::find(in_vars_copy->begin(), in_vars_copy->end(), v) ==
                    in_vars_copy->end())
                    return std::nullopt;
            auto x = map_input(iv->hard_part().values);
            if (!x) return std::nullopt;
            Setting hi(high_sig);
            hi.set("X", *x);
            return Intervention::hard(std::move(hi));
        }
        if (iv->is_sequence() && iv->seq_part().size() == 2 &&
            iv->seq_part()[0]->is_hard() && iv->seq_part()[1]->str() == ablation_label) {
            auto x = map_input(iv->seq_part()[0]->hard_part().values);
            if (!x) return std::nullopt;
            Setting hi(high_sig);
            hi.set("X", *x);
            hi.set("Z", Value(1.0));
            return Intervention::hard(std::move(hi));
        }
        if (iv->str() == ablation_label) {
            Setting hi(high_sig);
            hi.set("Z", Value(1.0));
            return Intervention::hard(std::move(hi));
        }
        return std::nullopt;
    };

    // suite: every plain input, plus input∘ablation wherever the ablation
    // actually moves the watched targets
    std::vector<InterventionPtr> items;
    for (const auto& input : e.inputs) items.push_back(Intervention::hard(input));
    for (size_t i = 0; i < e.inputs.size(); ++i) {
        Setting ablated_t = project(ablated_sols[i], target_vars);
        if (!Setting::equal(ablated_t, (*realized_targets)[i], tol))
            items.push_back(
                Intervention::sequence({Intervention::hard(e.inputs[i]), ablation}));
    }

    return ErasureAbstraction{std::move(high), std::move(to), Suite(std::move(items))};
}

// ─── Sub-circuit analysis ────────────────────────────────────────────────

InterventionPtr subcircuit_interventional(const SubcircuitSetup& s) {
    const auto& low = s.low;
    auto sig = low.sig();
    std::set<std::pair<VarId, VarId>> kept;
    for (const auto& [g, h] : s.kept_edges) kept.emplace(sig->id(g), sig->id(h));

    std::set<VarId> input_set;
    for (VarId v : model_inputs(low)) input_set.insert(v);

    std::vector<VarId> targets;
    std::vector<std::vector<VarId>> severed_parents(sig->size());
    for (VarId h = 0; h < sig->size(); ++h) {
        if (input_set.count(h)) continue;
        for (VarId g : low.order().syntactic_parents[h])
            if (!kept.count({g, h})) severed_parents[h].push_back(g);
        if (!severed_parents[h].empty()) targets.push_back(h);
    }
    for (VarId h : targets)
        for (VarId g : severed_parents[h])
            if (!s.ablation_values.has(g))
                throw DomainViolation("ablation values missing severed source " +
                                      sig->name(g));

    Setting ghat = s.ablation_values;
    auto severed_copy = std::make_shared<std::vector<std::vector<VarId>>>(severed_parents);
    InterventionalFn fn;
    for (VarId h : targets) fn.targets.push_back(sig->name(h));
    fn.label = "subcircuit(" + std::to_string(targets.size()) + " edited)";
    fn.editor = [sig, ghat, severed_copy,
                 targets](const std::map<std::string, Mechanism>& old) {
        std::map<std::string, Mechanism> out;
        for (VarId h : targets) {
            Mechanism prev = old.at(sig->name(h));
            std::vector<VarId> sev = (*severed_copy)[h];
            Setting ghat_local = ghat;
            out.emplace(sig->name(h), Mechanism::host(
                [prev, sev, ghat_local](const Setting& t) {
                    Setting patched = t;
                    for (VarId g : sev) patched.set(g, ghat_local.at(g));
                    return prev.eval(patched, 0.0);
                },
                prev.parent_names()));
        }
        return out;
    };
    return Intervention::interventional(std::move(fn));
}

ErasureAbstraction subcircuit_abstraction(const SubcircuitSetup& s) {
    ErasureSetup e;
    e.low = s.low;
    e.ablation = subcircuit_interventional(s);
    e.degraded = s.behavior;
    e.budget = s.budget;
    e.undefined_is_bot = true;
    auto sig = s.low.sig();
    std::set<std::pair<VarId, VarId>> kept;
    for (const auto& [g, h] : s.kept_edges) kept.emplace(sig->id(g), sig->id(h));
    std::set<VarId> input_set;
    for (VarId v : model_inputs(s.low)) input_set.insert(v);
    for (VarId h = 0; h < sig->size(); ++h) {
        if (input_set.count(h)) continue;
        for (VarId g : s.low.order().syntactic_parents[h])
            if (!kept.count({g, h})) {
                e.targets.push_back(sig->name(h));
                break;
            }
    }
    for (const auto& [in, outv] : s.behavior) {
        (void)outv;
        e.inputs.push_back(in);
    }
    return erasure_abstraction(e);
}

} // namespace cak
