#include "cak/interchange.hpp"

#include "cak/errors.hpp"
#include "cak/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>

namespace cak {

std::vector<VarId> model_inputs(const CausalModel& m) {
    std::vector<VarId> out;
    for (VarId v = 0; v < m.sig()->size(); ++v)
        if (m.order().syntactic_parents[v].empty()) out.push_back(v);
    return out;
}

std::vector<VarId> model_outputs(const CausalModel& m) {
    std::vector<char> has_child(m.sig()->size(), 0);
    for (VarId v = 0; v < m.sig()->size(); ++v)
        for (VarId p : m.order().syntactic_parents[v])
            if (p != v) has_child[p] = 1;
    std::vector<VarId> out;
    for (VarId v = 0; v < m.sig()->size(); ++v)
        if (!has_child[v]) out.push_back(v);
    return out;
}

// ─── Interchange interventions ───────────────────────────────────────────

namespace {
void check_targets(const CausalModel& m, const std::vector<std::vector<std::string>>& targets) {
    std::set<VarId> inputs;
    for (VarId v : model_inputs(m)) inputs.insert(v);
    std::set<VarId> seen;
    for (const auto& group : targets) {
        for (const auto& name : group) {
            VarId v = m.sig()->id(name);
            if (inputs.count(v))
                throw DomainViolation("interchange target " + name + " is an input variable");
            if (!seen.insert(v).second)
                throw DomainViolation("interchange targets overlap at " + name);
        }
    }
}
} // namespace

HardIntervention interchange(const CausalModel& m, const InterchangeSpec& spec,
                             uint64_t budget) {
    if (spec.sources.size() != spec.targets.size())
        throw DomainViolation("interchange needs one source per target group");
    check_targets(m, spec.targets);
    Setting patch(m.sig());
    for (size_t j = 0; j < spec.sources.size(); ++j) {
        Setting sol = apply(m, HardIntervention(spec.sources[j])).solve_unique(budget);
        for (const auto& name : spec.targets[j]) patch.set(name, sol.at(name));
    }
    return HardIntervention(std::move(patch));
}

HardIntervention recursive_interchange(const CausalModel& m,
                                       const std::vector<Setting>& sources,
                                       const std::vector<std::vector<std::string>>& targets,
                                       const std::vector<HardIntervention>& sub,
                                       uint64_t budget) {
    if (sources.size() != targets.size() || sources.size() != sub.size())
        throw DomainViolation("recursive interchange needs matching sources/targets/subs");
    check_targets(m, targets);
    Setting patch(m.sig());
    for (size_t j = 0; j < sources.size(); ++j) {
        Setting combined = sources[j].overwritten_by(sub[j].values);
        Setting sol = apply(m, HardIntervention(combined)).solve_unique(budget);
        for (const auto& name : targets[j]) patch.set(name, sol.at(name));
    }
    return HardIntervention(std::move(patch));
}

InterventionPtr distributed_interchange(const CausalModel& m, const DistributedSpec& spec,
                                        uint64_t budget) {
    auto sig = m.sig();
    std::vector<VarId> inputs = model_inputs(m);

    // feature blocks must partition the non-input variables
    std::set<VarId> non_input;
    for (VarId v = 0; v < sig->size(); ++v) non_input.insert(v);
    for (VarId v : inputs) non_input.erase(v);
    std::set<VarId> covered;
    std::vector<std::vector<VarId>> blocks;
    for (const auto& group : spec.feature_blocks) {
        std::vector<VarId> blk;
        for (const auto& name : group) {
            VarId v = sig->id(name);
            if (!non_input.count(v))
                throw DomainViolation("feature block contains input variable " + name);
            if (!covered.insert(v).second)
                throw DomainViolation("feature blocks overlap at " + name);
            blk.push_back(v);
        }
        blocks.push_back(std::move(blk));
    }
    if (covered != non_input)
        throw DomainViolation("feature blocks must partition the non-input variables");
    if (blocks.size() != spec.sources.size() + 1)
        throw DomainViolation("need one feature block per source plus the untouched block");

    // input preservation check on the given sources
    for (const auto& s : spec.sources) {
        Setting t(sig);
        for (VarId v = 0; v < sig->size(); ++v) {
            if (s.has(v)) {
                t.set(v, s.at(v));
            } else {
                const auto& r = sig->range(v);
                t.set(v, r.is_enum() ? r.values().front()
                                     : (r.real_dim() == 1
                                            ? Value(0.0)
                                            : Value(Value::Vec(r.real_dim(), 0.0))));
            }
        }
        Setting img = spec.tau.forward(t);
        for (VarId v : inputs)
            if (!Value::equal(img.at(v), t.at(v), m.tolerance()))
                throw NotInputPreserving("bijection moves input variable " + sig->name(v));
    }

    Bijection tau = spec.tau;
    std::vector<Setting> sources = spec.sources;
    double tol = m.tolerance();
    std::vector<VarId> input_ids = inputs;

    // bijection-block bookkeeping for parent pull-through and local evaluation
    std::vector<int> tau_block_of(sig->size(), 0);
    for (size_t bi = 0; bi < tau.blocks.size(); ++bi)
        for (VarId v : tau.blocks[bi]) tau_block_of[v] = static_cast<int>(bi);
    std::vector<std::vector<std::string>> parents(sig->size());
    for (VarId x = 0; x < sig->size(); ++x) {
        std::set<VarId> ps;
        for (VarId y : tau.blocks[tau_block_of[x]])
            for (VarId p : m.order().syntactic_parents[y])
                for (VarId q : tau.blocks[tau_block_of[p]]) ps.insert(q);
        for (VarId p : ps) parents[x].push_back(sig->name(p));
    }
    auto pad = [sig](const Setting& t) {
        Setting out = t;
        for (VarId v = 0; v < sig->size(); ++v) {
            if (out.has(v)) continue;
            const auto& r = sig->range(v);
            out.set(v, r.is_enum() ? r.values().front()
                                   : (r.real_dim() == 1
                                          ? Value(0.0)
                                          : Value(Value::Vec(r.real_dim(), 0.0))));
        }
        return out;
    };
    std::vector<std::vector<VarId>> tau_blocks = tau.blocks;

    InterventionalFn fn;
    for (VarId v = 0; v < sig->size(); ++v) fn.targets.push_back(sig->name(v));
    fn.label = "dii(" + std::to_string(sources.size()) + " sources)";
    fn.editor = [sig, tau, sources, blocks, input_ids, tol, budget, parents, tau_block_of,
                 tau_blocks, pad](const std::map<std::string, Mechanism>& old) {
        auto olds = std::make_shared<std::vector<Mechanism>>();
        for (VarId v = 0; v < sig->size(); ++v) olds->push_back(old.at(sig->name(v)));
        // Source solutions computed against the received mechanisms.
        auto source_feature_values =
            std::make_shared<std::vector<Setting>>(); // featurized images
        {
            CausalModel base_model(sig, *olds, tol);
            for (const auto& s : sources) {
                Setting sol =
                    apply(base_model, HardIntervention(s)).solve_unique(budget);
                Setting f(sig);
                for (VarId v = 0; v < sig->size(); ++v)
                    f.set(v, (*olds)[v].eval(sol, tol));
                source_feature_values->push_back(tau.forward(f));
            }
        }
        std::map<std::string, Mechanism> out;
        for (VarId x = 0; x < sig->size(); ++x) {
            std::vector<VarId> local = tau_blocks[tau_block_of[x]];
            out.emplace(sig->name(x), Mechanism::host(
                [x, sig, tau, blocks, input_ids, tol, olds, source_feature_values, local,
                 pad](const Setting& t_in) {
                    Setting t = pad(t_in);
                    Setting f = t;
                    for (VarId v : local) f.set(v, (*olds)[v].eval(t, tol));
                    Setting img = tau.forward(f);
                    Setting combined = img;
                    for (size_t j = 1; j < blocks.size(); ++j)
                        for (VarId v : blocks[j])
                            combined.set(v, (*source_feature_values)[j - 1].at(v));
                    return tau.inverse(combined).at(x);
                },
                parents[x]));
        }
        return out;
    };
    return Intervention::interventional(std::move(fn));
}

// ─── Interchange alignments ──────────────────────────────────────────────

std::vector<Setting> enumerate_low_inputs(const CausalModel& low, const Alignment& a,
                                          uint64_t budget) {
    if (budget == 0) budget = global_budget();
    std::set<VarId> low_inputs;
    for (VarId v : model_inputs(low)) low_inputs.insert(v);

    // high input cells, in high declaration order
    std::vector<VarId> input_cells;
    {
        for (VarId h = 0; h < a.high()->size(); ++h) {
            bool all_in = true;
            for (VarId v : a.cell(h))
                if (!low_inputs.count(v)) all_in = false;
            if (all_in) input_cells.push_back(h);
        }
    }

    // per-cell domain: table keys, or enumerated cell assignments
    std::vector<std::vector<Setting>> domains;
    uint64_t total = 1;
    for (VarId h : input_cells) {
        std::vector<Setting> dom;
        const CellMap& map = a.map(h);
        if (map.kind() == CellMap::Kind::Table) {
            for (const auto& [k, v] : map.table_entries()) {
                (void)v;
                Setting s(a.low());
                if (a.cell(h).size() == 1) {
                    s.set(a.cell(h)[0], k);
                } else if (k.is_tuple()) {
                    for (size_t i = 0; i < a.cell(h).size(); ++i)
                        s.set(a.cell(h)[i], k.tup()[i]);
                } else {
                    const auto& x = k.vec();
                    size_t pos = 0;
                    for (VarId cv : a.cell(h)) {
                        int dd = a.low()->range(cv).real_dim();
                        if (dd == 1) {
                            s.set(cv, Value(x[pos++]));
                        } else {
                            Value::Vec part(x.begin() + pos, x.begin() + pos + dd);
                            pos += dd;
                            s.set(cv, Value(std::move(part)));
                        }
                    }
                }
                dom.push_back(std::move(s));
            }
        } else {
            for_each_assignment(a.low(), a.cell(h), budget, [&](const Setting& s) {
                if (map.apply(s, a.cell(h), 0.0)) dom.push_back(project(s, a.cell(h)));
            });
        }
        if (dom.empty()) throw DomainViolation("input cell has empty map domain");
        if (total > budget / dom.size())
            throw EnumerationBudgetExceeded("input enumeration exceeds budget");
        total *= dom.size();
        domains.push_back(std::move(dom));
    }

    std::vector<Setting> out;
    std::vector<size_t> idx(domains.size(), 0);
    bool done = domains.empty();
    if (done) return out;
    for (;;) {
        Setting s(a.low());
        for (size_t i = 0; i < domains.size(); ++i) s = s.overwritten_by(domains[i][idx[i]]);
        out.push_back(std::move(s));
        size_t i = 0;
        while (i < idx.size() && ++idx[i] == domains[i].size()) {
            idx[i] = 0;
            ++i;
        }
        if (i == idx.size()) break;
    }
    return out;
}

namespace {
// High variables whose cells consist purely of low input variables.
std::vector<VarId> input_cells_of(const CausalModel& low, const Alignment& a) {
    std::set<VarId> low_inputs;
    for (VarId v : model_inputs(low)) low_inputs.insert(v);
    std::vector<VarId> out;
    for (VarId h = 0; h < a.high()->size(); ++h) {
        bool all_in = true;
        for (VarId v : a.cell(h))
            if (!low_inputs.count(v)) all_in = false;
        if (all_in) out.push_back(h);
    }
    return out;
}
} // namespace

Alignment build_interchange_alignment(const CausalModel& low, const CausalModel& high,
                                       const Alignment& partial,
                                       const std::vector<std::string>& induced,
                                       uint64_t budget) {
    if (budget == 0) budget = global_budget();
    auto in_cells = input_cells_of(low, partial);
    std::vector<VarId> induced_ids;
    for (const auto& name : induced) {
        VarId h = partial.high()->id(name);
        if (std::find(in_cells.begin(), in_cells.end(), h) != in_cells.end())
            throw DomainViolation("cannot induce a map for input cell " + name);
        induced_ids.push_back(h);
    }

    auto low_input_settings = enumerate_low_inputs(low, partial, budget);

    // corresponding high input settings through the input maps
    std::vector<Setting> high_inputs;
    for (const auto& li : low_input_settings) {
        Setting hi(partial.high());
        for (VarId h : in_cells) {
            auto v = partial.map(h).apply(li, partial.cell(h), low.tolerance());
            if (!v) throw DomainViolation("input map undefined on enumerated input");
            hi.set(h, *v);
        }
        high_inputs.push_back(std::move(hi));
    }

    // realized cell values -> realized high values
    std::vector<std::vector<std::pair<Value, Value>>> tables(partial.high()->size());
    for (size_t i = 0; i < low_input_settings.size(); ++i) {
        Setting low_sol =
            apply(low, HardIntervention(low_input_settings[i])).solve_unique(budget);
        Setting high_sol = apply(high, HardIntervention(high_inputs[i])).solve_unique(budget);
        for (VarId h : induced_ids) {
            Value key = cell_value(low_sol, partial.cell(h));
            Value val = high_sol.at(h);
            auto& tab = tables[h];
            bool found = false;
            for (auto& [k, v] : tab) {
                if (Value::equal(k, key, low.tolerance())) {
                    found = true;
                    if (!Value::equal(v, val, high.tolerance()))
                        throw AlignmentConflict(
                            "cell value " + key.str() + " of " +
                            partial.high()->name(h) + " realizes both " + v.str() +
                            " and " + val.str());
                }
            }
            if (!found) tab.emplace_back(std::move(key), std::move(val));
        }
    }

    std::vector<CellMap> maps;
    for (VarId h = 0; h < partial.high()->size(); ++h) {
        bool is_induced = std::find(induced_ids.begin(), induced_ids.end(), h) !=
                          induced_ids.end();
        maps.push_back(is_induced ? CellMap::table(tables[h]) : partial.map(h));
    }
    return Alignment(partial.low(), partial.high(), partial.cells(), partial.bot_cell(),
                     std::move(maps));
}

Suite interchange_domain_suite(const CausalModel& low, const CausalModel& high,
                               const Alignment& a,
                               const std::vector<std::string>& patchable,
                               uint64_t budget) {
    (void)high;
    if (budget == 0) budget = global_budget();
    auto inputs = std::make_shared<std::vector<Setting>>(enumerate_low_inputs(low, a, budget));
    uint64_t n_in = inputs->size();

    // per-source patch values for each patchable cell, precomputed
    auto inter = std::make_shared<std::vector<VarId>>();
    for (const auto& name : patchable) inter->push_back(a.high()->id(name));
    auto patches = std::make_shared<std::vector<std::vector<Setting>>>(); // [cell][source]
    patches->resize(inter->size());
    for (size_t c = 0; c < inter->size(); ++c) (*patches)[c].resize(n_in, Setting(a.low()));
    parallel_for(n_in, 0, [&](uint64_t i) {
        Setting sol = apply(low, HardIntervention((*inputs)[i])).solve_unique(budget);
        for (size_t c = 0; c < inter->size(); ++c)
            (*patches)[c][i] = project(sol, a.cell((*inter)[c]));
    });

    // class sizes: inputs alone, then per nonempty subset of intermediates
    uint64_t n_subsets = (uint64_t{1} << inter->size());
    std::vector<uint64_t> class_offset;
    uint64_t total = n_in;
    class_offset.push_back(0);
    std::vector<uint64_t> class_size;
    class_size.push_back(n_in);
    for (uint64_t s = 1; s < n_subsets; ++s) {
        uint64_t k = __builtin_popcountll(s);
        uint64_t size = n_in;
        for (uint64_t j = 0; j < k; ++j) {
            if (size > budget / n_in)
                throw EnumerationBudgetExceeded("interchange domain exceeds budget");
            size *= n_in;
        }
        class_offset.push_back(total);
        class_size.push_back(size);
        total += size;
    }

    auto offsets = std::make_shared<std::vector<uint64_t>>(class_offset);
    auto sizes = std::make_shared<std::vector<uint64_t>>(class_size);
    SignaturePtr low_sig = a.low();
    return Suite(total, [inputs, patches, inter, offsets, sizes, n_in,
                         low_sig](uint64_t index) {
        // locate class
        size_t cls_idx = 0;
        for (size_t c = offsets->size(); c-- > 0;) {
            if (index >= (*offsets)[c]) {
                cls_idx = c;
                break;
            }
        }
        uint64_t rem = index - (*offsets)[cls_idx];
        if (cls_idx == 0) return Intervention::hard((*inputs)[rem]);
        uint64_t subset = cls_idx; // subset bitmask over intermediates
        uint64_t base_idx = rem % n_in;
        rem /= n_in;
        Setting iv = (*inputs)[base_idx];
        for (size_t c = 0; c < inter->size(); ++c) {
            if (!(subset >> c & 1)) continue;
            uint64_t src_idx = rem % n_in;
            rem /= n_in;
            iv = iv.overwritten_by((*patches)[c][src_idx]);
        }
        return Intervention::hard(std::move(iv));
    });
}

// ─── IIA ─────────────────────────────────────────────────────────────────

IIAResult iia(const CausalModel& low, const CausalModel& high, const Alignment& a,
              const IIAConfig& cfg) {
    uint64_t n = cfg.suite.size();
    if (!cfg.weights.empty() && cfg.weights.size() != n)
        throw DomainViolation("weight vector size mismatch");

    std::vector<VarId> out_vars;
    if (cfg.outputs.empty()) {
        out_vars = model_outputs(high);
    } else {
        for (const auto& name : cfg.outputs) out_vars.push_back(high.sig()->id(name));
    }

    double tol = std::max(low.tolerance(), high.tolerance());
    TauOmega to = tau_omega_from(a, tol);

    std::vector<char> match(n, 0);
    parallel_for(n, cfg.jobs, [&](uint64_t i) {
        InterventionPtr iv = cfg.suite.at(i);
        auto hi = to.omega(iv);
        if (!hi)
            throw DomainViolation("IIA suite item outside dom(omega): " + iv->str());
        auto low_sols = cak::apply(low, iv).solve(cfg.budget);
        auto high_sols = cak::apply(high, *hi).solve(cfg.budget);
        std::vector<Setting> lhs, rhs;
        bool undefined = false;
        for (const auto& s : low_sols) {
            auto m = to.tau(s);
            if (!m) { undefined = true; break; }
            lhs.push_back(project(*m, out_vars));
        }
        if (!undefined) {
            for (const auto& s : high_sols) rhs.push_back(project(s, out_vars));
            std::sort(lhs.begin(), lhs.end(), [](const Setting& x, const Setting& y) {
                return Setting::compare(x, y) < 0;
            });
            std::sort(rhs.begin(), rhs.end(), [](const Setting& x, const Setting& y) {
                return Setting::compare(x, y) < 0;
            });
            bool same = lhs.size() == rhs.size();
            for (size_t k = 0; same && k < lhs.size(); ++k)
                same = Setting::equal(lhs[k], rhs[k], tol);
            match[i] = same ? 1 : 0;
        }
    });

    IIAResult res;
    res.suite_size = n;
    if (cfg.weights.empty()) {
        for (uint64_t i = 0; i < n; ++i)
            if (match[i]) ++res.matches;
        res.iia = n == 0 ? 1.0 : static_cast<double>(res.matches) / static_cast<double>(n);
    } else {
        double acc = 0;
        for (uint64_t i = 0; i < n; ++i)
            if (match[i]) {
                acc += cfg.weights[i];
                ++res.matches;
            }
        res.iia = acc;
    }
    return res;
}

// ─── Path patching ───────────────────────────────────────────────────────

PathPatchResult path_patch(const CausalModel& m, const PathPatchSpec& spec, uint64_t budget) {
    std::vector<Setting> rec_sources;
    std::vector<std::vector<std::string>> rec_targets;
    std::vector<HardIntervention> rec_subs;
    for (const auto& r : spec.receivers) {
        std::vector<std::string> freeze_minus_r;
        for (const auto& f : spec.freeze)
            if (f != r) freeze_minus_r.push_back(f);
        InterchangeSpec step1;
        step1.sources = {spec.source, spec.base};
        step1.targets = {spec.senders, freeze_minus_r};
        step1.base = spec.base;
        rec_subs.push_back(interchange(m, step1, budget));
        rec_sources.push_back(spec.base);
        rec_targets.push_back({r});
    }
    HardIntervention patch =
        recursive_interchange(m, rec_sources, rec_targets, rec_subs, budget);

    Setting combined = spec.base.overwritten_by(patch.values);
    Setting sol = apply(m, HardIntervention(combined)).solve_unique(budget);
    PathPatchResult out{project(sol, spec.outputs), std::move(patch)};
    return out;
}

} // namespace cak
