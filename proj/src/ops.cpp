#include "cak/ops.hpp"

#include "cak/errors.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

namespace cak {

// ─── Marginalization ─────────────────────────────────────────────────────

std::pair<CausalModel, Alignment> marginalize(const CausalModel& m,
                                              const std::vector<std::string>& drop,
                                              const ConstructiveOptions& opts) {
    const auto& sig = m.sig();
    std::set<VarId> dropped;
    for (const auto& name : drop) dropped.insert(sig->id(name));

    std::vector<std::string> kept_names;
    std::vector<ValueRange> kept_ranges;
    std::vector<VarId> kept_ids;
    for (VarId v = 0; v < sig->size(); ++v) {
        if (dropped.count(v)) continue;
        kept_names.push_back(sig->name(v));
        kept_ranges.push_back(sig->range(v));
        kept_ids.push_back(v);
    }
    auto high = std::make_shared<Signature>(kept_names, kept_ranges);

    std::vector<std::vector<VarId>> cells;
    std::vector<CellMap> maps;
    for (VarId v : kept_ids) {
        cells.push_back({v});
        maps.push_back(CellMap::identity());
    }
    Alignment a(sig, high, std::move(cells),
                std::vector<VarId>(dropped.begin(), dropped.end()), std::move(maps));
    CausalModel model = constructive_translate(m, a, opts);
    return {std::move(model), std::move(a)};
}

// ─── Variable merge ──────────────────────────────────────────────────────

ValueRange merged_range(const SignaturePtr& sig, const std::vector<VarId>& cell,
                        uint64_t budget) {
    if (cell.size() == 1) return sig->range(cell[0]);
    bool all_enum = true, all_real = true;
    for (VarId v : cell) {
        if (sig->range(v).is_enum()) all_real = false;
        else all_enum = false;
    }
    if (all_real) {
        int dim = 0;
        for (VarId v : cell) dim += sig->range(v).real_dim();
        return ValueRange::real(dim);
    }
    if (!all_enum)
        throw TypeMismatch("cannot merge enumerated and real variables into one cell");
    if (budget == 0) budget = global_budget();
    sig->joint_states(cell, budget);
    std::vector<Value> tuples;
    for_each_assignment(sig, cell, budget, [&](const Setting& s) {
        tuples.push_back(cell_value(s, cell));
    });
    return ValueRange::enumerated(std::move(tuples));
}

namespace {
// Unbundles a merged setting into values of the original variables.
void unbundle_into(Setting& low, const std::vector<VarId>& cell, const Value& v,
                   const SignaturePtr& low_sig) {
    if (cell.size() == 1) {
        low.set(cell[0], v);
        return;
    }
    if (v.is_tuple()) {
        const auto& t = v.tup();
        if (t.size() != cell.size()) throw TypeMismatch("merged tuple arity mismatch");
        for (size_t i = 0; i < cell.size(); ++i) low.set(cell[i], t[i]);
        return;
    }
    // flattened real block
    const auto& x = v.vec();
    size_t k = 0;
    for (VarId cv : cell) {
        int d = low_sig->range(cv).real_dim();
        if (d == 1) {
            low.set(cv, Value(x[k++]));
        } else {
            Value::Vec part(x.begin() + k, x.begin() + k + d);
            k += d;
            low.set(cv, Value(std::move(part)));
        }
    }
}

Value bundle_value(const SignaturePtr& low_sig, const std::vector<VarId>& cell,
                   const std::vector<Value>& member_values) {
    if (cell.size() == 1) return member_values[0];
    bool all_real = true;
    for (VarId v : cell)
        if (low_sig->range(v).is_enum()) all_real = false;
    if (all_real) {
        Value::Vec out;
        for (const auto& mv : member_values) {
            auto part = mv.as_vec();
            out.insert(out.end(), part.begin(), part.end());
        }
        return Value(std::move(out));
    }
    return Value::tuple(member_values);
}
} // namespace

std::pair<CausalModel, Alignment> variable_merge(const CausalModel& m, const MergePartition& p,
                                                 const ConstructiveOptions& opts) {
    const auto& sig = m.sig();
    uint64_t budget = opts.budget ? opts.budget : global_budget();

    std::vector<std::string> names;
    std::vector<ValueRange> ranges;
    std::vector<std::vector<VarId>> cells;
    std::vector<char> covered(sig->size(), 0);
    for (const auto& [new_name, members] : p.cells) {
        std::vector<VarId> cell;
        for (const auto& mn : members) cell.push_back(sig->id(mn));
        std::sort(cell.begin(), cell.end());
        if (cell.empty()) throw PartitionError("empty merge cell for " + new_name);
        for (VarId v : cell) {
            if (covered[v]) throw PartitionError("variable merged twice: " + sig->name(v));
            covered[v] = 1;
        }
        names.push_back(new_name);
        ranges.push_back(merged_range(sig, cell, budget));
        cells.push_back(std::move(cell));
    }
    for (VarId v = 0; v < sig->size(); ++v)
        if (!covered[v])
            throw PartitionError("merge partition misses variable " + sig->name(v));

    auto high = std::make_shared<Signature>(names, ranges);

    // Mechanisms bundle cellwise; the input is unbundled back to low values.
    auto low_copy = std::make_shared<CausalModel>(m);
    auto cells_copy = std::make_shared<std::vector<std::vector<VarId>>>(cells);
    std::vector<Mechanism> mechs;
    for (size_t h = 0; h < cells.size(); ++h) {
        std::set<size_t> parent_cells;
        for (VarId v : cells[h])
            for (VarId pvar : m.order().syntactic_parents[v])
                for (size_t h2 = 0; h2 < cells.size(); ++h2)
                    if (std::find(cells[h2].begin(), cells[h2].end(), pvar) != cells[h2].end())
                        parent_cells.insert(h2);
        std::vector<std::string> parents;
        for (size_t h2 : parent_cells) parents.push_back(names[h2]);
        size_t hidx = h;
        mechs.push_back(Mechanism::host(
            [hidx, low_copy, cells_copy, high](const Setting& t_h) {
                Setting low(low_copy->sig());
                for (size_t h2 = 0; h2 < cells_copy->size(); ++h2) {
                    if (!t_h.has(static_cast<VarId>(h2))) continue; // non-parent cell
                    unbundle_into(low, (*cells_copy)[h2], t_h.at(static_cast<VarId>(h2)),
                                  low_copy->sig());
                }
                std::vector<Value> member_values;
                for (VarId v : (*cells_copy)[hidx])
                    member_values.push_back(low_copy->eval_mechanism(v, low));
                return bundle_value(low_copy->sig(), (*cells_copy)[hidx], member_values);
            },
            std::move(parents)));
    }
    CausalModel model(high, std::move(mechs), m.tolerance(),
                      m.name().empty() ? "merged" : m.name() + "|merged");

    std::vector<CellMap> maps(cells.size(), CellMap::identity());
    Alignment a(sig, high, std::move(cells), {}, std::move(maps));
    return {std::move(model), std::move(a)};
}

// ─── Value merge ─────────────────────────────────────────────────────────

const ValueMap* ValueMergeFamily::find(const std::string& name) const {
    for (const auto& [n, vm] : maps)
        if (n == name) return &vm;
    return nullptr;
}

namespace {

struct VarMergeInfo {
    CellMap map;
    ValueRange codomain = ValueRange::real(1);
    bool identity = true;
    bool injective = false;
    std::vector<std::pair<Value, Value>> pre_by_image; // (image, preimage) if injective table
};

// A value map is treated as injective when its enumerable graph is 1-1;
// injective maps keep the direct (acyclicity-preserving) construction.
bool map_injective(const CellMap& map, const SignaturePtr& sig, const std::vector<VarId>& cell,
                   double tol, uint64_t budget, std::vector<std::pair<Value, Value>>& graph) {
    if (!map.domain_enumerable(sig, cell)) return false;
    std::vector<std::pair<Value, Value>> entries;
    if (map.kind() == CellMap::Kind::Table) {
        entries = map.table_entries();
    } else {
        for_each_assignment(sig, cell, budget, [&](const Setting& s) {
            auto img = map.apply(s, cell, tol);
            if (img) entries.emplace_back(cell_value(s, cell), *img);
        });
    }
    for (size_t i = 0; i < entries.size(); ++i)
        for (size_t j = i + 1; j < entries.size(); ++j)
            if (Value::equal(entries[i].second, entries[j].second, tol)) return false;
    graph = std::move(entries);
    return true;
}

} // namespace

std::pair<CausalModel, Alignment> value_merge(const CausalModel& m, const ValueMergeFamily& d,
                                              const ConstructiveOptions& opts) {
    const auto& sig = m.sig();
    double tol = opts.tol != 0.0 ? opts.tol : m.tolerance();
    uint64_t budget = opts.budget ? opts.budget : global_budget();

    std::vector<VarMergeInfo> info(sig->size());
    std::vector<std::string> names = sig->names();
    std::vector<ValueRange> ranges;
    for (VarId v = 0; v < sig->size(); ++v) {
        const ValueMap* vm = d.find(sig->name(v));
        if (!vm || vm->identity) {
            info[v].identity = true;
            info[v].injective = true;
            info[v].map = CellMap::identity();
            info[v].codomain = sig->range(v);
        } else {
            info[v].identity = false;
            info[v].map = vm->map;
            info[v].codomain = vm->codomain;
            info[v].injective =
                map_injective(vm->map, sig, {v}, tol, budget, info[v].pre_by_image);
        }
        ranges.push_back(info[v].codomain);
    }
    auto high = std::make_shared<Signature>(names, ranges);

    bool all_injective = true;
    for (const auto& i : info)
        if (!i.injective) all_injective = false;

    auto low_copy = std::make_shared<CausalModel>(m);
    auto info_ptr = std::make_shared<std::vector<VarMergeInfo>>(info);
    std::vector<Mechanism> mechs;

    auto preimage_values = [info_ptr, low_copy, tol, budget](VarId v,
                                                             const Value& image) {
        std::vector<Value> out;
        const auto& inf = (*info_ptr)[v];
        if (inf.identity) {
            out.push_back(image);
            return out;
        }
        auto pres = inf.map.preimages(image, low_copy->sig(), {v}, tol, budget);
        for (const auto& s : pres) out.push_back(s.at(v));
        return out;
    };

    for (VarId x = 0; x < sig->size(); ++x) {
        const auto& parents_low = m.order().syntactic_parents[x];
        bool self_parent =
            std::find(parents_low.begin(), parents_low.end(), x) != parents_low.end();
        std::vector<std::string> parent_names;
        for (VarId p : parents_low) parent_names.push_back(sig->name(p));

        if (all_injective) {
            // δ ∘ f ∘ δ⁻¹, pointwise on the parents.
            std::vector<VarId> plist = parents_low;
            mechs.push_back(Mechanism::host(
                [x, plist, low_copy, info_ptr, preimage_values, tol](const Setting& t_h) {
                    Setting low(low_copy->sig());
                    for (VarId p : plist) {
                        auto pres = preimage_values(p, t_h.at(p));
                        if (pres.empty())
                            throw DomainViolation("no preimage for merged value of " +
                                                  low_copy->sig()->name(p));
                        low.set(p, pres.front());
                    }
                    Value out = low_copy->eval_mechanism(x, low);
                    auto img = (*info_ptr)[x].map.apply(
                        [&] {
                            Setting s(low_copy->sig());
                            s.set(x, out);
                            return s;
                        }(),
                        {x}, tol);
                    if (!img)
                        throw DomainViolation("mechanism output escapes merged domain of " +
                                              low_copy->sig()->name(x));
                    return *img;
                },
                parent_names));
            continue;
        }

        // Witness construction: the merged value is kept exactly when some
        // preimage assignment of the parents (and of the variable itself,
        // when self-dependent) satisfies the original equation. The check
        // reads its own merged value, so every variable becomes self-parented.
        if (std::find(parent_names.begin(), parent_names.end(), sig->name(x)) ==
            parent_names.end())
            parent_names.push_back(sig->name(x));
        std::vector<VarId> plist;
        for (VarId p : parents_low)
            if (p != x) plist.push_back(p);
        auto memo = std::make_shared<std::mutex>();
        auto cache =
            std::make_shared<std::unordered_map<Setting, std::vector<Value>, SettingHash>>();
        mechs.push_back(Mechanism::host(
            [x, plist, self_parent, low_copy, info_ptr, preimage_values, high, tol, memo,
             cache](const Setting& t_h) {
                Setting key(high);
                for (VarId p : plist) key.set(p, t_h.at(p));
                std::optional<std::vector<Value>> achievable;
                {
                    std::lock_guard<std::mutex> lock(*memo);
                    auto it = cache->find(key);
                    if (it != cache->end()) achievable = it->second;
                }
                if (!achievable) {
                    std::vector<std::vector<Value>> pres;
                    bool empty = false;
                    for (VarId p : plist) {
                        auto pv = preimage_values(p, t_h.at(p));
                        if (pv.empty()) empty = true;
                        pres.push_back(std::move(pv));
                    }
                    std::vector<Value> found;
                    if (!empty) {
                        std::vector<size_t> idx(pres.size(), 0);
                        bool done = false;
                        while (!done) {
                            Setting low(low_copy->sig());
                            for (size_t i = 0; i < plist.size(); ++i)
                                low.set(plist[i], pres[i][idx[i]]);
                            auto record = [&](const Value& img) {
                                for (const auto& f : found)
                                    if (Value::equal(f, img, tol)) return;
                                found.push_back(img);
                            };
                            if (!self_parent) {
                                Value out = low_copy->eval_mechanism(x, low);
                                Setting s(low_copy->sig());
                                s.set(x, out);
                                auto img = (*info_ptr)[x].map.apply(s, {x}, tol);
                                if (img) record(*img);
                            } else {
                                // self value must be a fixpoint of the equation
                                const auto& own_range = low_copy->sig()->range(x);
                                if (!own_range.is_enum())
                                    throw NotEnumerable(
                                        "self-dependent value merge needs an enumerable range");
                                for (const auto& x0 : own_range.values()) {
                                    low.set(x, x0);
                                    Value out = low_copy->eval_mechanism(x, low);
                                    if (!Value::equal(out, x0, tol)) continue;
                                    Setting s(low_copy->sig());
                                    s.set(x, x0);
                                    auto img = (*info_ptr)[x].map.apply(s, {x}, tol);
                                    if (img) record(*img);
                                }
                                low.unset(x);
                            }
                            size_t i = 0;
                            while (i < idx.size() && ++idx[i] == pres[i].size()) {
                                idx[i] = 0;
                                ++i;
                            }
                            done = i == idx.size();
                        }
                    }
                    std::lock_guard<std::mutex> lock(*memo);
                    (*cache)[key] = found;
                    achievable = std::move(found);
                }
                const Value& want = t_h.at(x);
                for (const auto& f : *achievable)
                    if (Value::equal(f, want, tol)) return want;
                const auto& r = high->range(x);
                if (r.is_enum()) return r.filter_next(want);
                if (want.is_num()) return Value(want.num() + 1.0);
                Value::Vec fx = want.vec();
                for (double& dd : fx) dd += 1.0;
                return Value(std::move(fx));
            },
            parent_names));
    }

    CausalModel model(high, std::move(mechs), m.tolerance(),
                      m.name().empty() ? "value-merged" : m.name() + "|value-merged");

    std::vector<std::vector<VarId>> cells;
    std::vector<CellMap> maps;
    for (VarId v = 0; v < sig->size(); ++v) {
        cells.push_back({v});
        maps.push_back(info[v].map);
    }
    Alignment a(sig, high, std::move(cells), {}, std::move(maps));
    return {std::move(model), std::move(a)};
}

// ─── Viability and uniqueness ────────────────────────────────────────────

ViabilityReport value_merge_viable(
    const CausalModel& m, const ValueMergeFamily& d,
    const std::vector<std::pair<InterventionPtr, InterventionPtr>>* suite, uint64_t budget) {
    if (budget == 0) budget = global_budget();
    const auto& sig = m.sig();
    double tol = m.tolerance();

    std::vector<std::pair<InterventionPtr, InterventionPtr>> pairs;
    if (suite) {
        pairs = *suite;
    } else {
        for (VarId v = 0; v < sig->size(); ++v) {
            const ValueMap* vm = d.find(sig->name(v));
            if (!vm || vm->identity) continue;
            if (!sig->range(v).is_enum())
                throw NotEnumerable("default viability suite needs enumerable ranges");
            const auto& vals = sig->range(v).values();
            for (size_t i = 0; i < vals.size(); ++i) {
                for (size_t j = i + 1; j < vals.size(); ++j) {
                    Setting si(sig), sj(sig);
                    si.set(v, vals[i]);
                    sj.set(v, vals[j]);
                    auto di = vm->map.apply(si, {v}, tol);
                    auto dj = vm->map.apply(sj, {v}, tol);
                    if (!di || !dj || !Value::equal(*di, *dj, tol)) continue;
                    pairs.emplace_back(Intervention::hard(std::move(si)),
                                       Intervention::hard(std::move(sj)));
                }
            }
        }
    }

    auto delta_image = [&](const CausalModel& solved_model) {
        std::vector<Setting> image;
        for (const auto& sol : solved_model.solve(budget)) {
            Setting img(sig);
            bool defined = true;
            for (VarId v = 0; v < sig->size(); ++v) {
                const ValueMap* vm = d.find(sig->name(v));
                if (!vm || vm->identity) {
                    img.set(v, sol.at(v));
                    continue;
                }
                auto mapped = vm->map.apply(sol, {v}, tol);
                if (!mapped) { defined = false; break; }
                img.set(v, *mapped);
            }
            if (defined) image.push_back(std::move(img));
            else image.push_back(Setting(sig)); // distinguished undefined marker
        }
        std::sort(image.begin(), image.end(),
                  [](const Setting& a, const Setting& b) { return Setting::compare(a, b) < 0; });
        return image;
    };

    ViabilityReport report;
    for (const auto& [lhs, rhs] : pairs) {
        ++report.pairs_checked;
        auto img_l = delta_image(cak::apply(m, lhs));
        auto img_r = delta_image(cak::apply(m, rhs));
        bool same = img_l.size() == img_r.size();
        for (size_t i = 0; same && i < img_l.size(); ++i)
            same = Setting::equal(img_l[i], img_r[i], tol);
        if (!same) {
            report.viable = false;
            report.witnesses.push_back(
                {lhs, rhs, "delta-images of the solution sets differ"});
        }
    }
    return report;
}

bool has_unique_solutions(const CausalModel& m, const Suite& domain, uint64_t budget) {
    if (budget == 0) budget = global_budget();
    for (uint64_t i = 0; i < domain.size(); ++i) {
        auto sols = cak::apply(m, domain.at(i)).solve(budget);
        if (sols.size() != 1) return false;
    }
    return true;
}

Suite all_partial_interventions(const SignaturePtr& sig, const std::vector<VarId>& vars,
                                uint64_t budget) {
    if (budget == 0) budget = global_budget();
    uint64_t total = 1;
    std::vector<uint64_t> radix;
    for (VarId v : vars) {
        if (!sig->range(v).is_enum())
            throw NotEnumerable("partial-intervention domain needs enumerable ranges");
        uint64_t k = sig->range(v).values().size() + 1; // +1 = untargeted
        if (total > budget / k) throw EnumerationBudgetExceeded("intervention domain too large");
        total *= k;
        radix.push_back(k);
    }
    auto vars_copy = std::make_shared<std::vector<VarId>>(vars);
    auto radix_copy = std::make_shared<std::vector<uint64_t>>(radix);
    SignaturePtr sig_copy = sig;
    return Suite(total, [vars_copy, radix_copy, sig_copy](uint64_t index) {
        Setting s(sig_copy);
        for (size_t i = 0; i < vars_copy->size(); ++i) {
            uint64_t k = (*radix_copy)[i];
            uint64_t digit = index % k;
            index /= k;
            if (digit > 0)
                s.set((*vars_copy)[i], sig_copy->range((*vars_copy)[i]).values()[digit - 1]);
        }
        return Intervention::hard(std::move(s));
    });
}

// ─── Alignment decomposition ─────────────────────────────────────────────

DecompositionPipeline decompose_alignment(const Alignment& a, uint64_t budget) {
    if (budget == 0) budget = global_budget();
    const auto& low = a.low();
    const auto& high = a.high();

    DecompositionPipeline pipe;
    for (VarId v : a.bot_cell()) pipe.marginalize_set.push_back(low->name(v));

    // Stage 1: marginalize ⊥.
    std::vector<std::string> kept_names;
    std::vector<ValueRange> kept_ranges;
    std::vector<VarId> kept_ids;
    std::vector<char> is_bot(low->size(), 0);
    for (VarId v : a.bot_cell()) is_bot[v] = 1;
    for (VarId v = 0; v < low->size(); ++v) {
        if (is_bot[v]) continue;
        kept_names.push_back(low->name(v));
        kept_ranges.push_back(low->range(v));
        kept_ids.push_back(v);
    }
    auto mid1 = std::make_shared<Signature>(kept_names, kept_ranges);
    {
        std::vector<std::vector<VarId>> cells;
        std::vector<CellMap> maps;
        for (VarId v : kept_ids) {
            cells.push_back({v});
            maps.push_back(CellMap::identity());
        }
        pipe.stages.emplace_back(low, mid1, std::move(cells), a.bot_cell(), std::move(maps));
    }

    // Stage 2: merge each cell into its high variable's name.
    for (VarId h = 0; h < high->size(); ++h) {
        std::vector<std::string> members;
        for (VarId v : a.cell(h)) members.push_back(low->name(v));
        pipe.merge_partition.cells.emplace_back(high->name(h), std::move(members));
    }
    std::vector<std::string> mid2_names;
    std::vector<ValueRange> mid2_ranges;
    std::vector<std::vector<VarId>> mid2_cells;
    for (VarId h = 0; h < high->size(); ++h) {
        std::vector<VarId> cell;
        for (const auto& mn : pipe.merge_partition.cells[h].second)
            cell.push_back(mid1->id(mn));
        std::sort(cell.begin(), cell.end());
        mid2_names.push_back(high->name(h));
        mid2_ranges.push_back(merged_range(mid1, cell, budget));
        mid2_cells.push_back(std::move(cell));
    }
    auto mid2 = std::make_shared<Signature>(mid2_names, mid2_ranges);
    {
        std::vector<CellMap> maps(mid2_cells.size(), CellMap::identity());
        pipe.stages.emplace_back(mid1, mid2, mid2_cells, std::vector<VarId>{},
                                 std::move(maps));
    }

    // Stage 3: value-merge each merged variable with the original cell map,
    // re-keyed to act on bundled values.
    std::vector<std::vector<VarId>> s3_cells;
    std::vector<CellMap> s3_maps;
    for (VarId h = 0; h < high->size(); ++h) {
        s3_cells.push_back({h});
        const CellMap& orig = a.map(h);
        CellMap adapted = orig;
        if (orig.kind() == CellMap::Kind::Table && !mid2->range(h).is_enum() &&
            a.cell(h).size() > 1) {
            // real cells bundle into flat vectors; re-key the table to match
            std::vector<std::pair<Value, Value>> entries;
            for (const auto& [k, v] : orig.table_entries())
                entries.emplace_back(Value(k.as_vec()), v);
            adapted = CellMap::table(std::move(entries));
        } else if (orig.kind() == CellMap::Kind::Expr) {
            // rewrite low-variable references into projections of the bundle
            std::unordered_map<std::string, ExprPtr> repl;
            const auto& cell = a.cell(h);
            std::vector<VarId> sorted_cell = cell;
            std::sort(sorted_cell.begin(), sorted_cell.end());
            for (size_t k = 0; k < sorted_cell.size(); ++k)
                repl[low->name(sorted_cell[k])] =
                    sorted_cell.size() == 1
                        ? Expr::var(high->name(h))
                        : Expr::proj(static_cast<int>(k), Expr::var(high->name(h)));
            adapted = CellMap::expr(orig.expr_ptr()->substitute(repl));
        }
        s3_maps.push_back(adapted);
        pipe.value_family.maps.emplace_back(
            high->name(h), ValueMap{adapted, high->range(h), false});
    }
    pipe.stages.emplace_back(mid2, high, std::move(s3_cells), std::vector<VarId>{},
                             std::move(s3_maps));
    return pipe;
}

std::optional<Setting> DecompositionPipeline::composed_tau(const Setting& low_total,
                                                           double tol) const {
    std::optional<Setting> cur = low_total;
    for (const auto& stage : stages) {
        cur = induced_tau(stage, *cur, tol);
        if (!cur) return std::nullopt;
    }
    return cur;
}

} // namespace cak
