#include "cak/abstraction.hpp"

#include "cak/errors.hpp"
#include "cak/parallel.hpp"
#include "cak/rng.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace cak {

// ─── Cell maps ───────────────────────────────────────────────────────────

Value cell_value(const Setting& low, const std::vector<VarId>& cell) {
    if (cell.size() == 1) return low.at(cell[0]);
    bool all_real = true;
    for (VarId v : cell)
        if (low.sig()->range(v).is_enum()) all_real = false;
    if (all_real) {
        // real cells flatten, matching the bundled representation of merges
        Value::Vec x;
        for (VarId v : cell) {
            auto part = low.at(v).as_vec();
            x.insert(x.end(), part.begin(), part.end());
        }
        return Value(std::move(x));
    }
    Value::Tuple t;
    t.reserve(cell.size());
    for (VarId v : cell) t.push_back(low.at(v));
    return Value::tuple(std::move(t));
}

namespace {
Value arbitrary_value(const ValueRange& r) {
    if (r.is_enum()) return r.values().front();
    if (r.real_dim() == 1) return Value(0.0);
    return Value(Value::Vec(r.real_dim(), 0.0));
}

Value filter_value(const ValueRange& r, const Value& v) {
    if (r.is_enum()) return r.filter_next(v);
    if (v.is_num()) return Value(v.num() + 1.0);
    Value::Vec x = v.vec();
    for (double& d : x) d += 1.0;
    return Value(std::move(x));
}

Setting cell_setting(const SignaturePtr& sig, const std::vector<VarId>& cell, const Value& v) {
    Setting s(sig);
    if (cell.size() == 1) {
        s.set(cell[0], v);
    } else if (v.is_tuple()) {
        const auto& t = v.tup();
        if (t.size() != cell.size()) throw TypeMismatch("cell tuple arity mismatch");
        for (size_t i = 0; i < cell.size(); ++i) s.set(cell[i], t[i]);
    } else {
        // flattened real cell
        const auto& x = v.vec();
        size_t k = 0;
        for (VarId cv : cell) {
            int d = sig->range(cv).real_dim();
            if (d == 1) {
                s.set(cv, Value(x[k++]));
            } else {
                Value::Vec part(x.begin() + k, x.begin() + k + d);
                k += d;
                s.set(cv, Value(std::move(part)));
            }
        }
        if (k != x.size()) throw TypeMismatch("cell vector arity mismatch");
    }
    return s;
}
} // namespace

CellMap CellMap::identity() {
    CellMap m;
    m.kind_ = Kind::Identity;
    return m;
}

CellMap CellMap::table(std::vector<std::pair<Value, Value>> entries) {
    CellMap m;
    m.kind_ = Kind::Table;
    m.entries_ = std::move(entries);
    for (const auto& [k, v] : m.entries_) {
        auto [it, fresh] = m.lookup_.emplace(k, v);
        if (!fresh && !(it->second == v))
            throw AlignmentConflict("cell map assigns two values to " + k.str());
    }
    return m;
}

CellMap CellMap::expr(ExprPtr e) {
    CellMap m;
    m.kind_ = Kind::Expr;
    m.expr_ = std::move(e);
    return m;
}

CellMap CellMap::argmax(std::vector<Value> labels, int tie_index) {
    CellMap m;
    m.kind_ = Kind::Argmax;
    m.labels_ = std::move(labels);
    m.tie_index_ = tie_index;
    return m;
}

std::optional<Value> CellMap::apply(const Setting& low, const std::vector<VarId>& cell,
                                    double tol) const {
    switch (kind_) {
        case Kind::Identity:
            return cell_value(low, cell);
        case Kind::Table: {
            Value key = cell_value(low, cell);
            auto it = lookup_.find(key);
            if (it != lookup_.end()) return it->second;
            if (tol > 0) {
                for (const auto& [k, v] : entries_)
                    if (Value::equal(k, key, tol)) return v;
            }
            return std::nullopt;
        }
        case Kind::Expr:
            return expr_->eval(low, tol);
        case Kind::Argmax: {
            Value::Vec x = cell_value(low, cell).as_vec();
            if (x.size() != labels_.size()) throw TypeMismatch("argmax arity mismatch");
            size_t best = 0;
            for (size_t i = 1; i < x.size(); ++i) {
                if (x[i] > x[best] + tol) {
                    best = i;
                } else if (std::abs(x[i] - x[best]) <= tol) {
                    // tie: prefer the configured index when it participates
                    if (static_cast<int>(i) == tie_index_ &&
                        x[i] >= x[best] - tol)
                        best = i;
                }
            }
            return labels_[best];
        }
    }
    return std::nullopt;
}

bool CellMap::domain_enumerable(const SignaturePtr& low_sig,
                                const std::vector<VarId>& cell) const {
    if (kind_ == Kind::Table) return true;
    for (VarId v : cell)
        if (!low_sig->range(v).is_enum()) return false;
    return true;
}

std::vector<Setting> CellMap::preimages(const Value& target, const SignaturePtr& low_sig,
                                        const std::vector<VarId>& cell, double tol,
                                        uint64_t budget) const {
    std::vector<Setting> out;
    if (kind_ == Kind::Table) {
        for (const auto& [k, v] : entries_)
            if (Value::equal(v, target, tol)) out.push_back(cell_setting(low_sig, cell, k));
        return out;
    }
    if (!domain_enumerable(low_sig, cell))
        throw NotEnumerable("cell map preimages require an enumerable cell domain");
    if (budget == 0) budget = global_budget();
    for_each_assignment(low_sig, cell, budget, [&](const Setting& s) {
        auto img = apply(s, cell, tol);
        if (img && Value::equal(*img, target, tol)) out.push_back(project(s, cell));
    });
    return out;
}

void CellMap::check_surjective(const SignaturePtr& low_sig, const std::vector<VarId>& cell,
                               const ValueRange& high_range, double tol,
                               uint64_t budget) const {
    if (!high_range.is_enum()) return; // declared
    if (!domain_enumerable(low_sig, cell)) {
        if (kind_ == Kind::Argmax) {
            // total map; every label is achieved by some real cell value
            for (const auto& v : high_range.values())
                if (std::find_if(labels_.begin(), labels_.end(), [&](const Value& l) {
                        return Value::equal(l, v, tol);
                    }) == labels_.end())
                    throw SurjectivityError("argmax labels miss range value " + v.str());
            return;
        }
        return; // declared
    }
    std::vector<Value> image;
    if (kind_ == Kind::Table) {
        for (const auto& [k, v] : entries_) {
            (void)k;
            image.push_back(v);
        }
    } else {
        if (budget == 0) budget = global_budget();
        for_each_assignment(low_sig, cell, budget, [&](const Setting& s) {
            auto img = apply(s, cell, tol);
            if (img) image.push_back(*img);
        });
    }
    for (const auto& v : high_range.values()) {
        bool hit = false;
        for (const auto& w : image)
            if (Value::equal(v, w, tol)) { hit = true; break; }
        if (!hit)
            throw SurjectivityError("cell map misses high value " + v.str());
    }
}

// ─── Alignment ───────────────────────────────────────────────────────────

Alignment::Alignment(SignaturePtr low, SignaturePtr high,
                     std::vector<std::vector<VarId>> cells, std::vector<VarId> bot,
                     std::vector<CellMap> maps)
    : low_(std::move(low)), high_(std::move(high)), cells_(std::move(cells)),
      bot_(std::move(bot)), maps_(std::move(maps)) {
    if (static_cast<int>(cells_.size()) != high_->size() ||
        maps_.size() != cells_.size())
        throw PartitionError("alignment needs one cell and one map per high variable");
    owner_.assign(low_->size(), -2);
    auto claim = [&](VarId low_var, VarId owner) {
        if (low_var < 0 || low_var >= low_->size())
            throw PartitionError("cell references unknown low variable");
        if (owner_[low_var] != -2)
            throw PartitionError("low variable " + low_->name(low_var) +
                                 " appears in two cells");
        owner_[low_var] = owner;
    };
    for (VarId h = 0; h < high_->size(); ++h) {
        if (cells_[h].empty())
            throw PartitionError("cell for " + high_->name(h) + " is empty");
        for (VarId v : cells_[h]) claim(v, h);
    }
    for (VarId v : bot_) claim(v, -1);
    for (VarId v = 0; v < low_->size(); ++v)
        if (owner_[v] == -2)
            throw PartitionError("low variable " + low_->name(v) + " not covered by any cell");
}

Alignment Alignment::identity(const SignaturePtr& sig) {
    std::vector<std::vector<VarId>> cells;
    std::vector<CellMap> maps;
    for (VarId v = 0; v < sig->size(); ++v) {
        cells.push_back({v});
        maps.push_back(CellMap::identity());
    }
    return Alignment(sig, sig, std::move(cells), {}, std::move(maps));
}

void Alignment::check_surjective(double tol, uint64_t budget) const {
    for (VarId h = 0; h < high_->size(); ++h)
        maps_[h].check_surjective(low_, cells_[h], high_->range(h), tol, budget);
}

std::optional<Setting> induced_tau(const Alignment& a, const Setting& low_total, double tol) {
    Setting out(a.high());
    for (VarId h = 0; h < a.high()->size(); ++h) {
        auto v = a.map(h).apply(low_total, a.cell(h), tol);
        if (!v) return std::nullopt;
        out.set(h, std::move(*v));
    }
    return out;
}

std::optional<HardIntervention> induced_omega(const Alignment& a, const HardIntervention& low,
                                              double tol) {
    std::vector<char> touched(a.high()->size(), 0);
    for (VarId v : low.values.domain()) {
        VarId owner = a.owner(v);
        if (owner < 0) return std::nullopt; // ⊥ variables have no high image
        touched[owner] = 1;
    }
    Setting out(a.high());
    for (VarId h = 0; h < a.high()->size(); ++h) {
        if (!touched[h]) continue;
        // the complete cell must be assigned
        for (VarId v : a.cell(h))
            if (!low.values.has(v)) return std::nullopt;
        auto val = a.map(h).apply(low.values, a.cell(h), tol);
        if (!val) return std::nullopt;
        out.set(h, std::move(*val));
    }
    return HardIntervention(std::move(out));
}

std::optional<HardIntervention> induced_omega_strict(const Alignment& a,
                                                     const HardIntervention& low, double tol,
                                                     uint64_t budget) {
    if (budget == 0) budget = global_budget();
    if (!a.low()->all_enum() || !a.high()->all_enum())
        throw NotEnumerable("strict omega requires enumerated signatures");

    // Image of Proj^-1(i) under τ, restricted to dom(τ) (points outside the
    // domain are treated as the distinguished ⊥, which no Proj^-1 set holds).
    std::vector<Setting> image;
    for (const auto& t : inverse_project(low.values, a.low(), budget)) {
        auto m = induced_tau(a, t, tol);
        if (!m) continue;
        image.push_back(std::move(*m));
    }
    if (image.empty()) return std::nullopt;
    std::sort(image.begin(), image.end(),
              [](const Setting& x, const Setting& y) { return Setting::compare(x, y) < 0; });
    image.erase(std::unique(image.begin(), image.end(),
                            [&](const Setting& x, const Setting& y) {
                                return Setting::equal(x, y, tol);
                            }),
                image.end());

    // Candidate = the variables constant across the image.
    Setting candidate(a.high());
    for (VarId h = 0; h < a.high()->size(); ++h) {
        bool constant = true;
        for (size_t i = 1; i < image.size(); ++i)
            if (!Value::equal(image[i].at(h), image[0].at(h), tol)) { constant = false; break; }
        if (constant) candidate.set(h, image[0].at(h));
    }
    auto cylinder = inverse_project(candidate, a.high(), budget);
    if (cylinder.size() != image.size()) return std::nullopt;
    for (size_t i = 0; i < image.size(); ++i)
        if (!Setting::equal(cylinder[i], image[i], tol)) return std::nullopt;
    return HardIntervention(std::move(candidate));
}

TauOmega tau_omega_from(const Alignment& a, double tol) {
    TauOmega to;
    to.provenance = "alignment";
    to.tau = [a, tol](const Setting& t) { return induced_tau(a, t, tol); };
    to.omega = [a, tol](const InterventionPtr& iv) -> std::optional<InterventionPtr> {
        if (!iv->is_hard()) return std::nullopt;
        auto h = induced_omega(a, iv->hard_part(), tol);
        if (!h) return std::nullopt;
        return Intervention::hard(std::move(h->values));
    };
    return to;
}

TauOmega identity_tau_omega(const SignaturePtr& sig) {
    (void)sig;
    TauOmega to;
    to.provenance = "identity";
    to.tau = [](const Setting& t) -> std::optional<Setting> { return t; };
    to.omega = [](const InterventionPtr& iv) -> std::optional<InterventionPtr> { return iv; };
    return to;
}

TauOmega compose_tau_omega(const TauOmega& a, const TauOmega& b) {
    TauOmega to;
    to.provenance = a.provenance + ";" + b.provenance;
    to.tau = [a, b](const Setting& t) -> std::optional<Setting> {
        auto mid = a.tau(t);
        if (!mid) return std::nullopt;
        return b.tau(*mid);
    };
    to.omega = [a, b](const InterventionPtr& iv) -> std::optional<InterventionPtr> {
        auto mid = a.omega(iv);
        if (!mid) return std::nullopt;
        return b.omega(*mid);
    };
    return to;
}

// ─── Suites and verification ─────────────────────────────────────────────

Suite::Suite(std::vector<InterventionPtr> items)
    : size_(items.size()), items_(std::move(items)) {}

Suite::Suite(uint64_t size, std::function<InterventionPtr(uint64_t)> gen)
    : size_(size), gen_(std::move(gen)) {}

InterventionPtr Suite::at(uint64_t i) const {
    if (i >= size_) throw CakError("suite index out of range");
    return gen_ ? gen_(i) : items_[i];
}

namespace {

bool sorted_sets_equal(std::vector<Setting>& a, std::vector<Setting>& b, double tol) {
    std::sort(a.begin(), a.end(),
              [](const Setting& x, const Setting& y) { return Setting::compare(x, y) < 0; });
    std::sort(b.begin(), b.end(),
              [](const Setting& x, const Setting& y) { return Setting::compare(x, y) < 0; });
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!Setting::equal(a[i], b[i], tol)) return false;
    return true;
}

} // namespace

AbstractionReport verify_exact(const CausalModel& low, const CausalModel& high,
                               const TauOmega& to, const Suite& suite,
                               const VerifyOptions& opts) {
    uint64_t n = suite.size();
    std::vector<char> pass(n, 0);
    std::vector<char> undef(n, 0);
    double tol = opts.tolerance;

    std::mutex mu;
    std::unordered_map<uint64_t, VerifyRecord> fail_records;

    parallel_for(n, opts.jobs, [&](uint64_t i) {
        InterventionPtr iv = suite.at(i);
        auto high_iv = to.omega(iv);
        if (!high_iv)
            throw DomainViolation("suite item " + std::to_string(i) + " (" + iv->str() +
                                  ") is outside dom(omega)");
        CausalModel low_m = cak::apply(low, iv);
        CausalModel high_m = cak::apply(high, *high_iv);
        auto low_sols = low_m.solve(opts.budget);
        auto high_sols = high_m.solve(opts.budget);

        std::vector<Setting> mapped;
        bool tau_undefined = false;
        for (const auto& s : low_sols) {
            auto m = to.tau(s);
            if (!m) { tau_undefined = true; break; } // footnote rule: undefined ⇒ unequal
            mapped.push_back(std::move(*m));
        }
        bool ok = !tau_undefined && sorted_sets_equal(mapped, high_sols, tol);
        pass[i] = ok ? 1 : 0;
        undef[i] = tau_undefined ? 1 : 0;
        if (!ok) {
            VerifyRecord rec;
            rec.index = i;
            rec.low_intervention = iv->str();
            rec.high_intervention = (*high_iv)->str();
            rec.expected = mapped;
            rec.actual = high_sols;
            rec.tau_undefined = tau_undefined;
            rec.pass = false;
            std::lock_guard<std::mutex> lock(mu);
            if (fail_records.size() < opts.max_failures + 1) fail_records.emplace(i, std::move(rec));
        }
    });

    AbstractionReport report;
    report.suite_size = n;
    for (uint64_t i = 0; i < n; ++i)
        if (!pass[i]) ++report.fail_count;
    report.passed = report.fail_count == 0;
    std::vector<uint64_t> keys;
    for (const auto& [k, v] : fail_records) {
        (void)v;
        keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    for (uint64_t k : keys) {
        if (report.failures.size() < opts.max_failures)
            report.failures.push_back(fail_records[k]);
    }
    if (!report.passed) {
        // deterministic first counterexample: smallest failing index
        for (uint64_t i = 0; i < n && !report.first_counterexample; ++i) {
            if (pass[i]) continue;
            auto it = fail_records.find(i);
            if (it != fail_records.end()) report.first_counterexample = it->second;
            break;
        }
        if (!report.first_counterexample && !report.failures.empty())
            report.first_counterexample = report.failures.front();
    }
    return report;
}

AbstractionReport verify_constructive(const CausalModel& low, const CausalModel& high,
                                      const Alignment& a, const Suite& suite,
                                      const VerifyOptions& opts) {
    return verify_exact(low, high, tau_omega_from(a, opts.tolerance), suite, opts);
}

Suite cellwise_domain_suite(const Alignment& a, double tol, uint64_t budget) {
    if (budget == 0) budget = global_budget();
    auto domains = std::make_shared<std::vector<std::vector<Setting>>>();
    uint64_t total = 1;
    for (VarId h = 0; h < a.high()->size(); ++h) {
        std::vector<Setting> dom;
        const CellMap& map = a.map(h);
        if (map.kind() == CellMap::Kind::Table) {
            for (const auto& [k, v] : map.table_entries()) {
                (void)v;
                dom.push_back(cell_setting(a.low(), a.cell(h), k));
            }
        } else {
            for_each_assignment(a.low(), a.cell(h), budget, [&](const Setting& s) {
                if (map.apply(s, a.cell(h), tol)) dom.push_back(project(s, a.cell(h)));
            });
        }
        uint64_t k = dom.size() + 1; // +1 = cell untargeted
        if (total > budget / k)
            throw EnumerationBudgetExceeded("cellwise domain exceeds budget");
        total *= k;
        domains->push_back(std::move(dom));
    }
    SignaturePtr low_sig = a.low();
    return Suite(total, [domains, low_sig](uint64_t index) {
        Setting s(low_sig);
        for (const auto& dom : *domains) {
            uint64_t k = dom.size() + 1;
            uint64_t digit = index % k;
            index /= k;
            if (digit > 0) s = s.overwritten_by(dom[digit - 1]);
        }
        return Intervention::hard(std::move(s));
    });
}

// ─── Bijective translation ───────────────────────────────────────────────

Bijection Bijection::identity(SignaturePtr sig) {
    Bijection b;
    b.sig = std::move(sig);
    for (VarId v = 0; v < b.sig->size(); ++v) b.blocks.push_back({v});
    b.forward = [](const Setting& t) { return t; };
    b.inverse = [](const Setting& t) { return t; };
    return b;
}

namespace {
std::vector<double> gather_block(const Setting& t, const std::vector<VarId>& vars) {
    std::vector<double> x;
    for (VarId v : vars) {
        Value::Vec part = t.at(v).as_vec();
        x.insert(x.end(), part.begin(), part.end());
    }
    return x;
}

void scatter_block(Setting& t, const std::vector<VarId>& vars, const std::vector<double>& x) {
    size_t k = 0;
    for (VarId v : vars) {
        const auto& r = t.sig()->range(v);
        int d = r.is_enum() ? 1 : r.real_dim();
        if (r.is_enum()) throw TypeMismatch("linear block over enumerated variable");
        if (d == 1) {
            t.set(v, Value(x[k++]));
        } else {
            Value::Vec part(x.begin() + k, x.begin() + k + d);
            k += d;
            t.set(v, Value(std::move(part)));
        }
    }
}

std::vector<double> mat_apply(const std::vector<std::vector<double>>& m,
                              const std::vector<double>& x) {
    size_t rows = m.size();
    size_t cols = rows ? m[0].size() : 0;
    if (x.size() != rows) throw DimensionMismatch("block matrix dimension mismatch");
    std::vector<double> out(cols, 0.0);
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) out[j] += x[i] * m[i][j];
    return out;
}
} // namespace

Bijection Bijection::block_linear(SignaturePtr sig, std::vector<VarId> vars,
                                  std::vector<std::vector<double>> matrix,
                                  std::vector<std::vector<double>> inverse_matrix) {
    Bijection b;
    b.sig = std::move(sig);
    std::set<VarId> in_block(vars.begin(), vars.end());
    b.blocks.push_back(vars);
    for (VarId v = 0; v < b.sig->size(); ++v)
        if (!in_block.count(v)) b.blocks.push_back({v});
    auto apply_mat = [vars](const Setting& t, const std::vector<std::vector<double>>& m) {
        Setting out = t;
        std::vector<double> x = gather_block(t, vars);
        scatter_block(out, vars, mat_apply(m, x));
        return out;
    };
    b.forward = [apply_mat, matrix](const Setting& t) { return apply_mat(t, matrix); };
    b.inverse = [apply_mat, inverse_matrix](const Setting& t) {
        return apply_mat(t, inverse_matrix);
    };
    return b;
}

Bijection Bijection::then(const Bijection& next) const {
    Bijection b;
    b.sig = sig;
    // coarsest common refinement is not needed; use merged blocks
    std::vector<char> seen(sig->size(), 0);
    for (const auto& blk : blocks) {
        std::set<VarId> grp(blk.begin(), blk.end());
        for (const auto& blk2 : next.blocks) {
            bool overlap = false;
            for (VarId v : blk2)
                if (grp.count(v)) { overlap = true; break; }
            if (overlap) grp.insert(blk2.begin(), blk2.end());
        }
        std::vector<VarId> g(grp.begin(), grp.end());
        bool fresh = true;
        for (VarId v : g)
            if (seen[v]) fresh = false;
        if (fresh) {
            for (VarId v : g) seen[v] = 1;
            b.blocks.push_back(std::move(g));
        }
    }
    auto f1 = forward, f2 = next.forward, i1 = inverse, i2 = next.inverse;
    b.forward = [f1, f2](const Setting& t) { return f2(f1(t)); };
    b.inverse = [i1, i2](const Setting& t) { return i1(i2(t)); };
    return b;
}

namespace {
Setting sample_setting(const SignaturePtr& sig, Rng& rng) {
    Setting t(sig);
    for (VarId v = 0; v < sig->size(); ++v) {
        const auto& r = sig->range(v);
        if (r.is_enum()) {
            t.set(v, r.values()[rng.below(r.values().size())]);
        } else if (r.real_dim() == 1) {
            t.set(v, Value(rng.uniform() * 4.0 - 2.0));
        } else {
            Value::Vec x(r.real_dim());
            for (double& d : x) d = rng.uniform() * 4.0 - 2.0;
            t.set(v, Value(std::move(x)));
        }
    }
    return t;
}
} // namespace

void check_bijection(const Bijection& b, const BijectionCheckOptions& opts) {
    uint64_t budget = opts.budget ? opts.budget : global_budget();
    auto round_trip = [&](const Setting& t) {
        Setting back = b.inverse(b.forward(t));
        if (!Setting::equal(back, t, opts.tol))
            throw NotInverse("bijection round-trip failed at " + t.str());
        Setting fwd = b.forward(b.inverse(t));
        if (!Setting::equal(fwd, t, opts.tol))
            throw NotInverse("inverse round-trip failed at " + t.str());
    };
    if (b.sig->all_enum()) {
        std::vector<VarId> all;
        for (VarId v = 0; v < b.sig->size(); ++v) all.push_back(v);
        uint64_t states = 1;
        bool within = true;
        try {
            states = b.sig->joint_states(all, budget);
            (void)states;
        } catch (const BudgetExceeded&) {
            within = false;
        }
        if (within) {
            for_each_assignment(b.sig, all, budget, round_trip);
            return;
        }
    }
    Rng rng(opts.seed);
    for (int i = 0; i < opts.samples; ++i) round_trip(sample_setting(b.sig, rng));
}

namespace {
// Parent sets of translated mechanisms, pulled through the block structure.
std::vector<std::vector<std::string>> translated_parents(const CausalModel& m,
                                                         const Bijection& tau) {
    const auto& sig = m.sig();
    std::vector<int> block_of(sig->size(), -1);
    for (size_t bi = 0; bi < tau.blocks.size(); ++bi)
        for (VarId v : tau.blocks[bi]) block_of[v] = static_cast<int>(bi);
    std::vector<std::vector<std::string>> out(sig->size());
    for (VarId x = 0; x < sig->size(); ++x) {
        std::set<VarId> parents;
        for (VarId y : tau.blocks[block_of[x]]) {
            for (VarId p : m.order().syntactic_parents[y])
                for (VarId q : tau.blocks[block_of[p]]) parents.insert(q);
        }
        for (VarId p : parents) out[x].push_back(sig->name(p));
    }
    return out;
}

// Fills the unassigned coordinates with range defaults. Blockwise transforms
// only read the relevant block, so the padding never leaks into results.
Setting pad_setting(const SignaturePtr& sig, const Setting& t) {
    Setting out = t;
    for (VarId v = 0; v < sig->size(); ++v)
        if (!out.has(v)) out.set(v, arbitrary_value(sig->range(v)));
    return out;
}
} // namespace

CausalModel bijective_translate(const CausalModel& m, const Bijection& tau,
                                const BijectionCheckOptions& opts) {
    check_bijection(tau, opts);
    auto parents = translated_parents(m, tau);
    auto sig = m.sig();
    auto mechanisms = std::make_shared<std::vector<Mechanism>>(m.mechanisms());
    double tol = m.tolerance();
    std::vector<int> block_of(sig->size(), 0);
    for (size_t bi = 0; bi < tau.blocks.size(); ++bi)
        for (VarId v : tau.blocks[bi]) block_of[v] = static_cast<int>(bi);
    std::vector<Mechanism> out;
    for (VarId x = 0; x < sig->size(); ++x) {
        auto fwd = tau.forward;
        auto inv = tau.inverse;
        std::vector<VarId> block = tau.blocks[block_of[x]];
        out.push_back(Mechanism::host(
            [x, fwd, inv, mechanisms, sig, tol, block](const Setting& t_star) {
                Setting t = inv(pad_setting(sig, t_star));
                // only this block's mechanism outputs matter for component x
                Setting f = t;
                for (VarId v : block) f.set(v, (*mechanisms)[v].eval(t, tol));
                return fwd(f).at(x);
            },
            parents[x]));
    }
    return CausalModel(sig, std::move(out), m.tolerance(), m.name() + "|translated");
}

InterventionPtr canonical_interventional(const CausalModel& m, const Bijection& tau,
                                         const HardIntervention& i_star) {
    auto sig = m.sig();
    auto fwd = tau.forward;
    auto inv = tau.inverse;
    double tol = m.tolerance();
    Setting istar = i_star.values;
    auto parents = translated_parents(m, tau);

    std::vector<int> block_of(sig->size(), 0);
    for (size_t bi = 0; bi < tau.blocks.size(); ++bi)
        for (VarId v : tau.blocks[bi]) block_of[v] = static_cast<int>(bi);
    std::vector<std::vector<VarId>> blocks = tau.blocks;

    InterventionalFn fn;
    for (VarId v = 0; v < sig->size(); ++v) fn.targets.push_back(sig->name(v));
    fn.label = "canonical(" + istar.str() + ")";
    fn.editor = [sig, fwd, inv, tol, istar, parents, block_of,
                 blocks](const std::map<std::string, Mechanism>& old) {
        auto olds = std::make_shared<std::vector<Mechanism>>();
        for (VarId v = 0; v < sig->size(); ++v) olds->push_back(old.at(sig->name(v)));
        std::map<std::string, Mechanism> out;
        for (VarId x = 0; x < sig->size(); ++x) {
            std::vector<VarId> block = blocks[block_of[x]];
            out.emplace(sig->name(x), Mechanism::host(
                [x, sig, fwd, inv, tol, istar, olds, block](const Setting& t_in) {
                    Setting t = pad_setting(sig, t_in);
                    Setting f = t;
                    for (VarId v : block) f.set(v, (*olds)[v].eval(t, tol));
                    Setting patched = fwd(f).overwritten_by(istar);
                    return inv(patched).at(x);
                },
                parents[x]));
        }
        return out;
    };
    return Intervention::interventional(std::move(fn));
}

// ─── Constructive translation ────────────────────────────────────────────

namespace {

// Marginalization-shaped alignments of acyclic models compose mechanisms
// directly: dropped variables are solved out topologically.
bool is_pure_marginalization(const Alignment& a) {
    for (VarId h = 0; h < a.high()->size(); ++h) {
        if (a.cell(h).size() != 1) return false;
        if (a.map(h).kind() != CellMap::Kind::Identity) return false;
        if (!(a.low()->range(a.cell(h)[0]) == a.high()->range(h))) return false;
    }
    return true;
}

CausalModel marginalize_acyclic(const CausalModel& low, const Alignment& a,
                                double tol) {
    const auto& low_sig = low.sig();
    const auto& high_sig = a.high();
    std::vector<char> dropped(low_sig->size(), 0);
    for (VarId v : a.bot_cell()) dropped[v] = 1;
    // kept low var backing each high var
    std::vector<VarId> kept_low(high_sig->size());
    for (VarId h = 0; h < high_sig->size(); ++h) kept_low[h] = a.cell(h)[0];

    // kept-parent closure and dropped-ancestor sets (transitive through ⊥)
    std::vector<std::set<VarId>> closure(low_sig->size());
    std::vector<std::set<VarId>> dropped_anc(low_sig->size());
    for (VarId v : low.order().topo_order) {
        for (VarId p : low.order().syntactic_parents[v]) {
            if (dropped[p]) {
                closure[v].insert(closure[p].begin(), closure[p].end());
                dropped_anc[v].insert(p);
                dropped_anc[v].insert(dropped_anc[p].begin(), dropped_anc[p].end());
            } else {
                closure[v].insert(p);
            }
        }
    }

    auto low_copy = std::make_shared<CausalModel>(low);
    std::vector<Mechanism> mechs;
    for (VarId h = 0; h < high_sig->size(); ++h) {
        VarId y = kept_low[h];
        std::vector<std::string> parents;
        std::vector<VarId> kept_parents;
        for (VarId p : closure[y]) {
            VarId owner = a.owner(p);
            if (owner >= 0) {
                parents.push_back(high_sig->name(owner));
                kept_parents.push_back(p);
            }
        }
        // dropped ancestors of y, in low topological order
        std::vector<VarId> solve_out;
        for (VarId v : low.order().topo_order)
            if (dropped_anc[y].count(v)) solve_out.push_back(v);
        std::vector<std::pair<VarId, VarId>> kept_pairs; // (low id, high id)
        for (VarId hh = 0; hh < high_sig->size(); ++hh)
            kept_pairs.emplace_back(kept_low[hh], hh);
        mechs.push_back(Mechanism::host(
            [y, kept_pairs, solve_out, low_copy](const Setting& t_h) {
                Setting t(low_copy->sig());
                for (const auto& [lv, hv] : kept_pairs)
                    if (t_h.has(hv)) t.set(lv, t_h.at(hv));
                for (VarId d : solve_out) t.set(d, low_copy->eval_mechanism(d, t));
                return low_copy->eval_mechanism(y, t);
            },
            std::move(parents)));
    }
    return CausalModel(high_sig, std::move(mechs), tol,
                       low.name().empty() ? "marginalized" : low.name() + "|marginalized");
}

struct WitnessMemo {
    std::mutex mu;
    std::unordered_map<Setting, std::vector<Value>, SettingHash> achievable;
};

} // namespace

CausalModel constructive_translate(const CausalModel& low, const Alignment& a,
                                   const ConstructiveOptions& opts) {
    double tol = opts.tol != 0.0 ? opts.tol : low.tolerance();
    uint64_t budget = opts.budget ? opts.budget : global_budget();
    const auto& high_sig = a.high();

    if (is_pure_marginalization(a) && low.acyclic())
        return marginalize_acyclic(low, a, tol);

    auto low_copy = std::make_shared<CausalModel>(low);
    std::vector<Mechanism> mechs;
    for (VarId x = 0; x < high_sig->size(); ++x) {
        // free low variables: the cell of x plus the ⊥-cell
        std::vector<char> free_mask(low.sig()->size(), 0);
        for (VarId v : a.cell(x)) free_mask[v] = 1;
        for (VarId v : a.bot_cell()) free_mask[v] = 1;
        std::set<VarId> relevant_other;
        for (VarId v = 0; v < low.sig()->size(); ++v) {
            if (!free_mask[v]) continue;
            for (VarId p : low.order().syntactic_parents[v]) {
                if (free_mask[p]) continue;
                VarId owner = a.owner(p);
                if (owner >= 0 && owner != x) relevant_other.insert(owner);
            }
        }
        std::vector<VarId> relevant(relevant_other.begin(), relevant_other.end());
        // irrelevant cells are pinned to arbitrary range values
        Setting pinned(low.sig());
        for (VarId h = 0; h < high_sig->size(); ++h) {
            if (h == x || relevant_other.count(h)) continue;
            for (VarId v : a.cell(h)) pinned.set(v, arbitrary_value(low.sig()->range(v)));
        }

        std::vector<std::string> parents;
        for (VarId h : relevant) parents.push_back(high_sig->name(h));
        parents.push_back(high_sig->name(x)); // witness test reads own value

        auto memo = std::make_shared<WitnessMemo>();
        auto align = std::make_shared<Alignment>(a);
        mechs.push_back(Mechanism::host(
            [x, relevant, pinned, memo, align, low_copy, high_sig, tol,
             budget](const Setting& t_h) {
                Setting key(high_sig);
                for (VarId h : relevant) key.set(h, t_h.at(h));
                std::optional<std::vector<Value>> achievable;
                {
                    std::lock_guard<std::mutex> lock(memo->mu);
                    auto it = memo->achievable.find(key);
                    if (it != memo->achievable.end()) achievable = it->second;
                }
                if (!achievable) {
                    // enumerate preimage combinations over the relevant cells
                    std::vector<std::vector<Setting>> pres;
                    bool empty_combo = false;
                    for (VarId h : relevant) {
                        auto p = align->map(h).preimages(t_h.at(h), low_copy->sig(),
                                                         align->cell(h), tol, budget);
                        if (p.empty()) empty_combo = true;
                        pres.push_back(std::move(p));
                    }
                    std::vector<Value> found;
                    if (!empty_combo) {
                        std::vector<size_t> idx(pres.size(), 0);
                        bool done = false;
                        while (!done) {
                            Setting iv = pinned;
                            for (size_t i = 0; i < pres.size(); ++i)
                                iv = iv.overwritten_by(pres[i][idx[i]]);
                            CausalModel m = apply(*low_copy, HardIntervention(iv));
                            for (const auto& sol : m.solve(budget)) {
                                auto img = align->map(x).apply(sol, align->cell(x), tol);
                                if (!img) continue;
                                bool dup = false;
                                for (const auto& f : found)
                                    if (Value::equal(f, *img, tol)) { dup = true; break; }
                                if (!dup) found.push_back(*img);
                            }
                            size_t i = 0;
                            while (i < idx.size() && ++idx[i] == pres[i].size()) {
                                idx[i] = 0;
                                ++i;
                            }
                            done = i == idx.size();
                        }
                    }
                    std::lock_guard<std::mutex> lock(memo->mu);
                    memo->achievable[key] = found;
                    achievable = std::move(found);
                }
                const Value& want = t_h.at(x);
                for (const auto& f : *achievable)
                    if (Value::equal(f, want, tol)) return want;
                return filter_value(high_sig->range(x), want);
            },
            std::move(parents)));
    }
    return CausalModel(high_sig, std::move(mechs), tol,
                       low.name().empty() ? "translated" : low.name() + "|translated");
}

CanonicalPairs canonical_pairs(const CausalModel& m, const Bijection& tau) {
    auto registry =
        std::make_shared<std::unordered_map<std::string, InterventionPtr>>();
    CanonicalPairs pairs;
    pairs.make = [&m, tau, registry](const HardIntervention& i_star) {
        auto psi = canonical_interventional(m, tau, i_star);
        (*registry)[psi->intal_part().label] = Intervention::hard(i_star.values);
        return psi;
    };
    auto fwd = tau.forward;
    pairs.to.provenance = "bijective";
    pairs.to.tau = [fwd](const Setting& t) -> std::optional<Setting> { return fwd(t); };
    pairs.to.omega = [registry](const InterventionPtr& iv) -> std::optional<InterventionPtr> {
        if (!iv->is_interventional()) return std::nullopt;
        auto it = registry->find(iv->intal_part().label);
        if (it == registry->end()) return std::nullopt;
        return it->second;
    };
    return pairs;
}

} // namespace cak
