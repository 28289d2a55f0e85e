#include "cak/model.hpp"

#include "cak/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <set>

namespace cak {

uint64_t global_budget() {
    static uint64_t cached = [] {
        if (const char* env = std::getenv("CAK_BUDGET")) {
            char* end = nullptr;
            unsigned long long v = std::strtoull(env, &end, 10);
            if (end && *end == '\0' && v > 0) return static_cast<uint64_t>(v);
        }
        return kDefaultBudget;
    }();
    return cached;
}

Mechanism Mechanism::constant(Value v) { return expression(Expr::lit(std::move(v))); }

Mechanism Mechanism::expression(ExprPtr e) {
    Mechanism m;
    m.expr_ = std::move(e);
    std::set<std::string> vars;
    m.expr_->collect_vars(vars);
    m.parents_.assign(vars.begin(), vars.end());
    return m;
}

Mechanism Mechanism::host(std::function<Value(const Setting&)> fn,
                          std::vector<std::string> parents) {
    Mechanism m;
    m.fn_ = std::move(fn);
    m.parents_ = std::move(parents);
    return m;
}

Value Mechanism::eval(const Setting& total, double tol) const {
    if (expr_) return expr_->eval(total, tol);
    return fn_(total);
}

CausalModel::CausalModel(SignaturePtr sig, std::vector<Mechanism> mechanisms,
                         double tolerance, std::string name)
    : sig_(std::move(sig)), mechanisms_(std::move(mechanisms)),
      tolerance_(tolerance), name_(std::move(name)) {
    if (static_cast<int>(mechanisms_.size()) != sig_->size())
        throw SignatureMismatch("exactly one mechanism per variable required");
    // Bind expression mechanisms so Var nodes use direct indices.
    for (auto& m : mechanisms_) {
        if (m.expr()) m = Mechanism::expression(m.expr()->bound(*sig_));
    }
    rebuild_order();
}

void CausalModel::rebuild_order() {
    int n = sig_->size();
    order_.syntactic_parents.assign(n, {});
    for (VarId v = 0; v < n; ++v) {
        for (const auto& pname : mechanisms_[v].parent_names()) {
            auto id = sig_->find(pname);
            if (!id) throw UndeclaredVariable("mechanism of " + sig_->name(v) +
                                              " reads undeclared variable " + pname);
            order_.syntactic_parents[v].push_back(*id);
        }
        std::sort(order_.syntactic_parents[v].begin(), order_.syntactic_parents[v].end());
    }
    // Kahn's algorithm for the topological order.
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<VarId>> children(n);
    for (VarId v = 0; v < n; ++v) {
        for (VarId p : order_.syntactic_parents[v]) {
            children[p].push_back(v);
            ++indeg[v];
        }
    }
    order_.topo_order.clear();
    std::deque<VarId> q;
    for (VarId v = 0; v < n; ++v)
        if (indeg[v] == 0) q.push_back(v);
    while (!q.empty()) {
        VarId v = q.front();
        q.pop_front();
        order_.topo_order.push_back(v);
        for (VarId c : children[v])
            if (--indeg[c] == 0) q.push_back(c);
    }
    order_.acyclic = static_cast<int>(order_.topo_order.size()) == n;
}

CausalModel CausalModel::with_mechanism(VarId v, Mechanism m) const {
    auto ms = mechanisms_;
    ms[v] = std::move(m);
    return CausalModel(sig_, std::move(ms), tolerance_, name_);
}

CausalModel CausalModel::with_mechanisms(std::vector<Mechanism> ms) const {
    return CausalModel(sig_, std::move(ms), tolerance_, name_);
}

CausalModel CausalModel::with_tolerance(double tol) const {
    return CausalModel(sig_, mechanisms_, tol, name_);
}

std::vector<Setting> CausalModel::solve(uint64_t budget) const {
    if (budget == 0) budget = global_budget();
    int n = sig_->size();

    // Phase 1: propagate forced values (variables whose parents are all
    // already determined have their value fixed by their own equation).
    Setting t(sig_);
    std::vector<char> det(n, 0);
    std::vector<VarId> eval_order;
    bool progress = true;
    while (progress) {
        progress = false;
        for (VarId v = 0; v < n; ++v) {
            if (det[v]) continue;
            bool ready = true;
            for (VarId p : order_.syntactic_parents[v])
                if (!det[p]) { ready = false; break; }
            if (!ready) continue;
            t.set(v, eval_mechanism(v, t));
            det[v] = 1;
            eval_order.push_back(v);
            progress = true;
        }
    }

    std::vector<VarId> free;
    for (VarId v = 0; v < n; ++v)
        if (!det[v]) free.push_back(v);

    if (free.empty()) return {t};

    // Phase 2: enumerate the undetermined (cyclic) variables exactly.
    for (VarId v : free)
        if (!sig_->range(v).is_enum())
            throw UnsolvableRepresentation(
                "cyclic dependency through non-enumerable variable " + sig_->name(v));
    sig_->joint_states(free, budget);

    std::vector<Setting> sols;
    Setting cand = t;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == free.size()) {
            Setting full = cand;
            // Re-run forced propagation treating free values as fixed; this
            // recomputes anything downstream of the cycle.
            std::vector<char> d2(n, 0);
            for (VarId v : free) d2[v] = 1;
            bool changed = true;
            while (changed) {
                changed = false;
                for (VarId v = 0; v < n; ++v) {
                    if (d2[v]) continue;
                    bool ready = true;
                    for (VarId p : order_.syntactic_parents[v])
                        if (!d2[p]) { ready = false; break; }
                    if (!ready) continue;
                    full.set(v, eval_mechanism(v, full));
                    d2[v] = 1;
                    changed = true;
                }
            }
            for (VarId v : free) {
                if (!Value::equal(eval_mechanism(v, full), full.at(v), tolerance_)) return;
            }
            sols.push_back(std::move(full));
            return;
        }
        for (const auto& val : sig_->range(free[i]).values()) {
            cand.set(free[i], val);
            rec(i + 1);
        }
    };
    rec(0);

    std::sort(sols.begin(), sols.end(),
              [](const Setting& a, const Setting& b) { return Setting::compare(a, b) < 0; });
    return sols;
}

Setting CausalModel::solve_unique(uint64_t budget) const {
    auto sols = solve(budget);
    if (sols.empty()) throw NoSolution("model has no solution" + (name_.empty() ? "" : " (" + name_ + ")"));
    if (sols.size() > 1) throw AmbiguousSolution("model has multiple solutions");
    return sols.front();
}

bool CausalModel::is_solution(const Setting& t) const {
    if (!t.is_total()) return false;
    for (VarId v = 0; v < sig_->size(); ++v)
        if (!Value::equal(eval_mechanism(v, t), t.at(v), tolerance_)) return false;
    return true;
}

CausalOrder semantic_order(const CausalModel& m, uint64_t budget) {
    if (budget == 0) budget = global_budget();
    const auto& sig = m.sig();
    if (!sig->all_enum()) throw NotEnumerable("semantic order requires enumerated ranges");
    int n = sig->size();
    CausalOrder out;
    out.syntactic_parents = m.order().syntactic_parents;
    out.acyclic = m.order().acyclic;
    out.topo_order = m.order().topo_order;
    out.semantic_parents.assign(n, {});

    for (VarId x = 0; x < n; ++x) {
        // Only syntactic parents can be semantic parents.
        for (VarId y : m.order().syntactic_parents[x]) {
            std::vector<VarId> ctx;
            for (VarId v = 0; v < n; ++v)
                if (v != y) ctx.push_back(v);
            bool found = false;
            for_each_assignment(sig, ctx, budget, [&](const Setting& z) {
                if (found) return;
                Setting t = z;
                const auto& vals = sig->range(y).values();
                for (size_t i = 0; i + 1 < vals.size() && !found; ++i) {
                    t.set(y, vals[i]);
                    Value a = m.eval_mechanism(x, t);
                    for (size_t j = i + 1; j < vals.size(); ++j) {
                        t.set(y, vals[j]);
                        if (!Value::equal(a, m.eval_mechanism(x, t), m.tolerance())) {
                            found = true;
                            break;
                        }
                    }
                }
            });
            if (found) out.semantic_parents[x].push_back(y);
        }
        std::sort(out.semantic_parents[x].begin(), out.semantic_parents[x].end());
    }
    return out;
}

} // namespace cak
