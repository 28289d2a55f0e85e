#include "cak/intervene.hpp"

#include "cak/errors.hpp"
#include "cak/rng.hpp"

#include <cmath>

namespace cak {

InterventionPtr Intervention::hard(Setting s) {
    return InterventionPtr(new Intervention(Node(HardIntervention(std::move(s)))));
}

InterventionPtr Intervention::null(SignaturePtr sig) {
    return hard(Setting(std::move(sig)));
}

InterventionPtr Intervention::soft(SoftIntervention s) {
    return InterventionPtr(new Intervention(Node(std::move(s))));
}

InterventionPtr Intervention::interventional(InterventionalFn f) {
    return InterventionPtr(new Intervention(Node(std::move(f))));
}

InterventionPtr Intervention::sequence(std::vector<InterventionPtr> seq) {
    return InterventionPtr(new Intervention(Node(std::move(seq))));
}

std::string Intervention::str() const {
    if (is_hard()) return hard_part().values.str();
    if (is_soft()) {
        std::string s = "soft{";
        bool first = true;
        for (const auto& [k, v] : soft_part().replacements) {
            (void)v;
            if (!first) s += ",";
            first = false;
            s += k;
        }
        return s + "}";
    }
    if (is_interventional())
        return "interventional{" + (intal_part().label.empty() ? "?" : intal_part().label) + "}";
    std::string s = "seq[";
    bool first = true;
    for (const auto& p : seq_part()) {
        if (!first) s += "; ";
        first = false;
        s += p->str();
    }
    return s + "]";
}

CausalModel apply(const CausalModel& m, const HardIntervention& iv) {
    auto ms = m.mechanisms();
    for (VarId v : iv.values.domain()) {
        const Value& val = iv.values.at(v);
        if (!m.sig()->range(v).contains(val, m.tolerance()))
            throw RangeViolation("intervention value " + val.str() + " outside range of " +
                                 m.sig()->name(v));
        ms[v] = Mechanism::constant(val);
    }
    return m.with_mechanisms(std::move(ms));
}

CausalModel apply(const CausalModel& m, const SoftIntervention& iv) {
    auto ms = m.mechanisms();
    for (const auto& [name, mech] : iv.replacements) {
        VarId v = m.sig()->id(name);
        ms[v] = mech.expr() ? Mechanism::expression(mech.expr()->bound(*m.sig())) : mech;
    }
    return m.with_mechanisms(std::move(ms));
}

CausalModel apply(const CausalModel& m, const InterventionalFn& iv) {
    std::map<std::string, Mechanism> old;
    for (const auto& name : iv.targets) old.emplace(name, m.mechanism(m.sig()->id(name)));
    auto repl = iv.editor(old);
    auto ms = m.mechanisms();
    for (const auto& [name, mech] : repl) {
        VarId v = m.sig()->id(name);
        ms[v] = mech;
    }
    return m.with_mechanisms(std::move(ms));
}

CausalModel apply(const CausalModel& m, const Intervention& iv) {
    if (iv.is_hard()) return apply(m, iv.hard_part());
    if (iv.is_soft()) return apply(m, iv.soft_part());
    if (iv.is_interventional()) return apply(m, iv.intal_part());
    CausalModel cur = m;
    for (const auto& step : iv.seq_part()) cur = apply(cur, *step);
    return cur;
}

CausalModel apply(const CausalModel& m, const InterventionPtr& iv) { return apply(m, *iv); }

InterventionPtr compose(const InterventionPtr& a, const InterventionPtr& b) {
    if (a->is_hard() && b->is_hard()) {
        const auto& ha = a->hard_part().values;
        const auto& hb = b->hard_part().values;
        if (ha.sig() != hb.sig() && !(*ha.sig() == *hb.sig()))
            throw SignatureMismatch("composed interventions have different signatures");
        return Intervention::hard(ha.overwritten_by(hb));
    }
    if (a->is_soft() && b->is_soft()) {
        // Later replacement wins per target (left-annihilative on a variable).
        SoftIntervention out = a->soft_part();
        for (const auto& [k, v] : b->soft_part().replacements) out.replacements[k] = v;
        return Intervention::soft(std::move(out));
    }
    if (a->is_hard() && a->hard_part().is_null()) return b;
    if (b->is_hard() && b->hard_part().is_null()) return a;
    return Intervention::sequence({a, b});
}

bool leq(const HardIntervention& p, const HardIntervention& q, double tol) {
    for (VarId v : p.values.domain()) {
        if (!q.values.has(v)) return false;
        if (!Value::equal(p.values.at(v), q.values.at(v), tol)) return false;
    }
    return true;
}

InterventionPtr steering_interventional(const SteeringIntervention& s, const CausalModel& m) {
    VarId v = m.sig()->id(s.target);
    const auto& range = m.sig()->range(v);
    if (range.is_enum()) throw TypeMismatch("steering target must be real-valued");
    if (range.real_dim() != static_cast<int>(s.offset.size()))
        throw DimensionMismatch("steering offset dimension mismatch");
    std::vector<double> offset = s.offset;
    std::string target = s.target;
    InterventionalFn fn;
    fn.targets = {target};
    fn.label = "steer(" + target + ")";
    fn.editor = [offset, target](const std::map<std::string, Mechanism>& old) {
        const Mechanism prev = old.at(target);
        std::map<std::string, Mechanism> out;
        out.emplace(target, Mechanism::host(
            [prev, offset](const Setting& t) {
                Value base = prev.eval(t, 0.0);
                if (base.is_num()) return Value(base.num() + offset[0]);
                Value::Vec vec = base.vec();
                for (size_t i = 0; i < vec.size(); ++i) vec[i] += offset[i];
                return Value(std::move(vec));
            },
            prev.parent_names()));
        return out;
    };
    return Intervention::interventional(std::move(fn));
}

double noise_offset(uint64_t seed, const std::string& variable, int component) {
    // Version 1 noise stream: splitmix over (seed, fnv(variable), component),
    // mapped through Box-Muller to a standard normal.
    uint64_t key = 0xcbf29ce484222325ULL;
    for (char c : variable) key = (key ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    Rng rng(mix_seed(seed, mix_seed(key, static_cast<uint64_t>(component))));
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    if (u1 <= 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

InterventionPtr ablation_interventional(const AblationSpec& a, const CausalModel& m) {
    using Kind = AblationSpec::Kind;
    switch (a.kind) {
        case Kind::Zero: {
            Setting s(m.sig());
            for (const auto& name : a.targets) {
                VarId v = m.sig()->id(name);
                const auto& r = m.sig()->range(v);
                if (r.is_enum()) throw TypeMismatch("zero ablation requires real variables");
                if (r.real_dim() == 1)
                    s.set(v, Value(0.0));
                else
                    s.set(v, Value(Value::Vec(r.real_dim(), 0.0)));
            }
            return Intervention::hard(std::move(s));
        }
        case Kind::Constant: {
            Setting s(m.sig());
            for (const auto& name : a.targets) {
                VarId v = m.sig()->id(name);
                const Value& val = a.constant_values.at(name);
                if (!m.sig()->range(v).contains(val, m.tolerance()))
                    throw RangeViolation("constant ablation value outside range of " + name);
                s.set(v, val);
            }
            return Intervention::hard(std::move(s));
        }
        case Kind::Resample: {
            CausalModel src = apply(m, HardIntervention(a.source_input));
            auto sols = src.solve();
            if (sols.empty()) throw UnsolvedSource("resample source has no solution");
            Setting s(m.sig());
            for (const auto& name : a.targets) s.set(name, sols.front().at(name));
            return Intervention::hard(std::move(s));
        }
        case Kind::Noise: {
            SoftIntervention soft;
            for (const auto& name : a.targets) {
                VarId v = m.sig()->id(name);
                const auto& r = m.sig()->range(v);
                if (r.is_enum()) throw TypeMismatch("noise ablation requires real variables");
                const Mechanism prev = m.mechanism(v);
                uint64_t seed = a.seed;
                double scale = a.scale;
                int dim = r.real_dim();
                std::string vname = name;
                soft.replacements.emplace(name, Mechanism::host(
                    [prev, seed, scale, dim, vname](const Setting& t) {
                        Value base = prev.eval(t, 0.0);
                        if (dim == 1)
                            return Value(base.num() + scale * noise_offset(seed, vname, 0));
                        Value::Vec vec = base.vec();
                        for (int i = 0; i < dim; ++i)
                            vec[i] += scale * noise_offset(seed, vname, i);
                        return Value(std::move(vec));
                    },
                    prev.parent_names()));
            }
            return Intervention::soft(std::move(soft));
        }
    }
    throw TypeMismatch("unhandled ablation kind");
}

} // namespace cak
