#include "cak/algebra.hpp"

#include "cak/errors.hpp"

#include <algorithm>

namespace cak {

ClassOrder ClassOrder::from_signature(const Signature& sig) {
    return ClassOrder(sig.names());
}

int ClassOrder::rank(const std::string& k) const {
    for (size_t i = 0; i < keys_.size(); ++i)
        if (keys_[i] == k) return static_cast<int>(i);
    return -1;
}

bool ClassOrder::before(const std::string& a, const std::string& b) const {
    int ra = rank(a), rb = rank(b);
    if (ra >= 0 && rb >= 0) return ra < rb;
    if (ra >= 0) return true;     // declared keys precede foreign ones
    if (rb >= 0) return false;
    return a < b;                 // fallback: lexicographic
}

AtomicSeq collapse(const AtomicSeq& s) {
    AtomicSeq out;
    for (size_t i = 0; i < s.elements.size(); ++i) {
        bool shadowed = false;
        for (size_t j = i + 1; j < s.elements.size(); ++j) {
            if (s.elements[j].key == s.elements[i].key) {
                shadowed = true;
                break;
            }
        }
        if (!shadowed) out.elements.push_back(s.elements[i]);
    }
    return out;
}

AtomicSeq sort_seq(const AtomicSeq& s, const ClassOrder& o) {
    for (size_t i = 0; i < s.elements.size(); ++i)
        for (size_t j = i + 1; j < s.elements.size(); ++j)
            if (s.elements[i].key == s.elements[j].key)
                throw DuplicateClass("duplicate class in sort input: " + s.elements[i].key);
    AtomicSeq out = s;
    std::stable_sort(out.elements.begin(), out.elements.end(),
                     [&](const Atom& a, const Atom& b) { return o.before(a.key, b.key); });
    return out;
}

AtomicSeq normal_form(const AtomicSeq& s, const ClassOrder& o) {
    return sort_seq(collapse(s), o);
}

HardIntervention overwrite_composition(const AtomicSeq& s, const SignaturePtr& sig) {
    Setting acc(sig);
    for (const auto& atom : s.elements) {
        if (!atom.payload->is_hard())
            throw TypeMismatch("overwrite composition requires hard atoms");
        acc = acc.overwritten_by(atom.payload->hard_part().values);
    }
    return HardIntervention(std::move(acc));
}

namespace {

bool same_solutions(const CausalModel& a, const CausalModel& b) {
    auto sa = a.solve();
    auto sb = b.solve();
    if (sa.size() != sb.size()) return false;
    for (size_t i = 0; i < sa.size(); ++i)
        if (!Setting::equal(sa[i], sb[i], a.tolerance())) return false;
    return true;
}

} // namespace

AlgebraReport check_intervention_algebra(const std::vector<Atom>& atoms,
                                         const std::vector<CausalModel>& suite) {
    AlgebraReport report;
    auto check_pair = [&](const CausalModel& m, const Atom& a, const Atom& b) {
        ++report.checks;
        if (a.key != b.key) {
            CausalModel ab = cak::apply(cak::apply(m, a.payload), b.payload);
            CausalModel ba = cak::apply(cak::apply(m, b.payload), a.payload);
            if (!same_solutions(ab, ba)) {
                report.passed = false;
                report.failures.push_back({"commutativity", a.payload->str(), b.payload->str(),
                                           m.name(), "solve sets differ under the two orders"});
            }
        } else {
            CausalModel ab = cak::apply(cak::apply(m, a.payload), b.payload);
            CausalModel just_b = cak::apply(m, b.payload);
            if (!same_solutions(ab, just_b)) {
                report.passed = false;
                report.failures.push_back({"left-annihilativity", a.payload->str(),
                                           b.payload->str(), m.name(),
                                           "a then b differs from b alone"});
            }
        }
    };

    for (const auto& m : suite)
        for (const auto& a : atoms)
            for (const auto& b : atoms) check_pair(m, a, b);

    // Symbolic check is exact for hard atoms.
    for (const auto& a : atoms) {
        for (const auto& b : atoms) {
            if (!a.payload->is_hard() || !b.payload->is_hard()) continue;
            ++report.checks;
            auto ab = compose(a.payload, b.payload);
            if (a.key != b.key) {
                auto ba = compose(b.payload, a.payload);
                if (!(ab->hard_part().values == ba->hard_part().values)) {
                    report.passed = false;
                    report.failures.push_back({"commutativity", a.payload->str(),
                                               b.payload->str(), "<symbolic>",
                                               "overwrite compositions differ"});
                }
            } else {
                if (!(ab->hard_part().values == b.payload->hard_part().values)) {
                    report.passed = false;
                    report.failures.push_back({"left-annihilativity", a.payload->str(),
                                               b.payload->str(), "<symbolic>",
                                               "composition is not the right atom"});
                }
            }
        }
    }
    return report;
}

} // namespace cak
