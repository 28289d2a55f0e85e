#include "cak/signature.hpp"

#include "cak/errors.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cak {

Signature::Signature(std::vector<std::string> names, std::vector<ValueRange> ranges)
    : names_(std::move(names)), ranges_(std::move(ranges)) {
    if (names_.size() != ranges_.size())
        throw SignatureMismatch("names/ranges size mismatch");
    for (size_t i = 0; i < names_.size(); ++i) {
        auto [it, fresh] = index_.emplace(names_[i], static_cast<VarId>(i));
        (void)it;
        if (!fresh) throw SignatureMismatch("duplicate variable name: " + names_[i]);
    }
}

VarId Signature::id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UnknownVariable("unknown variable: " + name);
    return it->second;
}

std::optional<VarId> Signature::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Signature::all_enum() const {
    for (const auto& r : ranges_)
        if (!r.is_enum()) return false;
    return true;
}

uint64_t Signature::joint_states(const std::vector<VarId>& vars, uint64_t cap) const {
    uint64_t n = 1;
    for (VarId v : vars) {
        const auto& r = range(v);
        if (!r.is_enum())
            throw NotEnumerable("variable " + name(v) + " has a non-enumerable range");
        uint64_t k = r.values().size();
        if (k != 0 && n > cap / k)
            throw EnumerationBudgetExceeded("joint state space exceeds budget");
        n *= k;
    }
    return n;
}

bool operator==(const Signature& a, const Signature& b) {
    if (a.names_ != b.names_) return false;
    for (size_t i = 0; i < a.ranges_.size(); ++i)
        if (!(a.ranges_[i] == b.ranges_[i])) return false;
    return true;
}

Setting::Setting(SignaturePtr sig) : sig_(std::move(sig)) {
    vals_.resize(sig_->size());
}

const Value& Setting::at(VarId v) const {
    if (!has(v)) throw MissingVariable("variable unassigned: " + sig_->name(v));
    return *vals_[v];
}

const Value& Setting::at(const std::string& name) const { return at(sig_->id(name)); }

void Setting::set(VarId v, Value val) {
    if (v < 0 || v >= sig_->size()) throw UnknownVariable("variable id out of range");
    vals_[v] = std::move(val);
}

void Setting::set(const std::string& name, Value val) { set(sig_->id(name), std::move(val)); }

void Setting::unset(VarId v) { vals_[v].reset(); }

int Setting::assigned_count() const {
    int n = 0;
    for (const auto& v : vals_)
        if (v) ++n;
    return n;
}

std::vector<VarId> Setting::domain() const {
    std::vector<VarId> out;
    for (VarId v = 0; v < static_cast<VarId>(vals_.size()); ++v)
        if (vals_[v]) out.push_back(v);
    return out;
}

Setting Setting::overwritten_by(const Setting& other) const {
    Setting out = *this;
    for (VarId v = 0; v < static_cast<VarId>(other.vals_.size()); ++v)
        if (other.vals_[v]) out.vals_[v] = other.vals_[v];
    return out;
}

bool Setting::equal(const Setting& a, const Setting& b, double tol) {
    if (a.vals_.size() != b.vals_.size()) return false;
    for (size_t v = 0; v < a.vals_.size(); ++v) {
        if (a.vals_[v].has_value() != b.vals_[v].has_value()) return false;
        if (a.vals_[v] && !Value::equal(*a.vals_[v], *b.vals_[v], tol)) return false;
    }
    return true;
}

int Setting::compare(const Setting& a, const Setting& b) {
    size_t n = std::min(a.vals_.size(), b.vals_.size());
    for (size_t v = 0; v < n; ++v) {
        bool ha = a.vals_[v].has_value(), hb = b.vals_[v].has_value();
        if (ha != hb) return ha ? 1 : -1; // unassigned sorts first
        if (ha)
            if (int c = Value::compare(*a.vals_[v], *b.vals_[v])) return c;
    }
    if (a.vals_.size() != b.vals_.size()) return a.vals_.size() < b.vals_.size() ? -1 : 1;
    return 0;
}

uint64_t Setting::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t v = 0; v < vals_.size(); ++v) {
        uint64_t x = vals_[v] ? vals_[v]->hash() : 0x517cc1b727220a95ULL;
        h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

std::string Setting::str() const {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (VarId v = 0; v < static_cast<VarId>(vals_.size()); ++v) {
        if (!vals_[v]) continue;
        if (!first) os << ", ";
        first = false;
        os << sig_->name(v) << ":" << vals_[v]->str();
    }
    os << "}";
    return os.str();
}

Setting project(const Setting& s, const std::vector<VarId>& vars) {
    Setting out(s.sig());
    for (VarId v : vars) out.set(v, s.at(v));
    return out;
}

Setting project(const Setting& s, const std::vector<std::string>& vars) {
    std::vector<VarId> ids;
    ids.reserve(vars.size());
    for (const auto& n : vars) ids.push_back(s.sig()->id(n));
    return project(s, ids);
}

void for_each_assignment(const SignaturePtr& sig, const std::vector<VarId>& vars,
                         uint64_t budget, const std::function<void(const Setting&)>& fn) {
    sig->joint_states(vars, budget);
    Setting cur(sig);
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == vars.size()) {
            fn(cur);
            return;
        }
        for (const auto& val : sig->range(vars[i]).values()) {
            cur.set(vars[i], val);
            rec(i + 1);
        }
        cur.unset(vars[i]);
    };
    rec(0);
}

std::vector<Setting> inverse_project(const Setting& p, const SignaturePtr& sig, uint64_t budget) {
    std::vector<VarId> free;
    for (VarId v = 0; v < sig->size(); ++v) {
        if (p.has(v)) {
            if (!sig->range(v).contains(p.at(v)))
                throw RangeViolation("value outside range for " + sig->name(v));
        } else {
            free.push_back(v);
        }
    }
    std::vector<Setting> out;
    for_each_assignment(sig, free, budget, [&](const Setting& a) {
        Setting t = p.overwritten_by(a);
        out.push_back(std::move(t));
    });
    std::sort(out.begin(), out.end(),
              [](const Setting& a, const Setting& b) { return Setting::compare(a, b) < 0; });
    return out;
}

} // namespace cak
