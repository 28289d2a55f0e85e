#pragma once

#include "cak/value.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cak {

using VarId = int;

// Variable names with per-variable value ranges. Declaration order is the
// canonical order used for all deterministic iteration.
class Signature {
public:
    Signature() = default;
    Signature(std::vector<std::string> names, std::vector<ValueRange> ranges);

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(VarId v) const { return names_[v]; }
    const std::vector<std::string>& names() const { return names_; }
    const ValueRange& range(VarId v) const { return ranges_[v]; }
    VarId id(const std::string& name) const; // throws UnknownVariable
    std::optional<VarId> find(const std::string& name) const;

    bool all_enum() const;
    // Product of enumerated range sizes over `vars`; throws NotEnumerable on
    // real variables and EnumerationBudgetExceeded past the cap.
    uint64_t joint_states(const std::vector<VarId>& vars, uint64_t cap) const;

    friend bool operator==(const Signature& a, const Signature& b);

private:
    std::vector<std::string> names_;
    std::vector<ValueRange> ranges_;
    std::unordered_map<std::string, VarId> index_;
};

using SignaturePtr = std::shared_ptr<const Signature>;

// An assignment of values to a subset of a signature's variables.
class Setting {
public:
    Setting() = default;
    explicit Setting(SignaturePtr sig);

    const SignaturePtr& sig() const { return sig_; }
    bool has(VarId v) const { return static_cast<size_t>(v) < vals_.size() && vals_[v].has_value(); }
    const Value& at(VarId v) const;
    const Value& at(const std::string& name) const;
    void set(VarId v, Value val);
    void set(const std::string& name, Value val);
    void unset(VarId v);
    int assigned_count() const;
    bool is_total() const { return assigned_count() == sig_->size(); }
    std::vector<VarId> domain() const;

    // Right-biased overwrite: values of `other` win on overlap.
    Setting overwritten_by(const Setting& other) const;

    static bool equal(const Setting& a, const Setting& b, double tol);
    static int compare(const Setting& a, const Setting& b); // canonical order
    friend bool operator==(const Setting& a, const Setting& b) { return equal(a, b, 0.0); }

    uint64_t hash() const;
    std::string str() const;

private:
    SignaturePtr sig_;
    std::vector<std::optional<Value>> vals_;
};

struct SettingHash {
    size_t operator()(const Setting& s) const { return static_cast<size_t>(s.hash()); }
};

// Def-3 restriction of a setting to `vars`.
Setting project(const Setting& s, const std::vector<VarId>& vars);
Setting project(const Setting& s, const std::vector<std::string>& vars);

// All total settings t with project(t, vars(p)) == p. Enum-only.
std::vector<Setting> inverse_project(const Setting& p, const SignaturePtr& sig,
                                     uint64_t budget = 10000000);

// Enumerates all assignments over `vars` (declaration-order lexicographic),
// invoking fn on each; used by solvers and suite generators.
void for_each_assignment(const SignaturePtr& sig, const std::vector<VarId>& vars,
                         uint64_t budget, const std::function<void(const Setting&)>& fn);

} // namespace cak
