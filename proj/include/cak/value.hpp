#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace cak {

// A value of a causal variable: a symbol, a number, a fixed-length vector of
// numbers, or a tuple of values (tuples arise from variable merges).
class Value {
public:
    using Vec = std::vector<double>;
    using Tuple = std::vector<Value>;

    Value() : data_(0.0) {}
    Value(double x) : data_(x) {}
    Value(int x) : data_(static_cast<double>(x)) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(Vec v) : data_(std::move(v)) {}
    static Value tuple(Tuple t) { Value v; v.data_ = std::move(t); return v; }

    bool is_sym() const { return std::holds_alternative<std::string>(data_); }
    bool is_num() const { return std::holds_alternative<double>(data_); }
    bool is_vec() const { return std::holds_alternative<Vec>(data_); }
    bool is_tuple() const { return std::holds_alternative<Tuple>(data_); }

    const std::string& sym() const;
    double num() const;
    const Vec& vec() const;
    const Tuple& tup() const;

    // As a flat numeric vector; throws TypeMismatch for symbols/tuples.
    Vec as_vec() const;

    std::string str() const;

    friend bool operator==(const Value& a, const Value& b) { return equal(a, b, 0.0); }
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

    // Numeric parts compared with absolute tolerance; kinds must match.
    static bool equal(const Value& a, const Value& b, double tol);

    // Strict total order used for canonical sorting: kind rank, then content.
    static int compare(const Value& a, const Value& b);

    uint64_t hash() const;

private:
    std::variant<double, std::string, Vec, Tuple> data_;
};

struct ValueHash {
    size_t operator()(const Value& v) const { return static_cast<size_t>(v.hash()); }
};
struct ValueLess {
    bool operator()(const Value& a, const Value& b) const { return Value::compare(a, b) < 0; }
};

// Value range of a variable: a finite list of values, or real vectors of a
// fixed dimension (dim 1 = scalar).
class ValueRange {
public:
    static ValueRange enumerated(std::vector<Value> values);
    static ValueRange real(int dim = 1);

    bool is_enum() const { return is_enum_; }
    int real_dim() const { return dim_; }
    const std::vector<Value>& values() const { return values_; }

    bool contains(const Value& v, double tol = 0.0) const;
    // Index of v among the enumerated values, -1 if absent.
    int index_of(const Value& v, double tol = 0.0) const;
    // Deterministic cyclic successor in declared order (identity on singletons).
    Value filter_next(const Value& v) const;

    friend bool operator==(const ValueRange& a, const ValueRange& b);

private:
    bool is_enum_ = false;
    int dim_ = 1;
    std::vector<Value> values_;
};

} // namespace cak
