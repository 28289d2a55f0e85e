#include "cak/value.hpp"

#include "cak/errors.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace cak {

const std::string& Value::sym() const {
    if (!is_sym()) throw TypeMismatch("value is not a symbol: " + str());
    return std::get<std::string>(data_);
}

double Value::num() const {
    if (!is_num()) throw TypeMismatch("value is not a number: " + str());
    return std::get<double>(data_);
}

const Value::Vec& Value::vec() const {
    if (!is_vec()) throw TypeMismatch("value is not a vector: " + str());
    return std::get<Vec>(data_);
}

const Value::Tuple& Value::tup() const {
    if (!is_tuple()) throw TypeMismatch("value is not a tuple: " + str());
    return std::get<Tuple>(data_);
}

Value::Vec Value::as_vec() const {
    if (is_num()) return {num()};
    if (is_vec()) return vec();
    if (is_tuple()) {
        Vec out;
        for (const auto& c : tup()) {
            Vec part = c.as_vec();
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    throw TypeMismatch("value has no numeric content: " + str());
}

std::string Value::str() const {
    std::ostringstream os;
    if (is_sym()) {
        os << sym();
    } else if (is_num()) {
        os << num();
    } else if (is_vec()) {
        os << "[";
        for (size_t i = 0; i < vec().size(); ++i) os << (i ? "," : "") << vec()[i];
        os << "]";
    } else {
        os << "(";
        for (size_t i = 0; i < tup().size(); ++i) os << (i ? "," : "") << tup()[i].str();
        os << ")";
    }
    return os.str();
}

bool Value::equal(const Value& a, const Value& b, double tol) {
    if (a.data_.index() != b.data_.index()) return false;
    if (a.is_num()) {
        if (tol == 0.0) return a.num() == b.num();
        return std::fabs(a.num() - b.num()) <= tol;
    }
    if (a.is_sym()) return a.sym() == b.sym();
    if (a.is_vec()) {
        const auto& x = a.vec();
        const auto& y = b.vec();
        if (x.size() != y.size()) return false;
        for (size_t i = 0; i < x.size(); ++i) {
            if (tol == 0.0 ? x[i] != y[i] : std::fabs(x[i] - y[i]) > tol) return false;
        }
        return true;
    }
    const auto& x = a.tup();
    const auto& y = b.tup();
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
        if (!equal(x[i], y[i], tol)) return false;
    return true;
}

namespace {
int kind_rank(const Value& v) {
    if (v.is_num()) return 0;
    if (v.is_sym()) return 1;
    if (v.is_vec()) return 2;
    return 3;
}
int cmp_double(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }
} // namespace

int Value::compare(const Value& a, const Value& b) {
    int ra = kind_rank(a), rb = kind_rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (a.is_num()) return cmp_double(a.num(), b.num());
    if (a.is_sym()) return a.sym().compare(b.sym());
    if (a.is_vec()) {
        const auto& x = a.vec();
        const auto& y = b.vec();
        size_t n = std::min(x.size(), y.size());
        for (size_t i = 0; i < n; ++i)
            if (int c = cmp_double(x[i], y[i])) return c;
        return x.size() == y.size() ? 0 : (x.size() < y.size() ? -1 : 1);
    }
    const auto& x = a.tup();
    const auto& y = b.tup();
    size_t n = std::min(x.size(), y.size());
    for (size_t i = 0; i < n; ++i)
        if (int c = compare(x[i], y[i])) return c;
    return x.size() == y.size() ? 0 : (x.size() < y.size() ? -1 : 1);
}

namespace {
uint64_t mix(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}
uint64_t hash_double(double d) {
    if (d == 0.0) d = 0.0; // collapse -0.0
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    return bits;
}
} // namespace

uint64_t Value::hash() const {
    uint64_t h = static_cast<uint64_t>(kind_rank(*this)) * 0x100000001b3ULL;
    if (is_num()) return mix(h, hash_double(num()));
    if (is_sym()) {
        for (char c : sym()) h = mix(h, static_cast<uint64_t>(static_cast<unsigned char>(c)));
        return h;
    }
    if (is_vec()) {
        for (double d : vec()) h = mix(h, hash_double(d));
        return h;
    }
    for (const auto& c : tup()) h = mix(h, c.hash());
    return h;
}

ValueRange ValueRange::enumerated(std::vector<Value> values) {
    if (values.empty()) throw RangeViolation("enumerated range must be non-empty");
    for (size_t i = 0; i < values.size(); ++i)
        for (size_t j = i + 1; j < values.size(); ++j)
            if (values[i] == values[j])
                throw RangeViolation("duplicate value in range: " + values[i].str());
    ValueRange r;
    r.is_enum_ = true;
    r.values_ = std::move(values);
    return r;
}

ValueRange ValueRange::real(int dim) {
    if (dim < 1) throw RangeViolation("real range dimension must be >= 1");
    ValueRange r;
    r.is_enum_ = false;
    r.dim_ = dim;
    return r;
}

bool ValueRange::contains(const Value& v, double tol) const {
    if (is_enum_) return index_of(v, tol) >= 0;
    if (dim_ == 1) return v.is_num();
    return v.is_vec() && static_cast<int>(v.vec().size()) == dim_;
}

int ValueRange::index_of(const Value& v, double tol) const {
    for (size_t i = 0; i < values_.size(); ++i)
        if (Value::equal(values_[i], v, tol)) return static_cast<int>(i);
    return -1;
}

Value ValueRange::filter_next(const Value& v) const {
    if (!is_enum_) throw NotEnumerable("Filter requires an enumerated range");
    int i = index_of(v);
    if (i < 0) throw RangeViolation("Filter argument outside range: " + v.str());
    return values_[(static_cast<size_t>(i) + 1) % values_.size()];
}

bool operator==(const ValueRange& a, const ValueRange& b) {
    if (a.is_enum_ != b.is_enum_) return false;
    if (!a.is_enum_) return a.dim_ == b.dim_;
    if (a.values_.size() != b.values_.size()) return false;
    for (size_t i = 0; i < a.values_.size(); ++i)
        if (a.values_[i] != b.values_[i]) return false;
    return true;
}

} // namespace cak
