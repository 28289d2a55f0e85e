#include "cak/expr.hpp"

#include "cak/errors.hpp"

#include <cmath>

namespace cak {

namespace {
ExprPtr node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

double num_of(const Value& v) { return v.num(); }

Value binary_num(ExprOp op, const Value& a, const Value& b, double tol) {
    double x = num_of(a), y = num_of(b);
    switch (op) {
        case ExprOp::Sub: return Value(x - y);
        case ExprOp::Div:
            if (y == 0.0) throw TypeMismatch("division by zero");
            return Value(x / y);
        case ExprOp::Eq: return Value(std::fabs(x - y) <= tol ? 1.0 : 0.0);
        case ExprOp::Lt: return Value(x < y - tol ? 1.0 : 0.0);
        case ExprOp::Le: return Value(x <= y + tol ? 1.0 : 0.0);
        case ExprOp::Gt: return Value(x > y + tol ? 1.0 : 0.0);
        case ExprOp::Ge: return Value(x >= y - tol ? 1.0 : 0.0);
        default: throw TypeMismatch("bad binary op");
    }
}
} // namespace

ExprPtr Expr::lit(Value v) {
    Expr e;
    e.op = ExprOp::Lit;
    e.literal = std::move(v);
    return node(std::move(e));
}

ExprPtr Expr::var(std::string name) {
    Expr e;
    e.op = ExprOp::Var;
    e.var_name = std::move(name);
    return node(std::move(e));
}

ExprPtr Expr::make(ExprOp op, std::vector<ExprPtr> args) {
    Expr e;
    e.op = op;
    e.args = std::move(args);
    return node(std::move(e));
}

ExprPtr Expr::if_(ExprPtr c, ExprPtr t, ExprPtr f) {
    return make(ExprOp::If, {std::move(c), std::move(t), std::move(f)});
}

ExprPtr Expr::proj(int k, ExprPtr e) {
    Expr n;
    n.op = ExprOp::Proj;
    n.proj_index = k;
    n.args = {std::move(e)};
    return node(std::move(n));
}

ExprPtr Expr::matmul(std::vector<std::vector<double>> m, ExprPtr e) {
    Expr n;
    n.op = ExprOp::Matmul;
    n.matrix = std::move(m);
    n.args = {std::move(e)};
    return node(std::move(n));
}

ExprPtr Expr::table(std::vector<TableRow> rows, bool has_default, Value def) {
    Expr n;
    n.op = ExprOp::Table;
    n.rows = std::move(rows);
    n.has_default = has_default;
    n.default_value = std::move(def);
    return node(std::move(n));
}

Value Expr::eval(const Setting& input, double tol) const {
    switch (op) {
        case ExprOp::Lit: return literal;
        case ExprOp::Var:
            return var_id >= 0 ? input.at(var_id) : input.at(var_name);
        case ExprOp::Add: {
            double s = 0;
            for (const auto& a : args) s += num_of(a->eval(input, tol));
            return Value(s);
        }
        case ExprOp::Mul: {
            double s = 1;
            for (const auto& a : args) s *= num_of(a->eval(input, tol));
            return Value(s);
        }
        case ExprOp::Sub:
        case ExprOp::Div:
        case ExprOp::Eq:
        case ExprOp::Lt:
        case ExprOp::Le:
        case ExprOp::Gt:
        case ExprOp::Ge: {
            Value a = args[0]->eval(input, tol);
            Value b = args[1]->eval(input, tol);
            if (op == ExprOp::Eq && (!a.is_num() || !b.is_num()))
                return Value(Value::equal(a, b, tol) ? 1.0 : 0.0);
            return binary_num(op, a, b, tol);
        }
        case ExprOp::Neg: return Value(-num_of(args[0]->eval(input, tol)));
        case ExprOp::Min: {
            double s = num_of(args[0]->eval(input, tol));
            for (size_t i = 1; i < args.size(); ++i)
                s = std::min(s, num_of(args[i]->eval(input, tol)));
            return Value(s);
        }
        case ExprOp::Max: {
            double s = num_of(args[0]->eval(input, tol));
            for (size_t i = 1; i < args.size(); ++i)
                s = std::max(s, num_of(args[i]->eval(input, tol)));
            return Value(s);
        }
        case ExprOp::Abs: return Value(std::fabs(num_of(args[0]->eval(input, tol))));
        case ExprOp::Relu: {
            Value v = args[0]->eval(input, tol);
            if (v.is_num()) return Value(v.num() > 0 ? v.num() : 0.0);
            Value::Vec out = v.vec();
            for (double& d : out) d = d > 0 ? d : 0.0;
            return Value(std::move(out));
        }
        case ExprOp::Indicator: {
            Value v = args[0]->eval(input, tol);
            return Value(v.num() != 0.0 ? 1.0 : 0.0);
        }
        case ExprOp::If: {
            Value c = args[0]->eval(input, tol);
            return c.num() != 0.0 ? args[1]->eval(input, tol) : args[2]->eval(input, tol);
        }
        case ExprOp::Vec: {
            Value::Vec out;
            out.reserve(args.size());
            for (const auto& a : args) out.push_back(num_of(a->eval(input, tol)));
            return Value(std::move(out));
        }
        case ExprOp::Tuple: {
            Value::Tuple out;
            out.reserve(args.size());
            for (const auto& a : args) out.push_back(a->eval(input, tol));
            return Value::tuple(std::move(out));
        }
        case ExprOp::Proj: {
            Value v = args[0]->eval(input, tol);
            if (v.is_vec()) {
                if (proj_index < 0 || proj_index >= static_cast<int>(v.vec().size()))
                    throw TypeMismatch("proj index out of range");
                return Value(v.vec()[proj_index]);
            }
            const auto& t = v.tup();
            if (proj_index < 0 || proj_index >= static_cast<int>(t.size()))
                throw TypeMismatch("proj index out of range");
            return t[proj_index];
        }
        case ExprOp::Matmul: {
            // Row-vector times matrix, left-to-right accumulation.
            Value::Vec x = args[0]->eval(input, tol).as_vec();
            size_t rows = matrix.size();
            if (rows != x.size()) throw DimensionMismatch("matmul dimension mismatch");
            size_t cols = rows ? matrix[0].size() : 0;
            Value::Vec out(cols, 0.0);
            for (size_t i = 0; i < rows; ++i)
                for (size_t j = 0; j < cols; ++j) out[j] += x[i] * matrix[i][j];
            if (out.size() == 1) return Value(out[0]);
            return Value(std::move(out));
        }
        case ExprOp::Table: {
            for (const auto& row : rows) {
                bool match = true;
                for (VarId v : row.key.domain()) {
                    if (!Value::equal(row.key.at(v), input.at(v), tol)) {
                        match = false;
                        break;
                    }
                }
                if (match) return row.value;
            }
            if (has_default) return default_value;
            throw TypeMismatch("table lookup fell through with no default");
        }
    }
    throw TypeMismatch("unhandled expression op");
}

void Expr::collect_vars(std::set<std::string>& out) const {
    if (op == ExprOp::Var) {
        out.insert(var_name);
        return;
    }
    if (op == ExprOp::Table) {
        for (const auto& row : rows)
            for (VarId v : row.key.domain()) out.insert(row.key.sig()->name(v));
    }
    for (const auto& a : args) a->collect_vars(out);
}

ExprPtr Expr::substitute(const std::unordered_map<std::string, ExprPtr>& repl) const {
    if (op == ExprOp::Var) {
        auto it = repl.find(var_name);
        if (it != repl.end()) return it->second;
        return node(*this);
    }
    if (op == ExprOp::Table && !rows.empty())
        throw TypeMismatch("cannot substitute into a table mechanism");
    Expr out = *this;
    for (auto& a : out.args) a = a->substitute(repl);
    return node(std::move(out));
}

ExprPtr Expr::bound(const Signature& sig) const {
    Expr out = *this;
    if (op == ExprOp::Var) out.var_id = sig.id(var_name);
    for (auto& a : out.args) a = a->bound(sig);
    return node(std::move(out));
}

ExprPtr operator+(ExprPtr a, ExprPtr b) { return Expr::make(ExprOp::Add, {std::move(a), std::move(b)}); }
ExprPtr operator-(ExprPtr a, ExprPtr b) { return Expr::make(ExprOp::Sub, {std::move(a), std::move(b)}); }
ExprPtr operator*(ExprPtr a, ExprPtr b) { return Expr::make(ExprOp::Mul, {std::move(a), std::move(b)}); }

} // namespace cak
