#pragma once

#include "cak/signature.hpp"

#include <memory>
#include <set>
#include <vector>

namespace cak {

// Expression trees are the portable mechanism representation. Comparison ops
// on numbers honor the evaluating model's absolute tolerance so that
// threshold readouts stay decidable on floating-point fixtures.

enum class ExprOp {
    Lit, Var,
    Add, Sub, Mul, Div, Neg,
    Min, Max, Abs, Relu,
    Indicator, Eq, Lt, Le, Gt, Ge,
    If, Vec, Proj, Matmul, Table, Tuple,
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct TableRow {
    Setting key;   // partial setting matched against the input
    Value value;
};

class Expr {
public:
    ExprOp op;
    Value literal;                 // Lit
    VarId var_id = -1;             // Var
    std::string var_name;          // Var (kept for re-binding / serialization)
    std::vector<ExprPtr> args;
    int proj_index = 0;                        // Proj
    std::vector<std::vector<double>> matrix;   // Matmul (row-major)
    std::vector<TableRow> rows;                // Table
    bool has_default = false;
    Value default_value;                       // Table

    static ExprPtr lit(Value v);
    static ExprPtr var(std::string name);
    static ExprPtr make(ExprOp op, std::vector<ExprPtr> args);
    static ExprPtr if_(ExprPtr c, ExprPtr t, ExprPtr f);
    static ExprPtr proj(int k, ExprPtr e);
    static ExprPtr matmul(std::vector<std::vector<double>> m, ExprPtr e);
    static ExprPtr table(std::vector<TableRow> rows, bool has_default, Value def);

    Value eval(const Setting& input, double tol) const;
    void collect_vars(std::set<std::string>& out) const;

    // Structural substitution of variables by expressions (used when
    // marginalizing acyclic models).
    ExprPtr substitute(const std::unordered_map<std::string, ExprPtr>& repl) const;

    // Copy with Var nodes resolved against a signature; throws
    // UndeclaredVariable on unknown names.
    ExprPtr bound(const Signature& sig) const;
};

// Convenience builders.
ExprPtr operator+(ExprPtr a, ExprPtr b);
ExprPtr operator-(ExprPtr a, ExprPtr b);
ExprPtr operator*(ExprPtr a, ExprPtr b);

} // namespace cak
