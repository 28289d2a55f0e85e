#pragma once

#include "cak/expr.hpp"
#include "cak/signature.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cak {

constexpr uint64_t kDefaultBudget = 10000000; // joint-state cap for enumeration

uint64_t global_budget(); // kDefaultBudget unless CAK_BUDGET overrides

// A mechanism computes a variable's value from a total setting. Expression
// mechanisms are serializable; host mechanisms carry an explicit parent list.
class Mechanism {
public:
    static Mechanism constant(Value v);
    static Mechanism expression(ExprPtr e);
    static Mechanism host(std::function<Value(const Setting&)> fn,
                          std::vector<std::string> parents);

    Value eval(const Setting& total, double tol) const;
    const std::vector<std::string>& parent_names() const { return parents_; }
    const ExprPtr& expr() const { return expr_; } // null for host mechanisms
    bool is_constant() const { return expr_ && expr_->op == ExprOp::Lit; }

private:
    ExprPtr expr_;
    std::function<Value(const Setting&)> fn_;
    std::vector<std::string> parents_;
};

// Syntactic (and optionally semantic) parenthood, plus the acyclicity flag.
struct CausalOrder {
    std::vector<std::vector<VarId>> syntactic_parents;
    std::vector<std::vector<VarId>> semantic_parents; // empty unless computed
    bool acyclic = false;
    std::vector<VarId> topo_order; // valid when acyclic
};

class CausalModel {
public:
    CausalModel() = default;
    CausalModel(SignaturePtr sig, std::vector<Mechanism> mechanisms,
                double tolerance = 0.0, std::string name = "");

    const SignaturePtr& sig() const { return sig_; }
    const Mechanism& mechanism(VarId v) const { return mechanisms_[v]; }
    const std::vector<Mechanism>& mechanisms() const { return mechanisms_; }
    double tolerance() const { return tolerance_; }
    const std::string& name() const { return name_; }

    CausalModel with_mechanism(VarId v, Mechanism m) const;
    CausalModel with_mechanisms(std::vector<Mechanism> ms) const;
    CausalModel with_tolerance(double tol) const;

    const CausalOrder& order() const { return order_; }
    bool acyclic() const { return order_.acyclic; }

    // Def-6 solution set in canonical order. Acyclic models evaluate
    // topologically; cyclic enum models enumerate candidate assignments of
    // the variables left undetermined by topological propagation.
    std::vector<Setting> solve(uint64_t budget = 0) const;

    // Unique solution; throws NoSolution / AmbiguousSolution.
    Setting solve_unique(uint64_t budget = 0) const;

    bool is_solution(const Setting& t) const;

    Value eval_mechanism(VarId v, const Setting& total) const {
        return mechanisms_[v].eval(total, tolerance_);
    }

private:
    SignaturePtr sig_;
    std::vector<Mechanism> mechanisms_;
    double tolerance_ = 0.0;
    std::string name_;
    CausalOrder order_;

    void rebuild_order();
};

// Exact semantic parenthood by exhaustive context enumeration (Remark 2).
CausalOrder semantic_order(const CausalModel& m, uint64_t budget = 0);

} // namespace cak
