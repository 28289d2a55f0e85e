#pragma once

#include "cak/intervene.hpp"

#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

namespace cak {

// ─── Cell maps ───────────────────────────────────────────────────────────
// A partial surjective map from settings of a low-level cell to values of a
// high-level variable. The cell value of a multi-variable cell is the tuple
// of member values in cell order.

Value cell_value(const Setting& low, const std::vector<VarId>& cell);

class CellMap {
public:
    enum class Kind { Identity, Table, Expr, Argmax };

    static CellMap identity();
    static CellMap table(std::vector<std::pair<Value, Value>> entries);
    // Expression over the low cell variables yielding the high value.
    static CellMap expr(ExprPtr e);
    // Label of the largest cell coordinate; ties (within tolerance) go to
    // tie_index. Total on real cells.
    static CellMap argmax(std::vector<Value> labels, int tie_index);

    Kind kind() const { return kind_; }

    // Applies the map to the cell portion of a low setting; nullopt when the
    // cell value is outside the domain.
    std::optional<Value> apply(const Setting& low, const std::vector<VarId>& cell,
                               double tol) const;

    bool domain_enumerable(const SignaturePtr& low_sig, const std::vector<VarId>& cell) const;

    // Cell settings mapping to `target` (enumerable domains only).
    std::vector<Setting> preimages(const Value& target, const SignaturePtr& low_sig,
                                   const std::vector<VarId>& cell, double tol,
                                   uint64_t budget) const;

    // Throws SurjectivityError when enumerable and not onto the range.
    void check_surjective(const SignaturePtr& low_sig, const std::vector<VarId>& cell,
                          const ValueRange& high_range, double tol, uint64_t budget) const;

    const std::vector<std::pair<Value, Value>>& table_entries() const { return entries_; }
    const ExprPtr& expr_ptr() const { return expr_; }
    const std::vector<Value>& argmax_labels() const { return labels_; }
    int argmax_tie() const { return tie_index_; }

private:
    Kind kind_ = Kind::Identity;
    std::vector<std::pair<Value, Value>> entries_;
    std::unordered_map<Value, Value, ValueHash> lookup_;
    ExprPtr expr_;
    std::vector<Value> labels_;
    int tie_index_ = 0;
};

// ─── Alignment (Def. 17) ─────────────────────────────────────────────────

class Alignment {
public:
    Alignment() = default; // empty placeholder; assign before use
    Alignment(SignaturePtr low, SignaturePtr high,
              std::vector<std::vector<VarId>> cells, std::vector<VarId> bot,
              std::vector<CellMap> maps);

    static Alignment identity(const SignaturePtr& sig);

    const SignaturePtr& low() const { return low_; }
    const SignaturePtr& high() const { return high_; }
    const std::vector<VarId>& cell(VarId high_var) const { return cells_[high_var]; }
    const std::vector<std::vector<VarId>>& cells() const { return cells_; }
    const std::vector<VarId>& bot_cell() const { return bot_; }
    const CellMap& map(VarId high_var) const { return maps_[high_var]; }
    std::vector<CellMap>& maps() { return maps_; }

    // High variable whose cell contains the low variable, -1 for the ⊥-cell.
    VarId owner(VarId low_var) const { return owner_[low_var]; }

    void check_surjective(double tol, uint64_t budget) const;

private:
    SignaturePtr low_;
    SignaturePtr high_;
    std::vector<std::vector<VarId>> cells_;
    std::vector<VarId> bot_;
    std::vector<CellMap> maps_;
    std::vector<VarId> owner_;
};

// Eq. (transl): cellwise union; nullopt when any cell value is unmapped.
std::optional<Setting> induced_tau(const Alignment& a, const Setting& low_total, double tol);

// Eq. (tauext), cellwise rule: defined iff targets are a union of complete
// cells with in-domain values.
std::optional<HardIntervention> induced_omega(const Alignment& a, const HardIntervention& low,
                                              double tol);

// Eq. (tauext), literal set condition checked by enumeration (enum-only).
std::optional<HardIntervention> induced_omega_strict(const Alignment& a,
                                                     const HardIntervention& low, double tol,
                                                     uint64_t budget = 0);

// ─── τ/ω pairs and verification ──────────────────────────────────────────

struct TauOmega {
    std::function<std::optional<Setting>(const Setting&)> tau;
    std::function<std::optional<InterventionPtr>(const InterventionPtr&)> omega;
    std::string provenance; // "alignment", "bijective", "identity", ...
};

TauOmega tau_omega_from(const Alignment& a, double tol);
TauOmega identity_tau_omega(const SignaturePtr& sig);
// Exact-transformation composition: a first, then b.
TauOmega compose_tau_omega(const TauOmega& a, const TauOmega& b);

// Suites are index-addressable so large generated suites need not be
// materialized.
class Suite {
public:
    Suite() = default;
    Suite(std::vector<InterventionPtr> items);
    Suite(uint64_t size, std::function<InterventionPtr(uint64_t)> gen);

    uint64_t size() const { return size_; }
    InterventionPtr at(uint64_t i) const;

private:
    uint64_t size_ = 0;
    std::vector<InterventionPtr> items_;
    std::function<InterventionPtr(uint64_t)> gen_;
};

struct VerifyRecord {
    uint64_t index = 0;
    std::string low_intervention;
    std::string high_intervention;
    std::vector<Setting> expected; // τ(Solve(low_i))
    std::vector<Setting> actual;   // Solve(high_ω(i))
    bool tau_undefined = false;
    bool pass = false;
};

struct AbstractionReport {
    uint64_t suite_size = 0;
    uint64_t fail_count = 0;
    bool passed = false;
    std::vector<VerifyRecord> failures; // up to max_failures, ascending index
    std::optional<VerifyRecord> first_counterexample;
};

struct VerifyOptions {
    double tolerance = 0.0;
    int jobs = 0;             // 0 = hardware default
    uint64_t budget = 0;      // 0 = global budget
    uint64_t max_failures = 16;
};

// Def. 13: checks τ(Solve(low_i)) = Solve(high_ω(i)) for every suite item.
AbstractionReport verify_exact(const CausalModel& low, const CausalModel& high,
                               const TauOmega& to, const Suite& suite,
                               const VerifyOptions& opts = {});

// Def. 19: verify_exact with the alignment-induced pair.
AbstractionReport verify_constructive(const CausalModel& low, const CausalModel& high,
                                      const Alignment& a, const Suite& suite,
                                      const VerifyOptions& opts = {});

// Every union of complete cells with in-domain values (the cellwise dom(ω));
// cells must have enumerable map domains.
Suite cellwise_domain_suite(const Alignment& a, double tol = 0.0, uint64_t budget = 0);

// ─── Bijective translation (Def. 14) ─────────────────────────────────────

// A bijection on total settings acting independently on blocks of variables;
// the block structure keeps translated models solvable.
struct Bijection {
    SignaturePtr sig;
    std::vector<std::vector<VarId>> blocks; // partition of the variables
    std::function<Setting(const Setting&)> forward;
    std::function<Setting(const Setting&)> inverse;

    static Bijection identity(SignaturePtr sig);
    // Orthogonal (or any invertible) matrix acting on the flattened values of
    // `vars`, identity elsewhere. `inverse_matrix` must be the exact inverse.
    static Bijection block_linear(SignaturePtr sig, std::vector<VarId> vars,
                                  std::vector<std::vector<double>> matrix,
                                  std::vector<std::vector<double>> inverse_matrix);
    Bijection then(const Bijection& next) const;
};

struct BijectionCheckOptions {
    int samples = 1000;
    uint64_t seed = 2024;
    double tol = 1e-9;
    uint64_t budget = 0;
};

// Verifies forward∘inverse = id on sampled settings (exhaustively on enum
// signatures within budget); throws NotInverse.
void check_bijection(const Bijection& b, const BijectionCheckOptions& opts);

CausalModel bijective_translate(const CausalModel& m, const Bijection& tau,
                                const BijectionCheckOptions& opts = {});

// Remark after Def. 14: the canonical interventional for a high-side hard
// intervention, with ω(Ψ) = i_star recorded in the returned TauOmega.
InterventionPtr canonical_interventional(const CausalModel& m, const Bijection& tau,
                                         const HardIntervention& i_star);

// Factory for canonical (Ψ, i*) pairs with a τ/ω whose ω recognizes every Ψ
// built through `make` (Thm 3 instances verify against this pair).
struct CanonicalPairs {
    TauOmega to;
    std::function<InterventionPtr(const HardIntervention&)> make;
};
CanonicalPairs canonical_pairs(const CausalModel& m, const Bijection& tau);

// ─── Constructive translation (Def. 20) ──────────────────────────────────

struct ConstructiveOptions {
    uint64_t budget = 0;
    double tol = 0.0;
};

// Builds the high model from a low model and an alignment, witness semantics
// per Eq. (translatedstreq): a high value is kept where some low setting,
// with the other cells fixed to preimages, solves the cell and ⊥ equations;
// otherwise Filter (deterministic next value) applies.
CausalModel constructive_translate(const CausalModel& low, const Alignment& a,
                                   const ConstructiveOptions& opts = {});

} // namespace cak
