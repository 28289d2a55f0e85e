#pragma once

#include "cak/intervene.hpp"

#include <string>
#include <vector>

namespace cak {

// An atom of the free algebra: an equivalence-class key (the targeted
// variable for hard/soft atoms) plus its payload intervention.
struct Atom {
    std::string key;
    InterventionPtr payload;
};

struct AtomicSeq {
    std::vector<Atom> elements;
};

// Strict total order on equivalence-class keys; defaults to signature
// declaration order extended by first-appearance for foreign keys.
class ClassOrder {
public:
    ClassOrder() = default;
    explicit ClassOrder(std::vector<std::string> keys) : keys_(std::move(keys)) {}
    static ClassOrder from_signature(const Signature& sig);

    // Returns true if a precedes b.
    bool before(const std::string& a, const std::string& b) const;

private:
    std::vector<std::string> keys_;
    int rank(const std::string& k) const;
};

// Removes every element with a ~-equivalent element to its right.
AtomicSeq collapse(const AtomicSeq& s);

// Sorts a collapsed sequence by the class order; throws DuplicateClass if a
// key appears twice.
AtomicSeq sort_seq(const AtomicSeq& s, const ClassOrder& o);

AtomicSeq normal_form(const AtomicSeq& s, const ClassOrder& o);

// Right-biased overwrite composition iota* for hard-intervention sequences.
HardIntervention overwrite_composition(const AtomicSeq& s, const SignaturePtr& sig);

struct LawFailure {
    std::string law; // "commutativity" or "left-annihilativity"
    std::string lhs;
    std::string rhs;
    std::string model;
    std::string detail;
};

struct AlgebraReport {
    bool passed = true;
    int checks = 0;
    std::vector<LawFailure> failures;
};

// Checks commutativity across distinct targets and left-annihilativity on
// equal targets, extensionally over the model suite (atoms target single
// variables). Hard-intervention atoms are additionally checked symbolically.
AlgebraReport check_intervention_algebra(const std::vector<Atom>& atoms,
                                         const std::vector<CausalModel>& suite);

} // namespace cak
