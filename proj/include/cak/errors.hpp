#pragma once

#include <stdexcept>
#include <string>

namespace cak {

// Exit-code classes used by the CLI:
//   UsageError / ParseError  -> 2
//   BudgetError family       -> 3
//   everything else          -> 3 (runtime)
// Verification *failures* are reported, not thrown.

struct CakError : std::runtime_error {
    explicit CakError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingVariable : CakError { using CakError::CakError; };
struct UnknownVariable : CakError { using CakError::CakError; };
struct NotEnumerable : CakError { using CakError::CakError; };
struct BudgetExceeded : CakError { using CakError::CakError; };
struct EnumerationBudgetExceeded : BudgetExceeded { using BudgetExceeded::BudgetExceeded; };
struct UnsolvableRepresentation : CakError { using CakError::CakError; };
struct RangeViolation : CakError { using CakError::CakError; };
struct SignatureMismatch : CakError { using CakError::CakError; };
struct TypeMismatch : CakError { using CakError::CakError; };
struct DuplicateClass : CakError { using CakError::CakError; };
struct DomainViolation : CakError { using CakError::CakError; };
struct NotInverse : CakError { using CakError::CakError; };
struct AlignmentConflict : CakError { using CakError::CakError; };
struct UnrealizedValue : CakError { using CakError::CakError; };
struct PartitionError : CakError { using CakError::CakError; };
struct SurjectivityError : CakError { using CakError::CakError; };
struct NoSolution : CakError { using CakError::CakError; };
struct AmbiguousSolution : CakError { using CakError::CakError; };
struct UnsolvedSource : CakError { using CakError::CakError; };
struct NotInputPreserving : CakError { using CakError::CakError; };
struct NotOrthogonal : CakError { using CakError::CakError; };
struct RankDeficient : CakError { using CakError::CakError; };
struct EmptyConditionedSet : CakError { using CakError::CakError; };
struct NonNumericOutcome : CakError { using CakError::CakError; };
struct NonRealMediator : CakError { using CakError::CakError; };
struct UnknownFixture : CakError { using CakError::CakError; };
struct DimensionMismatch : CakError { using CakError::CakError; };
struct UndeclaredVariable : CakError { using CakError::CakError; };

struct ParseError : CakError {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int l = 0, int c = 0)
        : CakError(msg), line(l), column(c) {}
};

struct TypeError : CakError {
    std::string path;
    TypeError(const std::string& msg, std::string p = "")
        : CakError(msg), path(std::move(p)) {}
};

struct UsageError : CakError { using CakError::CakError; };

} // namespace cak
