#pragma once

#include <stdexcept>
#include <string>

namespace pseudomode {

enum class ErrorKind {
    OrderBudgetExceeded,
    NonFinite,
    OrderMismatch,
    ZeroXi,
    UnknownModel,
    BadParams,
    NoSignChange,
    DegenerateAnchor,
    PreconditionViolated,
    SingularHessian,
    BudgetExceeded,
    HessianLoss,
    GateEmpty,
    OutOfInterval,
    GridTooCoarse,
    MemoryBudget,
    MissingDiffOp,
    ConfigError
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace pseudomode
