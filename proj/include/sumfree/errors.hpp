#pragma once

#include <stdexcept>
#include <string>

namespace sumfree {

// Base of every error thrown by the library. Each subclass names one
// contract violation so callers (and the CLI) can map it to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SUMFREE_ERROR(Name)                                        \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(what) {}    \
    }

SUMFREE_ERROR(InvalidModulus);
SUMFREE_ERROR(ProcessTerminated);
SUMFREE_ERROR(NotOpen);
SUMFREE_ERROR(ModeUnsupported);
SUMFREE_ERROR(DomainError);
SUMFREE_ERROR(UnknownVariable);
SUMFREE_ERROR(AsymptoticHorizonUndefined);
SUMFREE_ERROR(NotSumFree);
SUMFREE_ERROR(BudgetExceeded);
SUMFREE_ERROR(PreconditionViolated);
SUMFREE_ERROR(InvalidParams);

#undef SUMFREE_ERROR

}  // namespace sumfree
