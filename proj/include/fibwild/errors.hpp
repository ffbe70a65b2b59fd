#pragma once

/** @file errors.hpp
 *  @brief Exception types raised by the library.
 */

#include <stdexcept>
#include <string>

namespace fibwild {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define FIBWILD_ERROR(Name)                                                  \
    struct Name : Error {                                                    \
        using Error::Error;                                                  \
        const char* kind() const noexcept override { return #Name; }         \
    }

FIBWILD_ERROR(InvalidArgument);
FIBWILD_ERROR(IndexOutOfRange);
FIBWILD_ERROR(NonSummable);
FIBWILD_ERROR(ConditionFailure);
FIBWILD_ERROR(TailTooShort);
FIBWILD_ERROR(DepthExceeded);
FIBWILD_ERROR(OutsideDomain);
FIBWILD_ERROR(BoundaryPoint);
FIBWILD_ERROR(NoConvergence);
FIBWILD_ERROR(PrecisionExhausted);
FIBWILD_ERROR(BracketFailure);
FIBWILD_ERROR(DivisionNearZero);
FIBWILD_ERROR(InvariantUnavailable);
FIBWILD_ERROR(NonPositiveWeight);
FIBWILD_ERROR(InfiniteInducingTime);
FIBWILD_ERROR(CombinatorialOverflow);

#undef FIBWILD_ERROR

} // namespace fibwild
