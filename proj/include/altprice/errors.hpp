#pragma once

#include <stdexcept>
#include <string>

namespace altprice
{

// Base of every failure raised by the library. Derived types name the
// violated precondition so the CLI can report it verbatim.
class PricingError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

#define ALTPRICE_DEFINE_ERROR(Name)                                   \
    class Name : public PricingError                                  \
    {                                                                 \
    public:                                                           \
        explicit Name(const std::string &what) : PricingError(what) {} \
    };

ALTPRICE_DEFINE_ERROR(DegenerateVolatilitySpread)
ALTPRICE_DEFINE_ERROR(NoRoot)
ALTPRICE_DEFINE_ERROR(ToleranceNotMet)
ALTPRICE_DEFINE_ERROR(QuadratureBudgetExceeded)
ALTPRICE_DEFINE_ERROR(MaturityDegenerate)
ALTPRICE_DEFINE_ERROR(NoArbitrageViolation)
ALTPRICE_DEFINE_ERROR(LatticeOverflow)
ALTPRICE_DEFINE_ERROR(DegenerateNode)
ALTPRICE_DEFINE_ERROR(ZeroDrift)
ALTPRICE_DEFINE_ERROR(UnboundedDeflator)
ALTPRICE_DEFINE_ERROR(RequiresZeroH0)
ALTPRICE_DEFINE_ERROR(WindowTooLong)

#undef ALTPRICE_DEFINE_ERROR

// Input file could not be parsed; carries the 1-based row (0 = header/file).
class ParseError : public PricingError
{
public:
    ParseError(const std::string &what, std::size_t row)
        : PricingError(what + " (row " + std::to_string(row) + ")"), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class NonPositivePrice : public ParseError
{
public:
    using ParseError::ParseError;
};

} // namespace altprice
