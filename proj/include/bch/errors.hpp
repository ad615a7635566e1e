#pragma once
#include <stdexcept>
#include <string>

namespace bch {

// Base class for all library failures.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Point outside a chart's domain box, or an unsupported derivative order.
struct DomainError : Error {
    using Error::Error;
};

// det(g) fell below the Gram guard: the map is not an immersion there.
struct DegenerateMetricError : Error {
    using Error::Error;
};

// An evolution factor beta_i reached the focal guard.
struct FocalError : Error {
    using Error::Error;
};

// Seed has sum(lambda0) == 0: the evolved hypersurface would be minimal.
struct MinimalSeedError : Error {
    using Error::Error;
};

// Expression or spec-string syntax error; `offset` points at the bad byte.
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : Error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

} // namespace bch
