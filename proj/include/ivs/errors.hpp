#pragma once

#include <stdexcept>
#include <string>

namespace ivs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Arithmetic on the exact time axis overflowed its 64-bit representation.
// Overflow is always reported, never wrapped.
struct OverflowError : Error {
    using Error::Error;
};

// Translation maps with mismatched interval lengths cannot be composed.
struct CompositionError : Error {
    using Error::Error;
};

// Endpoint data of two sections disagree, so no gluing exists.
struct GlueError : Error {
    using Error::Error;
};

// A cell/edge list violates adjacency compatibility.
struct MalformedSectionError : Error {
    using Error::Error;
};

// A section is not a member of the sheaf it was offered to.
struct MembershipError : Error {
    using Error::Error;
};

// An input event has no transition from the current state.
struct DomainError : Error {
    using Error::Error;
};

// Non-finite values encountered while integrating.
struct NumericError : Error {
    using Error::Error;
};

// Wiring validation failure (dangling endpoint, type mismatch).
struct WiringError : Error {
    using Error::Error;
};

// A feedback loop with no sampling point has no causal schedule.
struct CausalityError : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line(line),
          column(column) {}
    explicit ParseError(const std::string& msg) : Error(msg), line(0), column(0) {}
    int line;
    int column;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace ivs
