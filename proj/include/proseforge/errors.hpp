#pragma once

#include <stdexcept>
#include <string>

namespace proseforge {

// Base class for all toolkit errors; the CLI catches this at its boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File could not be opened or read.
struct IoError : Error {
    using Error::Error;
};

// File contents do not match the documented format.
struct FormatError : Error {
    using Error::Error;
};

// Parallel files disagree (line counts, blank-on-one-side lines).
struct AlignmentError : Error {
    using Error::Error;
};

// Numeric argument outside its allowed range.
struct ParamError : Error {
    using Error::Error;
};

// Two components handed each other inconsistent shapes or lengths.
struct ContractError : Error {
    using Error::Error;
};

// Missing or malformed configuration (config keys, extractor roles).
struct ConfigError : Error {
    using Error::Error;
};

// Ingested data violates its declared bounds.
struct ValidationError : Error {
    using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
    using Error::Error;
};

} // namespace proseforge
