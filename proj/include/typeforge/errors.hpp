#pragma once

#include <stdexcept>
#include <string>

namespace typeforge {

// Base class for all domain errors. The CLI maps these to exit code 1;
// anything else reaching main is a bug.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : Error { using Error::Error; };
struct MappingError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct CoverageError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };
struct CheckpointError : Error { using Error::Error; };

} // namespace typeforge
