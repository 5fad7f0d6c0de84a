#pragma once

#include <stdexcept>
#include <string>

namespace vst {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable file contents (bad magic, truncated payload, ...).
struct IoError : Error {
    using Error::Error;
};

/// Inconsistent shapes, invalid configuration, missing inputs.
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace vst
