#pragma once

#include <stdexcept>
#include <string>

namespace idw {

/// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix / tensor dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

/// An argument is outside its documented domain (negative std, label out of
/// range, bad hyperparameter, ...).
struct ValueError : Error {
    using Error::Error;
};

/// A computation produced NaN/Inf where the contract forbids it.
struct NumericError : Error {
    using Error::Error;
};

/// Filesystem-level problem: missing file, unreadable, unwritable.
struct IoError : Error {
    using Error::Error;
};

/// A byte stream or text document does not match its format definition
/// (bad magic, truncated payload, malformed line).
struct FormatError : Error {
    using Error::Error;
};

/// A file declares a schema version this build does not speak.
struct VersionError : Error {
    using Error::Error;
};

/// An experiment config file is invalid (unknown key, missing value, ...).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace idw
