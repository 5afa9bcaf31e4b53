#pragma once

#include <stdexcept>
#include <string>

namespace editdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sequence collapsed to (or was given as) zero tokens.
class EmptySequenceError : public Error {
public:
    using Error::Error;
};

/// Malformed input: bad residue letters, bad files, inconsistent mutations.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace editdiff
