#pragma once

#include <stdexcept>
#include <string>

namespace mlsvm {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input files, CSV rows, model files and caches.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A precondition on the arguments of an operation was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Coarsening produced no reduction in size.
class CoarseningStagnation : public Error {
public:
    using Error::Error;
};

}  // namespace mlsvm
