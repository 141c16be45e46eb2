#pragma once

#include <stdexcept>
#include <string>

namespace ffop {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or unparsable field/mesh data.
class ParseError : public Error
{
public:
    using Error::Error;
};

/// Invalid mesh geometry or topology (inverted, degenerate, non-manifold, ...).
class GeometryError : public Error
{
public:
    using Error::Error;
};

/// Invalid argument to a numerical routine (out-of-range epsilon, dim mismatch, ...).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Solver failure: non-convergence, singular system, infeasible problem.
class NumericalError : public Error
{
public:
    using Error::Error;
};

} // namespace ffop
