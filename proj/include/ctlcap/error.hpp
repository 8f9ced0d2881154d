#pragma once

#include <stdexcept>
#include <string>

namespace ctlcap {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Constructor arguments violate a type invariant.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Adaptive quadrature could not reach the error target.
class NonIntegrable : public Error
{
public:
    using Error::Error;
};

/// A restriction cell carries zero probability.
class EmptyCell : public Error
{
public:
    using Error::Error;
};

/// Equal-width partition requested for a law with unbounded support.
class UnboundedSupport : public Error
{
public:
    using Error::Error;
};

/// One-step carry-free control requested for the zero series.
class ZeroState : public Error
{
public:
    using Error::Error;
};

/// Unparseable distribution spec, gain spec or CLI flag.
class ConfigError : public Error
{
public:
    using Error::Error;
};

}  // namespace ctlcap
