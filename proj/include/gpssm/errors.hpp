#pragma once

#include <stdexcept>
#include <string>

namespace gpssm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (K + sigma_n^2 I) could not be factorized even with maximum jitter.
class FactorizationFailure : public Error {
public:
    using Error::Error;
};

/// Every start of the hyperparameter search failed.
class OptimizationFailure : public Error {
public:
    using Error::Error;
};

/// A vector argument does not match the model dimension.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Predictive variance too small for the transition kernel to be a density.
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

/// The Fredholm matrix is not singular at lambda = 1, so no equilibrium exists.
class NoSolution : public Error {
public:
    using Error::Error;
};

/// The active-set solver exceeded its iteration cap.
class SolverStall : public Error {
public:
    using Error::Error;
};

/// A stability certificate was requested for a kernel it does not cover.
class UnsupportedKernel : public Error {
public:
    using Error::Error;
};

/// Operation is defined for one-dimensional state spaces only.
class NotOneDimensional : public Error {
public:
    using Error::Error;
};

/// A statistical test received an empty sample set.
class EmptySample : public Error {
public:
    using Error::Error;
};

/// Grid interval with lower bound >= upper bound.
class IntervalInvalid : public Error {
public:
    using Error::Error;
};

/// Numerical result outside what round-off alone can explain.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV/JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace gpssm
