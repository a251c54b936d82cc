#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ellorb {

// Base class for all numerical-domain failures raised by this library.
// Every error carries a human-readable message naming the offending value.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// The modular cubic 4t^3 - g2 t - g3 has (numerically) a repeated root, so
// no lattice can be built from it.
struct DegenerateCubic : Error {
    using Error::Error;
};

// An elliptic function was evaluated within tolerance of a lattice point.
struct PoleAt : Error {
    explicit PoleAt(std::complex<double> z)
        : Error("evaluation at lattice point z = (" + std::to_string(z.real()) +
                ", " + std::to_string(z.imag()) + ")") {}
};

// Argument outside the real branch handled by an inverse function.
struct OutOfBranch : Error {
    using Error::Error;
};

// Generic invalid argument (NaN, wrong sign, out of admissible range).
struct DomainError : Error {
    using Error::Error;
};

// A root ordering precondition (a > b > c > d and so on) is violated.
struct OrderingError : Error {
    using Error::Error;
};

// A returned quantity fell outside its admissible range.
struct RangeError : Error {
    using Error::Error;
};

// No real-analytic branch is available for the requested configuration.
struct BranchError : Error {
    using Error::Error;
};

// A denominator in a closed-form expression vanished.
struct ZeroDenominator : Error {
    using Error::Error;
};

// A variable change (unimodular substitution, coordinate map) is singular.
struct SingularTransform : Error {
    using Error::Error;
};

// An integrand that must be nonnegative went negative beyond tolerance.
struct NegativeIntegrand : Error {
    using Error::Error;
};

// Data required an ellipse/bound orbit but parameters describe none.
struct NoEllipse : Error {
    using Error::Error;
};

// A rational-period search failed within the allowed denominator bound.
struct NotPeriodic : Error {
    using Error::Error;
};

// The deterministic flow map became non-invertible (conjugate point).
struct CausticReached : Error {
    using Error::Error;
};

// Newton inversion of the flow map found no preimage in the working box.
struct InverseNotFound : Error {
    using Error::Error;
};

// A discretisation failed its self-consistency (step-halving) check.
struct StepTooCoarse : Error {
    using Error::Error;
};

// A field that must stay positive (density, u-field) crossed zero.
struct NonPositiveField : Error {
    using Error::Error;
};

// A point lies on the focal segment branch cut of the elliptic chart.
struct OnCut : Error {
    using Error::Error;
};

// The conformal scale factor of the elliptic chart vanished (at a focus).
struct ScaleFactorZero : Error {
    using Error::Error;
};

// Evaluation on the symmetry axis of an axisymmetric field.
struct AxisSingularity : Error {
    using Error::Error;
};

// A quantity that must have a positive root has none.
struct NoPositiveRoot : Error {
    using Error::Error;
};

// Convergence failure in an iterative scheme.
struct ConvergenceError : Error {
    using Error::Error;
};

}  // namespace ellorb
