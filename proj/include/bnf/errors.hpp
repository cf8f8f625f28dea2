#pragma once

#include <stdexcept>
#include <string>

namespace bnf {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, out-of-range parameters, dimension mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The input is well formed but the computation cannot proceed.
class MathError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// |<omega, m>| fell below the resonance tolerance in numeric mode.
class SmallDivisor : public MathError {
public:
    using MathError::MathError;
};

/// An exact divisor <m, omega> vanished identically.
class ResonantInput : public MathError {
public:
    using MathError::MathError;
};

class NonRepresentableScaling : public MathError {
public:
    using MathError::MathError;
};

/// sin(omega_j t) vanishes (t is a period of the harmonic flow).
class ResonantTime : public MathError {
public:
    using MathError::MathError;
};

class ConvergenceError : public MathError {
public:
    using MathError::MathError;
};

/// Normal-form data that no even potential could have produced.
class InconsistentData : public MathError {
public:
    using MathError::MathError;
};

/// Two harmonic predictions too close to assign computed levels to labels.
class AmbiguousLabels : public MathError {
public:
    using MathError::MathError;
};

/// Too few independent data for the requested fit.
class RankDeficient : public MathError {
public:
    using MathError::MathError;
};

}  // namespace bnf
