// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — hybrid beamforming simulator for multi-user MIMO-OFDM downlinks
//
// Exception taxonomy shared by all modules. Every precondition violation maps
// to one of these types so callers can distinguish "your inputs are wrong"
// (ConfigError, DomainError) from "the math broke down on this instance"
// (RankError, NumericalError, DegenerateError).

#pragma once

#include <stdexcept>

namespace hbf {

// Invalid configuration or argument combination: bad dimensions, broken
// divisibility requirements, malformed files, out-of-range settings.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Scalar argument outside the mathematical domain of an operation
// (e.g. non-positive range in a path-loss evaluation).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// A linear system that must be solved is (numerically) rank deficient.
class RankError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An iterative procedure failed to make progress or produced a non-finite
// intermediate value.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Structurally valid input on which the requested result is undefined,
// e.g. a beamformer with zero norm that cannot be power-normalized.
class DegenerateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace hbf
