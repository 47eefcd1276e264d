#pragma once

#include <stdexcept>
#include <string>

namespace orl {

// Dimension/shape contract violations (batch width vs layer size, etc.).
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values encountered during training; carries the step at which
// the failure surfaced so multi-seed sweeps can report it.
class NumericError : public std::runtime_error {
  public:
    NumericError(const std::string& what, long step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    long step() const { return step_; }

  private:
    long step_ = 0;
};

// Malformed serialized content; the message names the section that failed.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Unrecognized magic bytes or unsupported container version.
class VersionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace orl
