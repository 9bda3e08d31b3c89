#pragma once

#include <stdexcept>
#include <string>

namespace empmp {

// Every failure mode in the library maps onto one of these types so callers
// (and the CLI, which turns them into exit codes) can tell usage problems
// apart from numeric ones.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or axis mismatch between tensors; messages name the offending axis.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid configuration value: eps <= 0, unknown preset, bad config key.
struct ConfigError : Error {
  using Error::Error;
};

// Violated call contract: empty input set, out-of-range frame index, etc.
struct ContractError : Error {
  using Error::Error;
};

// Tape misuse, e.g. backward through a tensor the tape never recorded.
struct TapeError : Error {
  using Error::Error;
};

// Non-finite values where finite math is required.
struct NumericError : Error {
  using Error::Error;
};

// Malformed file contents: scenes, manifests, checkpoints, config files.
struct ParseError : Error {
  using Error::Error;
};

// Filesystem failures: missing inputs, unwritable outputs.
struct IoError : Error {
  using Error::Error;
};

}  // namespace empmp
