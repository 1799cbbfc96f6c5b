#pragma once

#include <stdexcept>
#include <string>

namespace rockfrag {

/// Bad caller input: violated precondition, malformed file, invalid config.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The input was well-formed but the analysis could not produce a result
/// (fit did not converge, no accepted frames, pile could not be packed).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rockfrag
