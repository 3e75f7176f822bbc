#pragma once

#include <stdexcept>
#include <string>

namespace zkwm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfRangeError : Error { using Error::Error; };
struct OverflowError : Error { using Error::Error; };
struct ShapeMismatchError : Error { using Error::Error; };
struct BuilderFinalizedError : Error { using Error::Error; };
struct MissingAssignmentError : Error { using Error::Error; };
struct UnsupportedLayerError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct KeyMismatchError : Error { using Error::Error; };
struct UnsatisfiedWitnessError : Error { using Error::Error; };
struct MalformedFileError : Error { using Error::Error; };

}  // namespace zkwm
