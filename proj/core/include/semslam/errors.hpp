#pragma once

#include <stdexcept>
#include <string>

namespace semslam {

/// Base class for all semslam exceptions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry.
struct NotAnEllipse : Error {
  using Error::Error;
};
struct OffImage : Error {
  using Error::Error;
};
struct NotAnEllipsoid : Error {
  using Error::Error;
};
struct DegenerateBaseline : Error {
  using Error::Error;
};

// Vocabulary.
struct InsufficientData : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};
struct ZeroVector : Error {
  using Error::Error;
};

// Initialization.
struct TooFewObservations : Error {
  using Error::Error;
};
struct DegenerateScale : Error {
  using Error::Error;
};
struct Infeasible : Error {
  using Error::Error;
};
struct MaxIterations : Error {
  using Error::Error;
};

// Bundle adjustment.
struct NoFactors : Error {
  using Error::Error;
};

// Simulation and evaluation.
struct EmptyScene : Error {
  using Error::Error;
};
struct EmptyOverlap : Error {
  using Error::Error;
};
struct NoInitializedObjects : Error {
  using Error::Error;
};

// Pipeline and I/O.
struct OutOfOrderFrame : Error {
  using Error::Error;
};
struct SchemaMismatch : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};

}  // namespace semslam
