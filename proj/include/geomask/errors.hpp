#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geomask {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Point cloud with zero extent in both axes.
class DegenerateExtent : public Error {
 public:
  using Error::Error;
};

/// Redraw policy could not place a point inside the study area.
class BoundaryExhaustion : public Error {
 public:
  BoundaryExhaustion(std::size_t point_index, std::size_t attempts)
      : Error("boundary exhaustion: point " + std::to_string(point_index) +
              " still outside the study area after " + std::to_string(attempts) +
              " attempts"),
        point_index_(point_index) {}

  std::size_t point_index() const noexcept { return point_index_; }

 private:
  std::size_t point_index_;
};

/// Response vector without both outcomes; the likelihood has no finite maximum.
class SeparationError : public Error {
 public:
  using Error::Error;
};

class SingularInformation : public Error {
 public:
  using Error::Error;
};

class InvalidFit : public Error {
 public:
  using Error::Error;
};

class DegenerateInformation : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class OutOfGrid : public Error {
 public:
  using Error::Error;
};

class EmptyCell : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// Fewer than half of the replications in a theta cell converged.
class BatchFailure : public Error {
 public:
  using Error::Error;
};

/// Config or input-file validation failure; message names the field or line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace geomask
