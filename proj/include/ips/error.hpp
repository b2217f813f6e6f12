#ifndef IPS_ERROR_HPP
#define IPS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ips {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatches, spins out of range, windows outside
/// the volume.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A state space or enumeration exceeds a hard cap.
class InfeasibleSize : public Error {
 public:
  using Error::Error;
};

/// An operation that requires positive cylinder probabilities met a zero one.
class ZeroCylinder : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

}  // namespace ips

#endif  // IPS_ERROR_HPP
