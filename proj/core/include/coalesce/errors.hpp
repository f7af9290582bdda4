#ifndef COALESCE_ERRORS_HPP
#define COALESCE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coalesce {

/// Base class for all framework errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad rank, bad world size, invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation attempted on a closed transport.
class ShutdownError : public Error {
 public:
  using Error::Error;
};

/// Incoming message larger than the registered capacity.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// wait_all timed out; message carries the unmatched handles.
class DeadlockError : public Error {
 public:
  using Error::Error;
};

/// Request or ticket access made in the wrong phase.
class PhaseViolationError : public Error {
 public:
  using Error::Error;
};

class DuplicateRequestError : public Error {
 public:
  using Error::Error;
};

/// Ticket read before the step's Wait completed.
class BufferNotReadyError : public Error {
 public:
  using Error::Error;
};

/// Arrived sub-message has no registered ticket.
class RoutingError : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

/// NaN or non-finite value detected in the lattice.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CompositingError : public Error {
 public:
  using Error::Error;
};

/// Coalesced and direct runs produced different simulation fields.
class TransparencyError : public Error {
 public:
  using Error::Error;
};

class UndefinedRatioError : public Error {
 public:
  using Error::Error;
};

class HaloFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace coalesce

#endif  // COALESCE_ERRORS_HPP
