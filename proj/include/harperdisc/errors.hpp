#ifndef HARPERDISC_ERRORS_HPP
#define HARPERDISC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace harperdisc {

/// Base of every failure raised by the library. The CLI maps these onto exit
/// codes: validation problems (DomainError, NotCoprime, ParityError,
/// DecompositionError) exit 2, the numeric ones exit 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class NoBracket : public Error {
 public:
  using Error::Error;
};

class NotCoprime : public Error {
 public:
  using Error::Error;
};

class PrecisionTooLow : public Error {
 public:
  using Error::Error;
};

class ParityError : public Error {
 public:
  using Error::Error;
};

class DecompositionError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class EdgeNotFound : public Error {
 public:
  using Error::Error;
};

class ClusteringAmbiguous : public Error {
 public:
  using Error::Error;
};

/// True for errors that indicate bad input rather than a numeric failure.
inline bool is_validation_error(const Error& e) {
  return dynamic_cast<const DomainError*>(&e) != nullptr ||
         dynamic_cast<const NotCoprime*>(&e) != nullptr ||
         dynamic_cast<const ParityError*>(&e) != nullptr ||
         dynamic_cast<const DecompositionError*>(&e) != nullptr;
}

}  // namespace harperdisc

#endif  // HARPERDISC_ERRORS_HPP
