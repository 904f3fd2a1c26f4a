#pragma once

#include <stdexcept>
#include <string>

namespace ardprof {

// Malformed files, bad flags, inconsistent inputs. CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model preconditions that the data cannot satisfy (rank-deficient known
// profiles, dimension mismatches between fitted objects). CLI exit code 3.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IdentifiabilityError : public ModelError {
 public:
  using ModelError::ModelError;
};

// A kernel was called outside its parameter domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Mean tie count collapsed to zero: an all-zero profile column.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ardprof
