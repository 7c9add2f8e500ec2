#pragma once

#include <stdexcept>
#include <string>

namespace mgcn {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller (bad shapes,
/// mismatched base points, out-of-range indices, invalid hyperparameters).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// log_p(q) was requested for q in (or numerically at) the cut locus of p.
class CutLocusError : public Error {
 public:
  explicit CutLocusError(const std::string& what, int from = -1, int to = -1, int channel = -1)
      : Error(what), from_(from), to_(to), channel_(channel) {}

  int from() const { return from_; }
  int to() const { return to_; }
  int channel() const { return channel_; }

 private:
  int from_;
  int to_;
  int channel_;
};

/// An iterative procedure (Frechet mean, stable-graph construction) did not
/// reach its tolerance within the iteration budget.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// A file did not match the expected schema. The message names the JSON path.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgcn
