#ifndef KGV_ERROR_HPP
#define KGV_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace kgv {

/// Root of every error the engine raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A model service could not answer. The CLI maps these to exit code 3.
class ServiceError : public Error {
 public:
  using Error::Error;
};

// Graph construction.
class DuplicateEntity : public InputError {
 public:
  explicit DuplicateEntity(const std::string& id)
      : InputError("duplicate entity id '" + id + "'") {}
};

class InvalidEntity : public InputError {
 public:
  using InputError::InputError;
};

class UnknownEntity : public InputError {
 public:
  explicit UnknownEntity(const std::string& id)
      : InputError("unknown entity '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class PredicateKindConflict : public InputError {
 public:
  using InputError::InputError;
};

class DuplicateRelation : public InputError {
 public:
  using InputError::InputError;
};

class GraphFrozen : public Error {
 public:
  GraphFrozen() : Error("graph builder already frozen") {}
};

/// Document-level error anchored to a source line (1-based, 0 when unknown).
class SchemaError : public InputError {
 public:
  SchemaError(std::string source, std::size_t line, const std::string& message)
      : InputError(format(source, line, message)),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& message) {
    std::string out = source.empty() ? "<input>" : source;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + message;
  }

  std::string source_;
  std::size_t line_;
};

class ReferentialIntegrityError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// Services.
class ServiceUnavailable : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

class ProtocolError : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

class EmptyGeneration : public ServiceError {
 public:
  EmptyGeneration() : ServiceError("service returned an empty generation") {}
};

class DimensionMismatch : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

/// Replay lookup for a request that the fixture does not contain.
class FixtureMiss : public ServiceError {
 public:
  explicit FixtureMiss(const std::string& key)
      : ServiceError("replay fixture has no entry for request " + key) {}
};

// Matching.
class EmptyGraph : public InputError {
 public:
  EmptyGraph() : InputError("knowledge graph has no entities") {}
};

// Metrics.
class ZeroDenominator : public Error {
 public:
  using Error::Error;
};

class CountOverflow : public Error {
 public:
  using Error::Error;
};

class MissingGold : public InputError {
 public:
  MissingGold() : InputError("entity accuracy requested but no record carries gold annotations") {}
};

// Corpus handling.
class BadRatios : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace kgv

#endif  // KGV_ERROR_HPP
