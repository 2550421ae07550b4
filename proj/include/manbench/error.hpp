#pragma once

#include <stdexcept>
#include <string>

namespace manbench {

// Base of every error the harness throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string question_id, std::string field, const std::string& what)
      : Error("schema error in question '" + question_id + "' field '" + field + "': " + what),
        question_id_(std::move(question_id)),
        field_(std::move(field)) {}

  const std::string& question_id() const { return question_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string question_id_;
  std::string field_;
};

class UnknownTask : public Error {
 public:
  explicit UnknownTask(const std::string& task) : Error("unknown task: " + task) {}
};

class BackendError : public Error {
 public:
  enum class Kind { transport, http_status, malformed_response };

  BackendError(Kind kind, const std::string& what, int http_status = 0)
      : Error(what), kind_(kind), http_status_(http_status) {}

  Kind kind() const { return kind_; }
  int http_status() const { return http_status_; }

  // Transport failures, 429 and 5xx are worth another attempt.
  bool retryable() const {
    if (kind_ == Kind::transport) return true;
    if (kind_ == Kind::http_status) return http_status_ == 429 || http_status_ >= 500;
    return false;
  }

 private:
  Kind kind_;
  int http_status_;
};

class ScriptExhausted : public Error {
 public:
  using Error::Error;
};

class DistractorUnresolved : public Error {
 public:
  using Error::Error;
};

class InvalidGroupSize : public Error {
 public:
  using Error::Error;
};

class ProtocolOrderError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class EmptySet : public Error {
 public:
  using Error::Error;
};

class EmptyBaselineCorrect : public Error {
 public:
  using Error::Error;
};

class EligibilityError : public Error {
 public:
  using Error::Error;
};

class RatioUnsatisfiable : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

class MissingBaseline : public Error {
 public:
  using Error::Error;
};

}  // namespace manbench
