#pragma once

#include <stdexcept>
#include <string>

namespace novelrd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or usage: missing API key, unknown config id, bad manifest.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A corpus file could not be ingested. `path()` names the offending file.
class IngestError : public Error {
 public:
  IngestError(std::string path, const std::string& what)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Structured payload failed validation. `key()` names the missing/invalid field
/// when one is identifiable; `payload()` carries the raw text.
class SchemaError : public Error {
 public:
  SchemaError(std::string key, std::string payload, const std::string& what)
      : Error(what), key_(std::move(key)), payload_(std::move(payload)) {}
  const std::string& key() const noexcept { return key_; }
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string key_;
  std::string payload_;
};

/// A pipeline stage failed for one unit of work (a chapter, an expansion).
class StageError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine was asked for an undefined quantity (zero vector,
/// zero variance, |r| >= 1, infeasible allocation).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace novelrd
