#pragma once

#include <stdexcept>
#include <string>

namespace flocklab {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FLOCKLAB_ERROR(Name)                                        \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

FLOCKLAB_ERROR(InvalidArgument);
FLOCKLAB_ERROR(UnresolvedKernel);
FLOCKLAB_ERROR(DomainMismatch);
FLOCKLAB_ERROR(VacuumRatio);
FLOCKLAB_ERROR(CFLViolation);
FLOCKLAB_ERROR(MassLossExceeded);
FLOCKLAB_ERROR(NegativeDensity);
FLOCKLAB_ERROR(NonFiniteState);
FLOCKLAB_ERROR(ParticleOutsideDomain);
FLOCKLAB_ERROR(InsufficientSnapshots);

#undef FLOCKLAB_ERROR

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string key, std::string reason)
      : Error("ValidationError", key + ": " + reason), key_(std::move(key)), reason_(std::move(reason)) {}
  const std::string& key() const noexcept { return key_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string key_;
  std::string reason_;
};

class UnknownKey : public Error {
 public:
  UnknownKey(std::string key, int line)
      : Error("UnknownKey", "line " + std::to_string(line) + ": unknown key '" + key + "'"),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace flocklab
