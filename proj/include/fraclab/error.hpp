#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

enum class ErrorKind { Argument, CapExceeded, Numeric, UnsupportedKind, Io, Mismatch };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return "ArgumentError";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::Numeric: return "NumericError";
    case ErrorKind::UnsupportedKind: return "UnsupportedKind";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Mismatch: return "ReproMismatch";
  }
  return "Error";
}

/// Base of every error raised by the library. The CLI maps `kind()` to an
/// exit code and prints `what()` on a single line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& m) : Error(ErrorKind::Argument, m) {}
};

class CapError : public Error {
 public:
  CapError(const std::string& m, int cap) : Error(ErrorKind::CapExceeded, m), cap_(cap) {}
  int cap() const noexcept { return cap_; }

 private:
  int cap_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorKind::Numeric, m) {}
};

class UnsupportedKindError : public Error {
 public:
  explicit UnsupportedKindError(const std::string& m) : Error(ErrorKind::UnsupportedKind, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

/// A replayed run produced outputs whose digests differ from the manifest.
class MismatchError : public Error {
 public:
  explicit MismatchError(const std::string& m) : Error(ErrorKind::Mismatch, m) {}
};

}  // namespace fraclab
