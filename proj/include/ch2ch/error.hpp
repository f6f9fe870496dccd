#pragma once

#include <stdexcept>
#include <string>

namespace ch2ch {

// Error classes map onto the CLI exit codes: validation=1, io=2, backend=3,
// internal=4.
enum class ErrorKind { Validation, Io, Backend, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::Validation: return 1;
      case ErrorKind::Io: return 2;
      case ErrorKind::Backend: return 3;
      case ErrorKind::Internal: return 4;
    }
    return 4;
  }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

}  // namespace ch2ch
