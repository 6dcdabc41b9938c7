#pragma once

#include <stdexcept>
#include <string>

namespace msuda {

enum class ErrorKind {
  Config,     // bad configuration or precondition at setup time
  Data,       // malformed input files or inconsistent corpora
  Dimension,  // shape mismatch between tensors
  Numeric,    // non-finite values where finite ones are required
  Io,         // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& m) { throw Error(ErrorKind::Config, m); }
[[noreturn]] inline void throw_data(const std::string& m) { throw Error(ErrorKind::Data, m); }
[[noreturn]] inline void throw_dimension(const std::string& m) { throw Error(ErrorKind::Dimension, m); }
[[noreturn]] inline void throw_numeric(const std::string& m) { throw Error(ErrorKind::Numeric, m); }
[[noreturn]] inline void throw_io(const std::string& m) { throw Error(ErrorKind::Io, m); }

// Warnings go to stderr; nothing in the core writes to stdout.
void log_warn(const std::string& msg);

}  // namespace msuda
