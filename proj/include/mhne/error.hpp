#pragma once

#include <stdexcept>
#include <string>

namespace mhne {

enum class ErrorKind {
  InvalidArgument,  // bad parameter, out-of-range index, failed precondition
  NotFound,         // missing input file
  Format,           // malformed file contents
  Numeric,          // non-finite value or divergence
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace mhne
