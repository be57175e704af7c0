#pragma once

#include <stdexcept>
#include <string>

namespace corfd {

enum class ErrorCode {
  InvalidArgument = 1,
  Numeric = 2,
  Budget = 3,
  Io = 4,
  MissingTruth = 5,
};

// Every failure the core reports carries one of the codes above so the C
// layer can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace corfd
