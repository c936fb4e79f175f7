#pragma once

#include <stdexcept>
#include <string>

namespace rmd {

enum class ErrorCode {
  invalid_input,
  degenerate_model,
  under_identified,
  convergence_failure,
  estimation_failure,
  filter_degeneracy,
  invalid_state,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace rmd
