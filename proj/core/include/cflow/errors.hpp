#pragma once

#include <stdexcept>
#include <string>

namespace cflow {

/// Typed failure causes for every operation in the library. Callers that
/// need to branch on the cause catch cflow::Error and switch on code().
enum class Errc {
  // .flo parsing
  bad_magic,
  truncated,
  bad_dims,
  non_finite,
  // box queries against a flow grid
  empty_region,
  // track ingestion
  parse_error,
  order_error,
  missing_field,
  // regression and score windows
  degenerate_abscissa,
  insufficient_window,
  unsorted_window,
  missing_current,
  out_of_window,
  // box hypothesis
  too_few_detections,
  bad_target,
  // scenario generation
  spec_error,
  // statistics
  degenerate_variance,
  // filesystem
  io_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cflow
