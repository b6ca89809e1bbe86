#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnbench {

enum class ErrorKind {
  unknown_key,
  schema_version,
  malformed_record,
  unknown_template,
  missing_parameter,
  unknown_opcode,
  malformed_immediate,
  duplicate_label,
  undefined_branch_target,
  unbalanced_braces,
  missing_rendering,
  transport_failure,
  timeout,
  http_status,
  unknown_sample_id,
  empty_matrix,
  unknown_category,
  malformed_reference,
  split_too_small,
  invalid_argument,
  io,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the library surfaces as this exception. `line` is 1-based
// and 0 when the error is not tied to an input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, int line = 0);

  ErrorKind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  // HTTP status for ErrorKind::http_status, 0 otherwise.
  int status() const noexcept { return status_; }

  static Error http(int status, const std::string& body);

 private:
  ErrorKind kind_;
  int line_;
  int status_ = 0;
};

}  // namespace vulnbench
