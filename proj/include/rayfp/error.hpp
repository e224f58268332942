#pragma once

#include <stdexcept>
#include <string>

namespace rayfp {

enum class Errc {
  invalid_direction,
  invalid_length,
  invalid_count,
  unsupported_scheme,
  out_of_bounds,
  invalid_parameter,
  parse_error,
  schema_error,
  shape_error,
  label_out_of_range,
  empty_dataset,
  io_error,
};

const char* to_string(Errc code) noexcept;

/// Every failure in the library is reported through this exception type.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rayfp
