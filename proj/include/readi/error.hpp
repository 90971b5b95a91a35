// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace readi {

enum class errc {
  invalid_rank,
  dimension_mismatch,
  invalid_argument,
  invalid_scene,
  undersampled,
  out_of_range,
  bad_magic,
  truncated,
  dtype_mismatch,
  io,
};

inline const char* to_string(errc code) {
  switch (code) {
    case errc::invalid_rank: return "invalid-rank";
    case errc::dimension_mismatch: return "dimension-mismatch";
    case errc::invalid_argument: return "invalid-argument";
    case errc::invalid_scene: return "invalid-scene";
    case errc::undersampled: return "undersampled";
    case errc::out_of_range: return "out-of-range";
    case errc::bad_magic: return "bad-magic";
    case errc::truncated: return "truncated";
    case errc::dtype_mismatch: return "dtype-mismatch";
    case errc::io: return "io";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace readi
