#pragma once

#include <stdexcept>
#include <string>

namespace rco {

enum class errc {
  invalid_argument,
  invalid_spec,
  shape_mismatch,
  // data ingestion
  bad_magic,
  truncated,
  count_mismatch,
  bad_label,
  bad_format,
  // checkpoint store
  version_mismatch,
  digest_mismatch,
  // configuration / io
  config_invalid,
  missing_input,
  io_failure,
};

enum class error_category { config, data, compute };

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const noexcept { return code_; }
  error_category category() const noexcept;

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

const char* errc_name(errc code);

}  // namespace rco
