#include "rco/errors.hpp"

namespace rco {

error_category error::category() const noexcept {
  switch (code_) {
    case errc::config_invalid:
    case errc::invalid_spec:
    case errc::invalid_argument:
      return error_category::config;
    case errc::bad_magic:
    case errc::truncated:
    case errc::count_mismatch:
    case errc::bad_label:
    case errc::bad_format:
    case errc::version_mismatch:
    case errc::digest_mismatch:
    case errc::missing_input:
    case errc::io_failure:
      return error_category::data;
    case errc::shape_mismatch:
      return error_category::compute;
  }
  return error_category::compute;
}

const char* errc_name(errc code) {
  switch (code) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::invalid_spec: return "invalid_spec";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::bad_magic: return "bad_magic";
    case errc::truncated: return "truncated";
    case errc::count_mismatch: return "count_mismatch";
    case errc::bad_label: return "bad_label";
    case errc::bad_format: return "bad_format";
    case errc::version_mismatch: return "version_mismatch";
    case errc::digest_mismatch: return "digest_mismatch";
    case errc::config_invalid: return "config_invalid";
    case errc::missing_input: return "missing_input";
    case errc::io_failure: return "io_failure";
  }
  return "unknown";
}

}  // namespace rco
