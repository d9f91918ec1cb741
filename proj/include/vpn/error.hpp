#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpn {

/// Classifies every failure the library can raise. Callers switch on the
/// code; the message is for humans.
enum class ErrorCode {
  parameter,
  modality,
  range,
  short_input,
  shape,
  format,
  corruption,
  degenerate_group,
  data,
  insufficient_samples,
  empty_input,
  integrity,
  lookup,
  empty_query,
  length,
  alignment,
  configuration,
  io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::modality: return "modality";
    case ErrorCode::range: return "range";
    case ErrorCode::short_input: return "short_input";
    case ErrorCode::shape: return "shape";
    case ErrorCode::format: return "format";
    case ErrorCode::corruption: return "corruption";
    case ErrorCode::degenerate_group: return "degenerate_group";
    case ErrorCode::data: return "data";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::lookup: return "lookup";
    case ErrorCode::empty_query: return "empty_query";
    case ErrorCode::length: return "length";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace vpn
