#pragma once

#include <stdexcept>
#include <string>

namespace percobound {

/// Base class for all library errors.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument, malformed input, or a query on a dead vertex.
/// CLI maps this to exit code 1.
struct parameter_error : error {
  explicit parameter_error(const std::string& what) : error(what) {}
};

/// Query touched an unknown or removed vertex.
struct dead_vertex_error : parameter_error {
  explicit dead_vertex_error(const std::string& what) : parameter_error(what) {}
};

/// An operation would need vertices beyond the stored truncation.
/// CLI maps this to exit code 2.
struct truncation_error : error {
  explicit truncation_error(const std::string& what) : error(what) {}
};

/// Graph file could not be parsed; message carries the line number.
struct parse_error : parameter_error {
  explicit parse_error(const std::string& what) : parameter_error(what) {}
};

/// Exact enumeration was requested but the interior exceeds the cap.
struct interior_too_large : parameter_error {
  explicit interior_too_large(const std::string& what) : parameter_error(what) {}
};

}  // namespace percobound
