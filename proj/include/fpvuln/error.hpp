#pragma once

#include <stdexcept>
#include <string>

namespace fpvuln {

// Every error thrown by the library derives from Error; the CLI maps the
// category string onto its single-line "error[<category>]: ..." output.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

struct SizeError : Error {
  explicit SizeError(const std::string& w) : Error("size", w) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape", w) {}
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& w) : Error("protocol", w) {}
};

struct LookupError : Error {
  explicit LookupError(const std::string& w) : Error("lookup", w) {}
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& w) : Error("insufficient-data", w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error("format", w) {}
};

} // namespace fpvuln
