#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace brepseq {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kSchema,
  kInvariant,
  kCapacity,
  kGrammar,
  kGeometry,
};

/// Base error for every failure raised by the core library. The code maps
/// one-to-one onto the C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a token sequence leaves the grammar. `position` is the index of
/// the offending token (or the sequence length when input ran out).
class GrammarError : public Error {
 public:
  GrammarError(std::size_t position, std::vector<int> expected, const std::string& what)
      : Error(ErrorCode::kGrammar, what), position_(position), expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<int>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<int> expected_;
};

/// Process-wide warning sink. Defaults to stderr; the C API lets callers
/// silence or redirect it.
using WarningHandler = void (*)(const char* message, void* user_data);
void set_warning_handler(WarningHandler handler, void* user_data);
void warn(const std::string& message);

}  // namespace brepseq
