#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gamc {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be processed: empty sets, shape mismatches, labels out of range.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerically degenerate input (all-zero frame, isolated graph node, single-class fit).
class DegenerateError : public DataError {
 public:
  using DataError::DataError;
};

// Malformed on-disk content. `kind()` distinguishes the failure.
class FormatError : public DataError {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, label_out_of_range, corrupt };

  FormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class VersionError : public FormatError {
 public:
  VersionError(std::uint32_t expected, std::uint32_t found, const std::string& what_prefix)
      : FormatError(Kind::version_mismatch,
                    what_prefix + ": unsupported format version " + std::to_string(found) +
                        " (expected " + std::to_string(expected) + ")"),
        expected_(expected),
        found_(found) {}

  std::uint32_t expected() const noexcept { return expected_; }
  std::uint32_t found() const noexcept { return found_; }

 private:
  std::uint32_t expected_;
  std::uint32_t found_;
};

}  // namespace gamc
