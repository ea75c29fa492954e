#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldinfo {

/// Invalid input to a library operation (bad shape, out-of-range parameter).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exhaustive search or enumeration would exceed its configured budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A labeled sequence has no consistent hypothesis in the class.
class NotRealizableError : public std::runtime_error {
 public:
  NotRealizableError(std::size_t prefix_length, const std::string& what)
      : std::runtime_error(what + " (violating prefix length " +
                           std::to_string(prefix_length) + ")"),
        prefix_length_(prefix_length) {}

  /// Length of the shortest prefix that is already non-realizable.
  std::size_t prefix_length() const noexcept { return prefix_length_; }

 private:
  std::size_t prefix_length_;
};

}  // namespace ldinfo
