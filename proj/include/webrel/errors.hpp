#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace webrel {

/// Input outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Argument sits on a pole of the Gamma function.
class PoleError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Result not representable (overflow, or precision exhausted).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Order scan hit its ceiling before the requested number of roots was found.
class ScanExhausted : public std::runtime_error {
 public:
  ScanExhausted(const std::string& what, std::vector<double> found)
      : std::runtime_error(what), found_(std::move(found)) {}

  const std::vector<double>& roots_found() const noexcept { return found_; }

 private:
  std::vector<double> found_;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace webrel
