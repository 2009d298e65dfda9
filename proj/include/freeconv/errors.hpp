#pragma once

#include <stdexcept>
#include <string>

namespace freeconv {

// Bad caller input (wrong range, malformed spec, unsorted data).
class argument_error : public std::invalid_argument {
 public:
  explicit argument_error(const std::string& what) : std::invalid_argument(what) {}
};

// Evaluation requested where the object is not defined (inside a support,
// at an atom, degenerate transform).
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

// Iterative procedure failed: divergence, unstable extrapolation, missing
// bracket, singular linearization.  `kind` carries a stable tag the callers
// and tests can match on.
class solver_error : public std::runtime_error {
 public:
  solver_error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

}  // namespace freeconv
