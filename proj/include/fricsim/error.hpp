#pragma once

#include <stdexcept>
#include <string>

namespace fricsim {

/// Coarse failure category; the CLI maps each one to a distinct exit code.
enum class ErrorCategory { Config, Io, Mesh, Domain, Solver };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Mesh: return "mesh";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Solver: return "solver";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace fricsim
