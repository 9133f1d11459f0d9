#pragma once

#include <stdexcept>
#include <string>

namespace rld {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorCategory { Usage = 2, Config = 3, Data = 4, Solver = 5, Model = 6 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

  const char* category_name() const noexcept {
    switch (category_) {
      case ErrorCategory::Usage: return "usage";
      case ErrorCategory::Config: return "config";
      case ErrorCategory::Data: return "data";
      case ErrorCategory::Solver: return "solver";
      case ErrorCategory::Model: return "model";
    }
    return "unknown";
  }

 private:
  ErrorCategory category_;
};

struct ModelError : Error {
  explicit ModelError(const std::string& what) : Error(ErrorCategory::Model, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& what) : Error(ErrorCategory::Solver, what) {}
};

}  // namespace rld
