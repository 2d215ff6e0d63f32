#pragma once

#include <stdexcept>
#include <string>

namespace nf {

// Exit codes of the command-line tool map onto these categories.
enum class ExitCode : int { ok = 0, usage = 2, data = 3, numerical = 4 };

class Error : public std::runtime_error {
  public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

  private:
    ExitCode code_;
};

/// Invalid argument or malformed request.
class InvalidInput : public Error {
  public:
    explicit InvalidInput(const std::string& what) : Error(ExitCode::usage, what) {}
};

/// Missing or corrupt file, inconsistent dataset.
class DataError : public Error {
  public:
    explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

/// Non-finite values, divergence, failed gradient check.
class NumericalError : public Error {
  public:
    explicit NumericalError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

}  // namespace nf
