#pragma once

#include <stdexcept>
#include <string>

namespace prescreen {

/// Exception carrying a module-qualified code such as "core.NoMatch".
///
/// Every recoverable failure in the library is raised as an Error; callers
/// that need to branch on the failure kind compare `code()`.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

}  // namespace prescreen
