#pragma once

#include <stdexcept>
#include <string>

namespace a3fr {

// Malformed or inconsistent input files (scenes, poses, traces).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (resolutions, sigmas, band edges).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace a3fr
