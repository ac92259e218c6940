#pragma once

#include <stdexcept>
#include <string>

namespace memoryheat {

// Scenario/configuration problem. `path` points at the offending key
// ("kernel.exp_sum[0][1]" style). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what),
          path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Numerical failure (solver breakdown, NaN) at a given time step.
// Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    NumericError(long step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what),
          step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

} // namespace memoryheat
