#pragma once

#include <stdexcept>
#include <string>

namespace darboux {

/// Bad user input: malformed config, parameters outside the documented range.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine could not meet its contract (step-size underflow,
/// singular matrix, failed positivity certificate, ...).  Carries the module
/// name so front ends can emit tagged diagnostics.
class numerical_error : public std::runtime_error {
public:
    numerical_error(std::string module, const std::string& what)
        : std::runtime_error("[" + module + "] " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

} // namespace darboux
