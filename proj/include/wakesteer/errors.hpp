#pragma once

#include <stdexcept>
#include <string>

namespace wakesteer {

// Bad user-facing configuration (files, CLI arguments, inconsistent settings).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Linear-algebra breakdowns that survive jitter escalation and similar.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace wakesteer
