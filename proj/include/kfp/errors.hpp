#pragma once

#include <stdexcept>
#include <string>

namespace kfp {

// Exit-code classes used by the CLI: precondition/config problems map to 2,
// numerical failures (singular systems, lost accuracy, solver breakdown) to 1.

struct precondition_error : std::runtime_error {
    explicit precondition_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct singularity_error : numerical_error {
    explicit singularity_error(const std::string& msg) : numerical_error(msg) {}
};

struct accuracy_error : numerical_error {
    explicit accuracy_error(const std::string& msg) : numerical_error(msg) {}
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const precondition_error*>(&e)) return 2;
    return 1;
}

} // namespace kfp
