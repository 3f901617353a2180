#pragma once

#include <stdexcept>
#include <string>

namespace elslab {

/// Thrown when an algorithm cannot reach its accuracy or convergence
/// contract (divergence where convergence was required, bracket collapse,
/// step-size collapse, ...). Distinct from std::invalid_argument, which is
/// reserved for precondition violations detectable from the inputs alone.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace elslab
