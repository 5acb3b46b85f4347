#pragma once

#include <stdexcept>
#include <string>

namespace loopalloc {

// Bad configuration or I/O (CLI exit code 2).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A scenario (or a single loop) cannot meet its stability or timing
// requirements at the given budget (CLI exit code 1).
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solve failed to converge within its cap (CLI exit code 3).
class convergence_error : public std::runtime_error {
public:
    explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// A numeric cross-check inside the library disagreed with itself.
class internal_error : public std::logic_error {
public:
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace loopalloc
