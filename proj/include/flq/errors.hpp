#pragma once

#include <stdexcept>
#include <string>

namespace flq {

// Bad user input: malformed config, precondition violations at the CLI
// boundary. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A computation would exceed a configured resource cap (atom counts,
// scale caps, cell counts). Maps to exit code 3.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// A search exhausted its node budget. Carries the best bound found so far
// so callers can report it or restart with a larger budget. Exit code 4.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, double best_upper_bound, unsigned long long nodes)
        : std::runtime_error(what), best_upper_bound(best_upper_bound), nodes_visited(nodes) {}
    double best_upper_bound;
    unsigned long long nodes_visited;
};

} // namespace flq
