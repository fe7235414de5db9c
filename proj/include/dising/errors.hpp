#pragma once

#include <stdexcept>
#include <string>

namespace dising {

/// An exact oracle was asked to enumerate more states than its cap allows.
class size_error : public std::runtime_error {
public:
    explicit size_error(const std::string& what) : std::runtime_error(what) {}
};

/// A run would exceed a configured resource cap (grid cells, profile space).
class resource_error : public std::runtime_error {
public:
    resource_error(const std::string& what, double demanded)
        : std::runtime_error(what), demanded_(demanded) {}
    double demanded() const { return demanded_; }

private:
    double demanded_;
};

/// The convex solver failed to close its certificate gap within the iteration cap.
class accuracy_error : public std::runtime_error {
public:
    explicit accuracy_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed instance file; carries the 1-based line number of the offending line.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// A postcondition the algorithm guarantees was observed to fail.
class internal_error : public std::logic_error {
public:
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

} // namespace dising
