#pragma once

#include <stdexcept>
#include <string>

namespace forceagg {

/// Malformed input: bad labels, masses out of range, inconsistent files.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An exhaustive reference computation refused an instance above its size bound.
class GuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure inside one pipeline step; `stage()` names the step (1..7) and
/// `cause()` the kind of the original error.
class StageError : public std::runtime_error {
public:
    enum class Cause { validation, guard, other };

    StageError(int stage, const std::string& what, Cause cause = Cause::other)
        : std::runtime_error("step" + std::to_string(stage) + ": " + what), stage_(stage), cause_(cause) {}

    int stage() const noexcept { return stage_; }
    Cause cause() const noexcept { return cause_; }

private:
    int stage_;
    Cause cause_;
};

} // namespace forceagg
