#pragma once

#include <stdexcept>
#include <string>

namespace ooc {

// Violated precondition or broken invariant: caller passed something the
// callee's contract forbids. Not used for recoverable conditions.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Inconsistent runtime state discovered mid-operation (e.g. an environment
// stepped after termination).
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or mismatched artifact on disk: dataset blobs, checkpoints,
// configs whose manifest does not match their payload.
class LoadError : public std::runtime_error {
public:
    explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

// Sampling produced an unusable plan (NaN/Inf in the denoised trajectory).
// Carries the diffusion step index at which the problem was detected.
class PlanningError : public std::runtime_error {
public:
    PlanningError(const std::string& what, int step_index)
        : std::runtime_error(what + " (diffusion step " + std::to_string(step_index) + ")"),
          step(step_index) {}
    int step;
};

}  // namespace ooc
