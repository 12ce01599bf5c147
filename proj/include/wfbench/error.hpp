#pragma once

#include <stdexcept>
#include <string>

namespace wfbench {

// Input/schema/invariant violations (CLI exit code 1).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures of a pipeline stage after inputs validated (CLI exit code 2).
struct PipelineError : std::runtime_error {
    explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wfbench
