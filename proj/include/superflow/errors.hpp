#pragma once

#include <stdexcept>
#include <string>

namespace superflow {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DiscretizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParameterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExplosionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StatisticalPowerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TestFunctionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// an experiment hypothesis (sign of lambda_c, product-criticality, ...) fails;
// carries the violated hypothesis by name
struct RegimeError : std::runtime_error {
    explicit RegimeError(const std::string& hypothesis_name, const std::string& detail = "")
        : std::runtime_error("hypothesis violated: " + hypothesis_name +
                             (detail.empty() ? "" : " (" + detail + ")")),
          hypothesis(hypothesis_name) {}
    std::string hypothesis;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace superflow
