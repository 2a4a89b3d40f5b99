#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ctrlmv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown when inputs violate a documented precondition (shapes, ranges).
struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a computation degenerates numerically (singular matrix,
// ill-conditioned factorization, overflow mid-iteration).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on malformed or inconsistent external data (CSV panels, configs).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a metric denominator vanishes; callers report a sentinel.
struct metric_undefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_input(msg);
}

inline constexpr double kNotRecovered = -1.0;  // recovery-time sentinel

}  // namespace ctrlmv
