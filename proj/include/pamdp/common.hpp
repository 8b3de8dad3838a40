#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace pamdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown when inputs violate a documented precondition (dimension
/// mismatch, malformed distribution, bad parameter range).
struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a numerical routine cannot certify its result
/// (iteration cap, lost feasibility, disconnected search graph).
struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when instance generation exhausts its retry budget.
struct GenerationFailure : std::runtime_error {
    explicit GenerationFailure(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown by the exact planner when no action is inducible at some (h, s).
struct PlanningInfeasible : std::runtime_error {
    PlanningInfeasible(int h, int s)
        : std::runtime_error("no inducible action at step " + std::to_string(h) +
                             ", state " + std::to_string(s)),
          step(h), state(s) {}
    int step;
    int state;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

}  // namespace pamdp
