#pragma once

#include <vector>

#include "pamdp/common.hpp"

namespace pamdp::lp {

enum class Relation { Ge, Le, Eq };

struct Constraint {
    Vec row;
    Relation rel;
    double rhs;
};

/// Dense linear program: minimize objective . x subject to row constraints
/// and per-variable box bounds. Every variable needs at least one finite
/// bound; callers box genuinely free variables with known safe ranges.
struct LinearProgram {
    Vec objective;
    std::vector<Constraint> constraints;
    Vec lower;
    Vec upper;

    static LinearProgram minimize(const Vec& objective) {
        LinearProgram p;
        p.objective = objective;
        p.lower = Vec::Zero(objective.size());
        p.upper = Vec::Constant(objective.size(), kInf);
        return p;
    }

    void add(const Vec& row, Relation rel, double rhs) {
        constraints.push_back({row, rel, rhs});
    }

    int num_vars() const { return static_cast<int>(objective.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double objective_value = 0.0;
    long iterations = 0;
};

struct LpLimits {
    long max_iterations = 50000;
    double feas_tol = 1e-8;
    double opt_tol = 1e-9;
    double pivot_tol = 1e-10;
};

/// Thrown when the pivot count exceeds the cap; carries the best feasible
/// point reached so far (phase-2 iterate), if any.
struct LpIterationLimit : NumericalFailure {
    LpIterationLimit(Vec best, double obj, bool feasible)
        : NumericalFailure("lp solver exceeded its iteration cap"),
          best_x(std::move(best)), best_objective(obj), best_feasible(feasible) {}
    Vec best_x;
    double best_objective;
    bool best_feasible;
};

/// Bounded-variable primal simplex, two phases, dense tableau. Entering
/// variable by Dantzig rule with a permanent switch to Bland's rule after a
/// stall; ratio-test ties broken by lowest variable index.
LpSolution solve_lp(const LinearProgram& lp, const LpLimits& limits = {});

}  // namespace pamdp::lp
