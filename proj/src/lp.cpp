#include "pamdp/lp.hpp"

#include <algorithm>
#include <cmath>

namespace pamdp::lp {

namespace {

enum class VarState { Basic, AtLower, AtUpper };

struct Tableau {
    // columns: [0, n) structural, [n, n+m) slacks, [n+m, ...) artificials
    Mat cols;       // m x total
    Vec rhs;        // m
    Vec lo, hi;     // total
    Vec cost;       // total (phase-dependent)
    std::vector<VarState> state;
    std::vector<int> basis;  // variable index per row
    int total = 0;
    int m = 0;
    bool leaving_hits_upper = false;
};

double bound_value(const Tableau& t, int j) {
    return t.state[j] == VarState::AtUpper ? t.hi[j] : t.lo[j];
}

Vec basic_values(const Tableau& t, const Eigen::FullPivLU<Mat>& lu) {
    Vec r = t.rhs;
    for (int j = 0; j < t.total; ++j) {
        if (t.state[j] == VarState::Basic) continue;
        double v = bound_value(t, j);
        if (v != 0.0) r -= t.cols.col(j) * v;
    }
    return lu.solve(r);
}

struct PivotResult {
    bool optimal = false;
    bool unbounded = false;
};

// One simplex pass over the current cost vector. Mutates the tableau basis
// until no eligible entering column remains or the iterate is unbounded.
PivotResult run_simplex(Tableau& t, const LpLimits& lim, long& iterations,
                        bool phase_two, Vec* feasible_snapshot) {
    const int m = t.m;
    bool bland = false;
    long stall = 0;
    double last_obj = kInf;

    while (true) {
        if (iterations++ > lim.max_iterations) {
            if (phase_two && feasible_snapshot != nullptr) {
                double obj = 0.0;
                for (int j = 0; j < t.total; ++j)
                    obj += t.cost[j] * (*feasible_snapshot)[j];
                throw LpIterationLimit(*feasible_snapshot, obj, true);
            }
            throw LpIterationLimit(Vec(), 0.0, false);
        }

        Mat B(m, m);
        for (int i = 0; i < m; ++i) B.col(i) = t.cols.col(t.basis[i]);
        Eigen::FullPivLU<Mat> lu(B);
        if (!lu.isInvertible())
            throw NumericalFailure("simplex basis matrix became singular");

        Vec xb = basic_values(t, lu);
        if (phase_two && feasible_snapshot != nullptr) {
            feasible_snapshot->setZero(t.total);
            for (int j = 0; j < t.total; ++j)
                if (t.state[j] != VarState::Basic)
                    (*feasible_snapshot)[j] = bound_value(t, j);
            for (int i = 0; i < m; ++i) (*feasible_snapshot)[t.basis[i]] = xb[i];
        }

        Vec cb(m);
        for (int i = 0; i < m; ++i) cb[i] = t.cost[t.basis[i]];
        Vec y = lu.transpose().solve(cb);

        double obj = cb.dot(xb);
        for (int j = 0; j < t.total; ++j)
            if (t.state[j] != VarState::Basic) obj += t.cost[j] * bound_value(t, j);
        if (obj < last_obj - 1e-12) {
            last_obj = obj;
            stall = 0;
        } else if (++stall > 64) {
            bland = true;
        }

        // entering column
        int enter = -1;
        double best = 0.0;
        for (int j = 0; j < t.total; ++j) {
            if (t.state[j] == VarState::Basic) continue;
            if (t.lo[j] == t.hi[j]) continue;  // fixed
            double z = t.cost[j] - y.dot(t.cols.col(j));
            bool eligible = (t.state[j] == VarState::AtLower && z < -lim.opt_tol) ||
                            (t.state[j] == VarState::AtUpper && z > lim.opt_tol);
            if (!eligible) continue;
            if (bland) {
                enter = j;
                break;
            }
            if (std::abs(z) > best) {
                best = std::abs(z);
                enter = j;
            }
        }
        if (enter < 0) return {true, false};

        double dir = t.state[enter] == VarState::AtLower ? 1.0 : -1.0;
        Vec d = lu.solve(t.cols.col(enter));

        // ratio test: smallest step, ties to the lowest variable index
        double step = kInf;
        int leave_pos = -1;     // basis row position, -1 means bound flip
        int leave_var = enter;  // tie-break key
        double span = t.hi[enter] - t.lo[enter];
        if (std::isfinite(span)) step = span;

        for (int i = 0; i < m; ++i) {
            double rate = -dir * d[i];  // change of basic i per unit step
            int v = t.basis[i];
            double cand = kInf;
            bool to_upper = false;
            if (rate < -lim.pivot_tol && std::isfinite(t.lo[v])) {
                cand = (xb[i] - t.lo[v]) / (-rate);
            } else if (rate > lim.pivot_tol && std::isfinite(t.hi[v])) {
                cand = (t.hi[v] - xb[i]) / rate;
                to_upper = true;
            } else {
                continue;
            }
            if (cand < 0.0) cand = 0.0;
            if (cand < step - 1e-12 ||
                (cand < step + 1e-12 && v < leave_var)) {
                step = cand;
                leave_pos = i;
                leave_var = v;
                t.leaving_hits_upper = to_upper;
            }
        }

        if (!std::isfinite(step)) return {false, true};

        if (leave_pos < 0) {
            // bound flip, basis unchanged
            t.state[enter] = t.state[enter] == VarState::AtLower ? VarState::AtUpper
                                                                 : VarState::AtLower;
            continue;
        }

        int out = t.basis[leave_pos];
        t.state[out] = t.leaving_hits_upper ? VarState::AtUpper : VarState::AtLower;
        t.state[enter] = VarState::Basic;
        t.basis[leave_pos] = enter;
    }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpLimits& lim) {
    const int n = lp.num_vars();
    require(n > 0, "lp has no variables");
    require(lp.lower.size() == n && lp.upper.size() == n, "lp bound size mismatch");
    for (int j = 0; j < n; ++j) {
        require(lp.lower[j] <= lp.upper[j] + 1e-15, "lp has lower > upper");
        require(std::isfinite(lp.lower[j]) || std::isfinite(lp.upper[j]),
                "variable needs at least one finite bound");
    }
    for (const auto& c : lp.constraints)
        require(c.row.size() == n, "lp constraint dimension mismatch");

    LpSolution sol;
    sol.iterations = 0;

    // normalize rows to unit inf-norm; drop vacuous rows, catch trivial
    // infeasibility of (near-)zero rows
    std::vector<Constraint> rows;
    rows.reserve(lp.constraints.size());
    for (const auto& c : lp.constraints) {
        double scale = c.row.lpNorm<Eigen::Infinity>();
        if (scale <= 1e-12) {
            bool bad = (c.rel == Relation::Ge && c.rhs > lim.feas_tol) ||
                       (c.rel == Relation::Le && c.rhs < -lim.feas_tol) ||
                       (c.rel == Relation::Eq && std::abs(c.rhs) > lim.feas_tol);
            if (bad) {
                sol.status = LpStatus::Infeasible;
                return sol;
            }
            continue;
        }
        rows.push_back({c.row / scale, c.rel, c.rhs / scale});
    }

    const int m = static_cast<int>(rows.size());

    if (m == 0) {
        sol.x = Vec(n);
        for (int j = 0; j < n; ++j) {
            double c = lp.objective[j];
            double at;
            if (c > 0.0)
                at = lp.lower[j];
            else if (c < 0.0)
                at = lp.upper[j];
            else
                at = std::isfinite(lp.lower[j]) ? lp.lower[j] : lp.upper[j];
            if (!std::isfinite(at)) {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
            sol.x[j] = at;
        }
        sol.status = LpStatus::Optimal;
        sol.objective_value = lp.objective.dot(sol.x);
        return sol;
    }

    Tableau t;
    t.m = m;
    t.total = n + m;  // artificials appended below as needed
    Mat cols = Mat::Zero(m, n + 2 * m);
    Vec lo(n + 2 * m), hi(n + 2 * m);
    t.rhs = Vec(m);
    t.state.assign(n + 2 * m, VarState::AtLower);
    t.basis.assign(m, -1);

    for (int j = 0; j < n; ++j) {
        lo[j] = lp.lower[j];
        hi[j] = lp.upper[j];
    }
    for (int i = 0; i < m; ++i) {
        cols.block(i, 0, 1, n) = rows[i].row.transpose();
        t.rhs[i] = rows[i].rhs;
        int sl = n + i;
        cols(i, sl) = 1.0;
        switch (rows[i].rel) {
            case Relation::Le: lo[sl] = 0.0; hi[sl] = kInf; break;
            case Relation::Ge: lo[sl] = -kInf; hi[sl] = 0.0; break;
            case Relation::Eq: lo[sl] = 0.0; hi[sl] = 0.0; break;
        }
    }

    // start structurals at a finite bound, slacks absorb the residue
    for (int j = 0; j < n; ++j)
        t.state[j] = std::isfinite(lo[j]) ? VarState::AtLower : VarState::AtUpper;

    int n_art = 0;
    std::vector<int> art_of_row(m, -1);
    Vec start = Vec::Zero(n);
    for (int j = 0; j < n; ++j)
        start[j] = t.state[j] == VarState::AtLower ? lo[j] : hi[j];
    for (int i = 0; i < m; ++i) {
        int sl = n + i;
        double resid = t.rhs[i] - rows[i].row.dot(start);
        if (resid >= lo[sl] - lim.feas_tol && resid <= hi[sl] + lim.feas_tol) {
            t.state[sl] = VarState::Basic;
            t.basis[i] = sl;
        } else {
            double clamped = std::clamp(resid, lo[sl], hi[sl]);
            t.state[sl] = clamped == lo[sl] ? VarState::AtLower : VarState::AtUpper;
            int aj = n + m + n_art++;
            double gap = resid - clamped;
            cols(i, aj) = gap > 0 ? 1.0 : -1.0;
            lo[aj] = 0.0;
            hi[aj] = kInf;
            t.state[aj] = VarState::Basic;
            t.basis[i] = aj;
            art_of_row[i] = aj;
        }
    }

    t.total = n + m + n_art;
    t.cols = cols.leftCols(t.total);
    t.lo = lo.head(t.total);
    t.hi = hi.head(t.total);
    t.state.resize(t.total);

    if (n_art > 0) {
        t.cost = Vec::Zero(t.total);
        t.cost.tail(n_art).setOnes();
        PivotResult p1 = run_simplex(t, lim, sol.iterations, false, nullptr);
        (void)p1;  // phase 1 objective is bounded below by zero

        Mat B(m, m);
        for (int i = 0; i < m; ++i) B.col(i) = t.cols.col(t.basis[i]);
        Eigen::FullPivLU<Mat> lu(B);
        Vec xb = basic_values(t, lu);
        double infeas = 0.0;
        for (int i = 0; i < m; ++i)
            if (t.basis[i] >= n + m) infeas += std::abs(xb[i]);
        for (int j = n + m; j < t.total; ++j)
            if (t.state[j] == VarState::AtUpper) infeas += std::abs(bound_value(t, j));
        if (infeas > lim.feas_tol * 10) {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        // pin artificials at zero for phase 2
        for (int j = n + m; j < t.total; ++j) {
            t.lo[j] = 0.0;
            t.hi[j] = 0.0;
            if (t.state[j] != VarState::Basic) t.state[j] = VarState::AtLower;
        }
    }

    t.cost = Vec::Zero(t.total);
    t.cost.head(n) = lp.objective;
    Vec snapshot;
    PivotResult p2 = run_simplex(t, lim, sol.iterations, true, &snapshot);
    if (p2.unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    Mat B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = t.cols.col(t.basis[i]);
    Eigen::FullPivLU<Mat> lu(B);
    Vec xb = basic_values(t, lu);
    sol.x = Vec(n);
    for (int j = 0; j < n; ++j)
        sol.x[j] = t.state[j] == VarState::Basic ? 0.0 : bound_value(t, j);
    for (int i = 0; i < m; ++i)
        if (t.basis[i] < n) sol.x[t.basis[i]] = xb[i];

    // verify the claimed optimum is primal feasible
    for (int j = 0; j < n; ++j) {
        if (sol.x[j] < lp.lower[j] - lim.feas_tol || sol.x[j] > lp.upper[j] + lim.feas_tol)
            throw NumericalFailure("lp solution violates a variable bound");
        sol.x[j] = std::clamp(sol.x[j], lp.lower[j], lp.upper[j]);
    }
    for (const auto& c : rows) {
        double v = c.row.dot(sol.x);
        bool ok = (c.rel == Relation::Ge && v >= c.rhs - lim.feas_tol) ||
                  (c.rel == Relation::Le && v <= c.rhs + lim.feas_tol) ||
                  (c.rel == Relation::Eq && std::abs(v - c.rhs) <= lim.feas_tol);
        if (!ok) throw NumericalFailure("lp solution violates a constraint");
    }

    sol.status = LpStatus::Optimal;
    sol.objective_value = lp.objective.dot(sol.x);
    return sol;
}

}  // namespace pamdp::lp
