#include "pamdp/planner.hpp"

#include <cmath>

namespace pamdp::planner {

using lp::LinearProgram;
using lp::LpStatus;
using lp::Relation;

std::optional<LeastPaymentStep> least_payment_step(const Pamdp& env, int h, int s,
                                                   int a, const Vec& u_next) {
    require(h >= 0 && h < env.H && s >= 0 && s < env.S && a >= 0 && a < env.A,
            "least_payment_step index out of range");
    require(u_next.size() == env.S, "u_next length mismatch");

    Vec pa = env.trans(h, s, a).transpose();
    LinearProgram prog = LinearProgram::minimize(pa);
    prog.upper.setConstant(env.eta);
    for (int b = 0; b < env.A; ++b) {
        if (b == a) continue;
        Vec diff = pa - env.trans(h, s, b).transpose();
        double rhs = env.cost(h, s, a) - env.cost(h, s, b) - diff.dot(u_next);
        prog.add(diff, Relation::Ge, rhs);
    }

    lp::LpSolution sol = lp::solve_lp(prog);
    if (sol.status != LpStatus::Optimal) return std::nullopt;

    LeastPaymentStep out;
    out.payment = sol.x;
    out.exp_pay = sol.objective_value;
    out.agent_w = pa.dot(sol.x + u_next) - env.cost(h, s, a);
    return out;
}

PlanResult optimal_contract_policy(const Pamdp& env) {
    PlanResult res;
    res.x_star = ContractPolicy::zeros(env.H, env.S);
    res.pi_star.steps.assign(env.H, Eigen::VectorXi::Zero(env.S));
    res.v_star = ValueTables::zero(env.H, env.S);
    res.u_star = ValueTables::zero(env.H, env.S);
    res.q.assign(env.H, Mat::Constant(env.S, env.A, -kInf));
    res.x_by_action.assign(env.H, std::vector<Vec>(env.S * env.A));

    for (int h = env.H - 1; h >= 0; --h) {
        Vec v_next = res.v_star.rows.row(h + 1).transpose();
        Vec u_next = res.u_star.rows.row(h + 1).transpose();
        for (int s = 0; s < env.S; ++s) {
            int best_a = -1;
            double best_q = -kInf;
            double best_w = 0.0;
            for (int a = 0; a < env.A; ++a) {
                auto step = least_payment_step(env, h, s, a, u_next);
                if (!step) continue;
                double q = env.reward(h, s, a) +
                           env.trans(h, s, a).dot(v_next - step->payment);
                res.q[h](s, a) = q;
                res.x_by_action[h][s * env.A + a] = step->payment;
                if (q > best_q) {
                    best_q = q;
                    best_a = a;
                    best_w = step->agent_w;
                }
            }
            if (best_a < 0) throw PlanningInfeasible(h, s);
            res.pi_star.steps[h][s] = best_a;
            res.x_star.steps[h].row(s) =
                res.x_by_action[h][s * env.A + best_a].transpose();
            res.v_star.rows(h, s) = best_q;
            res.u_star.rows(h, s) = best_w;
        }
    }
    res.v_initial = res.v_star.initial(env.p0);
    res.u_initial = res.u_star.initial(env.p0);
    return res;
}

LeastPaymentResult least_payment_policy(const Pamdp& env, const ActionPolicy& pi) {
    env.check_policy(pi);
    LeastPaymentResult res;
    res.x = ContractPolicy::zeros(env.H, env.S);
    res.u = ValueTables::zero(env.H, env.S);
    res.v = ValueTables::zero(env.H, env.S);
    res.zeta = Mat::Zero(env.H + 1, env.S);

    for (int h = env.H - 1; h >= 0; --h) {
        Vec u_next = res.u.rows.row(h + 1).transpose();
        Vec v_next = res.v.rows.row(h + 1).transpose();
        Vec z_next = res.zeta.row(h + 1).transpose();
        for (int s = 0; s < env.S; ++s) {
            int a = pi.action(h, s);
            auto step = least_payment_step(env, h, s, a, u_next);
            if (!step) {
                res.feasible = false;
                res.fail_h = h;
                res.fail_s = s;
                return res;
            }
            res.x.steps[h].row(s) = step->payment.transpose();
            res.u.rows(h, s) = step->agent_w;
            res.zeta(h, s) = env.trans(h, s, a).dot(step->payment + z_next);
            res.v.rows(h, s) =
                env.reward(h, s, a) + env.trans(h, s, a).dot(v_next - step->payment);
        }
    }
    res.feasible = true;
    res.v_initial = res.v.initial(env.p0);
    res.u_initial = res.u.initial(env.p0);
    return res;
}

double exact_optimal_value(const Pamdp& env, long enumeration_cap) {
    double policies = std::pow(static_cast<double>(env.A), env.S * env.H);
    if (policies <= static_cast<double>(enumeration_cap))
        return brute_force_plan(env, enumeration_cap).v_initial;
    return optimal_contract_policy(env).v_initial;
}

BruteForceResult brute_force_plan(const Pamdp& env, long cap) {
    const int slots = env.S * env.H;
    double total = std::pow(static_cast<double>(env.A), slots);
    require(total <= static_cast<double>(cap),
            "policy space exceeds the brute-force cap");
    const long n = static_cast<long>(total);

    BruteForceResult best;
    best.v_initial = -kInf;
    ActionPolicy pi;
    pi.steps.assign(env.H, Eigen::VectorXi::Zero(env.S));

    for (long idx = 0; idx < n; ++idx) {
        long rem = idx;
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s) {
                pi.steps[h][s] = static_cast<int>(rem % env.A);
                rem /= env.A;
            }
        ++best.policies_tried;
        LeastPaymentResult lpr = least_payment_policy(env, pi);
        if (!lpr.feasible) continue;
        ++best.policies_feasible;
        if (lpr.v_initial > best.v_initial) {
            best.v_initial = lpr.v_initial;
            best.pi = pi;
            best.x = lpr.x;
            best.v = lpr.v;
            best.u = lpr.u;
        }
    }
    if (best.policies_feasible == 0) throw PlanningInfeasible(-1, -1);
    return best;
}

}  // namespace pamdp::planner
