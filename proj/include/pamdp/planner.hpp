#pragma once

#include <optional>
#include <vector>

#include "pamdp/core.hpp"
#include "pamdp/lp.hpp"

namespace pamdp::planner {

struct LeastPaymentStep {
    Vec payment;       // x over next states, the LP minimizer
    double agent_w;    // W_h(s, a; x) given the continuation U
    double exp_pay;    // P_h(s, a) . x
};

/// Least expected payment making action `a` weakly optimal for the agent at
/// (h, s), given the agent continuation values `u_next`. Empty when the
/// action cannot be induced within the payment cap.
std::optional<LeastPaymentStep> least_payment_step(const Pamdp& env, int h, int s,
                                                   int a, const Vec& u_next);

struct PlanResult {
    ContractPolicy x_star;
    ActionPolicy pi_star;
    ValueTables v_star;
    ValueTables u_star;
    std::vector<Mat> q;                    // H tables S x A, -inf if not inducible
    std::vector<std::vector<Vec>> x_by_action;  // [h][s*A + a], empty if not inducible
    double v_initial = 0.0;
    double u_initial = 0.0;
};

/// Exact optimal contract policy by bi-level backward induction: per (h, s)
/// the least-payment contract for every inducible action, then the action
/// maximizing the principal's Q value. Throws PlanningInfeasible when no
/// action is inducible somewhere.
PlanResult optimal_contract_policy(const Pamdp& env);

struct LeastPaymentResult {
    bool feasible = false;
    int fail_h = -1;
    int fail_s = -1;
    ContractPolicy x;
    ValueTables u;
    ValueTables v;
    Mat zeta;  // (H+1) x S expected total transfer
    double v_initial = 0.0;
    double u_initial = 0.0;
};

/// Cheapest contract policy that makes `pi` the agent's best response,
/// with the per-step value recursion evaluated alongside.
LeastPaymentResult least_payment_policy(const Pamdp& env, const ActionPolicy& pi);

struct BruteForceResult {
    ActionPolicy pi;
    ContractPolicy x;
    ValueTables v;
    ValueTables u;
    double v_initial = 0.0;
    long policies_tried = 0;
    long policies_feasible = 0;
};

/// Exhaustive maximization of V over all A^(S*H) deterministic policies via
/// least_payment_policy. Test oracle; refuses above `cap` policies.
BruteForceResult brute_force_plan(const Pamdp& env, long cap = 100000);

/// The principal's true optimal value. The bi-level recursion can sit
/// strictly below the enumeration bound (a later-step action that is
/// locally worse for the principal may raise the agent's continuation and
/// relax earlier incentive constraints by more than it costs), so this
/// prefers the enumeration whenever the policy space fits under the cap.
double exact_optimal_value(const Pamdp& env, long enumeration_cap = 100000);

}  // namespace pamdp::planner
