#pragma once

#include "pamdp/model.hpp"
#include "pamdp/rng.hpp"

namespace pamdp {

/// Agent-side tie tolerance: actions within this of the best agent value
/// count as tied and are settled in the principal's favor.
inline constexpr double kTieTol = 1e-9;

struct BestResponse {
    ActionPolicy pi;
    ValueTables agent;      // U under the returned policy
    ValueTables principal;  // V under the returned policy (used for ties)
};

/// Backward induction over the agent's Bellman equation. Ties in agent
/// value are broken toward the action with the larger principal
/// continuation value, then by lowest action index.
BestResponse agent_best_response(const Pamdp& env, const ContractPolicy& x);

struct PolicyValues {
    ValueTables principal;  // V
    ValueTables agent;      // U
};

/// Evaluates both players' state values under fixed (x, pi).
PolicyValues evaluate_values(const Pamdp& env, const ContractPolicy& x,
                             const ActionPolicy& pi);

struct RewardCost {
    ValueTables reward;  // R, contract-independent
    ValueTables cost;    // C, contract-independent
};

RewardCost evaluate_reward_cost(const Pamdp& env, const ActionPolicy& pi);

VisitationMeasure visitation(const Pamdp& env, const ActionPolicy& pi);

/// Samples one episode under (x, pi): initial state from P0, transitions
/// from the kernel, realized rewards iota plus truncated Gaussian noise.
Trajectory simulate_episode(const Pamdp& env, const ContractPolicy& x,
                            const ActionPolicy& pi, Rng& rng);

}  // namespace pamdp
