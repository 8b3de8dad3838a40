#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pamdp/lp.hpp"
#include "pamdp/rng.hpp"

namespace pamdp::bandit {

/// One-step contract problem: outcome distribution per action, realized
/// reward per outcome, cost per action. The optional regularity fields
/// (inducibility margin, event certificates, preliminary contracts) are
/// filled by the instance generators when certified.
struct BanditInstance {
    Mat P;      // A x S, rows stochastic
    Vec iota;   // realized reward per outcome
    Vec costs;  // per action
    double eta = 1.0;
    double reward_noise_sigma = 0.0;

    double lambda = 0.0;   // inducibility margin, 0 when uncertified
    Mat events;            // A x S event certificates e_a (0/1 entries)
    Mat prelim_contracts;  // A x S, row a induces action a

    int num_actions() const { return static_cast<int>(P.rows()); }
    int num_outcomes() const { return static_cast<int>(P.cols()); }
    double reward(int a) const { return P.row(a).dot(iota); }

    void validate() const;

    /// Agent's best response to a payment vector over outcomes. Ties in
    /// agent utility break toward the principal, then lowest index.
    int respond(const Vec& x) const;

    /// Exact least expected payment inducing `a` within the cap.
    std::optional<double> least_payment(int a) const;

    /// Benchmark profit max_a r(a) - zeta(a) over inducible actions.
    double optimal_profit() const;
};

struct MarginRow {
    int rival;
    Vec diff;
    double rhs;
};

/// Linear contract set for one action: diff . x >= rhs per rival, inside
/// the box [0, eta]^S.
struct MarginContractSet {
    int action = 0;
    double eta = 1.0;
    std::vector<MarginRow> rows;

    bool contains(const Vec& x, double tol = 1e-9) const;
};

/// X^a(margin) assembled from the true instance parameters.
MarginContractSet exact_margin_set(const BanditInstance& inst, int a, double margin);

struct RobustContract {
    Vec x;
    double zeta_hat;
};

/// Minimizes the estimated payment p_hat . x over the set; empty when the
/// set is infeasible within its box.
std::optional<RobustContract> robust_contract(const Vec& p_hat,
                                              const MarginContractSet& set);

struct TraceRow {
    long t;
    int action;
    double payment;
    double reward;
    double inst_regret;
    double cum_regret;
};

struct RegretTrace {
    std::vector<TraceRow> rows;
    std::string algorithm;
    std::string instance_hash;  // filled by the harness when persisted
    std::uint64_t seed = 0;
    long horizon = 0;
    std::string params_json;

    double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

/// Optimistic learner over per-action contract sets: per round it solves
/// the robust contract LPs on empirical estimates and follows the action
/// with the best optimistic profit. Unvisited actions are explored first
/// (round-robin over the opening rounds).
RegretTrace generic_ucb(const BanditInstance& inst,
                        const std::vector<MarginContractSet>& sets, long T,
                        double delta, std::uint64_t seed);

struct CostSearchResult {
    Vec c_hat;
    long rounds = 0;
    Eigen::VectorXi rounds_per_action;
};

/// Direct-incentive cost recovery: the probe pays on the action itself and
/// the agent holds an implicit zero-cost outside option, so bisection on
/// the offer pins each cost to eps/2.
CostSearchResult binary_search_costs(const BanditInstance& inst, double eps);

struct CostDiffResult {
    std::vector<MarginContractSet> sets;  // margin eps/2 around estimates
    Mat d_hat;                            // estimated cost differences
    Eigen::MatrixXi direct;               // 1 where a shared boundary was probed
    long probes = 0;
};

/// Bisects the segment between preliminary contracts of every ordered pair,
/// estimates the cost difference at each discovered boundary, and fills the
/// remaining pairs along shortest hop paths.
CostDiffResult cost_diff_search(const BanditInstance& inst, const Mat& p_hat,
                                double eps,
                                const std::function<int(const Vec&)>& respond);

/// Round-robin exploration with the preliminary contracts, then the
/// boundary search, then commitment to the empirically best action.
RegretTrace explore_then_commit(const BanditInstance& inst, long T, double delta,
                                std::uint64_t seed);

using AlgorithmFactory =
    std::function<RegretTrace(long horizon, std::uint64_t seed)>;

/// Restarts a horizon-aware algorithm with horizons 1, 2, 4, ... and
/// stitches the traces into one anytime trace of length T.
RegretTrace doubling_wrapper(const AlgorithmFactory& factory, long T,
                             std::uint64_t seed);

}  // namespace pamdp::bandit
