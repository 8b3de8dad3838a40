#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pamdp/bandit.hpp"
#include "pamdp/core.hpp"
#include "pamdp/simplex_search.hpp"

namespace pamdp::rl {

using bandit::RegretTrace;

/// Visit counts, empirical means and optimism bonuses accumulated over
/// episodes. The bonus is (2H+2) sqrt(ln(SAHT/delta) / N) and infinite at
/// unvisited (h, s, a).
struct EpisodeStats {
    int S = 0, A = 0, H = 0;
    long T = 1;
    double delta = 0.1;
    std::vector<Mat> visits;      // H entries, S x A
    std::vector<Mat> outcomes;    // H entries, (S*A) x S
    std::vector<Mat> reward_sum;  // H entries, S x A

    static EpisodeStats make(int S, int A, int H, long T, double delta);

    double n(int h, int s, int a) const { return visits[h](s, a); }
    double n_state(int h, int s) const { return visits[h].row(s).sum(); }
    double r_hat(int h, int s, int a) const;
    Vec p_hat(int h, int s, int a) const;  // uniform until the first visit
    double log_term() const;
    double bonus(int h, int s, int a) const;
};

EpisodeStats update_stats(EpisodeStats stats, const Trajectory& traj);

/// Estimated outcome-distribution differences mu_h(s, a, a'), antisymmetric
/// with zero coordinate sums; pairs the search could not pin stay
/// unresolved.
struct MuEstimate {
    int S = 0, A = 0, H = 0;
    std::vector<Vec> entries;      // (((h*S)+s)*A+a)*A+a' -> Vec(S)
    std::vector<char> resolved;
    double eps_mu = kInf;          // reported accuracy of resolved entries

    static MuEstimate empty(int S, int A, int H);
    static MuEstimate exact(const Pamdp& env);

    int index(int h, int s, int a, int ap) const {
        return ((h * S + s) * A + a) * A + ap;
    }
    const Vec& mu(int h, int s, int a, int ap) const {
        return entries[index(h, s, a, ap)];
    }
    bool is_resolved(int h, int s, int a, int ap) const {
        return resolved[index(h, s, a, ap)] != 0;
    }
    /// Stores the pair and its negation.
    void set_pair(int h, int s, int a, int ap, const Vec& diff);
};

/// Pooled transition estimator using all actions' samples at (h, s) plus
/// the estimated differences; undefined until the state is visited.
struct ImprovedP {
    std::vector<Mat> p;          // H entries, (S*A) x S
    std::vector<Mat> error;      // H entries, S x A
    std::vector<Mat> defined;    // H entries, S x A of 0/1
};

ImprovedP improved_P(const EpisodeStats& stats, const MuEstimate& mu);

/// Parameter bundle the solvers plan against.
struct Estimates {
    int S = 0, A = 0, H = 0;
    double eta = 1.0;
    double value_cap = 0.0;    // H
    Vec p0;                    // initial distribution, part of the model
    std::vector<Mat> P;        // (S*A) x S per step
    std::vector<Mat> r;        // S x A per step
    std::vector<Mat> bonus;    // S x A per step (zeros for exact planning)
    std::vector<Mat> cost;     // S x A per step, known to the learner

    Eigen::Block<const Mat, 1> trans(int h, int s, int a) const {
        return P[h].row(s * A + a);
    }

    /// Exact parameters with zero bonuses (degeneracy checks).
    static Estimates exact(const Pamdp& env);
};

struct SolverOutput {
    ContractPolicy x;
    ActionPolicy pi;
    ValueTables v_hat;
    ValueTables u_hat;
    std::vector<Mat> q_hat;  // H entries, S x A, -inf when excluded
    Vec margins;             // robustness margin used per step
    double v_initial = 0.0;
};

/// Margin schedule: the last step gets eps_mu, earlier steps the geometric
/// escalation min{H, eps_mu lam^(h+1-H) + eps_p lam^(h+2-H)} (0-based h).
Vec margin_schedule(int H, double eps_mu, double eps_p, double lambda_s);

/// Backward induction with margined incentive constraints and optimism
/// bonuses; actions whose constraint LP is infeasible are excluded. Throws
/// PlanningInfeasible when a state has no inducible action left.
SolverOutput solver_vi(const Estimates& est, const MuEstimate& mu,
                       const Vec& margins);

/// Policy-enumeration solver: per policy the least estimated agent value
/// subject to dominating every rival policy by the margin, then the
/// optimistic argmax. Exponential in S*H; refuses above the cap.
SolverOutput solver_lp(const Estimates& est, double margin,
                       long policy_cap = 100000);

struct WarmStartResult {
    MuEstimate mu;
    long episodes = 0;
    Eigen::MatrixXi feeds;   // S x H successful subroutine advances
    Eigen::MatrixXi visits;  // S x H trajectory visits of the target
    std::vector<std::string> warnings;
    bool complete = false;  // every subroutine finished its line budget
};

using EpisodeHook =
    std::function<void(const ContractPolicy&, const Trajectory&)>;

/// Round-robin warm start: one boundary-search subroutine per (s, h), each
/// episode targeting the least-advanced one with the step contract shifted
/// by H max(c) / kappa0 to draw the agent through the target state.
WarmStartResult warm_start_mu(const Pamdp& env, long episodes,
                              const simplex::SearchConfig& proto, double kappa0,
                              Rng& rng, const EpisodeHook& hook = nullptr);

struct RlOptions {
    long T = 1000;
    long T1 = -1;  // warm-start budget; -1 picks ceil(40 log T)
    double delta = 0.1;
    enum class Solver { Vi, Lp } solver = Solver::Vi;
    double lambda_s = 0.2;  // margin schedule constant
    double kappa0 = 0.1;    // warm-start shift constant
    long lp_policy_cap = 4096;
    double search_epsilon = 1e-5;
    double search_c_d = 0.1;
    long search_lines = 3;
    double search_scale = 0.0;  // 0 picks (A-1) * eta
    // scale of the transition-error term fed to the margin schedule:
    // eps' = margin_p_scale / sqrt(N_h(s)) + eps_mu. The high-probability
    // width would put 2 sqrt(ln(SAHT/delta)) here; margins track the typical
    // error instead, trading rare inducement misses for tighter payments.
    double margin_p_scale = 1.0;
};

/// Full learner: warm start for the difference estimates, then per episode
/// the chosen robust solver on the pooled estimates. Regret rows hold the
/// exact per-episode shortfall V* - V^{x_t} computed on the true instance.
/// The optional logs collect the per-episode induced policy and executed
/// contract for offline verification.
RegretTrace contractual_rl(const Pamdp& env, const RlOptions& opt,
                           std::uint64_t seed,
                           std::vector<ActionPolicy>* policy_log = nullptr,
                           std::vector<ContractPolicy>* contract_log = nullptr);

}  // namespace pamdp::rl
