#include "pamdp/core.hpp"

#include <cmath>

namespace pamdp {

void Pamdp::validate() {
    require(S > 0 && A > 0 && H > 0, "pamdp dimensions must be positive");
    require(eta > 0.0, "payment cap eta must be positive");
    require(static_cast<int>(P.size()) == H && static_cast<int>(r.size()) == H &&
                static_cast<int>(c.size()) == H,
            "pamdp table count must equal the horizon");
    require(p0.size() == S, "initial distribution size mismatch");

    auto fix_row = [&](Eigen::Ref<Vec> row, const char* what) {
        require(row.minCoeff() >= -1e-12, std::string(what) + " has negative entries");
        double sum = row.sum();
        require(std::abs(sum - 1.0) <= 1e-6, std::string(what) + " does not sum to one");
        if (std::abs(sum - 1.0) > 1e-12) row /= sum;
        row = row.cwiseMax(0.0);
    };

    fix_row(p0, "initial distribution");
    for (int h = 0; h < H; ++h) {
        require(P[h].rows() == S * A && P[h].cols() == S, "transition shape mismatch");
        require(r[h].rows() == S && r[h].cols() == A, "reward shape mismatch");
        require(c[h].rows() == S && c[h].cols() == A, "cost shape mismatch");
        for (int i = 0; i < S * A; ++i) {
            Vec row = P[h].row(i).transpose();
            fix_row(row, "transition row");
            P[h].row(i) = row.transpose();
        }
        require(r[h].minCoeff() >= -1e-12 && r[h].maxCoeff() <= 1.0 + 1e-12,
                "rewards must lie in [0, 1]");
        require(c[h].minCoeff() >= -1e-12 && c[h].maxCoeff() <= 1.0 + 1e-12,
                "costs must lie in [0, 1]");
    }
    if (!iota.empty()) {
        require(static_cast<int>(iota.size()) == H, "iota table count mismatch");
        for (int h = 0; h < H; ++h)
            require(iota[h].rows() == S && iota[h].cols() == S, "iota shape mismatch");
    }
}

void Pamdp::ensure_iota() {
    if (!iota.empty()) return;
    iota.assign(H, Mat::Zero(S, S));
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            Mat M(A, S);
            Vec rv(A);
            for (int a = 0; a < A; ++a) {
                M.row(a) = trans(h, s, a);
                rv[a] = r[h](s, a);
            }
            Vec sol = M.completeOrthogonalDecomposition().solve(rv);
            if ((M * sol - rv).lpNorm<Eigen::Infinity>() > 1e-6)
                throw InvalidInput(
                    "no realized-reward table is consistent with r at step " +
                    std::to_string(h) + ", state " + std::to_string(s));
            iota[h].row(s) = sol.transpose();
        }
    }
}

void Pamdp::check_contract(const ContractPolicy& x, bool enforce_cap) const {
    require(x.horizon() == H, "contract policy horizon mismatch");
    for (int h = 0; h < H; ++h) {
        require(x.steps[h].rows() == S && x.steps[h].cols() == S,
                "contract matrix shape mismatch");
        require(x.steps[h].minCoeff() >= -1e-12, "contract has negative payments");
        if (enforce_cap)
            require(x.steps[h].maxCoeff() <= eta + 1e-9,
                    "contract exceeds the payment cap");
    }
}

void Pamdp::check_policy(const ActionPolicy& pi) const {
    require(pi.horizon() == H, "action policy horizon mismatch");
    for (int h = 0; h < H; ++h) {
        require(pi.steps[h].size() == S, "action policy length mismatch");
        require(pi.steps[h].minCoeff() >= 0 && pi.steps[h].maxCoeff() < A,
                "action index out of range");
    }
}

BestResponse agent_best_response(const Pamdp& env, const ContractPolicy& x) {
    env.check_contract(x, false);
    BestResponse out;
    out.pi.steps.assign(env.H, Eigen::VectorXi::Zero(env.S));
    out.agent = ValueTables::zero(env.H, env.S);
    out.principal = ValueTables::zero(env.H, env.S);

    for (int h = env.H - 1; h >= 0; --h) {
        Vec u_next = out.agent.rows.row(h + 1).transpose();
        Vec v_next = out.principal.rows.row(h + 1).transpose();
        for (int s = 0; s < env.S; ++s) {
            Vec pay = x.row(h, s);
            double best_w = -kInf;
            Vec w(env.A);
            for (int a = 0; a < env.A; ++a) {
                w[a] = env.trans(h, s, a).dot(pay + u_next) - env.cost(h, s, a);
                best_w = std::max(best_w, w[a]);
            }
            int pick = -1;
            double pick_v = -kInf;
            for (int a = 0; a < env.A; ++a) {
                if (w[a] < best_w - kTieTol) continue;
                double v = env.reward(h, s, a) + env.trans(h, s, a).dot(v_next - pay);
                if (v > pick_v) {
                    pick_v = v;
                    pick = a;
                }
            }
            out.pi.steps[h][s] = pick;
            out.agent.rows(h, s) = w[pick];
            out.principal.rows(h, s) = pick_v;
        }
    }
    return out;
}

PolicyValues evaluate_values(const Pamdp& env, const ContractPolicy& x,
                             const ActionPolicy& pi) {
    env.check_contract(x, false);
    env.check_policy(pi);
    PolicyValues out{ValueTables::zero(env.H, env.S), ValueTables::zero(env.H, env.S)};
    for (int h = env.H - 1; h >= 0; --h) {
        Vec v_next = out.principal.rows.row(h + 1).transpose();
        Vec u_next = out.agent.rows.row(h + 1).transpose();
        for (int s = 0; s < env.S; ++s) {
            int a = pi.action(h, s);
            Vec pay = x.row(h, s);
            out.principal.rows(h, s) =
                env.reward(h, s, a) + env.trans(h, s, a).dot(v_next - pay);
            out.agent.rows(h, s) =
                env.trans(h, s, a).dot(pay + u_next) - env.cost(h, s, a);
        }
    }
    return out;
}

RewardCost evaluate_reward_cost(const Pamdp& env, const ActionPolicy& pi) {
    env.check_policy(pi);
    RewardCost out{ValueTables::zero(env.H, env.S), ValueTables::zero(env.H, env.S)};
    for (int h = env.H - 1; h >= 0; --h) {
        Vec r_next = out.reward.rows.row(h + 1).transpose();
        Vec c_next = out.cost.rows.row(h + 1).transpose();
        for (int s = 0; s < env.S; ++s) {
            int a = pi.action(h, s);
            out.reward.rows(h, s) = env.reward(h, s, a) + env.trans(h, s, a).dot(r_next);
            out.cost.rows(h, s) = env.cost(h, s, a) + env.trans(h, s, a).dot(c_next);
        }
    }
    return out;
}

VisitationMeasure visitation(const Pamdp& env, const ActionPolicy& pi) {
    env.check_policy(pi);
    VisitationMeasure out{Mat::Zero(env.H + 1, env.S)};
    out.rho.row(0) = env.p0.transpose();
    for (int h = 0; h < env.H; ++h) {
        for (int s = 0; s < env.S; ++s) {
            double mass = out.rho(h, s);
            if (mass == 0.0) continue;
            out.rho.row(h + 1) += mass * env.trans(h, s, pi.action(h, s));
        }
    }
    return out;
}

Trajectory simulate_episode(const Pamdp& env, const ContractPolicy& x,
                            const ActionPolicy& pi, Rng& rng) {
    env.check_contract(x, false);
    env.check_policy(pi);
    require(!env.iota.empty(), "simulate_episode needs iota; call ensure_iota() first");

    Trajectory traj;
    traj.reserve(env.H);
    int s = rng.categorical(env.p0);
    for (int h = 0; h < env.H; ++h) {
        int a = pi.action(h, s);
        Vec row = env.trans(h, s, a).transpose();
        int s_next = rng.categorical(row);
        TrajectoryStep step;
        step.s = s;
        step.a = a;
        step.s_next = s_next;
        step.payment = x.steps[h](s, s_next);
        step.reward = env.iota[h](s, s_next) +
                      rng.truncated_normal(env.reward_noise_sigma);
        traj.push_back(step);
        s = s_next;
    }
    return traj;
}

}  // namespace pamdp
