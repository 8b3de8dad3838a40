#include "pamdp/rl.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "pamdp/lp.hpp"
#include "pamdp/planner.hpp"

namespace pamdp::rl {

using lp::LinearProgram;
using lp::LpStatus;
using lp::Relation;

EpisodeStats EpisodeStats::make(int S, int A, int H, long T, double delta) {
    EpisodeStats st;
    st.S = S;
    st.A = A;
    st.H = H;
    st.T = T;
    st.delta = delta;
    st.visits.assign(H, Mat::Zero(S, A));
    st.outcomes.assign(H, Mat::Zero(S * A, S));
    st.reward_sum.assign(H, Mat::Zero(S, A));
    return st;
}

double EpisodeStats::r_hat(int h, int s, int a) const {
    double cnt = visits[h](s, a);
    return cnt > 0 ? reward_sum[h](s, a) / cnt : 0.0;
}

Vec EpisodeStats::p_hat(int h, int s, int a) const {
    double cnt = visits[h](s, a);
    if (cnt <= 0) return Vec::Constant(S, 1.0 / S);
    return outcomes[h].row(s * A + a).transpose() / cnt;
}

double EpisodeStats::log_term() const {
    return std::log(static_cast<double>(S) * A * H * std::max<long>(T, 2) / delta);
}

double EpisodeStats::bonus(int h, int s, int a) const {
    double cnt = visits[h](s, a);
    if (cnt <= 0) return kInf;
    return (2.0 * H + 2.0) * std::sqrt(log_term() / cnt);
}

EpisodeStats update_stats(EpisodeStats stats, const Trajectory& traj) {
    require(static_cast<int>(traj.size()) == stats.H, "trajectory length mismatch");
    for (int h = 0; h < stats.H; ++h) {
        const auto& step = traj[h];
        stats.visits[h](step.s, step.a) += 1.0;
        stats.outcomes[h](step.s * stats.A + step.a, step.s_next) += 1.0;
        stats.reward_sum[h](step.s, step.a) += step.reward;
    }
    return stats;
}

MuEstimate MuEstimate::empty(int S, int A, int H) {
    MuEstimate mu;
    mu.S = S;
    mu.A = A;
    mu.H = H;
    mu.entries.assign(static_cast<size_t>(H) * S * A * A, Vec::Zero(S));
    mu.resolved.assign(mu.entries.size(), 0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) mu.resolved[mu.index(h, s, a, a)] = 1;
    return mu;
}

MuEstimate MuEstimate::exact(const Pamdp& env) {
    MuEstimate mu = empty(env.S, env.A, env.H);
    mu.eps_mu = 0.0;
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int a = 0; a < env.A; ++a)
                for (int ap = a + 1; ap < env.A; ++ap)
                    mu.set_pair(h, s, a, ap,
                                (env.trans(h, s, a) - env.trans(h, s, ap)).transpose());
    return mu;
}

void MuEstimate::set_pair(int h, int s, int a, int ap, const Vec& diff) {
    entries[index(h, s, a, ap)] = diff;
    entries[index(h, s, ap, a)] = -diff;
    resolved[index(h, s, a, ap)] = 1;
    resolved[index(h, s, ap, a)] = 1;
}

ImprovedP improved_P(const EpisodeStats& stats, const MuEstimate& mu) {
    ImprovedP out;
    out.p.assign(stats.H, Mat::Zero(stats.S * stats.A, stats.S));
    out.error.assign(stats.H, Mat::Constant(stats.S, stats.A, kInf));
    out.defined.assign(stats.H, Mat::Zero(stats.S, stats.A));

    for (int h = 0; h < stats.H; ++h) {
        for (int s = 0; s < stats.S; ++s) {
            double n_state = stats.n_state(h, s);
            for (int a = 0; a < stats.A; ++a) {
                if (n_state <= 0) continue;
                bool all_resolved = true;
                Vec pooled = Vec::Zero(stats.S);
                for (int ap = 0; ap < stats.A; ++ap) {
                    double w = stats.n(h, s, ap) / n_state;
                    if (w == 0.0) continue;
                    if (!mu.is_resolved(h, s, a, ap)) {
                        all_resolved = false;
                        break;
                    }
                    pooled += w * (stats.p_hat(h, s, ap) + mu.mu(h, s, a, ap));
                }
                if (!all_resolved) continue;
                out.p[h].row(s * stats.A + a) = pooled.transpose();
                out.error[h](s, a) =
                    2.0 * std::sqrt(stats.log_term() / n_state) + mu.eps_mu;
                out.defined[h](s, a) = 1.0;
            }
        }
    }
    return out;
}

Estimates Estimates::exact(const Pamdp& env) {
    Estimates est;
    est.S = env.S;
    est.A = env.A;
    est.H = env.H;
    est.eta = env.eta;
    est.value_cap = env.H;
    est.p0 = env.p0;
    est.P = env.P;
    est.r = env.r;
    est.bonus.assign(env.H, Mat::Zero(env.S, env.A));
    est.cost = env.c;
    return est;
}

Vec margin_schedule(int H, double eps_mu, double eps_p, double lambda_s) {
    require(lambda_s > 0.0, "margin schedule needs lambda_s > 0");
    Vec m(H);
    m[H - 1] = eps_mu;
    for (int h = 0; h < H - 1; ++h) {
        double esc = eps_mu * std::pow(lambda_s, h + 1 - H) +
                     eps_p * std::pow(lambda_s, h + 2 - H);
        m[h] = std::min<double>(H, esc);
    }
    return m;
}

namespace {

struct StepLp {
    Vec payment;
    double exp_pay;
};

// least estimated payment inducing a at (h, s) against the margined
// difference constraints
std::optional<StepLp> robust_step(const Estimates& est, const MuEstimate& mu,
                                  int h, int s, int a, const Vec& u_next,
                                  double margin) {
    Vec obj = est.trans(h, s, a).transpose();
    LinearProgram prog = LinearProgram::minimize(obj);
    prog.upper.setConstant(est.eta);
    for (int ap = 0; ap < est.A; ++ap) {
        if (ap == a) continue;
        // fall back to the estimate difference when the pair is unresolved
        Vec diff = mu.is_resolved(h, s, a, ap)
                       ? mu.mu(h, s, a, ap)
                       : Vec((est.trans(h, s, a) - est.trans(h, s, ap)).transpose());
        double rhs =
            est.cost[h](s, a) - est.cost[h](s, ap) + margin - diff.dot(u_next);
        prog.add(diff, Relation::Ge, rhs);
    }
    auto sol = lp::solve_lp(prog);
    if (sol.status != LpStatus::Optimal) return std::nullopt;
    return StepLp{sol.x, sol.objective_value};
}

}  // namespace

SolverOutput solver_vi(const Estimates& est, const MuEstimate& mu,
                       const Vec& margins) {
    require(margins.size() == est.H, "one margin per step");
    SolverOutput out;
    out.margins = margins;
    out.x = ContractPolicy::zeros(est.H, est.S);
    out.pi.steps.assign(est.H, Eigen::VectorXi::Zero(est.S));
    out.v_hat = ValueTables::zero(est.H, est.S);
    out.u_hat = ValueTables::zero(est.H, est.S);
    out.q_hat.assign(est.H, Mat::Constant(est.S, est.A, -kInf));
    const double cap = est.value_cap > 0 ? est.value_cap : est.H;

    for (int h = est.H - 1; h >= 0; --h) {
        Vec v_next = out.v_hat.rows.row(h + 1).transpose();
        Vec u_next = out.u_hat.rows.row(h + 1).transpose();
        for (int s = 0; s < est.S; ++s) {
            int best_a = -1;
            double best_q = -kInf;
            Vec best_x;
            for (int a = 0; a < est.A; ++a) {
                auto step = robust_step(est, mu, h, s, a, u_next, margins[h]);
                if (!step) continue;
                double head = est.r[h](s, a) + est.bonus[h](s, a) +
                              est.trans(h, s, a).dot(v_next);
                double q = head - step->exp_pay;
                out.q_hat[h](s, a) = q;
                if (q > best_q) {
                    best_q = q;
                    best_a = a;
                    best_x = step->payment;
                }
            }
            if (best_a < 0) throw PlanningInfeasible(h, s);
            out.pi.steps[h][s] = best_a;
            out.x.steps[h].row(s) = best_x.transpose();
            // the cap sits on the stored value, not inside the action
            // comparison: clipping both heads to H erases the reward signal
            // whenever the bonuses push them past the cap, and the argmax
            // then degenerates to a least-payment tie-break
            out.v_hat.rows(h, s) = std::min(cap, best_q);
            out.u_hat.rows(h, s) = std::min(
                cap, est.trans(h, s, best_a).dot(best_x + u_next) -
                         est.cost[h](s, best_a));
        }
    }
    return out;
}

namespace {

Mat estimated_visitation(const Estimates& est, const ActionPolicy& pi, const Vec& p0) {
    Mat rho = Mat::Zero(est.H + 1, est.S);
    rho.row(0) = p0.transpose();
    for (int h = 0; h < est.H; ++h)
        for (int s = 0; s < est.S; ++s) {
            double mass = rho(h, s);
            if (mass == 0.0) continue;
            rho.row(h + 1) += mass * est.trans(h, s, pi.action(h, s));
        }
    return rho;
}

// coefficient of the contract variables in U^{x, pi} under the estimates:
// coef[(h*S + s)*S + s'] = rho_h(s) * P_hat(s' | s, pi_h(s))
Vec agent_value_coeffs(const Estimates& est, const ActionPolicy& pi, const Mat& rho) {
    Vec coef = Vec::Zero(static_cast<long>(est.H) * est.S * est.S);
    for (int h = 0; h < est.H; ++h)
        for (int s = 0; s < est.S; ++s) {
            double mass = rho(h, s);
            if (mass == 0.0) continue;
            coef.segment((static_cast<long>(h) * est.S + s) * est.S, est.S) =
                mass * est.trans(h, s, pi.action(h, s)).transpose();
        }
    return coef;
}

double expected_cost(const Estimates& est, const ActionPolicy& pi, const Mat& rho) {
    double c = 0.0;
    for (int h = 0; h < est.H; ++h)
        for (int s = 0; s < est.S; ++s)
            c += rho(h, s) * est.cost[h](s, pi.action(h, s));
    return c;
}

// optimistic reward recursion capped at the horizon
Mat optimistic_reward(const Estimates& est, const ActionPolicy& pi, double cap) {
    Mat table = Mat::Zero(est.H + 1, est.S);
    for (int h = est.H - 1; h >= 0; --h) {
        Vec next = table.row(h + 1).transpose();
        for (int s = 0; s < est.S; ++s) {
            int a = pi.action(h, s);
            double head =
                est.r[h](s, a) + est.bonus[h](s, a) + est.trans(h, s, a).dot(next);
            table(h, s) = std::min(cap, head);
        }
    }
    return table;
}

}  // namespace

SolverOutput solver_lp(const Estimates& est, double margin, long policy_cap) {
    const double total = std::pow(static_cast<double>(est.A), est.S * est.H);
    require(total <= static_cast<double>(policy_cap),
            "policy space exceeds the lp solver cap");
    const long n = static_cast<long>(total);
    const double cap = est.value_cap > 0 ? est.value_cap : est.H;
    require(est.p0.size() == est.S, "estimates need the initial distribution");
    const Vec& p0 = est.p0;

    // enumerate policies once, with their estimated visitation coefficients
    std::vector<ActionPolicy> policies;
    std::vector<Mat> rhos;
    std::vector<Vec> coeffs;
    std::vector<double> costs;
    ActionPolicy pi;
    pi.steps.assign(est.H, Eigen::VectorXi::Zero(est.S));
    for (long idx = 0; idx < n; ++idx) {
        long rem = idx;
        for (int h = 0; h < est.H; ++h)
            for (int s = 0; s < est.S; ++s) {
                pi.steps[h][s] = static_cast<int>(rem % est.A);
                rem /= est.A;
            }
        policies.push_back(pi);
        rhos.push_back(estimated_visitation(est, pi, p0));
        coeffs.push_back(agent_value_coeffs(est, pi, rhos.back()));
        costs.push_back(expected_cost(est, pi, rhos.back()));
    }

    SolverOutput out;
    out.margins = Vec::Constant(est.H, margin);
    double best_v = -kInf;
    long best_idx = -1;
    Vec best_x;
    double best_u = 0.0;

    for (long i = 0; i < n; ++i) {
        LinearProgram prog = LinearProgram::minimize(coeffs[i]);
        prog.upper.setConstant(est.eta);
        for (long j = 0; j < n; ++j) {
            if (j == i) continue;
            // U^{x,pi_i} - U^{x,pi_j} >= margin, costs moved to the rhs
            prog.add(coeffs[i] - coeffs[j], Relation::Ge,
                     margin + costs[i] - costs[j]);
        }
        auto sol = lp::solve_lp(prog);
        if (sol.status != LpStatus::Optimal) continue;  // policy not inducible

        double u_val = sol.objective_value - costs[i];
        double r_opt = p0.dot(optimistic_reward(est, policies[i], cap).row(0));
        double v_val = r_opt - costs[i] - u_val;
        if (v_val > best_v) {
            best_v = v_val;
            best_idx = i;
            best_x = sol.x;
            best_u = u_val;
        }
    }
    if (best_idx < 0) throw PlanningInfeasible(-1, -1);

    out.pi = policies[best_idx];
    out.x = ContractPolicy::zeros(est.H, est.S);
    for (int h = 0; h < est.H; ++h)
        for (int s = 0; s < est.S; ++s)
            out.x.steps[h].row(s) =
                best_x.segment((static_cast<long>(h) * est.S + s) * est.S, est.S)
                    .transpose();

    // per-state tables under the estimates, capped like the value iteration
    out.u_hat = ValueTables::zero(est.H, est.S);
    out.v_hat = ValueTables::zero(est.H, est.S);
    Mat r_opt_table = optimistic_reward(est, out.pi, cap);
    Mat cost_table = Mat::Zero(est.H + 1, est.S);
    for (int h = est.H - 1; h >= 0; --h) {
        Vec u_next = out.u_hat.rows.row(h + 1).transpose();
        Vec c_next = cost_table.row(h + 1).transpose();
        for (int s = 0; s < est.S; ++s) {
            int a = out.pi.action(h, s);
            Vec pay = out.x.row(h, s);
            out.u_hat.rows(h, s) =
                std::min(cap, est.trans(h, s, a).dot(pay + u_next) -
                                  est.cost[h](s, a));
            cost_table(h, s) = est.cost[h](s, a) + est.trans(h, s, a).dot(c_next);
        }
    }
    for (int h = 0; h < est.H; ++h)
        for (int s = 0; s < est.S; ++s)
            out.v_hat.rows(h, s) =
                r_opt_table(h, s) - cost_table(h, s) - out.u_hat.rows(h, s);
    out.v_initial = best_v;
    (void)best_u;
    return out;
}

WarmStartResult warm_start_mu(const Pamdp& env, long episodes,
                              const simplex::SearchConfig& proto, double kappa0,
                              Rng& rng, const EpisodeHook& hook) {
    require(kappa0 > 0.0, "warm start needs kappa0 > 0");
    require(!env.iota.empty(), "warm start simulates episodes; call ensure_iota()");
    // beyond the probed step the contract is zero, so the agent continuation
    // must be flat; a zero-cost action per later (h, s) guarantees it
    for (int h = 1; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            require(env.c[h].row(s).minCoeff() <= 1e-9,
                    "warm start needs a zero-cost action at every later step");

    double max_cost = 0.0;
    for (const auto& ch : env.c) max_cost = std::max(max_cost, ch.maxCoeff());
    const double shift = env.H * max_cost / kappa0;

    WarmStartResult res;
    res.feeds = Eigen::MatrixXi::Zero(env.S, env.H);
    res.visits = Eigen::MatrixXi::Zero(env.S, env.H);

    std::vector<std::unique_ptr<simplex::SearchRunner>> runners;
    runners.reserve(static_cast<size_t>(env.S) * env.H);
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s) {
            simplex::SearchConfig cfg = proto;
            cfg.num_actions = env.A;
            cfg.dim = env.S;
            cfg.costs = env.c[h].row(s).transpose();
            runners.push_back(std::make_unique<simplex::SearchRunner>(
                cfg, rng.stream("warm-start", h * env.S + s)));
        }
    auto runner_of = [&](int s, int h) -> simplex::SearchRunner& {
        return *runners[h * env.S + s];
    };

    // a cell that misses this many episodes in a row is declared starved
    // and skipped so an unreachable (s, h) cannot stall the others
    constexpr int kStarveCutoff = 100;
    Eigen::MatrixXi misses = Eigen::MatrixXi::Zero(env.S, env.H);
    Eigen::MatrixXi starved = Eigen::MatrixXi::Zero(env.S, env.H);

    Rng sim = rng.stream("warm-start-episodes");
    for (long t = 0; t < episodes; ++t) {
        // target the least-advanced live subroutine
        int ts = -1, th = -1;
        int best_feeds = INT32_MAX;
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s) {
                if (runner_of(s, h).done() || starved(s, h)) continue;
                if (res.feeds(s, h) < best_feeds) {
                    best_feeds = res.feeds(s, h);
                    ts = s;
                    th = h;
                }
            }
        if (ts < 0) break;

        ContractPolicy x = ContractPolicy::zeros(env.H, env.S);
        Vec probe = runner_of(ts, th).pending();
        x.steps[th].row(ts) = (probe.array() + shift).transpose();

        BestResponse br = agent_best_response(env, x);
        Trajectory traj = simulate_episode(env, x, br.pi, sim);
        ++res.episodes;
        if (hook) hook(x, traj);

        if (traj[th].s == ts) {
            res.visits(ts, th) += 1;
            runner_of(ts, th).feed(traj[th].a);
            res.feeds(ts, th) += 1;
            misses(ts, th) = 0;
        } else if (++misses(ts, th) >= kStarveCutoff) {
            starved(ts, th) = 1;
            std::ostringstream os;
            os << "target (" << ts << "," << th << ") starved after "
               << kStarveCutoff << " consecutive misses";
            res.warnings.push_back(os.str());
        }
    }
    if (!res.complete) {
        bool all_done = true;
        for (const auto& r : runners) all_done = all_done && r->done();
        res.complete = all_done;
    }

    res.mu = MuEstimate::empty(env.S, env.A, env.H);
    double worst_eps = 0.0;
    bool any_unresolved = false;
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s) {
            const auto& runner = runner_of(s, h);
            simplex::DiffEstimate est = runner.recover();
            for (int a = 0; a < env.A; ++a)
                for (int ap = a + 1; ap < env.A; ++ap) {
                    if (!est.resolved(a, ap)) {
                        any_unresolved = true;
                        std::ostringstream os;
                        os << "pair (" << a << "," << ap << ") unresolved at state "
                           << s << ", step " << h;
                        res.warnings.push_back(os.str());
                        continue;
                    }
                    res.mu.set_pair(h, s, a, ap, est.diff(a, ap));
                }
            if (!runner.done()) {
                std::ostringstream os;
                os << "subroutine (" << s << "," << h << ") starved at "
                   << res.feeds(s, h) << " advances";
                res.warnings.push_back(os.str());
            }
        }

    // reported accuracy: the recovery lemma's bound instantiated with the
    // configured constants
    {
        double d = env.S;
        double xi = std::sqrt(std::max(1e-300, proto.c_d * proto.c_d / (d * (d + 1)) -
                                                   d * proto.epsilon * proto.epsilon / 4.0));
        double theta_min = kInf;
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s)
                for (int a = 0; a < env.A; ++a)
                    for (int ap = a + 1; ap < env.A; ++ap)
                        theta_min = std::min(
                            theta_min, std::abs(env.c[h](s, a) - env.c[h](s, ap)));
        if (env.A >= 2 && theta_min > 0)
            worst_eps = 2.0 * (env.A - 1) * std::sqrt(d) * proto.epsilon /
                        (std::pow(xi, d - 1) * (theta_min / proto.scale));
        res.mu.eps_mu = any_unresolved ? kInf : worst_eps;
    }
    return res;
}

RegretTrace contractual_rl(const Pamdp& env, const RlOptions& opt,
                           std::uint64_t seed,
                           std::vector<ActionPolicy>* policy_log,
                           std::vector<ContractPolicy>* contract_log) {
    Pamdp world = env;
    world.validate();
    world.ensure_iota();

    // regret benchmark: the true optimum (enumeration when affordable), so
    // instantaneous regret stays nonnegative even where the bi-level
    // recursion undershoots
    const double v_star = planner::exact_optimal_value(world);

    RegretTrace trace;
    trace.algorithm = opt.solver == RlOptions::Solver::Vi ? "contractual_rl_vi"
                                                          : "contractual_rl_lp";
    trace.seed = seed;
    trace.horizon = opt.T;
    {
        std::ostringstream os;
        os << "{\"T\":" << opt.T << ",\"T1\":" << opt.T1
           << ",\"delta\":" << opt.delta << ",\"solver\":\""
           << (opt.solver == RlOptions::Solver::Vi ? "vi" : "lp") << "\"}";
        trace.params_json = os.str();
    }

    Rng rng(seed);
    EpisodeStats stats =
        EpisodeStats::make(world.S, world.A, world.H, opt.T, opt.delta);
    double cum = 0.0;
    long t = 0;

    auto log_episode = [&](const ContractPolicy& x, const Trajectory& traj) {
        BestResponse br = agent_best_response(world, x);
        double v_x = br.principal.initial(world.p0);
        double inst = v_star - v_x;
        cum += inst;
        double paid = 0.0, got = 0.0;
        for (const auto& st : traj) {
            paid += st.payment;
            got += st.reward;
        }
        trace.rows.push_back({++t, traj[0].a, paid, got, inst, cum});
        stats = update_stats(std::move(stats), traj);
        if (policy_log) policy_log->push_back(br.pi);
        if (contract_log) contract_log->push_back(x);
    };

    long t1 = opt.T1 >= 0
                  ? opt.T1
                  : std::min<long>(opt.T, static_cast<long>(std::ceil(
                                              40.0 * std::log(opt.T + 1.0))));
    simplex::SearchConfig proto;
    proto.epsilon = opt.search_epsilon;
    proto.c_d = opt.search_c_d;
    proto.num_lines = opt.search_lines;
    proto.scale =
        opt.search_scale > 0 ? opt.search_scale : std::max(1, world.A - 1) * world.eta;

    Rng warm_rng = rng.stream("warm");
    WarmStartResult warm =
        warm_start_mu(world, t1, proto, opt.kappa0, warm_rng, log_episode);

    Rng sim = rng.stream("episodes");
    long infeasible_episodes = 0;
    while (t < opt.T) {
        Estimates est;
        est.S = world.S;
        est.A = world.A;
        est.H = world.H;
        est.eta = world.eta;
        est.value_cap = world.H;
        est.p0 = world.p0;
        est.cost = world.c;
        est.bonus.assign(world.H, Mat::Zero(world.S, world.A));
        est.r.assign(world.H, Mat::Zero(world.S, world.A));
        ImprovedP pooled = improved_P(stats, warm.mu);
        est.P.assign(world.H, Mat::Constant(world.S * world.A, world.S, 1.0 / world.S));
        double eps_mu_w =
            std::isfinite(warm.mu.eps_mu) ? std::min(1.0, warm.mu.eps_mu) : 1.0;
        double eps_p = 0.0;
        for (int h = 0; h < world.H; ++h)
            for (int s = 0; s < world.S; ++s) {
                double n_state = stats.n_state(h, s);
                double width = n_state > 0 ? opt.margin_p_scale / std::sqrt(n_state)
                                           : 1.0;
                eps_p = std::max(eps_p, std::min(1.0, width + eps_mu_w));
                for (int a = 0; a < world.A; ++a) {
                    est.r[h](s, a) = stats.r_hat(h, s, a);
                    est.bonus[h](s, a) = std::min<double>(world.H, stats.bonus(h, s, a));
                    if (pooled.defined[h](s, a) > 0)
                        est.P[h].row(s * world.A + a) = pooled.p[h].row(s * world.A + a);
                    else
                        est.P[h].row(s * world.A + a) =
                            stats.p_hat(h, s, a).transpose();
                }
            }

        ContractPolicy executed;
        try {
            SolverOutput sol;
            if (opt.solver == RlOptions::Solver::Vi) {
                Vec margins =
                    margin_schedule(world.H, eps_mu_w, eps_p, opt.lambda_s);
                sol = solver_vi(est, warm.mu, margins);
            } else {
                double margin = world.S * world.H * world.H * eps_mu_w;
                sol = solver_lp(est, margin, opt.lp_policy_cap);
            }
            executed = sol.x;
        } catch (const PlanningInfeasible&) {
            // margins still too wide for any inducible action: play the
            // null contract this episode and keep collecting data
            ++infeasible_episodes;
            executed = ContractPolicy::zeros(world.H, world.S);
        }

        BestResponse br = agent_best_response(world, executed);
        Trajectory traj = simulate_episode(world, executed, br.pi, sim);
        log_episode(executed, traj);
    }
    (void)infeasible_episodes;
    return trace;
}

}  // namespace pamdp::rl
