#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pamdp/instances.hpp"
#include "pamdp/planner.hpp"
#include "pamdp/rl.hpp"
#include "test_util.hpp"

using namespace pamdp;
using namespace pamdp::rl;
namespace hn = pamdp::harness;

namespace {

Pamdp mixing_env(std::uint64_t seed, int S = 2, int A = 2, int H = 2) {
    Rng rng(seed);
    hn::MixingSpec spec;
    spec.S = S;
    spec.A = A;
    spec.H = H;
    spec.kappa = 0.2;
    spec.lambda_s = 0.3;
    spec.theta = 0.15;
    return hn::random_mixing_pamdp(rng, spec);
}

}  // namespace

TEST_CASE("first visit sets the indicator row") {
    EpisodeStats stats = EpisodeStats::make(3, 2, 2, 100, 0.1);
    Trajectory traj(2);
    traj[0] = {1, 0, 2, 0.0, 0.4};
    traj[1] = {2, 1, 0, 0.1, 0.2};
    stats = update_stats(std::move(stats), traj);
    CHECK(stats.n(0, 1, 0) == 1.0);
    Vec p = stats.p_hat(0, 1, 0);
    CHECK(p[2] == doctest::Approx(1.0));
    CHECK(stats.r_hat(1, 2, 1) == doctest::Approx(0.2));
    CHECK(stats.bonus(0, 0, 0) == kInf);  // unvisited
}

TEST_CASE("bonus halves when the count quadruples") {
    EpisodeStats stats = EpisodeStats::make(2, 2, 1, 1000, 0.1);
    Trajectory traj(1);
    traj[0] = {0, 0, 1, 0.0, 0.5};
    for (int i = 0; i < 4; ++i) stats = update_stats(std::move(stats), traj);
    double b4 = stats.bonus(0, 0, 0);
    for (int i = 0; i < 12; ++i) stats = update_stats(std::move(stats), traj);
    double b16 = stats.bonus(0, 0, 0);
    CHECK(b16 == doctest::Approx(0.5 * b4).epsilon(0.05));
}

TEST_CASE("empirical transition coverage follows the stated width") {
    Rng rng(3);
    Pamdp env = mixing_env(11);
    ActionPolicy pi = ActionPolicy::constant(env.H, env.S, 0);
    ContractPolicy zero = ContractPolicy::zeros(env.H, env.S);
    const long T = 300;
    const double delta = 0.1;
    const int reps = 500;
    int covered = 0;
    for (int rep = 0; rep < reps; ++rep) {
        Rng sim(5000 + rep);
        EpisodeStats stats = EpisodeStats::make(env.S, env.A, env.H, T, delta);
        bool ok = true;
        for (long t = 0; t < T && ok; ++t) {
            stats = update_stats(std::move(stats),
                                 simulate_episode(env, zero, pi, sim));
            for (int h = 0; h < env.H && ok; ++h)
                for (int s = 0; s < env.S && ok; ++s) {
                    double n = stats.n(h, s, 0);
                    if (n <= 0) continue;
                    double width = 2.0 * std::sqrt(stats.log_term() / n);
                    Vec diff = stats.p_hat(h, s, 0) - env.trans(h, s, 0).transpose();
                    if (diff.lpNorm<1>() > width) ok = false;
                }
        }
        if (ok) ++covered;
    }
    CHECK(static_cast<double>(covered) / reps >= (1.0 - delta) - 0.02);
}

TEST_CASE("exact mu with a single action reduces to the plain estimator") {
    Rng rng(7);
    Pamdp env = testutil::random_env(rng, 3, 1, 2);
    EpisodeStats stats = EpisodeStats::make(env.S, env.A, env.H, 100, 0.1);
    ActionPolicy pi = ActionPolicy::constant(env.H, env.S, 0);
    ContractPolicy zero = ContractPolicy::zeros(env.H, env.S);
    Rng sim(8);
    for (int t = 0; t < 50; ++t)
        stats = update_stats(std::move(stats), simulate_episode(env, zero, pi, sim));
    MuEstimate mu = MuEstimate::exact(env);
    ImprovedP pooled = improved_P(stats, mu);
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s) {
            if (pooled.defined[h](s, 0) == 0) continue;
            Vec plain = stats.p_hat(h, s, 0);
            CHECK((pooled.p[h].row(s * env.A) - plain.transpose()).cwiseAbs().maxCoeff()
                  < 1e-12);
        }
}

TEST_CASE("pooling helps the rarely visited action") {
    Rng rng(9);
    Pamdp env = mixing_env(13);
    MuEstimate mu = MuEstimate::exact(env);
    int wins = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        Rng sim(7000 + rep);
        EpisodeStats stats = EpisodeStats::make(env.S, env.A, env.H, 100000, 0.1);
        // lopsided visits at (0, 0): many for action 0, few for action 1
        for (int i = 0; i < 2000; ++i) {
            int s_next = sim.categorical(env.trans(0, 0, 0).transpose());
            Trajectory traj(env.H);
            traj[0] = {0, 0, s_next, 0.0, 0.0};
            for (int h = 1; h < env.H; ++h) traj[h] = {s_next, 0, 0, 0.0, 0.0};
            stats = update_stats(std::move(stats), traj);
        }
        for (int i = 0; i < 10; ++i) {
            int s_next = sim.categorical(env.trans(0, 0, 1).transpose());
            Trajectory traj(env.H);
            traj[0] = {0, 1, s_next, 0.0, 0.0};
            for (int h = 1; h < env.H; ++h) traj[h] = {s_next, 0, 0, 0.0, 0.0};
            stats = update_stats(std::move(stats), traj);
        }
        ImprovedP pooled = improved_P(stats, mu);
        Vec truth = env.trans(0, 0, 1).transpose();
        double pooled_err =
            (pooled.p[0].row(0 * env.A + 1).transpose() - truth).lpNorm<1>();
        double plain_err = (stats.p_hat(0, 0, 1) - truth).lpNorm<1>();
        if (pooled_err < plain_err) ++wins;
    }
    CHECK(wins >= 0.9 * reps);
}

TEST_CASE("pooled rows sum to one") {
    Rng rng(15);
    Pamdp env = mixing_env(17);
    EpisodeStats stats = EpisodeStats::make(env.S, env.A, env.H, 1000, 0.1);
    ActionPolicy pi = ActionPolicy::constant(env.H, env.S, 0);
    ContractPolicy zero = ContractPolicy::zeros(env.H, env.S);
    Rng sim(16);
    for (int t = 0; t < 200; ++t)
        stats = update_stats(std::move(stats), simulate_episode(env, zero, pi, sim));
    ImprovedP pooled = improved_P(stats, MuEstimate::exact(env));
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int a = 0; a < env.A; ++a) {
                if (pooled.defined[h](s, a) == 0) continue;
                CHECK(std::abs(pooled.p[h].row(s * env.A + a).sum() - 1.0) < 1e-9);
            }
}

TEST_CASE("mu antisymmetry is preserved") {
    Pamdp env = mixing_env(19);
    MuEstimate mu = MuEstimate::exact(env);
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int a = 0; a < env.A; ++a)
                for (int ap = 0; ap < env.A; ++ap) {
                    CHECK((mu.mu(h, s, a, ap) + mu.mu(h, s, ap, a)).norm() < 1e-15);
                    CHECK(std::abs(mu.mu(h, s, a, ap).sum()) < 1e-9);
                }
}

TEST_CASE("both solvers reproduce the exact planner under exact inputs") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        Pamdp env = testutil::random_env(rng, 2, 2, 2);
        planner::PlanResult plan = planner::optimal_contract_policy(env);
        Estimates est = Estimates::exact(env);
        MuEstimate mu = MuEstimate::exact(env);

        SolverOutput vi = solver_vi(est, mu, Vec::Zero(env.H));
        CHECK(std::abs(vi.v_hat.initial(env.p0) - plan.v_initial) < 1e-7);
        for (int h = 0; h < env.H; ++h)
            CHECK((vi.pi.steps[h] - plan.pi_star.steps[h]).cwiseAbs().maxCoeff() == 0);

        SolverOutput lp = solver_lp(est, 0.0);
        planner::BruteForceResult bf = planner::brute_force_plan(env);
        CHECK(std::abs(lp.v_initial - bf.v_initial) < 1e-7);
    }
}

TEST_CASE("lp solver at horizon one matches the bandit robust contracts") {
    // full-support one-step instance: the policy constraints separate per
    // start state into the bandit margin sets with margin eps / p0(s)
    Pamdp one = hn::example1_pamdp(0.9);
    one.p0 = Vec::Constant(2, 0.5);
    double margin = 0.05;
    Estimates est = Estimates::exact(one);
    SolverOutput lp = solver_lp(est, margin);

    bandit::BanditInstance ex1 = hn::example1_bandit(0.9);
    for (int s = 0; s < 2; ++s) {
        int induced = lp.pi.action(0, s);
        auto rc = bandit::robust_contract(
            ex1.P.row(induced).transpose(),
            bandit::exact_margin_set(ex1, induced, margin / one.p0[s]));
        REQUIRE(rc.has_value());
        CHECK(std::abs(one.trans(0, s, induced).dot(lp.x.row(0, s)) -
                       ex1.P.row(induced).dot(rc->x)) < 1e-6);
    }
}

TEST_CASE("vi solver tolerates perturbed estimates and still induces its policy") {
    Rng rng(25);
    Pamdp env = mixing_env(27);
    double lambda_s = hn::certify_lambda_s(env);
    REQUIRE(lambda_s >= 0.3);

    for (int trial = 0; trial < 10; ++trial) {
        // antisymmetric, sum-zero perturbation of mu within eps_mu
        double eps_mu = 0.02, eps_p = 0.02;
        MuEstimate mu = MuEstimate::exact(env);
        Estimates est = Estimates::exact(env);
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s)
                for (int a = 0; a < env.A; ++a)
                    for (int ap = a + 1; ap < env.A; ++ap) {
                        Vec noise(env.S);
                        for (int i = 0; i < env.S; ++i)
                            noise[i] = rng.uniform(-1.0, 1.0);
                        noise.array() -= noise.mean();
                        double l1 = noise.lpNorm<1>();
                        if (l1 > 0) noise *= eps_mu / l1;
                        mu.set_pair(h, s, a, ap, mu.mu(h, s, a, ap) + noise);
                    }
        mu.eps_mu = eps_mu;
        for (int h = 0; h < env.H; ++h)
            for (int i = 0; i < env.S * env.A; ++i) {
                Vec noise(env.S);
                for (int k = 0; k < env.S; ++k) noise[k] = rng.uniform(-1.0, 1.0);
                noise.array() -= noise.mean();
                double l1 = noise.lpNorm<1>();
                if (l1 > 0) noise *= (eps_p / env.eta) / l1;
                Vec row = est.P[h].row(i).transpose() + noise;
                est.P[h].row(i) = row.transpose();
            }

        Vec margins = margin_schedule(env.H, eps_mu, eps_p, lambda_s);
        SolverOutput sol = solver_vi(est, mu, margins);

        // the contract must induce the solver's policy on the true instance
        BestResponse br = agent_best_response(env, sol.x);
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s)
                CHECK(br.pi.action(h, s) == sol.pi.action(h, s));

        // payment excess within the lemma's instantiated bound
        planner::LeastPaymentResult ref = planner::least_payment_policy(env, sol.pi);
        REQUIRE(ref.feasible);
        PolicyValues realized = evaluate_values(env, sol.x, sol.pi);
        double excess = realized.agent.initial(env.p0) - ref.u_initial;
        double bound = std::min<double>(env.H, margins[0] / lambda_s + eps_p);
        for (int h = 1; h < env.H; ++h)
            bound += std::min<double>(env.H, margins[h] / lambda_s + eps_p);
        CHECK(excess >= -1e-9);
        CHECK(excess <= bound + 1e-7);
    }
}

TEST_CASE("warm start with one step matches a standalone search") {
    // concentrated start: only state 0 is ever probed, the other starves
    Pamdp env = mixing_env(29, 2, 2, 1);
    env.p0 = Vec::Zero(2);
    env.p0[0] = 1.0;
    env.ensure_iota();

    simplex::SearchConfig proto;
    proto.epsilon = 1e-4;
    proto.c_d = 0.1;
    proto.num_lines = 3;
    proto.scale = env.eta;

    Rng rng(31);
    WarmStartResult warm = warm_start_mu(env, 4000, proto, 0.2, rng);
    REQUIRE(warm.mu.is_resolved(0, 0, 0, 1));
    CHECK(!warm.warnings.empty());  // the unreachable state starves

    // standalone run with the same derived stream and the bandit oracle
    simplex::SearchConfig cfg = proto;
    cfg.num_actions = env.A;
    cfg.dim = env.S;
    cfg.costs = env.c[0].row(0).transpose();
    Rng stream = Rng(31).stream("warm-start", 0 * env.S + 0);
    auto oracle = [&](const Vec& x) {
        int best = 0;
        double bv = -kInf;
        for (int a = 0; a < env.A; ++a) {
            double v = env.trans(0, 0, a).dot(x) - env.c[0](0, a);
            if (v > bv + 1e-15) {
                bv = v;
                best = a;
            }
        }
        return best;
    };
    simplex::DiffEstimate direct = run_simplex_search(cfg, oracle, stream);
    REQUIRE(direct.resolved(0, 1));
    CHECK((warm.mu.mu(0, 0, 0, 1) - direct.diff(0, 1)).norm() < 1e-12);
}

TEST_CASE("warm start recovers the differences on a mixing instance") {
    simplex::SearchConfig proto;
    proto.epsilon = 1e-4;
    proto.c_d = 0.1;
    proto.num_lines = 3;
    proto.scale = 1.0;

    int good = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        Pamdp env = mixing_env(500 + seed);
        env.ensure_iota();
        double kappa0 = hn::certify_kappa0(env);
        Rng rng(900 + seed);
        WarmStartResult warm = warm_start_mu(env, 3000, proto, kappa0, rng);
        bool ok = warm.complete;
        double err = 0.0;
        for (int h = 0; h < env.H && ok; ++h)
            for (int s = 0; s < env.S; ++s) {
                if (!warm.mu.is_resolved(h, s, 0, 1)) {
                    ok = false;
                    break;
                }
                Vec truth = (env.trans(h, s, 0) - env.trans(h, s, 1)).transpose();
                err = std::max(err,
                               (warm.mu.mu(h, s, 0, 1) - truth).lpNorm<Eigen::Infinity>());
            }
        if (ok && err <= 0.05) ++good;

        if (seed < 5 && warm.complete) {
            // enough balance across the subroutines (binomial argument)
            double floor = kappa0 * warm.episodes / (2.0 * env.S * env.H);
            CHECK(warm.visits.minCoeff() >= static_cast<int>(floor * 0.5));
        }
    }
    CHECK(good >= 18);
}

TEST_CASE("contractual rl improves and stays nonnegative") {
    Pamdp env = mixing_env(601);
    env.ensure_iota();
    RlOptions opt;
    opt.T = 3000;
    opt.T1 = 150;
    opt.delta = 0.1;
    opt.lambda_s = hn::certify_lambda_s(env);
    opt.kappa0 = hn::certify_kappa0(env);
    RegretTrace trace = contractual_rl(env, opt, 11);
    REQUIRE(trace.rows.size() == 3000);
    for (const auto& row : trace.rows) CHECK(row.inst_regret >= -1e-9);

    double first = 0.0, last = 0.0;
    const long w = 300;
    for (long i = 0; i < w; ++i) first += trace.rows[i].inst_regret;
    for (long i = 3000 - w; i < 3000; ++i) last += trace.rows[i].inst_regret;
    CHECK(last <= 0.5 * first);  // learning is visible at this scale
}

TEST_CASE("all-warm-up run is a linear-regret sanity anchor") {
    Pamdp env = mixing_env(603);
    env.ensure_iota();
    RlOptions opt;
    opt.T = 300;
    opt.T1 = 300;
    opt.kappa0 = hn::certify_kappa0(env);
    opt.lambda_s = 0.3;
    RegretTrace trace = contractual_rl(env, opt, 5);
    REQUIRE(trace.rows.size() == 300);
    // warm-start contracts overpay massively, so per-round regret is large
    double mean = trace.final_regret() / 300.0;
    CHECK(mean > 0.5);
}
