// Command-line harness: instance generation, exact planning, bandit and RL
// experiment runs, standalone boundary search, and oracle cross-checks.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "pamdp/experiment.hpp"
#include "pamdp/io.hpp"
#include "pamdp/rl.hpp"

using namespace pamdp;
namespace hn = pamdp::harness;

namespace {

struct GenArgs {
    std::string kind = "pamdp";
    int S = 2, A = 2, H = 1;
    double eta = 1.0, mu = 1.0;
    double lambda = 0.0, kappa = 0.0, lambda_s = 0.0, theta = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_gen(const GenArgs& args) {
    hn::InstanceSpec spec;
    spec.kind = args.kind;
    spec.S = args.S;
    spec.A = args.A;
    spec.H = args.H;
    spec.eta = args.eta;
    spec.mu = args.mu;
    spec.lambda = args.lambda;
    spec.kappa = args.kappa;
    spec.lambda_s = args.lambda_s;
    spec.theta = args.theta;
    spec.seed = args.seed;
    hn::GeneratedInstance inst = hn::generate_instance(spec);
    hn::Json j = hn::instance_to_json(inst);
    if (args.out.empty())
        std::cout << j.dump(2) << "\n";
    else
        hn::save_json(args.out, j);
    std::cerr << "generated " << inst.kind << " instance, hash "
              << hn::instance_hash(j) << "\n";
    return 0;
}

int cmd_plan(const std::string& in, const std::string& out) {
    Pamdp env = hn::pamdp_from_json(hn::load_json(in));
    planner::PlanResult plan = planner::optimal_contract_policy(env);
    hn::Json j = hn::plan_to_json(plan);
    if (out.empty())
        std::cout << j.dump(2) << "\n";
    else
        hn::save_json(out, j);
    std::cerr << "V* = " << plan.v_initial << ", U* = " << plan.u_initial << "\n";
    return 0;
}

int run_and_report(const hn::ExperimentConfig& cfg) {
    hn::ExperimentResult res = hn::run_experiment(cfg);
    int failures = 0;
    for (const auto& rep : res.summary.at("replications"))
        if (rep.contains("error")) {
            ++failures;
            std::cerr << "replication " << rep.at("rep") << " failed: "
                      << rep.at("error").get<std::string>() << "\n";
        }
    std::cerr << "wrote " << res.trace_files.size() << " traces and "
              << res.summary_file << "\n";
    if (res.summary.contains("loglog_fit"))
        std::cerr << "log-log slope "
                  << res.summary.at("loglog_fit").at("slope").get<double>() << "\n";
    return failures == 0 ? 0 : 3;
}

int cmd_rl_with_policies(const hn::ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    Pamdp env = hn::pamdp_from_json(cfg.instance);
    env.ensure_iota();
    const std::string hash = hn::instance_hash(cfg.instance);
    rl::RlOptions opt;
    opt.T = cfg.T;
    opt.T1 = cfg.T1;
    opt.delta = cfg.delta;
    opt.solver = cfg.solver == "lp" ? rl::RlOptions::Solver::Lp
                                    : rl::RlOptions::Solver::Vi;
    opt.lambda_s = cfg.lambda_s;
    opt.kappa0 = cfg.kappa0;
    for (int rep = 0; rep < cfg.reps; ++rep) {
        std::vector<ActionPolicy> policies;
        bandit::RegretTrace trace =
            rl::contractual_rl(env, opt, derive_seed(cfg.seed, "rep", rep), &policies);
        trace.instance_hash = hash;
        std::string stem = cfg.out_dir + "/rep_" + std::to_string(rep);
        hn::write_file(stem + ".csv", hn::trace_csv(trace));
        hn::save_json(stem + ".meta.json", hn::trace_meta(trace));
        std::string lines;
        for (size_t t = 0; t < policies.size(); ++t) {
            hn::Json row;
            row["t"] = t + 1;
            hn::Json steps = hn::Json::array();
            for (const auto& step : policies[t].steps) {
                hn::Json sr = hn::Json::array();
                for (int s = 0; s < step.size(); ++s) sr.push_back(step[s]);
                steps.push_back(std::move(sr));
            }
            row["pi"] = std::move(steps);
            lines += row.dump() + "\n";
        }
        hn::write_file(stem + ".policies.jsonl", lines);
    }
    std::cerr << "wrote " << cfg.reps << " traces with policy logs\n";
    return 0;
}

int cmd_search(const std::string& in, long lines, double epsilon, double c_d,
               double scale, std::uint64_t seed, const std::string& out) {
    bandit::BanditInstance inst = hn::bandit_from_json(hn::load_json(in));
    simplex::SearchConfig cfg;
    cfg.num_actions = inst.num_actions();
    cfg.dim = inst.num_outcomes();
    cfg.costs = inst.costs;
    cfg.num_lines = lines;
    cfg.epsilon = epsilon;
    cfg.c_d = c_d;
    cfg.scale = scale > 0 ? scale : std::max(1, inst.num_actions() - 1) * inst.eta;

    simplex::SearchDiagnostics diag;
    simplex::BoundaryMemory memory;
    simplex::DiffEstimate est = simplex::run_simplex_search(
        cfg, [&](const Vec& x) { return inst.respond(x); }, Rng(seed), &diag,
        &memory);

    hn::Json j;
    j["diff_estimate"] = hn::diff_to_json(est);
    j["memory"] = hn::memory_to_json(memory);
    hn::Json d;
    d["queries"] = diag.queries;
    d["lines"] = diag.lines;
    d["segments"] = diag.segments;
    d["probes_placed"] = diag.probes_placed;
    d["probes_skipped"] = diag.probes_skipped;
    d["probes_two_actions"] = diag.probes_two_actions;
    j["diagnostics"] = std::move(d);
    if (out.empty())
        std::cout << j.dump(2) << "\n";
    else
        hn::save_json(out, j);
    std::cerr << "search used " << diag.queries << " queries over " << diag.lines
              << " lines\n";
    return 0;
}

int cmd_verify(const std::string& in, std::uint64_t seed) {
    hn::GeneratedInstance inst = hn::instance_from_json(hn::load_json(in));
    Rng rng(seed);
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << "\n";
        if (!ok) ++failures;
    };

    if (inst.kind == "pamdp") {
        Pamdp env = *inst.pamdp;

        {  // decomposition identity on random (x, pi) pairs
            double worst = 0.0;
            for (int trial = 0; trial < 50; ++trial) {
                ContractPolicy x = ContractPolicy::zeros(env.H, env.S);
                for (auto& st : x.steps)
                    for (int i = 0; i < st.rows(); ++i)
                        for (int k = 0; k < st.cols(); ++k)
                            st(i, k) = rng.uniform(0.0, env.eta);
                ActionPolicy pi;
                for (int h = 0; h < env.H; ++h) {
                    Eigen::VectorXi row(env.S);
                    for (int s = 0; s < env.S; ++s) row[s] = rng.uniform_int(env.A);
                    pi.steps.push_back(row);
                }
                PolicyValues pv = evaluate_values(env, x, pi);
                RewardCost rc = evaluate_reward_cost(env, pi);
                worst = std::max(worst, (pv.principal.rows + pv.agent.rows -
                                         rc.reward.rows + rc.cost.rows)
                                            .cwiseAbs()
                                            .maxCoeff());
            }
            report("value decomposition V + U = R - C", worst < 1e-9,
                   "max residual " + std::to_string(worst));
        }

        {  // planner against the exhaustive oracle, when affordable
            double policies = std::pow(static_cast<double>(env.A), env.S * env.H);
            if (policies <= 100000) {
                planner::PlanResult plan = planner::optimal_contract_policy(env);
                planner::BruteForceResult bf = planner::brute_force_plan(env);
                report("planner matches brute force",
                       std::abs(plan.v_initial - bf.v_initial) < 1e-7,
                       "V* " + std::to_string(plan.v_initial));
                BestResponse br = agent_best_response(env, plan.x_star);
                bool same = true;
                for (int h = 0; h < env.H; ++h)
                    for (int s = 0; s < env.S; ++s)
                        if (br.pi.action(h, s) != plan.pi_star.action(h, s))
                            same = false;
                report("best response reproduces the planned policy", same, "");
            } else {
                report("planner matches brute force", true, "skipped: policy space too large");
            }
        }

        {  // visitation-form value identity
            ActionPolicy pi;
            for (int h = 0; h < env.H; ++h) {
                Eigen::VectorXi row(env.S);
                for (int s = 0; s < env.S; ++s) row[s] = rng.uniform_int(env.A);
                pi.steps.push_back(row);
            }
            ContractPolicy x = ContractPolicy::zeros(env.H, env.S);
            PolicyValues pv = evaluate_values(env, x, pi);
            VisitationMeasure vm = visitation(env, pi);
            double u_vis = 0.0;
            for (int h = 0; h < env.H; ++h)
                for (int s = 0; s < env.S; ++s)
                    u_vis -= vm.rho(h, s) * env.cost(h, s, pi.action(h, s));
            report("visitation-form value identity",
                   std::abs(u_vis - pv.agent.initial(env.p0)) < 1e-9, "");
        }
    } else {
        bandit::BanditInstance env = *inst.bandit_inst;
        {
            bool ok = true;
            for (int a = 0; a < env.num_actions() && ok; ++a) {
                auto set = bandit::exact_margin_set(env, a, 0.0);
                auto rc = bandit::robust_contract(env.P.row(a).transpose(), set);
                auto z = env.least_payment(a);
                if (rc.has_value() != z.has_value()) ok = false;
                if (rc && std::abs(rc->zeta_hat - *z) > 1e-7) ok = false;
            }
            report("zero-margin robust contract equals the least payment", ok, "");
        }
        if (env.prelim_contracts.rows() == env.num_actions()) {
            bool ok = true;
            for (int a = 0; a < env.num_actions(); ++a)
                if (env.respond(env.prelim_contracts.row(a).transpose()) != a)
                    ok = false;
            report("preliminary contracts induce their actions", ok, "");
        }
    }
    return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"planning and online learning for principal-agent MDP contracts"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate a certified instance");
    gen->add_option("--kind", gen_args.kind,
                    "pamdp | bandit | mixing | example1-pamdp | example1-bandit");
    gen->add_option("--S", gen_args.S, "states/outcomes");
    gen->add_option("--A", gen_args.A, "actions");
    gen->add_option("--H", gen_args.H, "horizon");
    gen->add_option("--eta", gen_args.eta, "payment cap");
    gen->add_option("--mu", gen_args.mu, "example-1 parameter");
    gen->add_option("--lambda", gen_args.lambda, "bandit inducibility target");
    gen->add_option("--kappa", gen_args.kappa, "mixing floor target");
    gen->add_option("--lambda-s", gen_args.lambda_s, "strong inducibility target");
    gen->add_option("--theta", gen_args.theta, "cost gap target");
    gen->add_option("--seed", gen_args.seed, "rng seed");
    gen->add_option("--out", gen_args.out, "output file (stdout when omitted)");

    std::string plan_in, plan_out;
    auto* plan = app.add_subcommand("plan", "exact optimal contract policy");
    plan->add_option("--in", plan_in, "pamdp instance file")->required();
    plan->add_option("--out", plan_out, "plan output file");

    hn::ExperimentConfig cfg;
    std::string cfg_path, inst_path;
    bool log_policies = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", cfg_path, "experiment config JSON");
        cmd->add_option("--in", inst_path, "instance file");
        cmd->add_option("--T", cfg.T, "rounds/episodes");
        cmd->add_option("--reps", cfg.reps, "replications");
        cmd->add_option("--delta", cfg.delta, "confidence parameter");
        cmd->add_option("--seed", cfg.seed, "root seed");
        cmd->add_option("--out", cfg.out_dir, "output directory");
    };

    auto* bandit_cmd = app.add_subcommand("bandit", "run a bandit learner");
    add_common(bandit_cmd);
    bandit_cmd->add_option("--algo", cfg.algorithm, "ucb | etc | doubling-ucb");
    bandit_cmd->add_option("--margin", cfg.margin,
                           "ucb contract-set margin (default 1/sqrt(T))");

    auto* rl_cmd = app.add_subcommand("rl", "run the contractual RL learner");
    add_common(rl_cmd);
    rl_cmd->add_option("--solver", cfg.solver, "lp | vi");
    rl_cmd->add_option("--T1", cfg.T1, "warm-start episodes");
    rl_cmd->add_option("--lambda-s", cfg.lambda_s, "margin schedule constant");
    rl_cmd->add_option("--kappa0", cfg.kappa0, "warm-start shift constant");
    rl_cmd->add_flag("--log-policies", log_policies, "per-episode policy log");

    std::string search_in, search_out;
    long search_lines = 50;
    double search_eps = 1e-4, search_cd = 0.05, search_scale = 0.0;
    std::uint64_t search_seed = 1;
    auto* search = app.add_subcommand("search", "standalone boundary search");
    search->add_option("--in", search_in, "bandit instance file")->required();
    search->add_option("--lines", search_lines, "line samples");
    search->add_option("--epsilon", search_eps, "bisection precision");
    search->add_option("--c-d", search_cd, "probe simplex scale");
    search->add_option("--scale", search_scale, "contract simplex mass");
    search->add_option("--seed", search_seed, "rng seed");
    search->add_option("--out", search_out, "output file");

    std::string verify_in;
    std::uint64_t verify_seed = 1;
    auto* verify = app.add_subcommand("verify", "oracle cross-checks");
    verify->add_option("--in", verify_in, "instance file")->required();
    verify->add_option("--seed", verify_seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_args);
        if (plan->parsed()) return cmd_plan(plan_in, plan_out);
        if (bandit_cmd->parsed() || rl_cmd->parsed()) {
            if (!cfg_path.empty()) {
                cfg = hn::ExperimentConfig::from_json(hn::load_json(cfg_path));
            } else {
                require(!inst_path.empty(), "--in or --config is required");
                cfg.instance = hn::load_json(inst_path);
                cfg.kind = bandit_cmd->parsed() ? "bandit" : "rl";
                if (cfg.algorithm.empty())
                    cfg.algorithm = bandit_cmd->parsed() ? "ucb" : "rl";
            }
            require(!cfg.out_dir.empty(), "--out directory is required");
            if (rl_cmd->parsed() && log_policies) return cmd_rl_with_policies(cfg);
            return run_and_report(cfg);
        }
        if (search->parsed())
            return cmd_search(search_in, search_lines, search_eps, search_cd,
                              search_scale, search_seed, search_out);
        if (verify->parsed()) return cmd_verify(verify_in, verify_seed);
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const GenerationFailure& e) {
        std::cerr << "generation failed: " << e.what() << "\n";
        return 4;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
