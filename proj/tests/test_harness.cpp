#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "pamdp/experiment.hpp"
#include "pamdp/io.hpp"
#include "pamdp/planner.hpp"
#include "pamdp/rl.hpp"

using namespace pamdp;
namespace hn = pamdp::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("pamdp_lab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("mixing generator honors the requested floor") {
    hn::InstanceSpec spec;
    spec.kind = "mixing";
    spec.S = 2;
    spec.A = 2;
    spec.H = 2;
    spec.kappa = 0.2;
    spec.lambda_s = 0.3;
    spec.theta = 0.15;
    spec.seed = 3;
    hn::GeneratedInstance inst = hn::generate_instance(spec);
    REQUIRE(inst.pamdp.has_value());
    for (const auto& Ph : inst.pamdp->P) CHECK(Ph.minCoeff() >= 0.2 - 1e-12);
    CHECK(inst.certificates.at("kappa") >= 0.2 - 1e-12);
    CHECK(inst.certificates.at("lambda_s") >= 0.3 - 1e-9);
    CHECK(inst.certificates.at("theta") >= 0.15 - 1e-12);
}

TEST_CASE("strong inducibility certificate is an attained LP value") {
    hn::InstanceSpec spec;
    spec.kind = "mixing";
    spec.S = 2;
    spec.A = 2;
    spec.H = 2;
    spec.lambda_s = 0.3;
    spec.seed = 5;
    hn::GeneratedInstance inst = hn::generate_instance(spec);
    std::vector<Vec> events;
    double lam = hn::certify_lambda_s(*inst.pamdp, &events);
    CHECK(lam >= 0.3 - 1e-9);
    // each event vector attains at least the certified margin
    const Pamdp& env = *inst.pamdp;
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int a = 0; a < env.A; ++a) {
                const Vec& e = events[(h * env.S + s) * env.A + a];
                for (int b = 0; b < env.A; ++b) {
                    if (b == a) continue;
                    CHECK((env.trans(h, s, a) - env.trans(h, s, b)).dot(e) >=
                          lam - 1e-7);
                }
            }
}

TEST_CASE("example-1 builder reproduces the paper instance") {
    hn::InstanceSpec spec;
    spec.kind = "example1-bandit";
    spec.mu = 0.7;
    hn::GeneratedInstance inst = hn::generate_instance(spec);
    REQUIRE(inst.bandit_inst.has_value());
    const auto& b = *inst.bandit_inst;
    CHECK(b.P(0, 0) == 1.0);
    CHECK(b.P(1, 1) == doctest::Approx(0.7));
    CHECK(b.costs[0] == 0.5);
    CHECK(b.costs[1] == 0.0);
    CHECK(b.iota[0] == 1.0);
    CHECK(b.reward(0) == doctest::Approx(1.0));
    CHECK(b.reward(1) == doctest::Approx(0.3));
}

TEST_CASE("uniform transitions give kappa exactly 1 over S") {
    Rng rng(7);
    Pamdp env = hn::random_pamdp(rng, 3, 2, 2);
    for (auto& Ph : env.P) Ph.setConstant(1.0 / 3);
    CHECK(hn::certify_kappa(env) == doctest::Approx(1.0 / 3));
    // uniform rows make every state reachable with probability exactly 1/S
    double k0 = hn::certify_kappa0(env);
    CHECK(k0 == doctest::Approx(0.5 * std::min(env.p0.minCoeff(), 1.0 / 3)));
}

TEST_CASE("duplicate action rows break strong inducibility") {
    Rng rng(9);
    Pamdp env = hn::random_pamdp(rng, 2, 2, 1);
    env.P[0].row(1) = env.P[0].row(0);  // state 0: identical distributions
    double lam = hn::certify_lambda_s(env);
    CHECK(lam <= 1e-9);
    hn::GeneratedInstance gi;
    gi.kind = "pamdp";
    gi.pamdp = env;
    hn::Certificate cert = hn::certify_assumption(gi, "lambda_s");
    CHECK(!cert.ok);
}

TEST_CASE("monte-carlo volume matches the analytic slab partition") {
    // three slab regions on the unit 2-simplex cut at x0 = 0.3 and 0.6;
    // analytic fractions 0.51 / 0.33 / 0.16
    bandit::BanditInstance inst;
    inst.P = Mat(3, 3);
    inst.P << 0.05, 0.475, 0.475,
              0.95, 0.025, 0.025,
              1.00, 0.000, 0.000;
    inst.costs = Vec(3);
    inst.costs << 0.100, 0.055, 0.075;
    inst.iota = Vec::Zero(3);
    inst.eta = 1.0;
    inst.validate();

    Rng rng(11);
    const long n = 100000;
    Eigen::VectorXi hits = Eigen::VectorXi::Zero(3);
    for (long i = 0; i < n; ++i) hits[inst.respond(rng.simplex_point(3))] += 1;
    CHECK(std::abs(hits[0] / static_cast<double>(n) - 0.51) <= 0.03);
    CHECK(std::abs(hits[1] / static_cast<double>(n) - 0.33) <= 0.03);
    CHECK(std::abs(hits[2] / static_cast<double>(n) - 0.16) <= 0.03);

    Rng rng2(13);
    double varsigma = hn::certify_varsigma(inst, n, rng2);
    CHECK(std::abs(varsigma - 0.16) <= 0.03);
}

TEST_CASE("lambda_w is positive on a mixing instance") {
    hn::InstanceSpec spec;
    spec.kind = "mixing";
    spec.S = 2;
    spec.A = 2;
    spec.H = 2;
    spec.seed = 15;
    hn::GeneratedInstance inst = hn::generate_instance(spec);
    double lw = hn::certify_lambda_w(*inst.pamdp);
    CHECK(lw > 0.0);
    CHECK(lw <= 2.0 * inst.pamdp->H);
}

TEST_CASE("instance json round-trips unchanged") {
    hn::InstanceSpec spec;
    spec.kind = "bandit";
    spec.S = 3;
    spec.A = 3;
    spec.lambda = 0.2;
    spec.seed = 17;
    hn::GeneratedInstance inst = hn::generate_instance(spec);
    hn::Json j = hn::instance_to_json(inst);
    std::string dumped = j.dump(2);

    hn::GeneratedInstance loaded = hn::instance_from_json(hn::Json::parse(dumped));
    std::string redumped = hn::instance_to_json(loaded).dump(2);
    CHECK(dumped == redumped);
    CHECK(hn::instance_hash(j) == hn::instance_hash(hn::Json::parse(redumped)));

    hn::InstanceSpec pspec;
    pspec.kind = "mixing";
    pspec.S = 2;
    pspec.A = 2;
    pspec.H = 2;
    pspec.seed = 19;
    hn::GeneratedInstance penv = hn::generate_instance(pspec);
    hn::Json pj = hn::instance_to_json(penv);
    std::string pd = pj.dump(2);
    CHECK(pd == hn::instance_to_json(hn::instance_from_json(hn::Json::parse(pd)))
                    .dump(2));
}

TEST_CASE("single replication writes one csv with T rows") {
    fs::path dir = temp_dir("single");
    hn::ExperimentConfig cfg;
    cfg.kind = "bandit";
    cfg.instance = hn::bandit_to_json(hn::example1_bandit(0.9));
    cfg.algorithm = "ucb";
    cfg.T = 10;
    cfg.reps = 1;
    cfg.seed = 21;
    cfg.out_dir = dir.string();
    hn::ExperimentResult res = hn::run_experiment(cfg);
    REQUIRE(res.trace_files.size() == 1);
    std::string csv = hn::read_file(res.trace_files[0]);
    long lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 11);  // header + 10 rows
    CHECK(res.summary.contains("curve"));
}

TEST_CASE("identical seeds give byte-identical outputs") {
    hn::ExperimentConfig cfg;
    cfg.kind = "bandit";
    cfg.instance = hn::bandit_to_json(hn::example1_bandit(0.8));
    cfg.algorithm = "ucb";
    cfg.T = 200;
    cfg.reps = 3;
    cfg.seed = 23;

    fs::path d1 = temp_dir("det1"), d2 = temp_dir("det2");
    cfg.out_dir = d1.string();
    hn::run_experiment(cfg);
    cfg.out_dir = d2.string();
    hn::run_experiment(cfg);
    for (int rep = 0; rep < 3; ++rep) {
        std::string a = hn::read_file((d1 / ("rep_" + std::to_string(rep) + ".csv")).string());
        std::string b = hn::read_file((d2 / ("rep_" + std::to_string(rep) + ".csv")).string());
        CHECK(a == b);
    }
}

TEST_CASE("exponent fit recovers a planted slope") {
    std::vector<double> t, v;
    for (double x : {100.0, 300.0, 1000.0, 3000.0, 10000.0}) {
        t.push_back(x);
        v.push_back(2.5 * std::pow(x, 0.5));
    }
    hn::SlopeFit fit = hn::fit_loglog(t, v);
    CHECK(std::abs(fit.slope - 0.5) <= 0.01);

    // noisy replications: the bootstrap interval brackets the truth
    Rng rng(25);
    std::vector<std::vector<double>> samples;
    for (double x : t) {
        std::vector<double> reps;
        for (int r = 0; r < 20; ++r)
            reps.push_back(2.5 * std::pow(x, 0.5) * (1.0 + 0.05 * rng.normal()));
        samples.push_back(reps);
    }
    hn::SlopeFit bfit = hn::fit_loglog_bootstrap(t, samples, 500, 27);
    CHECK(std::abs(bfit.slope - 0.5) <= 0.05);
    CHECK(bfit.ci_low <= 0.5);
    CHECK(bfit.ci_high >= 0.5);
    CHECK(bfit.ci_low <= bfit.slope);
    CHECK(bfit.ci_high >= bfit.slope);
}

TEST_CASE("checkpoints form the 1-2-5 ladder capped at T") {
    auto marks = hn::checkpoints(100);
    std::vector<long> expect{1, 2, 5, 10, 20, 50, 100};
    CHECK(marks == expect);
    auto odd = hn::checkpoints(73);
    CHECK(odd.back() == 73);
}

TEST_CASE("harness regret matches an independent recomputation") {
    Rng rng(29);
    hn::MixingSpec mspec;
    mspec.S = 2;
    mspec.A = 2;
    mspec.H = 2;
    mspec.kappa = 0.2;
    mspec.lambda_s = 0.3;
    mspec.theta = 0.15;
    Pamdp env = hn::random_mixing_pamdp(rng, mspec);
    env.ensure_iota();

    rl::RlOptions opt;
    opt.T = 200;
    opt.T1 = 60;
    opt.lambda_s = hn::certify_lambda_s(env);
    opt.kappa0 = hn::certify_kappa0(env);

    std::vector<ContractPolicy> contracts;
    bandit::RegretTrace trace = rl::contractual_rl(env, opt, 31, nullptr, &contracts);
    REQUIRE(contracts.size() == trace.rows.size());

    // independent pass: the exact benchmark and a fresh evaluation of every
    // logged contract
    double v_star = planner::exact_optimal_value(env);
    double cum = 0.0;
    for (size_t i = 0; i < contracts.size(); ++i) {
        BestResponse br = agent_best_response(env, contracts[i]);
        PolicyValues pv = evaluate_values(env, contracts[i], br.pi);
        cum += v_star - pv.principal.initial(env.p0);
    }
    CHECK(std::abs(cum - trace.final_regret()) < 1e-7);
    CHECK(std::abs(hn::recomputed_final_regret(trace) - trace.final_regret()) <
          1e-9);
}

TEST_CASE("config json round trip") {
    hn::ExperimentConfig cfg;
    cfg.kind = "rl";
    cfg.instance = hn::pamdp_to_json(hn::example1_pamdp(0.9));
    cfg.algorithm = "rl";
    cfg.T = 500;
    cfg.T1 = 100;
    cfg.solver = "lp";
    cfg.reps = 2;
    cfg.seed = 99;
    cfg.out_dir = "somewhere";
    hn::ExperimentConfig back = hn::ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.kind == cfg.kind);
    CHECK(back.T == cfg.T);
    CHECK(back.T1 == cfg.T1);
    CHECK(back.solver == cfg.solver);
    CHECK(back.seed == cfg.seed);
}
