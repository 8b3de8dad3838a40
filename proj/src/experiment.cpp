#include "pamdp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

namespace pamdp::harness {

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig c;
    c.kind = j.at("kind").get<std::string>();
    c.instance = j.at("instance");
    c.algorithm = j.at("algorithm").get<std::string>();
    c.T = j.at("T").get<long>();
    if (j.contains("T1")) c.T1 = j.at("T1").get<long>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("margin")) c.margin = j.at("margin").get<double>();
    if (j.contains("solver")) c.solver = j.at("solver").get<std::string>();
    if (j.contains("lambda_s")) c.lambda_s = j.at("lambda_s").get<double>();
    if (j.contains("kappa0")) c.kappa0 = j.at("kappa0").get<double>();
    if (j.contains("reps")) c.reps = j.at("reps").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    require(c.T >= 1 && c.reps >= 1, "T and reps must be positive");
    require(c.delta > 0.0 && c.delta < 1.0, "delta must lie in (0, 1)");
    return c;
}

Json ExperimentConfig::to_json() const {
    Json j;
    j["kind"] = kind;
    j["instance"] = instance;
    j["algorithm"] = algorithm;
    j["T"] = T;
    j["T1"] = T1;
    j["delta"] = delta;
    j["margin"] = margin;
    j["solver"] = solver;
    j["lambda_s"] = lambda_s;
    j["kappa0"] = kappa0;
    j["reps"] = reps;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    return j;
}

SlopeFit fit_loglog(const std::vector<double>& t, const std::vector<double>& value) {
    require(t.size() == value.size() && t.size() >= 2, "need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        require(t[i] > 0 && value[i] > 0, "log-log fit needs positive data");
        double x = std::log(t[i]);
        double y = std::log(value[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.ci_low = fit.ci_high = fit.slope;
    return fit;
}

SlopeFit fit_loglog_bootstrap(const std::vector<double>& t,
                              const std::vector<std::vector<double>>& samples,
                              int resamples, std::uint64_t seed) {
    require(t.size() == samples.size(), "one sample set per abscissa");
    const int reps = static_cast<int>(samples.front().size());
    for (const auto& s : samples)
        require(static_cast<int>(s.size()) == reps, "ragged sample sets");

    std::vector<double> means(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        double m = 0;
        for (double v : samples[i]) m += v;
        means[i] = m / reps;
    }
    SlopeFit fit = fit_loglog(t, means);

    Rng rng(seed);
    std::vector<double> slopes;
    slopes.reserve(resamples);
    std::vector<double> resampled(t.size());
    for (int b = 0; b < resamples; ++b) {
        for (size_t i = 0; i < t.size(); ++i) {
            double m = 0;
            for (int r = 0; r < reps; ++r) m += samples[i][rng.uniform_int(reps)];
            resampled[i] = std::max(1e-12, m / reps);
        }
        slopes.push_back(fit_loglog(t, resampled).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    fit.ci_low = slopes[static_cast<size_t>(0.025 * (resamples - 1))];
    fit.ci_high = slopes[static_cast<size_t>(0.975 * (resamples - 1))];
    return fit;
}

std::vector<long> checkpoints(long T) {
    std::vector<long> out;
    const long mults[] = {1, 2, 5};
    for (long base = 1; base <= T; base *= 10)
        for (long m : mults) {
            long v = base * m;
            if (v <= T) out.push_back(v);
        }
    if (out.empty() || out.back() != T) out.push_back(T);
    return out;
}

namespace {

int pool_width(int reps) {
    int width = static_cast<int>(std::thread::hardware_concurrency());
    if (width <= 0) width = 1;
    if (const char* env = std::getenv("PAMDP_LAB_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) width = std::min(width, cap);
    }
    return std::min(width, reps);
}

bandit::RegretTrace run_one(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
    if (cfg.kind == "bandit") {
        bandit::BanditInstance inst = bandit_from_json(cfg.instance);
        if (cfg.algorithm == "ucb" || cfg.algorithm == "doubling-ucb") {
            auto sets_for = [&](long horizon) {
                double margin = cfg.margin > 0
                                    ? cfg.margin
                                    : 1.0 / std::sqrt(static_cast<double>(
                                                std::max<long>(horizon, 4)));
                std::vector<bandit::MarginContractSet> sets;
                for (int a = 0; a < inst.num_actions(); ++a)
                    sets.push_back(bandit::exact_margin_set(inst, a, margin));
                return sets;
            };
            if (cfg.algorithm == "ucb")
                return bandit::generic_ucb(inst, sets_for(cfg.T), cfg.T, cfg.delta,
                                           rep_seed);
            auto factory = [&](long horizon, std::uint64_t seed) {
                return bandit::generic_ucb(inst, sets_for(horizon), horizon,
                                           cfg.delta, seed);
            };
            return bandit::doubling_wrapper(factory, cfg.T, rep_seed);
        }
        if (cfg.algorithm == "etc")
            return bandit::explore_then_commit(inst, cfg.T, cfg.delta, rep_seed);
        throw InvalidInput("unknown bandit algorithm: " + cfg.algorithm);
    }
    if (cfg.kind == "rl") {
        Pamdp env = pamdp_from_json(cfg.instance);
        env.ensure_iota();
        rl::RlOptions opt;
        opt.T = cfg.T;
        opt.T1 = cfg.T1;
        opt.delta = cfg.delta;
        opt.solver = cfg.solver == "lp" ? rl::RlOptions::Solver::Lp
                                        : rl::RlOptions::Solver::Vi;
        opt.lambda_s = cfg.lambda_s;
        opt.kappa0 = cfg.kappa0;
        return rl::contractual_rl(env, opt, rep_seed);
    }
    throw InvalidInput("unknown experiment kind: " + cfg.kind);
}

}  // namespace

double recomputed_final_regret(const bandit::RegretTrace& trace) {
    double cum = 0.0;
    for (const auto& row : trace.rows) cum += row.inst_regret;
    return cum;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    require(!cfg.out_dir.empty(), "experiment needs an output directory");
    fs::create_directories(cfg.out_dir);

    const std::string hash = instance_hash(cfg.instance);
    std::vector<bandit::RegretTrace> traces(cfg.reps);
    std::vector<std::string> errors(cfg.reps);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int rep = next.fetch_add(1);
            if (rep >= cfg.reps) return;
            try {
                bandit::RegretTrace trace =
                    run_one(cfg, derive_seed(cfg.seed, "rep", rep));
                trace.instance_hash = hash;
                traces[rep] = std::move(trace);
            } catch (const std::exception& e) {
                errors[rep] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < pool_width(cfg.reps); ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    ExperimentResult res;
    std::vector<long> marks = checkpoints(cfg.T);
    Json reps_json = Json::array();
    std::vector<std::vector<double>> at_mark(marks.size());

    for (int rep = 0; rep < cfg.reps; ++rep) {
        Json entry;
        entry["rep"] = rep;
        if (!errors[rep].empty()) {
            entry["error"] = errors[rep];
            reps_json.push_back(std::move(entry));
            continue;  // partial results are kept
        }
        const auto& trace = traces[rep];
        std::string stem = cfg.out_dir + "/rep_" + std::to_string(rep);
        write_file(stem + ".csv", trace_csv(trace));
        save_json(stem + ".meta.json", trace_meta(trace));
        res.trace_files.push_back(stem + ".csv");
        entry["final_regret"] = trace.final_regret();
        reps_json.push_back(std::move(entry));
        for (size_t i = 0; i < marks.size(); ++i)
            if (marks[i] <= static_cast<long>(trace.rows.size()))
                at_mark[i].push_back(trace.rows[marks[i] - 1].cum_regret);
    }

    Json summary;
    summary["config"] = cfg.to_json();
    summary["instance_hash"] = hash;
    summary["replications"] = std::move(reps_json);
    Json curve = Json::array();
    std::vector<double> fit_t, fit_v;
    std::vector<std::vector<double>> fit_samples;
    for (size_t i = 0; i < marks.size(); ++i) {
        if (at_mark[i].empty()) continue;
        double mean = 0;
        for (double v : at_mark[i]) mean += v;
        mean /= at_mark[i].size();
        double var = 0;
        for (double v : at_mark[i]) var += (v - mean) * (v - mean);
        double se = at_mark[i].size() > 1
                        ? std::sqrt(var / (at_mark[i].size() - 1.0) /
                                    at_mark[i].size())
                        : 0.0;
        Json point;
        point["t"] = marks[i];
        point["mean_cum_regret"] = mean;
        point["stderr"] = se;
        curve.push_back(std::move(point));
        if (marks[i] >= 10 && mean > 0) {
            fit_t.push_back(static_cast<double>(marks[i]));
            fit_v.push_back(mean);
            fit_samples.push_back(at_mark[i]);
        }
    }
    summary["curve"] = std::move(curve);
    if (fit_t.size() >= 2) {
        SlopeFit fit = fit_loglog_bootstrap(fit_t, fit_samples, 1000,
                                            derive_seed(cfg.seed, "bootstrap"));
        Json f;
        f["slope"] = fit.slope;
        f["intercept"] = fit.intercept;
        f["ci95_low"] = fit.ci_low;
        f["ci95_high"] = fit.ci_high;
        summary["loglog_fit"] = std::move(f);
    }

    res.summary_file = cfg.out_dir + "/summary.json";
    save_json(res.summary_file, summary);
    res.summary = std::move(summary);
    return res;
}

}  // namespace pamdp::harness
