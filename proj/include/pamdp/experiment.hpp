#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pamdp/io.hpp"
#include "pamdp/rl.hpp"

namespace pamdp::harness {

struct ExperimentConfig {
    std::string kind;       // "bandit" or "rl"
    Json instance;          // inline instance document
    std::string algorithm;  // ucb | etc | doubling-ucb | rl
    long T = 1000;
    long T1 = -1;
    double delta = 0.1;
    double margin = 0.0;  // ucb margin; 0 picks 1/sqrt(T)
    std::string solver = "vi";
    double lambda_s = 0.2;
    double kappa0 = 0.1;
    int reps = 1;
    std::uint64_t seed = 1;
    std::string out_dir;

    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;   // 95% bootstrap interval when samples are given
    double ci_high = 0.0;
};

/// Least-squares slope of log(value) against log(t).
SlopeFit fit_loglog(const std::vector<double>& t, const std::vector<double>& value);

/// Slope with a seeded bootstrap interval over per-replication values:
/// samples[i][r] is replication r's value at t[i].
SlopeFit fit_loglog_bootstrap(const std::vector<double>& t,
                              const std::vector<std::vector<double>>& samples,
                              int resamples = 1000, std::uint64_t seed = 1);

/// Logarithmic checkpoint grid 1, 2, 5, 10, ... capped at T (T included).
std::vector<long> checkpoints(long T);

struct ExperimentResult {
    std::vector<std::string> trace_files;
    std::string summary_file;
    Json summary;
};

/// Runs the configured replications on a worker pool (PAMDP_LAB_THREADS
/// caps the width), writes one CSV + meta per replication and an aggregate
/// summary with mean/stderr cumulative regret at the checkpoints and a
/// log-log slope fit over them.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Regret recomputation guard: sums V* - V^{x_t} directly from the trace
/// rows and compares with the recorded cumulative column.
double recomputed_final_regret(const bandit::RegretTrace& trace);

}  // namespace pamdp::harness
