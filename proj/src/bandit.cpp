#include "pamdp/bandit.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace pamdp::bandit {

using lp::LinearProgram;
using lp::LpStatus;
using lp::Relation;

void BanditInstance::validate() const {
    const int A = num_actions();
    const int S = num_outcomes();
    require(A > 0 && S > 0, "bandit instance must have actions and outcomes");
    require(iota.size() == S && costs.size() == A, "bandit table size mismatch");
    require(eta > 0.0, "payment cap eta must be positive");
    for (int a = 0; a < A; ++a) {
        require(std::abs(P.row(a).sum() - 1.0) <= 1e-6, "outcome row must sum to one");
        require(P.row(a).minCoeff() >= -1e-12, "outcome row has negative entries");
    }
    require(costs.minCoeff() >= -1e-12 && costs.maxCoeff() <= 1.0 + 1e-12,
            "costs must lie in [0, 1]");
    if (lambda > 0.0) {
        require(events.rows() == A && events.cols() == S,
                "event certificates missing for the stated lambda");
        for (int a = 0; a < A; ++a)
            for (int b = 0; b < A; ++b) {
                if (a == b) continue;
                double gap = (P.row(a) - P.row(b)).dot(events.row(a));
                require(gap >= lambda - 1e-9, "event certificate violates lambda");
            }
    }
}

int BanditInstance::respond(const Vec& x) const {
    const int A = num_actions();
    double best = -kInf;
    Vec util(A);
    for (int a = 0; a < A; ++a) {
        util[a] = P.row(a).dot(x) - costs[a];
        best = std::max(best, util[a]);
    }
    int pick = -1;
    double pick_value = -kInf;
    for (int a = 0; a < A; ++a) {
        if (util[a] < best - 1e-9) continue;
        double v = reward(a) - P.row(a).dot(x);
        if (v > pick_value) {
            pick_value = v;
            pick = a;
        }
    }
    return pick;
}

std::optional<double> BanditInstance::least_payment(int a) const {
    auto rc = robust_contract(P.row(a).transpose(), exact_margin_set(*this, a, 0.0));
    if (!rc) return std::nullopt;
    return rc->zeta_hat;
}

double BanditInstance::optimal_profit() const {
    double best = -kInf;
    for (int a = 0; a < num_actions(); ++a) {
        auto z = least_payment(a);
        if (z) best = std::max(best, reward(a) - *z);
    }
    require(std::isfinite(best), "no action is inducible within the cap");
    return best;
}

bool MarginContractSet::contains(const Vec& x, double tol) const {
    if (x.minCoeff() < -tol || x.maxCoeff() > eta + tol) return false;
    for (const auto& r : rows)
        if (r.diff.dot(x) < r.rhs - tol) return false;
    return true;
}

MarginContractSet exact_margin_set(const BanditInstance& inst, int a, double margin) {
    MarginContractSet set;
    set.action = a;
    set.eta = inst.eta;
    for (int b = 0; b < inst.num_actions(); ++b) {
        if (b == a) continue;
        set.rows.push_back({b, (inst.P.row(a) - inst.P.row(b)).transpose(),
                            inst.costs[a] - inst.costs[b] + margin});
    }
    return set;
}

std::optional<RobustContract> robust_contract(const Vec& p_hat,
                                              const MarginContractSet& set) {
    LinearProgram prog = LinearProgram::minimize(p_hat);
    prog.upper.setConstant(set.eta);
    for (const auto& r : set.rows) prog.add(r.diff, Relation::Ge, r.rhs);
    lp::LpSolution sol = lp::solve_lp(prog);
    if (sol.status != LpStatus::Optimal) return std::nullopt;
    return RobustContract{sol.x, sol.objective_value};
}

namespace {

struct RoundLogger {
    RegretTrace* trace;
    double opt;
    double cum = 0.0;
    long t = 0;

    void log(int action, double payment, double reward, double exp_profit) {
        double inst = opt - exp_profit;
        cum += inst;
        trace->rows.push_back({++t, action, payment, reward, inst, cum});
    }
};

struct Empirics {
    Mat outcome_counts;  // A x S
    Vec n;               // visits per action
    Vec reward_sum;
    Mat p_hat;           // A x S, uniform until first visit

    Empirics(int A, int S)
        : outcome_counts(Mat::Zero(A, S)),
          n(Vec::Zero(A)),
          reward_sum(Vec::Zero(A)),
          p_hat(Mat::Constant(A, S, 1.0 / S)) {}

    void update(int a, int outcome, double reward) {
        outcome_counts(a, outcome) += 1.0;
        n[a] += 1.0;
        reward_sum[a] += reward;
        p_hat.row(a) = outcome_counts.row(a) / n[a];
    }

    double r_hat(int a) const { return n[a] > 0 ? reward_sum[a] / n[a] : 0.0; }
};

}  // namespace

RegretTrace generic_ucb(const BanditInstance& inst,
                        const std::vector<MarginContractSet>& sets, long T,
                        double delta, std::uint64_t seed) {
    inst.validate();
    const int A = inst.num_actions();
    const int S = inst.num_outcomes();
    require(static_cast<int>(sets.size()) == A, "one contract set per action");

    RegretTrace trace;
    trace.algorithm = "generic_ucb";
    trace.seed = seed;
    trace.horizon = T;
    {
        std::ostringstream os;
        os << "{\"T\":" << T << ",\"delta\":" << delta << "}";
        trace.params_json = os.str();
    }

    Rng rng(seed);
    Empirics emp(A, S);
    RoundLogger logger{&trace, inst.optimal_profit()};

    const double log_term = std::log(std::max<double>(2, T) * A / delta);
    std::vector<double> zeta_hat(A, 0.0);
    std::vector<Vec> x_hat(A);
    for (int a = 0; a < A; ++a) {
        auto rc = robust_contract(emp.p_hat.row(a).transpose(), sets[a]);
        require(rc.has_value(), "contract set is empty for an action");
        zeta_hat[a] = rc->zeta_hat;
        x_hat[a] = rc->x;
    }

    for (long t = 1; t <= T; ++t) {
        int target;
        if (t <= A) {
            target = static_cast<int>(t - 1);
        } else {
            target = 0;
            double best = -kInf;
            for (int a = 0; a < A; ++a) {
                double width =
                    emp.n[a] > 0 ? std::sqrt(S * log_term / emp.n[a]) : kInf;
                double idx = emp.r_hat(a) - zeta_hat[a] + (1.0 + inst.eta) * width;
                if (idx > best) {
                    best = idx;
                    target = a;
                }
            }
        }

        const Vec x = x_hat[target];
        int played = inst.respond(x);
        int outcome = rng.categorical(inst.P.row(played).transpose());
        double reward =
            inst.iota[outcome] + rng.truncated_normal(inst.reward_noise_sigma);
        emp.update(played, outcome, reward);

        logger.log(played, x[outcome], reward,
                   inst.reward(played) - inst.P.row(played).dot(x));

        auto rc = robust_contract(emp.p_hat.row(played).transpose(), sets[played]);
        require(rc.has_value(), "contract set became infeasible");
        zeta_hat[played] = rc->zeta_hat;
        x_hat[played] = rc->x;
    }
    return trace;
}

CostSearchResult binary_search_costs(const BanditInstance& inst, double eps) {
    inst.validate();
    require(eps > 0.0 && eps < 1.0, "search precision must lie in (0, 1)");
    const int A = inst.num_actions();
    const int probes = static_cast<int>(std::ceil(std::log2(1.0 / eps))) + 1;

    CostSearchResult res;
    res.c_hat = Vec::Zero(A);
    res.rounds_per_action = Eigen::VectorXi::Constant(A, probes);

    for (int a = 0; a < A; ++a) {
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < probes; ++k) {
            double offer = 0.5 * (lo + hi);
            // direct incentive: pay `offer` on action a and nothing else;
            // the implicit outside option is worth 0, ties go the
            // principal's way, so the agent accepts iff offer >= c(a)
            bool accepted = offer >= inst.costs[a];
            if (accepted)
                hi = offer;
            else
                lo = offer;
            ++res.rounds;
        }
        res.c_hat[a] = 0.5 * (lo + hi);
    }
    return res;
}

CostDiffResult cost_diff_search(const BanditInstance& inst, const Mat& p_hat,
                                double eps,
                                const std::function<int(const Vec&)>& respond) {
    inst.validate();
    const int A = inst.num_actions();
    require(inst.prelim_contracts.rows() == A, "preliminary contracts required");
    require(p_hat.rows() == A && p_hat.cols() == inst.num_outcomes(),
            "p_hat shape mismatch");

    CostDiffResult res;
    res.d_hat = Mat::Constant(A, A, kInf);
    res.direct = Eigen::MatrixXi::Zero(A, A);
    for (int a = 0; a < A; ++a) res.d_hat(a, a) = 0.0;

    auto probe = [&](const Vec& x) {
        ++res.probes;
        return respond(x);
    };

    for (int a = 0; a < A; ++a) {
        Vec xa = inst.prelim_contracts.row(a).transpose();
        if (probe(xa) != a)
            throw InvalidInput("preliminary contract fails to induce its action");
    }

    if (A == 1) {
        MarginContractSet box;
        box.action = 0;
        box.eta = inst.eta;
        res.sets.push_back(box);
        return res;
    }

    const double eps_bs = eps / (10.0 * inst.eta * A);
    for (int a = 0; a < A; ++a) {
        for (int b = 0; b < A; ++b) {
            if (a == b) continue;
            Vec lo = inst.prelim_contracts.row(a).transpose();
            Vec hi = inst.prelim_contracts.row(b).transpose();
            int far = b;
            while ((hi - lo).lpNorm<Eigen::Infinity>() > eps_bs) {
                Vec mid = 0.5 * (lo + hi);
                int r = probe(mid);
                if (r == a) {
                    lo = mid;
                } else {
                    hi = mid;
                    far = r;
                }
            }
            // the segment may leave region a into a third region; record
            // the pair actually straddled, the target pair is path-filled
            if (res.direct(a, far) == 0) {
                res.d_hat(a, far) = (p_hat.row(a) - p_hat.row(far)).dot(lo);
                res.direct(a, far) = 1;
                if (res.direct(far, a) == 0) {
                    res.d_hat(far, a) = -res.d_hat(a, far);
                    res.direct(far, a) = 1;
                }
            }
        }
    }

    // hop-count shortest paths propagate the remaining differences
    for (int src = 0; src < A; ++src) {
        std::vector<int> dist(A, -1);
        std::vector<double> value(A, 0.0);
        std::deque<int> queue{src};
        dist[src] = 0;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < A; ++v) {
                if (dist[v] >= 0 || v == u || res.direct(u, v) == 0) continue;
                dist[v] = dist[u] + 1;
                value[v] = value[u] + res.d_hat(u, v);
                queue.push_back(v);
            }
        }
        for (int v = 0; v < A; ++v) {
            if (v == src) continue;
            if (dist[v] < 0)
                throw NumericalFailure(
                    "boundary graph is disconnected; cost differences cannot "
                    "be propagated");
            if (!std::isfinite(res.d_hat(src, v))) res.d_hat(src, v) = value[v];
        }
    }

    for (int a = 0; a < A; ++a) {
        MarginContractSet set;
        set.action = a;
        set.eta = inst.eta;
        for (int b = 0; b < A; ++b) {
            if (b == a) continue;
            set.rows.push_back({b, (p_hat.row(a) - p_hat.row(b)).transpose(),
                                res.d_hat(a, b) + eps / 2.0});
        }
        res.sets.push_back(set);
    }
    return res;
}

RegretTrace explore_then_commit(const BanditInstance& inst, long T, double delta,
                                std::uint64_t seed) {
    inst.validate();
    const int A = inst.num_actions();
    const int S = inst.num_outcomes();
    require(inst.prelim_contracts.rows() == A, "preliminary contracts required");

    RegretTrace trace;
    trace.algorithm = "explore_then_commit";
    trace.seed = seed;
    trace.horizon = T;
    {
        std::ostringstream os;
        os << "{\"T\":" << T << ",\"delta\":" << delta << "}";
        trace.params_json = os.str();
    }

    Rng rng(seed);
    Empirics emp(A, S);
    RoundLogger logger{&trace, inst.optimal_profit()};

    auto interact = [&](const Vec& x) {
        int played = inst.respond(x);
        int outcome = rng.categorical(inst.P.row(played).transpose());
        double reward =
            inst.iota[outcome] + rng.truncated_normal(inst.reward_noise_sigma);
        emp.update(played, outcome, reward);
        logger.log(played, x[outcome], reward,
                   inst.reward(played) - inst.P.row(played).dot(x));
        return played;
    };

    long t1 = std::max<long>(
        A, static_cast<long>(std::ceil(std::pow(static_cast<double>(T), 2.0 / 3.0))));
    t1 = std::min(t1, T);
    for (long t = 0; t < t1; ++t)
        interact(inst.prelim_contracts.row(t % A).transpose());

    if (logger.t >= T) return trace;

    const double log_term = std::log(std::max<double>(2, T) * A / delta);
    double eps_p = std::sqrt(S * A * log_term / static_cast<double>(t1));
    double eps = 10.0 * inst.eta * eps_p;

    Mat p_snapshot = emp.p_hat;
    CostDiffResult search = cost_diff_search(inst, p_snapshot, eps,
                                             [&](const Vec& x) { return interact(x); });

    if (logger.t >= T) return trace;

    double best = -kInf;
    Vec commit_x = inst.prelim_contracts.row(0).transpose();
    for (int a = 0; a < A; ++a) {
        auto rc = robust_contract(emp.p_hat.row(a).transpose(), search.sets[a]);
        Vec x = rc ? rc->x : inst.prelim_contracts.row(a).transpose();
        double zeta = rc ? rc->zeta_hat : emp.p_hat.row(a).dot(x);
        double profit = emp.r_hat(a) - zeta;
        if (profit > best) {
            best = profit;
            commit_x = x;
        }
    }

    while (logger.t < T) interact(commit_x);
    return trace;
}

RegretTrace doubling_wrapper(const AlgorithmFactory& factory, long T,
                             std::uint64_t seed) {
    RegretTrace out;
    out.algorithm = "doubling";
    out.seed = seed;
    out.horizon = T;

    long done = 0;
    int k = 0;
    double cum = 0.0;
    while (done < T) {
        long horizon = 1L << k;
        RegretTrace segment = factory(horizon, derive_seed(seed, "doubling", k));
        long use = std::min(horizon, T - done);
        require(static_cast<long>(segment.rows.size()) >= use,
                "doubling segment shorter than requested");
        for (long i = 0; i < use; ++i) {
            TraceRow row = segment.rows[i];
            row.t = ++done;
            cum += row.inst_regret;
            row.cum_regret = cum;
            out.rows.push_back(row);
        }
        ++k;
    }
    return out;
}

}  // namespace pamdp::bandit
