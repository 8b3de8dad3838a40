#pragma once

#include <vector>

#include "pamdp/common.hpp"

namespace pamdp {

/// Deterministic action policy: one action index per (step, state).
struct ActionPolicy {
    std::vector<Eigen::VectorXi> steps;  // H vectors of length S

    int horizon() const { return static_cast<int>(steps.size()); }
    int action(int h, int s) const { return steps[h][s]; }

    static ActionPolicy constant(int H, int S, int a) {
        ActionPolicy p;
        p.steps.assign(H, Eigen::VectorXi::Constant(S, a));
        return p;
    }
};

/// Payment rules x_h(s, s'): entry (s, s') is the transfer paid when the
/// next state s' realizes from current state s at step h. Non-liability
/// means every entry is non-negative.
struct ContractPolicy {
    std::vector<Mat> steps;  // H matrices, S x S

    int horizon() const { return static_cast<int>(steps.size()); }

    static ContractPolicy zeros(int H, int S) {
        ContractPolicy x;
        x.steps.assign(H, Mat::Zero(S, S));
        return x;
    }

    /// Payment row x_h(s, .) as a column vector over next states.
    Vec row(int h, int s) const { return steps[h].row(s).transpose(); }

    double max_entry() const {
        double m = 0.0;
        for (const auto& st : steps) m = std::max(m, st.maxCoeff());
        return m;
    }

    double min_entry() const {
        double m = kInf;
        for (const auto& st : steps) m = std::min(m, st.minCoeff());
        return steps.empty() ? 0.0 : m;
    }
};

/// Per-step state value table with the terminal row pinned to zero.
/// Row h (0-based) holds values from step h on; row H is all zeros.
struct ValueTables {
    Mat rows;  // (H+1) x S

    static ValueTables zero(int H, int S) { return {Mat::Zero(H + 1, S)}; }

    double at(int h, int s) const { return rows(h, s); }

    /// Expectation of the step-1 row under the initial distribution.
    double initial(const Vec& p0) const { return rows.row(0).dot(p0); }
};

/// State distribution per step; row 0 equals the initial distribution.
struct VisitationMeasure {
    Mat rho;  // (H+1) x S
};

struct TrajectoryStep {
    int s = 0;
    int a = 0;
    int s_next = 0;
    double payment = 0.0;
    double reward = 0.0;
};
using Trajectory = std::vector<TrajectoryStep>;

/// Principal-agent MDP: transition kernel, principal reward, agent cost,
/// initial distribution, horizon, and the per-entry payment cap eta.
///
/// The realized-reward table iota (one S x S matrix per step) satisfies
/// r_h(s, a) = P_h(s, a) . iota_h(s, .) for every action; it is either
/// provided or fit from r by least squares on demand.
struct Pamdp {
    int S = 0;
    int A = 0;
    int H = 0;
    std::vector<Mat> P;  // H matrices, (S*A) x S; row s*A + a is P_h(s, a)
    std::vector<Mat> r;  // H matrices, S x A
    std::vector<Mat> c;  // H matrices, S x A
    Vec p0;
    double eta = 1.0;
    std::vector<Mat> iota;             // optional until ensure_iota()
    double reward_noise_sigma = 0.1;   // std of the extra zero-mean noise

    Eigen::Block<const Mat, 1> trans(int h, int s, int a) const {
        return P[h].row(s * A + a);
    }

    double reward(int h, int s, int a) const { return r[h](s, a); }
    double cost(int h, int s, int a) const { return c[h](s, a); }

    /// Checks shapes, stochasticity, and value ranges. Rows whose sums are
    /// within 1e-6 of one are renormalized (left alone inside 1e-12);
    /// anything further off is rejected.
    void validate();

    /// Fits iota from r when absent; throws if no consistent table exists.
    void ensure_iota();

    void check_contract(const ContractPolicy& x, bool enforce_cap) const;
    void check_policy(const ActionPolicy& pi) const;
};

}  // namespace pamdp
