#pragma once

#include <map>
#include <optional>
#include <string>

#include "pamdp/bandit.hpp"
#include "pamdp/core.hpp"

namespace pamdp::harness {

/// Example 1: two outcomes with realized rewards (1, 0), two actions with
/// costs (1/2, 0), P(a1) = (1, 0), P(a2) = (1-mu, mu).
bandit::BanditInstance example1_bandit(double mu, double eta = 1.0);
Pamdp example1_pamdp(double mu, double eta = 1.0);

/// Exact inducibility margin over binary event vectors (S <= 16), filling
/// the per-action certificates into `events` when given.
double certify_lambda(const bandit::BanditInstance& inst, Mat* events = nullptr);

/// Strong inducibility: per (h, s, a) the LP max_e min_a' [P - P'] . e over
/// the box [0,1]^S; returns the minimum over all (h, s, a). Optional output
/// collects the per-(h,s,a) event vectors, indexed [(h*S + s)*A + a].
double certify_lambda_s(const Pamdp& env, std::vector<Vec>* events = nullptr);

/// Weak inducibility: for every policy, the LP over step event vectors
/// separating its visitation from every rival policy's. Policy enumeration
/// is capped.
double certify_lambda_w(const Pamdp& env, long policy_cap = 100000);

/// Smallest transition kernel entry (the mixing constant).
double certify_kappa(const Pamdp& env);

/// Half the smallest over (s, h) of the best achievable visitation of s at
/// step h (weak ergodicity constant), computed by dynamic programming.
double certify_kappa0(const Pamdp& env);

/// Smallest pairwise cost gap between actions.
double certify_theta(const bandit::BanditInstance& inst);
double certify_theta(const Pamdp& env);

/// Monte-Carlo estimate of the smallest best-response region volume ratio
/// on the unit probability simplex.
double certify_varsigma(const bandit::BanditInstance& inst, long samples, Rng& rng);

/// Paper construction x = e * max_a' (c(a) - c(a')) / lambda from the event
/// certificates; requires lambda and events to be set.
Mat make_prelim_contracts(const bandit::BanditInstance& inst);

/// Random bandit instance with certified inducibility margin at least
/// `lambda_min`, cost spread small enough that the preliminary contracts
/// fit under the cap.
bandit::BanditInstance random_bandit(Rng& rng, int A, int S, double eta,
                                     double lambda_min, int max_retries = 500);

struct MixingSpec {
    int S = 2;
    int A = 2;
    int H = 2;
    double eta = 1.0;
    double kappa = 0.1;     // per-entry transition floor
    double lambda_s = 0.2;  // strong inducibility target
    double theta = 0.1;     // pairwise cost gap target
};

/// Mixing PAMDP with a zero-cost action at every (h, s), pairwise cost gaps
/// of at least theta, and certified strong inducibility. Rejection-samples
/// until the certifiers pass.
Pamdp random_mixing_pamdp(Rng& rng, const MixingSpec& spec, int max_retries = 500);

/// Plain random PAMDP (iota drawn first, r derived, no certification).
Pamdp random_pamdp(Rng& rng, int S, int A, int H, double eta = 1.0);

struct InstanceSpec {
    std::string kind;  // pamdp | bandit | mixing | example1-pamdp | example1-bandit
    int S = 2;
    int A = 2;
    int H = 1;
    double eta = 1.0;
    double mu = 1.0;          // example1 parameter
    double lambda = 0.0;      // bandit inducibility target
    double kappa = 0.0;       // mixing floor target
    double lambda_s = 0.0;    // strong inducibility target
    double theta = 0.0;       // cost gap target
    std::uint64_t seed = 0;
    int max_retries = 500;
};

struct GeneratedInstance {
    std::string kind;  // "pamdp" or "bandit"
    std::optional<Pamdp> pamdp;
    std::optional<bandit::BanditInstance> bandit_inst;
    std::map<std::string, double> certificates;
};

/// Generator dispatch with certification; throws GenerationFailure when the
/// retry budget runs out.
GeneratedInstance generate_instance(const InstanceSpec& spec);

struct Certificate {
    std::string id;
    bool ok = false;
    double value = 0.0;
    std::string witness;
};

/// Named assumption check on a generated instance: lambda, lambda_s,
/// lambda_w, kappa, kappa0, theta, varsigma.
Certificate certify_assumption(const GeneratedInstance& inst, const std::string& id,
                               std::uint64_t seed = 1);

}  // namespace pamdp::harness
