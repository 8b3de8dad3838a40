#pragma once

// Shared helpers for the unit tests: small random instances and the
// independent oracles the tests check against.

#include "pamdp/core.hpp"
#include "pamdp/rng.hpp"

namespace testutil {

using namespace pamdp;

/// Random PAMDP with consistent realized-reward tables (iota drawn first,
/// r derived), uniform-ish transition rows, costs in [0, 1].
inline Pamdp random_env(Rng& rng, int S, int A, int H, double eta = 1.0) {
    Pamdp env;
    env.S = S;
    env.A = A;
    env.H = H;
    env.eta = eta;
    env.p0 = rng.simplex_point(S);
    for (int h = 0; h < H; ++h) {
        Mat P(S * A, S), iota(S, S), r(S, A), c(S, A);
        for (int i = 0; i < S * A; ++i) P.row(i) = rng.simplex_point(S).transpose();
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) iota(s, sp) = rng.uniform();
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                r(s, a) = P.row(s * A + a).dot(iota.row(s));
                c(s, a) = rng.uniform();
            }
        env.P.push_back(P);
        env.iota.push_back(iota);
        env.r.push_back(r);
        env.c.push_back(c);
    }
    env.validate();
    return env;
}

inline ContractPolicy random_contract(Rng& rng, const Pamdp& env) {
    ContractPolicy x = ContractPolicy::zeros(env.H, env.S);
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int sp = 0; sp < env.S; ++sp)
                x.steps[h](s, sp) = rng.uniform(0.0, env.eta);
    return x;
}

inline ActionPolicy random_policy(Rng& rng, const Pamdp& env) {
    ActionPolicy pi;
    for (int h = 0; h < env.H; ++h) {
        Eigen::VectorXi row(env.S);
        for (int s = 0; s < env.S; ++s) row[s] = rng.uniform_int(env.A);
        pi.steps.push_back(row);
    }
    return pi;
}

/// Enumerates all deterministic action policies (A^(S*H) of them) and calls
/// `fn` on each; the oracle counterpart of any argmax over policies.
template <typename Fn>
void for_each_policy(int S, int A, int H, Fn&& fn) {
    long n = 1;
    for (int i = 0; i < S * H; ++i) n *= A;
    ActionPolicy pi;
    pi.steps.assign(H, Eigen::VectorXi::Zero(S));
    for (long idx = 0; idx < n; ++idx) {
        long rem = idx;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s) {
                pi.steps[h][s] = static_cast<int>(rem % A);
                rem /= A;
            }
        fn(pi);
    }
}

/// Example-1 family as an H=1 PAMDP: two outcomes, two actions,
/// c = (1/2, 0), P(a1) = (1, 0), P(a2) = (1-mu, mu), iota = (1, 0).
inline Pamdp example1_pamdp(double mu, double eta = 1.0) {
    Pamdp env;
    env.S = 2;
    env.A = 2;
    env.H = 1;
    env.eta = eta;
    env.p0 = Vec::Zero(2);
    env.p0[0] = 1.0;
    Mat P(4, 2);
    P << 1.0, 0.0,          // s1, a1
         1.0 - mu, mu,      // s1, a2
         1.0, 0.0,          // s2, a1
         1.0 - mu, mu;      // s2, a2
    Mat iota(2, 2);
    iota << 1.0, 0.0, 1.0, 0.0;
    Mat r(2, 2), c(2, 2);
    for (int s = 0; s < 2; ++s) {
        r(s, 0) = P.row(s * 2 + 0).dot(iota.row(s));
        r(s, 1) = P.row(s * 2 + 1).dot(iota.row(s));
        c(s, 0) = 0.5;
        c(s, 1) = 0.0;
    }
    env.P = {P};
    env.iota = {iota};
    env.r = {r};
    env.c = {c};
    env.validate();
    return env;
}

}  // namespace testutil
