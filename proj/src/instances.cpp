#include "pamdp/instances.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pamdp::harness {

using bandit::BanditInstance;
using lp::LinearProgram;
using lp::LpStatus;
using lp::Relation;

BanditInstance example1_bandit(double mu, double eta) {
    require(mu > 0.0 && mu <= 1.0, "example-1 mu must lie in (0, 1]");
    BanditInstance inst;
    inst.P = Mat(2, 2);
    inst.P << 1.0, 0.0, 1.0 - mu, mu;
    inst.iota = Vec(2);
    inst.iota << 1.0, 0.0;
    inst.costs = Vec(2);
    inst.costs << 0.5, 0.0;
    inst.eta = eta;
    inst.events = Mat(2, 2);
    inst.events << 1.0, 0.0, 0.0, 1.0;
    inst.lambda = mu;
    inst.prelim_contracts = make_prelim_contracts(inst);
    inst.validate();
    return inst;
}

Pamdp example1_pamdp(double mu, double eta) {
    BanditInstance b = example1_bandit(mu, eta);
    Pamdp env;
    env.S = 2;
    env.A = 2;
    env.H = 1;
    env.eta = eta;
    env.p0 = Vec::Zero(2);
    env.p0[0] = 1.0;
    Mat P(4, 2);
    P.row(0) = b.P.row(0);
    P.row(1) = b.P.row(1);
    P.row(2) = b.P.row(0);
    P.row(3) = b.P.row(1);
    Mat iota(2, 2);
    iota.row(0) = b.iota.transpose();
    iota.row(1) = b.iota.transpose();
    Mat r(2, 2), c(2, 2);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) {
            r(s, a) = P.row(s * 2 + a).dot(iota.row(s));
            c(s, a) = b.costs[a];
        }
    env.P = {P};
    env.iota = {iota};
    env.r = {r};
    env.c = {c};
    env.validate();
    return env;
}

namespace {

// smallest over actions of the best binary-event margin within one cell
double cell_lambda(const Mat& rows);

double best_binary_event(const Mat& P, int a, Vec* event_out) {
    const int A = static_cast<int>(P.rows());
    const int S = static_cast<int>(P.cols());
    require(S <= 16, "binary event enumeration needs S <= 16");
    double best = -kInf;
    for (unsigned mask = 0; mask < (1u << S); ++mask) {
        Vec e = Vec::Zero(S);
        for (int s = 0; s < S; ++s)
            if (mask & (1u << s)) e[s] = 1.0;
        double gap = kInf;
        for (int b = 0; b < A; ++b) {
            if (b == a) continue;
            gap = std::min(gap, (P.row(a) - P.row(b)).dot(e));
        }
        if (A == 1) gap = 1.0;
        if (gap > best) {
            best = gap;
            if (event_out) *event_out = e;
        }
    }
    return best;
}

// max_e min_a' [P(a) - P(a')] . e with e in the box [0,1]^S, as an LP in
// (e, t) maximizing t
double best_box_event(const Pamdp& env, int h, int s, int a, Vec* event_out) {
    const int S = env.S;
    Vec obj = Vec::Zero(S + 1);
    obj[S] = -1.0;  // maximize t
    LinearProgram prog = LinearProgram::minimize(obj);
    prog.upper.setConstant(1.0);
    prog.lower[S] = -2.0;
    prog.upper[S] = 2.0;
    for (int b = 0; b < env.A; ++b) {
        if (b == a) continue;
        Vec row = Vec::Zero(S + 1);
        row.head(S) = (env.trans(h, s, a) - env.trans(h, s, b)).transpose();
        row[S] = -1.0;
        prog.add(row, Relation::Ge, 0.0);
    }
    if (env.A == 1) {
        if (event_out) *event_out = Vec::Ones(S);
        return 1.0;
    }
    auto sol = lp::solve_lp(prog);
    require(sol.status == LpStatus::Optimal, "inducibility LP failed to solve");
    if (event_out) *event_out = sol.x.head(S);
    return sol.x[S];
}

double cell_lambda(const Mat& rows) {
    double lam = kInf;
    for (int a = 0; a < rows.rows(); ++a)
        lam = std::min(lam, best_binary_event(rows, a, nullptr));
    return lam;
}

}  // namespace

double certify_lambda(const BanditInstance& inst, Mat* events) {
    const int A = inst.num_actions();
    if (events) *events = Mat::Zero(A, inst.num_outcomes());
    double lam = kInf;
    for (int a = 0; a < A; ++a) {
        Vec e;
        double v = best_binary_event(inst.P, a, &e);
        lam = std::min(lam, v);
        if (events) events->row(a) = e.transpose();
    }
    return lam;
}

double certify_lambda_s(const Pamdp& env, std::vector<Vec>* events) {
    if (events) events->assign(env.H * env.S * env.A, Vec());
    double lam = kInf;
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int a = 0; a < env.A; ++a) {
                Vec e;
                double v = best_box_event(env, h, s, a, &e);
                lam = std::min(lam, v);
                if (events) (*events)[(h * env.S + s) * env.A + a] = e;
            }
    return lam;
}

// Weak inducibility in its operational form: for every policy there is a
// contract policy with entries in [0, 1] under which it beats every rival
// policy's agent value by lambda_w. (The single next-state event variant
// cannot separate non-extremal policies at all, so it is useless as a
// certificate; the contract form is what the policy-enumeration solver's
// feasibility actually rests on.)
double certify_lambda_w(const Pamdp& env, long policy_cap) {
    double total = std::pow(static_cast<double>(env.A), env.S * env.H);
    require(total <= static_cast<double>(policy_cap),
            "policy space exceeds the lambda_w certification cap");
    const long n = static_cast<long>(total);

    // agent value under contract x: U^{x,pi} = coeff(pi) . x - cost(pi),
    // with x flattened as x[(h*S + s)*S + s']
    const int nx = env.H * env.S * env.S;
    std::vector<Vec> coeffs;
    std::vector<double> costs;
    ActionPolicy pi;
    pi.steps.assign(env.H, Eigen::VectorXi::Zero(env.S));
    for (long idx = 0; idx < n; ++idx) {
        long rem = idx;
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s) {
                pi.steps[h][s] = static_cast<int>(rem % env.A);
                rem /= env.A;
            }
        Mat rho = visitation(env, pi).rho;
        Vec coef = Vec::Zero(nx);
        double cost = 0.0;
        for (int h = 0; h < env.H; ++h)
            for (int s = 0; s < env.S; ++s) {
                double mass = rho(h, s);
                if (mass == 0.0) continue;
                int a = pi.action(h, s);
                coef.segment((static_cast<long>(h) * env.S + s) * env.S, env.S) =
                    mass * env.trans(h, s, a).transpose();
                cost += mass * env.cost(h, s, a);
            }
        coeffs.push_back(std::move(coef));
        costs.push_back(cost);
    }

    double lam = kInf;
    for (long i = 0; i < n; ++i) {
        Vec obj = Vec::Zero(nx + 1);
        obj[nx] = -1.0;  // maximize the separation t
        LinearProgram prog = LinearProgram::minimize(obj);
        prog.upper.setConstant(1.0);
        prog.lower[nx] = -2.0 * env.H;
        prog.upper[nx] = 2.0 * env.H;
        for (long j = 0; j < n; ++j) {
            if (j == i) continue;
            Vec row = Vec::Zero(nx + 1);
            row.head(nx) = coeffs[i] - coeffs[j];
            row[nx] = -1.0;
            prog.add(row, Relation::Ge, costs[i] - costs[j]);
        }
        auto sol = lp::solve_lp(prog);
        require(sol.status == LpStatus::Optimal, "lambda_w LP failed to solve");
        lam = std::min(lam, sol.x[nx]);
    }
    return lam;
}

double certify_kappa(const Pamdp& env) {
    double k = kInf;
    for (const auto& Ph : env.P) k = std::min(k, Ph.minCoeff());
    return k;
}

double certify_kappa0(const Pamdp& env) {
    double worst = kInf;
    for (int h = 0; h < env.H; ++h) {
        for (int s = 0; s < env.S; ++s) {
            // best achievable P(s_h = s) via backward reach maximization
            Vec g = Vec::Zero(env.S);
            g[s] = 1.0;
            for (int tau = h - 1; tau >= 0; --tau) {
                Vec next(env.S);
                for (int sp = 0; sp < env.S; ++sp) {
                    double best = 0.0;
                    for (int a = 0; a < env.A; ++a)
                        best = std::max(best, env.trans(tau, sp, a).dot(g));
                    next[sp] = best;
                }
                g = next;
            }
            worst = std::min(worst, env.p0.dot(g));
        }
    }
    return worst / 2.0;
}

double certify_theta(const BanditInstance& inst) {
    double theta = kInf;
    for (int a = 0; a < inst.num_actions(); ++a)
        for (int b = a + 1; b < inst.num_actions(); ++b)
            theta = std::min(theta, std::abs(inst.costs[a] - inst.costs[b]));
    return theta;
}

double certify_theta(const Pamdp& env) {
    double theta = kInf;
    for (int h = 0; h < env.H; ++h)
        for (int s = 0; s < env.S; ++s)
            for (int a = 0; a < env.A; ++a)
                for (int b = a + 1; b < env.A; ++b)
                    theta = std::min(theta, std::abs(env.c[h](s, a) - env.c[h](s, b)));
    return theta;
}

double certify_varsigma(const BanditInstance& inst, long samples, Rng& rng) {
    const int A = inst.num_actions();
    Eigen::VectorXi hits = Eigen::VectorXi::Zero(A);
    for (long i = 0; i < samples; ++i)
        hits[inst.respond(rng.simplex_point(inst.num_outcomes()))] += 1;
    return static_cast<double>(hits.minCoeff()) / static_cast<double>(samples);
}

Mat make_prelim_contracts(const BanditInstance& inst) {
    require(inst.lambda > 0.0 && inst.events.rows() == inst.num_actions(),
            "preliminary contracts need a certified lambda and events");
    const int A = inst.num_actions();
    Mat x(A, inst.num_outcomes());
    for (int a = 0; a < A; ++a) {
        double spread = 0.0;
        for (int b = 0; b < A; ++b)
            spread = std::max(spread, inst.costs[a] - inst.costs[b]);
        x.row(a) = inst.events.row(a) * (spread / inst.lambda);
    }
    return x;
}

BanditInstance random_bandit(Rng& rng, int A, int S, double eta, double lambda_min,
                             int max_retries) {
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        BanditInstance inst;
        inst.P = Mat(A, S);
        for (int a = 0; a < A; ++a) inst.P.row(a) = rng.simplex_point(S).transpose();
        inst.iota = Vec(S);
        for (int s = 0; s < S; ++s) inst.iota[s] = rng.uniform();
        inst.eta = eta;

        Mat events;
        double lam = certify_lambda(inst, &events);
        if (lam < lambda_min) continue;

        // keep the cost spread small enough that preliminary payments fit
        // under the cap
        double spread_cap = 0.8 * lam * eta;
        inst.costs = Vec(A);
        for (int a = 0; a < A; ++a)
            inst.costs[a] = rng.uniform(0.0, std::min(1.0, spread_cap));
        inst.lambda = lam;
        inst.events = events;
        inst.prelim_contracts = make_prelim_contracts(inst);
        inst.validate();

        bool induces = true;
        for (int a = 0; a < A && induces; ++a)
            induces = inst.respond(inst.prelim_contracts.row(a).transpose()) == a;
        if (!induces) continue;
        return inst;
    }
    throw GenerationFailure("random_bandit exhausted its retry budget");
}

Pamdp random_pamdp(Rng& rng, int S, int A, int H, double eta) {
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

Pamdp random_mixing_pamdp(Rng& rng, const MixingSpec& spec, int max_retries) {
    require(spec.kappa * spec.S < 1.0, "kappa must be below 1/S");
    require(std::min(1.0, 0.8 * spec.lambda_s * spec.eta) >=
                spec.theta * (spec.A - 1),
            "cost gaps do not fit under the inducibility headroom "
            "0.8 * lambda_s * eta");
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        Pamdp env;
        env.S = spec.S;
        env.A = spec.A;
        env.H = spec.H;
        env.eta = spec.eta;
        env.p0 = Vec::Constant(spec.S, 1.0 / spec.S);
        bool ok = true;
        for (int h = 0; h < spec.H; ++h) {
            Mat P(spec.S * spec.A, spec.S), iota(spec.S, spec.S);
            Mat r(spec.S, spec.A), c(spec.S, spec.A);
            for (int s = 0; s < spec.S && ok; ++s) {
                // rows of one cell are redrawn together until their binary
                // event margin clears the target
                Mat rows(spec.A, spec.S);
                bool placed = false;
                for (int tries = 0; tries < 400 && !placed; ++tries) {
                    for (int a = 0; a < spec.A; ++a)
                        rows.row(a) =
                            (Vec::Constant(spec.S, spec.kappa) +
                             (1.0 - spec.S * spec.kappa) * rng.simplex_point(spec.S))
                                .transpose();
                    placed = cell_lambda(rows) >= spec.lambda_s;
                }
                if (!placed) {
                    ok = false;
                    break;
                }
                for (int a = 0; a < spec.A; ++a) P.row(s * spec.A + a) = rows.row(a);
            }
            if (!ok) break;
            for (int s = 0; s < spec.S; ++s)
                for (int sp = 0; sp < spec.S; ++sp) iota(s, sp) = rng.uniform();
            for (int s = 0; s < spec.S; ++s) {
                // one zero-cost action per state, gaps of at least theta,
                // spread capped so incentives stay affordable under eta
                double cap = std::min(1.0, 0.8 * spec.lambda_s * spec.eta);
                if (cap < spec.theta * (spec.A - 1)) {
                    ok = false;
                    break;
                }
                std::vector<double> vals(spec.A, 0.0);
                for (int a = 1; a < spec.A; ++a) {
                    bool placed = false;
                    for (int tries = 0; tries < 50 && !placed; ++tries) {
                        double v = rng.uniform(spec.theta, cap);
                        placed = true;
                        for (int b = 0; b < a; ++b)
                            if (std::abs(v - vals[b]) < spec.theta) placed = false;
                        if (placed) vals[a] = v;
                    }
                    if (!placed) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
                // shuffle so the cheap action is not always index 0
                for (int a = spec.A - 1; a > 0; --a)
                    std::swap(vals[a], vals[rng.uniform_int(a + 1)]);
                for (int a = 0; a < spec.A; ++a) {
                    c(s, a) = vals[a];
                    r(s, a) = P.row(s * spec.A + a).dot(iota.row(s));
                }
            }
            if (!ok) break;
            env.P.push_back(P);
            env.iota.push_back(iota);
            env.r.push_back(r);
            env.c.push_back(c);
        }
        if (!ok) continue;
        env.validate();
        if (certify_lambda_s(env) < spec.lambda_s) continue;
        return env;
    }
    throw GenerationFailure("random_mixing_pamdp exhausted its retry budget");
}

GeneratedInstance generate_instance(const InstanceSpec& spec) {
    Rng rng(spec.seed);
    GeneratedInstance out;
    if (spec.kind == "example1-bandit") {
        out.kind = "bandit";
        out.bandit_inst = example1_bandit(spec.mu, spec.eta);
        out.certificates["lambda"] = out.bandit_inst->lambda;
        out.certificates["theta"] = certify_theta(*out.bandit_inst);
    } else if (spec.kind == "example1-pamdp") {
        out.kind = "pamdp";
        out.pamdp = example1_pamdp(spec.mu, spec.eta);
    } else if (spec.kind == "bandit") {
        out.kind = "bandit";
        out.bandit_inst = random_bandit(rng, spec.A, spec.S, spec.eta,
                                        spec.lambda, spec.max_retries);
        out.certificates["lambda"] = out.bandit_inst->lambda;
        out.certificates["theta"] = certify_theta(*out.bandit_inst);
    } else if (spec.kind == "mixing") {
        out.kind = "pamdp";
        MixingSpec ms;
        ms.S = spec.S;
        ms.A = spec.A;
        ms.H = spec.H;
        ms.eta = spec.eta;
        if (spec.kappa > 0) ms.kappa = spec.kappa;
        if (spec.lambda_s > 0) ms.lambda_s = spec.lambda_s;
        if (spec.theta > 0) ms.theta = spec.theta;
        out.pamdp = random_mixing_pamdp(rng, ms, spec.max_retries);
        out.certificates["kappa"] = certify_kappa(*out.pamdp);
        out.certificates["kappa0"] = certify_kappa0(*out.pamdp);
        out.certificates["lambda_s"] = certify_lambda_s(*out.pamdp);
        out.certificates["theta"] = certify_theta(*out.pamdp);
    } else if (spec.kind == "pamdp") {
        out.kind = "pamdp";
        out.pamdp = random_pamdp(rng, spec.S, spec.A, spec.H, spec.eta);
    } else {
        throw InvalidInput("unknown instance kind: " + spec.kind);
    }
    return out;
}

Certificate certify_assumption(const GeneratedInstance& inst, const std::string& id,
                               std::uint64_t seed) {
    Certificate cert;
    cert.id = id;
    std::ostringstream witness;
    if (id == "lambda") {
        require(inst.bandit_inst.has_value(), "lambda applies to bandit instances");
        Mat events;
        cert.value = certify_lambda(*inst.bandit_inst, &events);
        cert.ok = cert.value > 0.0;
        witness << "binary event per action, min margin " << cert.value;
    } else if (id == "lambda_s") {
        require(inst.pamdp.has_value(), "lambda_s applies to pamdp instances");
        cert.value = certify_lambda_s(*inst.pamdp);
        cert.ok = cert.value > 0.0;
        witness << "box-LP event per (h,s,a), min margin " << cert.value;
    } else if (id == "lambda_w") {
        require(inst.pamdp.has_value(), "lambda_w applies to pamdp instances");
        cert.value = certify_lambda_w(*inst.pamdp);
        cert.ok = cert.value > 0.0;
        witness << "per-policy visitation separation " << cert.value;
    } else if (id == "kappa") {
        require(inst.pamdp.has_value(), "kappa applies to pamdp instances");
        cert.value = certify_kappa(*inst.pamdp);
        cert.ok = cert.value > 0.0;
        witness << "minimum transition entry " << cert.value;
    } else if (id == "kappa0") {
        require(inst.pamdp.has_value(), "kappa0 applies to pamdp instances");
        cert.value = certify_kappa0(*inst.pamdp);
        cert.ok = cert.value > 0.0;
        witness << "half the worst best-case visitation " << cert.value;
    } else if (id == "theta") {
        cert.value = inst.bandit_inst ? certify_theta(*inst.bandit_inst)
                                      : certify_theta(*inst.pamdp);
        cert.ok = cert.value > 0.0;
        witness << "minimum pairwise cost gap " << cert.value;
    } else if (id == "varsigma") {
        require(inst.bandit_inst.has_value(), "varsigma applies to bandit instances");
        Rng rng(seed);
        cert.value = certify_varsigma(*inst.bandit_inst, 100000, rng);
        cert.ok = cert.value > 0.0;
        witness << "monte-carlo volume ratio " << cert.value << " (1e5 samples)";
    } else {
        throw InvalidInput("unknown assumption id: " + id);
    }
    cert.witness = witness.str();
    return cert;
}

}  // namespace pamdp::harness
