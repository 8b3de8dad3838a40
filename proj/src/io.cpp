#include "pamdp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pamdp::harness {

namespace {

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const Json& j, int rows, int cols, const char* what) {
    require(j.is_array() && static_cast<int>(j.size()) == rows,
            std::string(what) + ": row count mismatch");
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        require(j[i].is_array() && static_cast<int>(j[i].size()) == cols,
                std::string(what) + ": column count mismatch");
        for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

Json vec_to_json(const Vec& v) {
    Json arr = Json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vec vec_from_json(const Json& j, int n, const char* what) {
    require(j.is_array() && static_cast<int>(j.size()) == n,
            std::string(what) + ": length mismatch");
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = j[i].get<double>();
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Json pamdp_to_json(const Pamdp& env) {
    Json j;
    j["type"] = "pamdp";
    j["S"] = env.S;
    j["A"] = env.A;
    j["H"] = env.H;
    Json P = Json::array();
    for (int h = 0; h < env.H; ++h) {
        Json hstep = Json::array();
        for (int s = 0; s < env.S; ++s) {
            Json srow = Json::array();
            for (int a = 0; a < env.A; ++a)
                srow.push_back(vec_to_json(env.trans(h, s, a).transpose()));
            hstep.push_back(std::move(srow));
        }
        P.push_back(std::move(hstep));
    }
    j["P"] = std::move(P);
    Json r = Json::array(), c = Json::array();
    for (int h = 0; h < env.H; ++h) {
        r.push_back(mat_to_json(env.r[h]));
        c.push_back(mat_to_json(env.c[h]));
    }
    j["r"] = std::move(r);
    j["c"] = std::move(c);
    j["P0"] = vec_to_json(env.p0);
    j["eta"] = env.eta;
    if (!env.iota.empty()) {
        Json iota = Json::array();
        for (int h = 0; h < env.H; ++h) iota.push_back(mat_to_json(env.iota[h]));
        j["iota"] = std::move(iota);
    }
    j["sigma"] = env.reward_noise_sigma;
    return j;
}

Pamdp pamdp_from_json(const Json& j) {
    Pamdp env;
    env.S = j.at("S").get<int>();
    env.A = j.at("A").get<int>();
    env.H = j.at("H").get<int>();
    env.eta = j.at("eta").get<double>();
    env.p0 = vec_from_json(j.at("P0"), env.S, "P0");
    const Json& P = j.at("P");
    require(static_cast<int>(P.size()) == env.H, "P: step count mismatch");
    for (int h = 0; h < env.H; ++h) {
        Mat Ph(env.S * env.A, env.S);
        require(static_cast<int>(P[h].size()) == env.S, "P: state count mismatch");
        for (int s = 0; s < env.S; ++s) {
            require(static_cast<int>(P[h][s].size()) == env.A,
                    "P: action count mismatch");
            for (int a = 0; a < env.A; ++a)
                Ph.row(s * env.A + a) =
                    vec_from_json(P[h][s][a], env.S, "P row").transpose();
        }
        env.P.push_back(Ph);
        env.r.push_back(mat_from_json(j.at("r")[h], env.S, env.A, "r"));
        env.c.push_back(mat_from_json(j.at("c")[h], env.S, env.A, "c"));
    }
    if (j.contains("iota"))
        for (int h = 0; h < env.H; ++h)
            env.iota.push_back(mat_from_json(j.at("iota")[h], env.S, env.S, "iota"));
    if (j.contains("sigma")) env.reward_noise_sigma = j.at("sigma").get<double>();
    env.validate();
    return env;
}

Json bandit_to_json(const bandit::BanditInstance& inst) {
    Json j;
    j["type"] = "bandit";
    j["S"] = inst.num_outcomes();
    j["A"] = inst.num_actions();
    j["P"] = mat_to_json(inst.P);
    j["iota"] = vec_to_json(inst.iota);
    j["c"] = vec_to_json(inst.costs);
    j["eta"] = inst.eta;
    j["sigma"] = inst.reward_noise_sigma;
    if (inst.lambda > 0.0) {
        j["lambda"] = inst.lambda;
        j["events"] = mat_to_json(inst.events);
    }
    if (inst.prelim_contracts.rows() > 0)
        j["prelim_contracts"] = mat_to_json(inst.prelim_contracts);
    return j;
}

bandit::BanditInstance bandit_from_json(const Json& j) {
    bandit::BanditInstance inst;
    int S = j.at("S").get<int>();
    int A = j.at("A").get<int>();
    inst.P = mat_from_json(j.at("P"), A, S, "P");
    inst.iota = vec_from_json(j.at("iota"), S, "iota");
    inst.costs = vec_from_json(j.at("c"), A, "c");
    inst.eta = j.at("eta").get<double>();
    if (j.contains("sigma")) inst.reward_noise_sigma = j.at("sigma").get<double>();
    if (j.contains("lambda")) {
        inst.lambda = j.at("lambda").get<double>();
        inst.events = mat_from_json(j.at("events"), A, S, "events");
    }
    if (j.contains("prelim_contracts"))
        inst.prelim_contracts =
            mat_from_json(j.at("prelim_contracts"), A, S, "prelim_contracts");
    inst.validate();
    return inst;
}

Json instance_to_json(const GeneratedInstance& inst) {
    Json j = inst.kind == "pamdp" ? pamdp_to_json(*inst.pamdp)
                                  : bandit_to_json(*inst.bandit_inst);
    if (!inst.certificates.empty()) {
        Json certs;
        for (const auto& [key, value] : inst.certificates) certs[key] = value;
        j["certificates"] = std::move(certs);
    }
    return j;
}

GeneratedInstance instance_from_json(const Json& j) {
    GeneratedInstance out;
    std::string type = j.at("type").get<std::string>();
    out.kind = type;
    if (type == "pamdp")
        out.pamdp = pamdp_from_json(j);
    else if (type == "bandit")
        out.bandit_inst = bandit_from_json(j);
    else
        throw InvalidInput("unknown instance type: " + type);
    if (j.contains("certificates"))
        for (auto it = j.at("certificates").begin(); it != j.at("certificates").end();
             ++it)
            out.certificates[it.key()] = it.value().get<double>();
    return out;
}

Json plan_to_json(const planner::PlanResult& plan) {
    Json j;
    j["V_star"] = plan.v_initial;
    j["U_star"] = plan.u_initial;
    Json pi = Json::array();
    Json x = Json::array();
    for (size_t h = 0; h < plan.pi_star.steps.size(); ++h) {
        Json row = Json::array();
        for (int s = 0; s < plan.pi_star.steps[h].size(); ++s)
            row.push_back(plan.pi_star.steps[h][s]);
        pi.push_back(std::move(row));
        x.push_back(mat_to_json(plan.x_star.steps[h]));
    }
    j["pi_star"] = std::move(pi);
    j["x_star"] = std::move(x);
    j["V_table"] = mat_to_json(plan.v_star.rows);
    j["U_table"] = mat_to_json(plan.u_star.rows);
    return j;
}

Json memory_to_json(const simplex::BoundaryMemory& memory) {
    Json j;
    Json points = Json::array();
    for (const auto& p : memory.points) {
        Json e;
        e["point"] = vec_to_json(p.point);
        e["response"] = p.response;
        e["provenance"] =
            p.prov == simplex::Provenance::LineSwitch ? "line-switch" : "simplex-edge";
        points.push_back(std::move(e));
    }
    j["points"] = std::move(points);
    Json pairs = Json::array();
    for (const auto& p : memory.pairs) {
        Json e;
        e["u"] = vec_to_json(p.u);
        e["w"] = vec_to_json(p.w);
        e["resp_u"] = p.resp_u;
        e["resp_w"] = p.resp_w;
        e["provenance"] =
            p.prov == simplex::Provenance::LineSwitch ? "line-switch" : "simplex-edge";
        pairs.push_back(std::move(e));
    }
    j["pairs"] = std::move(pairs);
    return j;
}

Json diff_to_json(const simplex::DiffEstimate& est) {
    Json j;
    j["num_actions"] = est.num_actions;
    j["dim"] = est.dim;
    Json entries = Json::array();
    for (int i = 0; i < est.num_actions; ++i) {
        Json row = Json::array();
        for (int k = 0; k < est.num_actions; ++k) {
            Json cell;
            cell["resolved"] = est.resolved(i, k);
            cell["diff"] = vec_to_json(est.diff(i, k));
            row.push_back(std::move(cell));
        }
        entries.push_back(std::move(row));
    }
    j["pairs"] = std::move(entries);
    Json comps = Json::array();
    for (int i = 0; i < est.component.size(); ++i) comps.push_back(est.component[i]);
    j["components"] = std::move(comps);
    Json certs = Json::array();
    for (const auto& c : est.certificates) {
        Json e;
        e["i"] = c.i;
        e["j"] = c.j;
        e["resolved"] = c.resolved;
        e["direct"] = c.direct;
        e["points_used"] = c.points_used;
        e["path_len"] = c.path_len;
        e["residual"] = c.residual;
        e["max_slack_violation"] = c.max_slack_violation;
        certs.push_back(std::move(e));
    }
    j["certificates"] = std::move(certs);
    return j;
}

std::string instance_hash(const Json& j) {
    std::uint64_t h = fnv1a(j.dump());
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string trace_csv(const bandit::RegretTrace& trace) {
    std::ostringstream os;
    os << "t,action,payment,reward,inst_regret,cum_regret\n";
    for (const auto& row : trace.rows)
        os << row.t << ',' << row.action << ',' << format_double(row.payment) << ','
           << format_double(row.reward) << ',' << format_double(row.inst_regret)
           << ',' << format_double(row.cum_regret) << '\n';
    return os.str();
}

Json trace_meta(const bandit::RegretTrace& trace) {
    Json j;
    j["algorithm"] = trace.algorithm;
    j["instance_hash"] = trace.instance_hash;
    j["seed"] = trace.seed;
    j["T"] = trace.horizon;
    if (!trace.params_json.empty())
        j["params"] = Json::parse(trace.params_json);
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out << content;
    require(out.good(), "write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open for reading: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Json load_json(const std::string& path) { return Json::parse(read_file(path)); }

void save_json(const std::string& path, const Json& j) {
    write_file(path, j.dump(2) + "\n");
}

}  // namespace pamdp::harness
