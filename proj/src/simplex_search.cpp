#include "pamdp/simplex_search.hpp"

#include <algorithm>
#include <cmath>

namespace pamdp::simplex {

double SearchConfig::xi_sq() const {
    return c_d * c_d / (dim * dim) - dim * epsilon * epsilon / 8.0;
}

double SearchConfig::tau() const {
    if (varsigma <= 0.0) return -1.0;
    double d = dim;
    return std::pow(varsigma * varsigma / (3.0 * d), d) -
           d * d * (1.0 + 4.0 / (d * varsigma)) * (c_d + epsilon);
}

void SearchConfig::validate() const {
    require(dim >= 2, "search needs at least two outcomes");
    require(num_actions >= 1, "search needs at least one action");
    require(costs.size() == num_actions, "cost vector size mismatch");
    require(scale > 0.0, "contract scale must be positive");
    require(epsilon > 0.0 && c_d > 0.0 && num_lines >= 1,
            "epsilon, c_d and num_lines must be positive");
    require(xi_sq() > 0.0, "epsilon too large for c_d: xi_d^2 must be positive");
    if (num_actions >= 2) {
        double gap = kInf;
        for (int i = 0; i < num_actions; ++i)
            for (int j = i + 1; j < num_actions; ++j)
                gap = std::min(gap, std::abs(costs[i] - costs[j]));
        require(gap > 0.0, "costs must have positive pairwise gaps");
    }
}

double SearchConfig::upsilon(double varsigma, int dim) {
    double d = dim;
    return std::pow(varsigma, 2 * d + 1) /
           (2.0 * std::pow(3.0, d) * std::pow(d, d + 1) * (d * varsigma + 4.0));
}

SearchConfig SearchConfig::with_closed_form_constants(int num_actions, int dim,
                                                      Vec costs, long num_lines,
                                                      double varsigma, double theta,
                                                      double target_error) {
    SearchConfig cfg;
    cfg.num_actions = num_actions;
    cfg.dim = dim;
    cfg.costs = std::move(costs);
    cfg.num_lines = num_lines;
    cfg.varsigma = varsigma;
    cfg.theta = theta;
    double ups = upsilon(varsigma, dim);
    cfg.c_d = ups / 2.0;
    double d = dim;
    double by_xi = ups / std::pow(d, 1.5);
    double by_error = target_error * theta / (2.0 * num_actions * std::sqrt(d)) *
                      std::pow(ups / (std::sqrt(8.0) * d), d - 1);
    cfg.epsilon = std::min(by_xi, by_error);
    return cfg;
}

Mat sum_zero_basis(int dim) {
    Mat seed(dim, dim);
    seed.col(0).setOnes();
    for (int j = 1; j < dim; ++j) seed.col(j) = Vec::Unit(dim, j - 1);
    Eigen::HouseholderQR<Mat> qr(seed);
    Mat q = qr.householderQ();
    return q.rightCols(dim - 1);
}

LineSample sample_search_line(int dim, Rng& rng) {
    require(dim >= 2, "line sampling needs dim >= 2");
    LineSample out;
    do {
        out.z1 = rng.simplex_point(dim);
        out.z2 = rng.simplex_point(dim);
    } while ((out.z1 - out.z2).lpNorm<Eigen::Infinity>() < 1e-12);

    // extend the chord to the simplex boundary: the largest t-interval
    // keeping z1 + t (z2 - z1) nonnegative (coordinates sum to one all along)
    Vec v = out.z2 - out.z1;
    double t_lo = -kInf, t_hi = kInf;
    for (int i = 0; i < dim; ++i) {
        if (v[i] > 1e-15)
            t_lo = std::max(t_lo, -out.z1[i] / v[i]);
        else if (v[i] < -1e-15)
            t_hi = std::min(t_hi, out.z1[i] / (-v[i]));
    }
    if (!std::isfinite(t_lo)) t_lo = 0.0;
    if (!std::isfinite(t_hi)) t_hi = 1.0;
    out.line.lo = (out.z1 + t_lo * v).cwiseMax(0.0);
    out.line.hi = (out.z1 + t_hi * v).cwiseMax(0.0);
    return out;
}

namespace {

double param_along(const Line& line, const Vec& p) {
    Vec dir = line.hi - line.lo;
    double n2 = dir.squaredNorm();
    return n2 > 0 ? dir.dot(p - line.lo) / n2 : 0.0;
}

}  // namespace

std::vector<Segment> find_switch_segments(const Line& line,
                                          const ResponseOracle& oracle, double eps,
                                          long* query_count) {
    long local = 0;
    auto ask = [&](const Vec& p) {
        ++local;
        return oracle(p);
    };

    std::vector<Segment> segments;
    int rl = ask(line.lo);
    int rh = ask(line.hi);
    if (rl != rh) {
        std::vector<Segment> stack{{line.lo, line.hi, rl, rh}};
        while (!stack.empty()) {
            Segment cur = stack.back();
            stack.pop_back();
            if ((cur.a - cur.b).lpNorm<Eigen::Infinity>() <= eps) {
                segments.push_back(cur);
                continue;
            }
            Vec mid = 0.5 * (cur.a + cur.b);
            int rm = ask(mid);
            // best-response cells are convex, so a half whose endpoints
            // share a response holds no switch and is dropped
            if (rm != cur.resp_a) stack.push_back({cur.a, mid, cur.resp_a, rm});
            if (rm != cur.resp_b) stack.push_back({mid, cur.b, rm, cur.resp_b});
        }
    }
    std::sort(segments.begin(), segments.end(), [&](const Segment& x, const Segment& y) {
        return param_along(line, x.a) < param_along(line, y.a);
    });
    if (query_count) *query_count += local;
    return segments;
}

std::optional<Mat> probe_vertices(const Vec& midpoint, double c_d, Rng& rng,
                                  int max_retries) {
    const int d = static_cast<int>(midpoint.size());
    Mat fixed = sum_zero_basis(d);
    double scale = c_d;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        // random orthonormal basis of the sum-zero hyperplane
        Mat seed(d, d);
        seed.col(0).setOnes();
        for (int j = 1; j < d; ++j)
            for (int i = 0; i < d; ++i) seed(i, j) = rng.normal();
        Eigen::HouseholderQR<Mat> qr(seed);
        Mat basis = Mat(qr.householderQ()).rightCols(d - 1);
        Mat rot = basis * fixed.transpose();  // isometry of the hyperplane

        Mat verts(d, d);
        bool inside = true;
        for (int i = 0; i < d && inside; ++i) {
            Vec u = scale * (Vec::Unit(d, i) - Vec::Constant(d, 1.0 / d));
            Vec v = midpoint + rot * u;
            if (v.minCoeff() < -1e-12) inside = false;
            verts.row(i) = v.cwiseMax(0.0).transpose();
        }
        if (inside) return verts;
        scale *= 0.6;
    }
    return std::nullopt;
}

namespace {

void bisect_edge(Vec lo, Vec hi, int rl, int rh, double eps,
                 const ResponseOracle& oracle, long* queries, Provenance prov,
                 BoundaryMemory& memory) {
    while ((hi - lo).lpNorm<Eigen::Infinity>() > eps) {
        Vec mid = 0.5 * (lo + hi);
        if (queries) ++*queries;
        int rm = oracle(mid);
        if (rm == rl) {
            lo = mid;
        } else {
            hi = mid;
            rh = rm;
        }
    }
    memory.points.push_back({lo, rl, prov});
    memory.points.push_back({hi, rh, prov});
    memory.pairs.push_back({lo, hi, rl, rh, prov});
}

}  // namespace

ProbeStats probe_simplex(const Vec& midpoint, double c_d, Rng& rng,
                         const ResponseOracle& oracle, double eps,
                         BoundaryMemory& memory, long* query_count,
                         int max_retries) {
    ProbeStats stats;
    auto verts = probe_vertices(midpoint, c_d, rng, max_retries);
    if (!verts) return stats;
    stats.placed = true;

    const int d = static_cast<int>(midpoint.size());
    std::vector<int> resp(d);
    for (int i = 0; i < d; ++i) {
        if (query_count) ++*query_count;
        resp[i] = oracle(verts->row(i).transpose());
        memory.points.push_back(
            {verts->row(i).transpose(), resp[i], Provenance::SimplexEdge});
    }
    std::vector<int> distinct(resp);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    stats.distinct_responses = static_cast<int>(distinct.size());

    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            if (resp[i] == resp[j]) continue;
            ++stats.edges_bisected;
            bisect_edge(verts->row(i).transpose(), verts->row(j).transpose(), resp[i],
                        resp[j], eps, oracle, query_count, Provenance::SimplexEdge,
                        memory);
        }
    return stats;
}

const PairCertificate& DiffEstimate::certificate(int i, int j) const {
    for (const auto& c : certificates)
        if ((c.i == i && c.j == j) || (c.i == j && c.j == i)) return c;
    throw InvalidInput("no certificate for the requested pair");
}

DiffEstimate recover_diffs(const BoundaryMemory& memory, const Vec& costs,
                           int num_actions, int dim, double eps) {
    require(num_actions >= 1 && dim >= 2, "bad recovery dimensions");
    require(costs.size() == num_actions, "cost vector size mismatch");

    DiffEstimate est;
    est.num_actions = num_actions;
    est.dim = dim;
    est.entries.assign(num_actions * num_actions, Vec::Zero(dim));
    est.resolved_flags.assign(num_actions * num_actions, 0);
    for (int i = 0; i < num_actions; ++i)
        est.resolved_flags[i * num_actions + i] = 1;

    Mat basis = sum_zero_basis(dim);

    // direct fits per unordered pair with straddle evidence
    std::vector<std::vector<const StraddlePair*>> evidence(num_actions * num_actions);
    for (const auto& pr : memory.pairs) {
        if (pr.resp_u < 0 || pr.resp_w < 0 || pr.resp_u == pr.resp_w) continue;
        int i = std::min(pr.resp_u, pr.resp_w);
        int j = std::max(pr.resp_u, pr.resp_w);
        if (j >= num_actions) continue;
        evidence[i * num_actions + j].push_back(&pr);
    }

    for (int i = 0; i < num_actions; ++i) {
        for (int j = i + 1; j < num_actions; ++j) {
            const auto& ev = evidence[i * num_actions + j];
            PairCertificate cert;
            cert.i = i;
            cert.j = j;
            cert.points_used = static_cast<int>(ev.size());
            if (static_cast<int>(ev.size()) < dim - 1) {
                est.certificates.push_back(cert);
                continue;
            }
            Mat mids(static_cast<int>(ev.size()), dim);
            for (size_t k = 0; k < ev.size(); ++k)
                mids.row(static_cast<int>(k)) = 0.5 * (ev[k]->u + ev[k]->w).transpose();
            double theta_ij = costs[i] - costs[j];
            Mat reduced = mids * basis;
            Eigen::JacobiSVD<Mat> svd(reduced,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-8);
            if (svd.rank() < dim - 1) {
                est.certificates.push_back(cert);  // unresolved, not guessed
                continue;
            }
            Vec rhs = Vec::Constant(mids.rows(), theta_ij);
            Vec y = svd.solve(rhs);
            Vec delta = basis * y;
            cert.residual = (reduced * y - rhs).norm();

            // straddle inequalities within slack eps * |delta|_1
            double slack = eps * delta.lpNorm<1>();
            for (const auto* pr : ev) {
                Vec du = pr->resp_u == i ? pr->u : pr->w;
                Vec dw = pr->resp_u == i ? pr->w : pr->u;
                cert.max_slack_violation =
                    std::max({cert.max_slack_violation,
                              (costs[i] - costs[j]) - du.dot(delta) - slack,
                              dw.dot(delta) - (costs[i] - costs[j]) - slack});
            }
            cert.resolved = true;
            cert.direct = true;
            est.entries[i * num_actions + j] = delta;
            est.entries[j * num_actions + i] = -delta;
            est.resolved_flags[i * num_actions + j] = 1;
            est.resolved_flags[j * num_actions + i] = 1;
            est.certificates.push_back(cert);
        }
    }

    // connected components over directly fitted pairs; propagate along
    // shortest hop paths
    est.component = Eigen::VectorXi::Constant(num_actions, -1);
    int comp = 0;
    for (int root = 0; root < num_actions; ++root) {
        if (est.component[root] >= 0) continue;
        std::deque<int> queue{root};
        est.component[root] = comp;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < num_actions; ++v) {
                if (est.component[v] >= 0 || v == u) continue;
                bool direct = false;
                for (const auto& c : est.certificates)
                    if (c.resolved && c.direct &&
                        ((c.i == u && c.j == v) || (c.i == v && c.j == u)))
                        direct = true;
                if (!direct) continue;
                est.component[v] = comp;
                queue.push_back(v);
            }
        }
        ++comp;
    }

    for (int i = 0; i < num_actions; ++i) {
        // BFS from i over direct edges, summing differences along the way
        std::vector<int> hops(num_actions, -1);
        std::vector<Vec> acc(num_actions, Vec::Zero(dim));
        std::deque<int> queue{i};
        hops[i] = 0;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < num_actions; ++v) {
                if (hops[v] >= 0 || v == u) continue;
                bool direct = false;
                for (const auto& c : est.certificates)
                    if (c.resolved && c.direct &&
                        ((c.i == u && c.j == v) || (c.i == v && c.j == u)))
                        direct = true;
                if (!direct) continue;
                hops[v] = hops[u] + 1;
                acc[v] = acc[u] + est.entries[u * num_actions + v];
                queue.push_back(v);
            }
        }
        for (int j = 0; j < num_actions; ++j) {
            if (j == i || hops[j] < 2) continue;
            if (!est.resolved(i, j)) {
                est.entries[i * num_actions + j] = acc[j];
                est.entries[j * num_actions + i] = -acc[j];
                est.resolved_flags[i * num_actions + j] = 1;
                est.resolved_flags[j * num_actions + i] = 1;
                PairCertificate* cert = nullptr;
                for (auto& c : est.certificates)
                    if ((c.i == i && c.j == j) || (c.i == j && c.j == i)) cert = &c;
                if (!cert) {
                    est.certificates.push_back({});
                    cert = &est.certificates.back();
                    cert->i = i;
                    cert->j = j;
                }
                cert->resolved = true;
                cert->direct = false;
                cert->path_len = hops[j];
            }
        }
    }
    return est;
}

SearchRunner::SearchRunner(SearchConfig config, Rng rng)
    : config_(std::move(config)), rng_(rng) {
    config_.validate();
    if (config_.num_actions < 2) {
        // nothing to separate: every query answers the same action
        phase_ = Phase::Done;
        diag_.lines = config_.num_lines;
        return;
    }
    start_line();
}

const Vec& SearchRunner::pending() const {
    require(phase_ != Phase::Done, "search runner is finished");
    return pending_scaled_;
}

void SearchRunner::set_pending(const Vec& unit_point) {
    pending_ = unit_point;
    pending_scaled_ = config_.scale * unit_point;
}

void SearchRunner::start_line() {
    if (diag_.lines >= config_.num_lines) {
        phase_ = Phase::Done;
        return;
    }
    LineSample sample = sample_search_line(config_.dim, rng_);
    line_ = sample.line;
    set_pending(line_.lo);
    phase_ = Phase::LineLo;
}

void SearchRunner::record_segment(const Vec& a, const Vec& b, int ra, int rb) {
    probe_queue_.push_back({a, b, ra, rb});
    ++diag_.segments;
}

void SearchRunner::advance_scan() {
    while (!scan_stack_.empty()) {
        Interval cur = scan_stack_.back();
        scan_stack_.pop_back();
        if ((cur.a - cur.b).lpNorm<Eigen::Infinity>() <= config_.epsilon) {
            record_segment(cur.a, cur.b, cur.ra, cur.rb);
            continue;
        }
        current_ = cur;
        set_pending(0.5 * (cur.a + cur.b));
        phase_ = Phase::Scan;
        return;
    }
    start_probes();
}

void SearchRunner::start_probes() {
    // order the found segments along the line and log them before probing,
    // mirroring the batch pipeline
    std::sort(probe_queue_.begin(), probe_queue_.end(),
              [&](const Segment& x, const Segment& y) {
                  return param_along(line_, x.a) < param_along(line_, y.a);
              });
    for (const auto& seg : probe_queue_) {
        memory_.points.push_back({seg.a, seg.resp_a, Provenance::LineSwitch});
        memory_.points.push_back({seg.b, seg.resp_b, Provenance::LineSwitch});
        memory_.pairs.push_back(
            {seg.a, seg.b, seg.resp_a, seg.resp_b, Provenance::LineSwitch});
    }
    advance_probe();
}

void SearchRunner::advance_probe() {
    while (!probe_queue_.empty()) {
        Segment seg = probe_queue_.front();
        probe_queue_.pop_front();
        Vec mid = 0.5 * (seg.a + seg.b);
        auto verts = probe_vertices(mid, config_.c_d, rng_, config_.probe_retries);
        if (!verts) {
            ++diag_.probes_skipped;
            continue;
        }
        ++diag_.probes_placed;
        verts_ = *verts;
        vert_resp_.assign(config_.dim, -1);
        vert_idx_ = 0;
        set_pending(verts_.row(0).transpose());
        phase_ = Phase::ProbeVertex;
        return;
    }
    ++diag_.lines;
    start_line();
}

void SearchRunner::advance_edges() {
    while (!edge_queue_.empty()) {
        Edge e = edge_queue_.front();
        edge_queue_.pop_front();
        if ((e.lo - e.hi).lpNorm<Eigen::Infinity>() <= config_.epsilon) {
            memory_.points.push_back({e.lo, e.rl, Provenance::SimplexEdge});
            memory_.points.push_back({e.hi, e.rh, Provenance::SimplexEdge});
            memory_.pairs.push_back({e.lo, e.hi, e.rl, e.rh, Provenance::SimplexEdge});
            continue;
        }
        edge_ = e;
        set_pending(0.5 * (e.lo + e.hi));
        phase_ = Phase::EdgeBisect;
        return;
    }
    advance_probe();
}

void SearchRunner::feed(int response) {
    require(phase_ != Phase::Done, "search runner is finished");
    ++diag_.queries;
    switch (phase_) {
        case Phase::LineLo:
            resp_lo_ = response;
            set_pending(line_.hi);
            phase_ = Phase::LineHi;
            return;
        case Phase::LineHi:
            if (response != resp_lo_)
                scan_stack_.push_back({line_.lo, line_.hi, resp_lo_, response});
            advance_scan();
            return;
        case Phase::Scan: {
            Interval cur = current_;
            Vec mid = pending_;
            if (response != cur.ra)
                scan_stack_.push_back({cur.a, mid, cur.ra, response});
            if (response != cur.rb)
                scan_stack_.push_back({mid, cur.b, response, cur.rb});
            advance_scan();
            return;
        }
        case Phase::ProbeVertex: {
            vert_resp_[vert_idx_] = response;
            memory_.points.push_back(
                {verts_.row(vert_idx_).transpose(), response, Provenance::SimplexEdge});
            ++vert_idx_;
            if (vert_idx_ < config_.dim) {
                set_pending(verts_.row(vert_idx_).transpose());
                return;
            }
            std::vector<int> distinct(vert_resp_);
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()),
                           distinct.end());
            if (distinct.size() == 2) ++diag_.probes_two_actions;
            for (int i = 0; i < config_.dim; ++i)
                for (int j = i + 1; j < config_.dim; ++j)
                    if (vert_resp_[i] != vert_resp_[j])
                        edge_queue_.push_back({verts_.row(i).transpose(),
                                               verts_.row(j).transpose(),
                                               vert_resp_[i], vert_resp_[j]});
            advance_edges();
            return;
        }
        case Phase::EdgeBisect: {
            Vec mid = pending_;
            if (response == edge_.rl) {
                edge_.lo = mid;
            } else {
                edge_.hi = mid;
                edge_.rh = response;
            }
            if ((edge_.lo - edge_.hi).lpNorm<Eigen::Infinity>() <= config_.epsilon) {
                memory_.points.push_back({edge_.lo, edge_.rl, Provenance::SimplexEdge});
                memory_.points.push_back({edge_.hi, edge_.rh, Provenance::SimplexEdge});
                memory_.pairs.push_back(
                    {edge_.lo, edge_.hi, edge_.rl, edge_.rh, Provenance::SimplexEdge});
                advance_edges();
            } else {
                set_pending(0.5 * (edge_.lo + edge_.hi));
            }
            return;
        }
        case Phase::Done:
            return;
    }
}

DiffEstimate SearchRunner::recover() const {
    // geometry lives on the unit simplex, so the hyperplane offsets are the
    // cost differences divided by the contract scale
    return recover_diffs(memory_, config_.costs / config_.scale, config_.num_actions,
                         config_.dim, config_.epsilon);
}

DiffEstimate run_simplex_search(const SearchConfig& config,
                                const ResponseOracle& oracle, Rng rng,
                                SearchDiagnostics* diagnostics,
                                BoundaryMemory* memory_out) {
    SearchRunner runner(config, rng);
    while (!runner.done()) runner.feed(oracle(runner.pending()));
    if (diagnostics) *diagnostics = runner.diagnostics();
    if (memory_out) *memory_out = runner.memory();
    return runner.recover();
}

}  // namespace pamdp::simplex
