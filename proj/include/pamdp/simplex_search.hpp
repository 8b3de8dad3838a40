#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "pamdp/rng.hpp"

namespace pamdp::simplex {

using ResponseOracle = std::function<int(const Vec&)>;

/// Tuning of the line-sampling boundary search on the probability simplex.
/// `dim` is the number of outcomes; probe simplices are regular with `dim`
/// vertices, the largest that fit the contract hyperplane.
struct SearchConfig {
    int num_actions = 0;
    int dim = 0;
    Vec costs;            // known action costs
    long num_lines = 1;   // line samples (T)
    double epsilon = 1e-3;  // bisection precision, inf-norm, unit coordinates
    double c_d = 0.05;      // probe simplex scale (edge sqrt(2) * c_d)
    double scale = 1.0;     // contract simplex total mass, typically (N-1) eta
    double varsigma = 0.0;  // assumed volume ratio, informational
    double theta = 0.0;     // assumed minimal cost gap, informational
    int probe_retries = 5;

    double xi_sq() const;  // c_d^2/d^2 - d eps^2 / 8, must be positive
    double tau() const;    // loose detection constant, advisory only
    bool tau_positive() const { return tau() > 0.0; }

    void validate() const;

    /// Closed-form constants: c_d = upsilon/2 and the matching bisection
    /// precision for a target recovery error. Far too conservative at desk
    /// scale, provided for reference; tests override.
    static double upsilon(double varsigma, int dim);
    static SearchConfig with_closed_form_constants(int num_actions, int dim,
                                                   Vec costs, long num_lines,
                                                   double varsigma, double theta,
                                                   double target_error);
};

/// Chord of the simplex: the affine span of two sampled points clipped to
/// the simplex.
struct Line {
    Vec lo;
    Vec hi;
};

struct LineSample {
    Vec z1;
    Vec z2;
    Line line;
};

LineSample sample_search_line(int dim, Rng& rng);

struct Segment {
    Vec a;
    Vec b;
    int resp_a = -1;
    int resp_b = -1;
};

/// All response switches along the chord, bisected to segments of inf-norm
/// length at most eps. Endpoint responses differ on every returned segment;
/// segments come back ordered along the line.
std::vector<Segment> find_switch_segments(const Line& line,
                                          const ResponseOracle& oracle, double eps,
                                          long* query_count = nullptr);

enum class Provenance { LineSwitch, SimplexEdge };

struct MemoryPoint {
    Vec point;
    int response;
    Provenance prov;
};

struct StraddlePair {
    Vec u;  // one side of the boundary
    Vec w;  // the other side, within eps in inf-norm
    int resp_u = -1;
    int resp_w = -1;
    Provenance prov = Provenance::LineSwitch;
};

struct BoundaryMemory {
    std::vector<MemoryPoint> points;
    std::vector<StraddlePair> pairs;
};

/// Vertices of a randomly rotated regular probe simplex centered at
/// `midpoint` (rows are vertices); empty when it cannot be placed inside
/// the outer simplex after shrink-and-retry.
std::optional<Mat> probe_vertices(const Vec& midpoint, double c_d, Rng& rng,
                                  int max_retries = 5);

struct ProbeStats {
    bool placed = false;
    int distinct_responses = 0;
    int edges_bisected = 0;
};

/// Queries the probe's vertices, bisects every edge whose endpoints
/// disagree, and appends everything to the memory.
ProbeStats probe_simplex(const Vec& midpoint, double c_d, Rng& rng,
                         const ResponseOracle& oracle, double eps,
                         BoundaryMemory& memory, long* query_count = nullptr,
                         int max_retries = 5);

struct PairCertificate {
    int i = 0;
    int j = 0;
    bool resolved = false;
    bool direct = false;     // fitted from straddling pairs (vs path-filled)
    int points_used = 0;
    int path_len = 0;
    double residual = 0.0;             // least-squares residual of the fit
    double max_slack_violation = 0.0;  // straddle inequality slack overrun
};

struct DiffEstimate {
    int num_actions = 0;
    int dim = 0;
    std::vector<Vec> entries;  // (i * N + j) -> p_i - p_j estimate
    std::vector<char> resolved_flags;
    Eigen::VectorXi component;
    std::vector<PairCertificate> certificates;

    const Vec& diff(int i, int j) const { return entries[i * num_actions + j]; }
    bool resolved(int i, int j) const { return resolved_flags[i * num_actions + j] != 0; }
    const PairCertificate& certificate(int i, int j) const;
};

/// Fits each detected pairwise difference from the straddling-pair
/// midpoints (least squares under the sum-zero constraint), verifies the
/// straddle inequalities, and propagates across connected components along
/// shortest hop paths. Rank-deficient pairs stay unresolved.
DiffEstimate recover_diffs(const BoundaryMemory& memory, const Vec& costs,
                           int num_actions, int dim, double eps);

struct SearchDiagnostics {
    long queries = 0;
    long lines = 0;
    long segments = 0;
    long probes_placed = 0;
    long probes_skipped = 0;
    long probes_two_actions = 0;  // probes whose vertices saw exactly 2 actions
};

/// Incremental driver: exposes one pending query at a time so the search
/// can run on responses harvested from episodes. `feed` consumes the
/// response to the pending point and advances.
class SearchRunner {
  public:
    SearchRunner(SearchConfig config, Rng rng);

    bool done() const { return phase_ == Phase::Done; }

    /// Next contract to query, already scaled to the configured simplex.
    const Vec& pending() const;
    void feed(int response);

    const BoundaryMemory& memory() const { return memory_; }
    const SearchDiagnostics& diagnostics() const { return diag_; }

    /// Recovery with the runner's configured costs.
    DiffEstimate recover() const;

  private:
    enum class Phase { LineLo, LineHi, Scan, ProbeVertex, EdgeBisect, Done };

    struct Interval {
        Vec a, b;
        int ra, rb;
    };
    struct Edge {
        Vec lo, hi;
        int rl, rh;
    };

    void start_line();
    void advance_scan();
    void start_probes();
    void advance_probe();
    void advance_edges();
    void record_segment(const Vec& a, const Vec& b, int ra, int rb);
    void set_pending(const Vec& unit_point);

    SearchConfig config_;
    Rng rng_;
    Phase phase_ = Phase::Done;
    Vec pending_;         // unit coordinates
    Vec pending_scaled_;  // what pending() hands out
    BoundaryMemory memory_;
    SearchDiagnostics diag_;

    Line line_;
    int resp_lo_ = -1;
    std::vector<Interval> scan_stack_;
    Interval current_;
    std::deque<Segment> probe_queue_;
    Mat verts_;
    std::vector<int> vert_resp_;
    int vert_idx_ = 0;
    std::deque<Edge> edge_queue_;
    Edge edge_;
};

/// Batch entry point: runs the incremental driver against a synchronous
/// oracle for the configured number of lines, then recovers.
DiffEstimate run_simplex_search(const SearchConfig& config,
                                const ResponseOracle& oracle, Rng rng,
                                SearchDiagnostics* diagnostics = nullptr,
                                BoundaryMemory* memory_out = nullptr);

/// Orthonormal basis of the sum-zero hyperplane (dim x (dim-1)),
/// deterministic.
Mat sum_zero_basis(int dim);

}  // namespace pamdp::simplex
