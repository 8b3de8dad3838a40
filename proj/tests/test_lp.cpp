#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "pamdp/lp.hpp"
#include "pamdp/rng.hpp"

#include "lp_oracle.hpp"

using namespace pamdp;
using namespace pamdp::lp;

namespace {

using lporacle::enumerate_vertices;
using lporacle::random_bounded_lp;
using lporacle::VertexOracle;

}  // namespace

TEST_CASE("single variable at its constraint") {
    Vec obj(1);
    obj << 1.0;
    LinearProgram p = LinearProgram::minimize(obj);
    p.upper.setConstant(10.0);
    Vec row(1);
    row << 1.0;
    p.add(row, Relation::Ge, 3.0);
    auto sol = solve_lp(p);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("symmetric face optimum") {
    Vec obj(2);
    obj << 1.0, 1.0;
    LinearProgram p = LinearProgram::minimize(obj);
    Vec row(2);
    row << 1.0, 1.0;
    p.add(row, Relation::Ge, 1.0);
    auto sol = solve_lp(p);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("random LPs match vertex enumeration") {
    Rng rng(20240517);
    int solved = 0;
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + rng.uniform_int(6);
        int m = rng.uniform_int(9);
        LinearProgram p = random_bounded_lp(rng, n, m);
        auto oracle = enumerate_vertices(p);
        auto sol = solve_lp(p);
        REQUIRE(oracle.feasible);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(std::abs(sol.objective_value - oracle.objective) < 1e-6);
        ++solved;
    }
    CHECK(solved == 50);
}

TEST_CASE("infeasible and unbounded classification") {
    for (int i = 0; i < 10; ++i) {
        Rng rng(100 + i);
        int n = 1 + rng.uniform_int(4);
        Vec obj = Vec::Ones(n);
        LinearProgram p = LinearProgram::minimize(obj);
        p.upper.setConstant(1.0);
        Vec row = Vec::Zero(n);
        row[rng.uniform_int(n)] = 1.0;
        p.add(row, Relation::Ge, 2.0 + i);  // beyond the box
        auto sol = solve_lp(p);
        CHECK(sol.status == LpStatus::Infeasible);
    }
    for (int i = 0; i < 10; ++i) {
        Rng rng(200 + i);
        int n = 1 + rng.uniform_int(4);
        Vec obj = Vec::Zero(n);
        obj[rng.uniform_int(n)] = -1.0;  // push an uncapped variable up
        LinearProgram p = LinearProgram::minimize(obj);
        Vec row = Vec::Ones(n);
        p.add(row, Relation::Ge, 1.0);
        auto sol = solve_lp(p);
        CHECK(sol.status == LpStatus::Unbounded);
    }
}

TEST_CASE("equality constraints") {
    Vec obj(2);
    obj << 1.0, 2.0;
    LinearProgram p = LinearProgram::minimize(obj);
    p.upper.setConstant(5.0);
    Vec row(2);
    row << 1.0, 1.0;
    p.add(row, Relation::Eq, 3.0);
    auto sol = solve_lp(p);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(3.0));
    CHECK(sol.x[1] == doctest::Approx(0.0));
}

TEST_CASE("strong duality on random inequality LPs") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + rng.uniform_int(4);
        int m = 1 + rng.uniform_int(5);
        Vec obj(n);
        for (int j = 0; j < n; ++j) obj[j] = rng.uniform(0.2, 2.0);
        LinearProgram p = LinearProgram::minimize(obj);  // x >= 0, c > 0
        Mat A(m, n);
        Vec b(m);
        Vec x0(n);
        for (int j = 0; j < n; ++j) x0[j] = rng.uniform(0.0, 1.0);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
            b[i] = A.row(i).dot(x0) - rng.uniform(0.0, 0.3);
            p.add(A.row(i).transpose(), Relation::Ge, b[i]);
        }
        auto primal = solve_lp(p);
        REQUIRE(primal.status == LpStatus::Optimal);

        // dual: max b.y s.t. A^T y <= c, y >= 0
        LinearProgram d = LinearProgram::minimize(-b);
        for (int j = 0; j < n; ++j)
            d.add(A.col(j), Relation::Le, obj[j]);
        auto dual = solve_lp(d);
        REQUIRE(dual.status == LpStatus::Optimal);
        CHECK(std::abs(primal.objective_value + dual.objective_value) < 1e-6);
    }
}

TEST_CASE("permuted constraints give the same objective") {
    Rng rng(31337);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 2 + rng.uniform_int(4);
        int m = 2 + rng.uniform_int(6);
        LinearProgram p = random_bounded_lp(rng, n, m);
        auto base = solve_lp(p);
        REQUIRE(base.status == LpStatus::Optimal);
        LinearProgram q = p;
        std::reverse(q.constraints.begin(), q.constraints.end());
        for (int rot = 0; rot < 3; ++rot) {
            std::rotate(q.constraints.begin(), q.constraints.begin() + 1,
                        q.constraints.end());
            auto sol = solve_lp(q);
            REQUIRE(sol.status == LpStatus::Optimal);
            CHECK(std::abs(sol.objective_value - base.objective_value) < 1e-9);
        }
    }
}

TEST_CASE("iteration cap raises with diagnostics") {
    Rng rng(9);
    LinearProgram p = random_bounded_lp(rng, 5, 8);
    LpLimits lim;
    lim.max_iterations = 1;
    CHECK_THROWS_AS(solve_lp(p, lim), LpIterationLimit);
}

TEST_CASE("dimension mismatch rejected") {
    Vec obj(2);
    obj << 1.0, 1.0;
    LinearProgram p = LinearProgram::minimize(obj);
    Vec bad(3);
    bad << 1.0, 1.0, 1.0;
    p.add(bad, Relation::Ge, 1.0);
    CHECK_THROWS_AS(solve_lp(p), InvalidInput);
}
