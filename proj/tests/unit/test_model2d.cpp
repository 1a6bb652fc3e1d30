#include "magspec/model2d.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace magspec;
using magspec::testing::dense_oracle_count;

namespace {

const auto D = BoundaryCondition::dirichlet();
const auto N = BoundaryCondition::neumann();

KernelOptions coarse() {
    KernelOptions o;
    o.grid.step = 1e-2;
    return o;
}

}  // namespace

TEST_CASE("kernel density limits") {
    ModelParams p(1.0, 0.25);
    const double bulk = n_mw_density(1.0, 0.0, 1.0, 0.25, 1.0, HeavisideConvention::LeftContinuous) / (0.25 * 0.25);
    KernelQuery far{10.0 * p.hbar_half(), 1.0, p, D};
    CHECK(kernel_density(far, coarse()) == doctest::Approx(bulk).epsilon(1e-6));
    KernelQuery wall{0.0, 1.0, p, D};
    CHECK(std::abs(kernel_density(wall, coarse())) < 1e-12);
    // Level 0.4 is under the Neumann minimum 0.59.
    KernelQuery below{0.3, 0.1, p, N};
    CHECK(kernel_density(below, coarse()) == 0.0);
    KernelQuery bad{-1.0, 1.0, p, D};
    CHECK_THROWS_AS(kernel_density(bad), InvalidArgument);
}

TEST_CASE("trace defect equals the scaled boundary correction") {
    ModelParams p(1.0, 0.25);
    for (auto bc : {D, N}) {
        auto td = trace_defect(1.0, p, bc, coarse());
        auto nb = bound_correction_branch(bc, 1.0, 0.25, coarse().grid);
        INFO(bc.to_string());
        CHECK(std::abs(td.value - nb.value / p.h()) <= td.error + nb.quad_error / p.h() + 1e-9);
    }
    CHECK(trace_defect(0.2, p, D, coarse()).value == 0.0);
}

TEST_CASE("defect profile") {
    ModelParams p(1.0, 0.25);
    std::vector<double> xs;
    for (double x = 0.0; x <= 4.0 + 1e-12; x += 0.05) xs.push_back(x);
    auto prof = defect_profile(1.0, p, D, xs, coarse());
    const double bulk = n_mw_density(1.0, 0.0, 1.0, 0.25, 1.0, HeavisideConvention::LeftContinuous) / (0.25 * 0.25);
    CHECK(prof.front().second == doctest::Approx(-bulk));
    double peak = 0.0;
    for (auto [x, v] : prof) peak = std::max(peak, std::abs(v));
    CHECK(std::abs(prof.back().second) < 1e-3 * peak);

    // Trapezoid integral of the profile against the adaptive quadrature.
    double integral = 0.0;
    for (std::size_t i = 1; i < prof.size(); ++i) {
        integral += 0.5 * (prof[i].second + prof[i - 1].second) * (prof[i].first - prof[i - 1].first);
    }
    auto td = trace_defect(1.0, p, D, coarse());
    CHECK(integral == doctest::Approx(td.value).epsilon(1e-2));

    for (auto [x, v] : defect_profile(0.2, p, D, {0.0, 0.5, 1.0}, coarse())) CHECK(v == 0.0);
}

TEST_CASE("banded inertia count matches a dense eigensolve") {
    for (auto bc : {D, N}) {
        for (auto [n1, n2] : {std::pair{6, 14}, std::pair{9, 5}}) {
            OracleProblem op;
            op.L1 = 1.5;
            op.L2 = 1.0;
            op.n1 = n1;
            op.n2 = n2;
            op.bc = bc;
            op.params = ModelParams(4.0, 0.3);
            op.V = [](double x1, double x2) { return -1.0 + 0.3 * x1 + 0.2 * std::sin(6.283185307179586 * x2); };
            auto [lo, hi] = oracle_gershgorin(op);
            for (double tau : {lo + 0.3 * (hi - lo), lo + 0.5 * (hi - lo), 0.0}) {
                INFO(bc.to_string() << " n1=" << n1 << " n2=" << n2 << " tau=" << tau);
                CHECK(oracle_count_2d(op, tau).count == dense_oracle_count(op, tau));
            }
        }
    }
}

TEST_CASE("oracle extremes and validation") {
    OracleProblem op;
    op.L1 = 2.0;
    op.L2 = 1.0;
    op.n1 = 10;
    op.n2 = 12;
    op.params = ModelParams(3.0, 0.2);
    auto [lo, hi] = oracle_gershgorin(op);
    CHECK(oracle_count_2d(op, lo - 1.0).count == 0);
    CHECK(oracle_count_2d(op, hi + 1.0).count == 120);
    auto r = oracle_count_2d(op, 0.5 * (lo + hi));
    CHECK(r.unknowns == 120);
    CHECK(r.bandwidth == 12);

    op.cap = 100;
    CHECK_THROWS_AS(oracle_count_2d(op, 0.0), InvalidArgument);
    op.cap = 40000;
    op.bc = BoundaryCondition::robin(1.0);
    CHECK_THROWS_AS(oracle_count_2d(op, 0.0), InvalidArgument);
    op.bc = D;
    op.n2 = 2;
    CHECK_THROWS_AS(oracle_count_2d(op, 0.0), InvalidArgument);
}
