#include "magspec/counting.hpp"

#include <doctest.h>

#include <cmath>

using namespace magspec;

namespace {

const auto D = BoundaryCondition::dirichlet();
const auto N = BoundaryCondition::neumann();
constexpr auto Left = HeavisideConvention::LeftContinuous;
constexpr auto Right = HeavisideConvention::RightContinuous;

OscillatorGrid coarse() {
    OscillatorGrid g;
    g.step = 1e-2;
    return g;
}

}  // namespace

TEST_CASE("Landau count density") {
    CHECK(landau_count(1.0, -1.0, 0.0, 0.5, Right) == 1);
    CHECK(n_mw_density(1.0, -1.0, 0.0, 0.5, 1.0, Right) == doctest::Approx(0.5 / (2 * M_PI)));
    CHECK(n_mw_density(1.0, 0.0, 0.0, 0.5, 1.0, Right) == 0.0);
    // Threshold: (2j+1) mu_h F + V = tau at j = 0.
    CHECK(n_mw_density(1.0, -1.0, 0.0, 1.0, 1.0, Right) == doctest::Approx(1.0 / (2 * M_PI)));
    CHECK(n_mw_density(1.0, -1.0, 0.0, 1.0, 1.0, Left) == 0.0);
    double prev = 0.0;
    for (double tau = -1.0; tau < 10.0; tau += 0.173) {
        double v = n_mw_density(1.3, 0.2, tau, 0.7, 1.1, Left);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("boundary correction vanishes below the spectrum and at tau = 3 hbar") {
    // Level 0.5 lies below inf lambda_0 = 1 of the Dirichlet branch.
    CHECK(bound_correction_branch(D, 0.05, 0.1).value == 0.0);
    CHECK(bound_correction_eigfn(D, 0.05, 0.1, coarse()).value == 0.0);
    CHECK(std::abs(bound_correction_branch(D, 0.3, 0.1).value) < 1e-9);
    CHECK_THROWS_AS(bound_correction_branch(D, -1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(bound_correction_branch(D, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("branch and eigenfunction forms agree") {
    for (auto bc : {D, N}) {
        for (double tau : {0.8, 1.3}) {
            auto b = bound_correction_branch(bc, tau, 0.2, coarse());
            auto e = bound_correction_eigfn(bc, tau, 0.2, coarse());
            INFO(bc.to_string() << " tau=" << tau << " branch " << b.value << " eigfn " << e.value);
            CHECK(std::abs(b.value - e.value) <= b.quad_error + e.quad_error);
            CHECK(b.quad_error < 1e-4);
        }
    }
}

TEST_CASE("threshold level on a Neumann branch") {
    // tau / hbar = 5 = 2j+1 for j = 2, where the Neumann branch approaches from below.
    auto b = bound_correction_branch(N, 1.0, 0.2, coarse());
    auto e = bound_correction_eigfn(N, 1.0, 0.2, coarse());
    CHECK(std::abs(b.value - e.value) <= b.quad_error + e.quad_error);
}

TEST_CASE("sign of the correction") {
    CHECK(bound_correction_branch(D, 1.0, 0.1).value < 0.0);
    CHECK(bound_correction_branch(N, 1.0, 0.1).value > 0.0);
    CHECK(kappa0_limit(D, 1.0) == doctest::Approx(-1.0 / (4 * M_PI)));
    CHECK(kappa0_limit(N, 1.0) == doctest::Approx(1.0 / (4 * M_PI)));
    CHECK(kappa0_limit(D, 4.0) == doctest::Approx(-2.0 / (4 * M_PI)));
}

TEST_CASE("branch terms") {
    auto terms = branch_terms(D, 5.0, OscillatorGrid{});
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].j == 0);
    CHECK(terms[0].crossings.size() == 1);
    CHECK(terms[0].crossings[0] < 0.0);
    CHECK(terms[1].crossings[0] > 0.0);
}

TEST_CASE("two-term count pieces") {
    RectDomain dom;
    dom.edges = {{EdgeSide::X1Min, D}};
    ModelParams p(3.0, 0.1);
    auto one = [](double, double) { return 1.0; };
    auto minus_one = [](double, double) { return -1.0; };

    // Boundary weight zero: bulk term only, equal to h^-2 N^MW times the area.
    auto inner = [](double x1, double) { return x1 > 0.0 ? 1.0 : 0.0; };
    auto r = two_term_count(dom, one, minus_one, p, 0.0, inner);
    CHECK(r.boundary == 0.0);
    CHECK(r.bulk == doctest::Approx(n_mw_density(1.0, -1.0, 0.0, 0.3, 1.0, Left) / 0.01));

    // No Landau level and level below the branches: both terms vanish.
    ModelParams strong(30.0, 0.1);
    auto z = two_term_count(dom, one, minus_one, strong, 0.0, one);
    CHECK(z.total == 0.0);

    // Corrections are cached on a log lattice; a fine lattice reproduces the direct value.
    const double direct = bound_correction_branch(D, 1.0, 0.3).value / 0.1;
    TwoTermOptions fine;
    fine.lattice = 1e-9;
    CHECK(two_term_count(dom, one, minus_one, p, 0.0, one, fine).boundary == doctest::Approx(direct).epsilon(1e-6));
    auto full = two_term_count(dom, one, minus_one, p, 0.0, one);
    CHECK(full.boundary == doctest::Approx(direct).epsilon(2e-3));
    CHECK_THROWS_AS(two_term_count(dom, [](double, double) { return 0.0; }, minus_one, p, 0.0, one),
                    InvalidArgument);
}

TEST_CASE("cutoff") {
    CHECK(cutoff_zeta(0.0) == 1.0);
    CHECK(cutoff_zeta(0.5) == 1.0);
    CHECK(cutoff_zeta(-0.5) == 1.0);
    CHECK(cutoff_zeta(1.0) == 0.0);
    CHECK(cutoff_zeta(1.5) == 0.0);
    CHECK(cutoff_zeta(0.75) == doctest::Approx(0.5));
    for (double t = 0.5; t < 1.0; t += 0.01) CHECK(cutoff_zeta(t) >= cutoff_zeta(t + 0.01));
}

TEST_CASE("spectral gap predicate") {
    auto gap = spectral_gap_check({0, 3}, 1.0, 2.0, {1.0, 1.0}, {-0.5, -0.5}, 0.0, 0.2);
    CHECK(gap.gap);
    auto nogap = spectral_gap_check({0, 3}, 1.0, 2.0, {1.0, 1.0}, {0.0, 0.0}, 0.0, 0.2);
    CHECK_FALSE(nogap.gap);
    REQUIRE(nogap.witness.has_value());
    CHECK(*nogap.witness == 0);
    // 2F - 1 vanishes at the lower end of the F range.
    CHECK_FALSE(spectral_gap_check({0, 0}, 0.0, 2.0, {0.5, 1.5}, {-1.0, -1.0}, 0.0, 0.1).gap);
    // With z = 1 the m = 0 term is V - tau alone.
    CHECK(spectral_gap_check({0, 0}, 1.0, 2.0, {0.5, 1.5}, {-1.0, -1.0}, 0.0, 0.1).gap);
}

TEST_CASE("superstrong correction in the elliptic case") {
    ModelParams p(40.0, 0.05);  // mu h = 2
    auto psi = [](double, double) { return 1.0; };
    // tau = 0, V = 0.5, F = 1: W_eff = -0.5 sits below the gap.
    CHECK(spectral_gap_check({0, 5}, 1.0, 2.0, {1.0, 1.0}, {0.5, 0.5}, 0.0, 0.2).gap);
    CHECK(boundary_elliptic(D, 0, 1.0, 2.0, {1.0, 1.0}, {0.5, 0.5}, 0.0, 0.1));
    SuperstrongOptions o;
    o.grid = coarse();
    CHECK(superstrong_bound_correction(D, 1.0, p, PotentialField::constant(-0.5), psi, o) == 0.0);
    // Inside the first band edge states are occupied near the wall only.
    CHECK(superstrong_bound_correction(D, 1.0, p, PotentialField::constant(1.0), psi, o) > 0.0);
}
