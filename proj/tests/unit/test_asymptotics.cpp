#include "magspec/asymptotics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <boost/math/special_functions/airy.hpp>

#include <cmath>

using namespace magspec;

TEST_CASE("leading coefficient closed form") {
    CHECK(leading_coefficient(0) == doctest::Approx(2.0 / std::sqrt(M_PI)));
    CHECK(leading_coefficient(1) == doctest::Approx(4.0 / std::sqrt(M_PI)));
    CHECK(leading_coefficient(2) == doctest::Approx(4.0 / std::sqrt(M_PI)));
    CHECK(epsilon_leading(BoundaryCondition::dirichlet(), 0, 3.0) == doctest::Approx(4.178e-4).epsilon(1e-3));
}

TEST_CASE("fit recovers a planted coefficient") {
    EigenBranch b;
    b.bc = BoundaryCondition::dirichlet();
    b.n = 0;
    for (double eta = 2.0; eta <= 4.0; eta += 0.05) {
        BranchSample s;
        s.eta = eta;
        s.deviation = 1.2 * eta * std::exp(-eta * eta);
        s.lambda = 3.0 + s.deviation;
        b.samples.push_back(s);
    }
    auto fit = fit_leading_coefficient(b, {2.5, 3.5});
    CHECK(fit.c0 == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(std::abs(fit.c1) < 1e-6);
    CHECK_THROWS_AS(fit_leading_coefficient(b, {3.0, 3.1}), InvalidArgument);
    CHECK_THROWS_AS(fit_leading_coefficient(b, {1.0, 3.0}), InvalidArgument);
}

TEST_CASE("fit on computed branches") {
    std::vector<double> grid;
    for (double eta = 2.5; eta <= 3.5 + 1e-9; eta += 0.1) grid.push_back(eta);
    for (auto bc : {BoundaryCondition::dirichlet(), BoundaryCondition::neumann()}) {
        auto branch = branch_sample(bc, 0, grid);
        auto fit = fit_leading_coefficient(branch, {2.5, 3.5});
        CHECK(fit.c0 == doctest::Approx(leading_coefficient(0)).epsilon(0.1));
        for (const auto& s : branch.samples) {
            if (bc.is_dirichlet()) CHECK(s.deviation > 0.0);
            else CHECK(s.deviation < 0.0);
        }
    }
}

TEST_CASE("Airy series against Boost") {
    for (double x : {-12.0, -7.3, -2.0, 0.0, 1.5, 6.0, 11.0}) {
        const double ref = boost::math::airy_ai(x);
        const double refp = boost::math::airy_ai_prime(x);
        CHECK(airy_ai(x) == doctest::Approx(ref).epsilon(1e-10).scale(1e-300));
        CHECK(airy_ai_prime(x) == doctest::Approx(refp).epsilon(1e-10).scale(1e-300));
    }
    CHECK_THROWS_AS(airy_ai(20.0), InvalidArgument);
}

TEST_CASE("Airy zeros") {
    for (int k = 1; k <= 5; ++k) {
        CHECK(airy_zero(AiryKind::Ai, k) == doctest::Approx(-boost::math::airy_ai_zero<double>(k)).epsilon(1e-10));
        CHECK(airy_zero(AiryKind::AiPrime, k) == doctest::Approx(magspec::testing::airy_prime_zero(k)).epsilon(1e-10));
    }
    CHECK(airy_zero(AiryKind::Ai, 1) == doctest::Approx(2.3381074).epsilon(1e-7));
    CHECK(airy_zero(AiryKind::AiPrime, 1) == doctest::Approx(1.0187929).epsilon(1e-7));
    CHECK_THROWS_AS(airy_zero(AiryKind::Ai, 0), InvalidArgument);
}

TEST_CASE("negative eta asymptote") {
    const auto D = BoundaryCondition::dirichlet();
    const auto N = BoundaryCondition::neumann();
    const double pd = lambda_neg_asymptote(D, 0, -8.0);
    const double pn = lambda_neg_asymptote(N, 0, -8.0);
    CHECK(pd == doctest::Approx(64.0 + std::cbrt(256.0) * airy_zero(AiryKind::Ai, 1)));
    CHECK(pn < pd);
    CHECK(branch_value(-8.0, D, 0) == doctest::Approx(pd).epsilon(0.05));
    CHECK(branch_value(-8.0, N, 0) == doctest::Approx(pn).epsilon(0.05));
    CHECK(lambda_neg_asymptote(D, 0, -20.0) - 400.0 > lambda_neg_asymptote(D, 0, -8.0) - 64.0);
    CHECK_THROWS_AS(lambda_neg_asymptote(D, 0, 1.0), InvalidArgument);
}
