#include "magspec/core.hpp"
#include "magspec/tridiagonal.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

using namespace magspec;

TEST_CASE("derived constants") {
    auto c = derive_constants(ModelParams(10.0, 0.01));
    CHECK(c.hbar_large == doctest::Approx(0.1));
    CHECK(c.hbar_small == doctest::Approx(0.001));
    CHECK(c.hbar_half == doctest::Approx(0.0316228).epsilon(1e-6));

    ModelParams unit(1.0, 1.0);
    CHECK(unit.hbar_large() == 1.0);
    CHECK(unit.hbar_small() == 1.0);
    CHECK(unit.hbar_half() == 1.0);

    ModelParams strong(100.0, 0.01);
    CHECK(strong.hbar_large() == doctest::Approx(1.0));
    CHECK(strong.hbar_small() == doctest::Approx(1e-4));
    CHECK(strong.hbar_half() == doctest::Approx(0.01));

    CHECK_THROWS_AS(ModelParams(0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ModelParams(1.0, -1.0), InvalidArgument);
    CHECK_THROWS_AS(ModelParams(0.5, 0.1), InvalidArgument);
}

TEST_CASE("heaviside conventions") {
    CHECK(heaviside(0.0, HeavisideConvention::LeftContinuous) == 0);
    CHECK(heaviside(0.0, HeavisideConvention::RightContinuous) == 1);
    CHECK(heaviside(-2.5, HeavisideConvention::RightContinuous) == 0);
    CHECK(heaviside(1e-300, HeavisideConvention::LeftContinuous) == 1);
    CHECK(counting_convention(BoundaryCondition::dirichlet()) == HeavisideConvention::LeftContinuous);
    CHECK(counting_convention(BoundaryCondition::neumann()) == HeavisideConvention::RightContinuous);
}

TEST_CASE("boundary condition text form") {
    for (auto bc : {BoundaryCondition::dirichlet(), BoundaryCondition::neumann(), BoundaryCondition::robin(2.5)}) {
        CHECK(BoundaryCondition::parse(bc.to_string()) == bc);
    }
    CHECK(BoundaryCondition::parse("robin:0.5").alpha == 0.5);
    CHECK_THROWS_AS(BoundaryCondition::parse("periodic"), InvalidArgument);
    CHECK_THROWS_AS(BoundaryCondition::parse("robin:x"), InvalidArgument);
    CHECK(BoundaryCondition::neumann().robin_alpha() == 0.0);
}

TEST_CASE("potential field derivatives") {
    auto q = PotentialField::quadratic(1.0, 0.5, -0.25, 2.0, 0.3, -1.0);
    auto g = q.gradient(0.7, -0.4);
    CHECK(g[0] == doctest::Approx(0.5 + 2.0 * 0.7 + 0.3 * -0.4));
    CHECK(g[1] == doctest::Approx(-0.25 + 0.3 * 0.7 - 1.0 * -0.4));

    // Same field without analytic derivatives falls back to finite differences.
    PotentialField numeric([&](double x1, double x2) { return q.value(x1, x2); });
    CHECK_FALSE(numeric.has_analytic_gradient());
    auto gn = numeric.gradient(0.7, -0.4);
    CHECK(gn[0] == doctest::Approx(g[0]).epsilon(1e-9));
    CHECK(gn[1] == doctest::Approx(g[1]).epsilon(1e-9));
    auto hn = numeric.hessian(0.7, -0.4);
    CHECK(hn[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(hn[1] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(hn[2] == doctest::Approx(-1.0).epsilon(1e-6));

    auto w = PotentialField::from_tau_v_f(2.0, [](double x, double) { return x; }, [](double, double) { return 2.0; });
    CHECK(w.value(1.0, 5.0) == doctest::Approx(0.5));
    CHECK_FALSE(PotentialField().valid());
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::accumulate(hit.begin(), hit.end(), 0) == 1000);
    CHECK(std::all_of(hit.begin(), hit.end(), [](int v) { return v == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw NumericalError("boom");
                    }),
                    NumericalError);
    CHECK(default_jobs() >= 1);
}

TEST_CASE("version string") {
    std::string v = version();
    CHECK(std::count(v.begin(), v.end(), '.') == 2);
}

TEST_CASE("sturm bisection matches the discrete Laplacian") {
    // -u'' on n interior points with Dirichlet ends: 2 - 2 cos(k pi / (n+1)).
    const std::size_t n = 50;
    SymTridiagonal t{std::vector<double>(n, 2.0), std::vector<double>(n - 1, -1.0)};
    auto ev = lowest_eigenvalues(t, 5, 1e-14);
    for (std::size_t k = 0; k < 5; ++k) {
        const double exact = 2.0 - 2.0 * std::cos((k + 1) * M_PI / (n + 1));
        CHECK(ev[k] == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK(sturm_count(t, ev[2] + 1e-9) == 3);
    auto [lo, hi] = gershgorin_bounds(t);
    CHECK(lo <= ev[0]);
    CHECK(hi >= 4.0 - 1e-12);

    auto v = inverse_iteration(t, ev[0]);
    double norm = 0.0, resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        norm += v[i] * v[i];
        double tv = 2.0 * v[i] - (i > 0 ? v[i - 1] : 0.0) - (i + 1 < n ? v[i + 1] : 0.0);
        resid = std::max(resid, std::abs(tv - ev[0] * v[i]));
    }
    CHECK(norm == doctest::Approx(1.0));
    CHECK(resid < 1e-10);

    std::vector<double> rhs(n, 1.0);
    shifted_solve(t, 0.5, rhs);
    double r0 = (2.0 - 0.5) * rhs[0] - rhs[1];
    CHECK(r0 == doctest::Approx(1.0));
}
