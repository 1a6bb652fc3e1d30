// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only 1,5,7] [--expect-fail 7]
// Criteria named in --expect-fail still print FAIL; the exit code is nonzero
// when any other criterion fails or when an expected failure passes.

#include "magspec/asymptotics.hpp"
#include "magspec/core.hpp"
#include "magspec/counting.hpp"
#include "magspec/dynamics.hpp"
#include "magspec/model2d.hpp"
#include "magspec/oscillator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace magspec;

namespace {

const auto D = BoundaryCondition::dirichlet();
const auto N = BoundaryCondition::neumann();

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

OscillatorGrid grid_with_step(double step) {
    OscillatorGrid g;
    g.step = step;
    return g;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return out;
}

Outcome eta0_values() {
    double worst = 0.0;
    auto d = solve_eigenvalues(0.0, D, 4);
    auto n = solve_eigenvalues(0.0, N, 4);
    for (int k = 0; k <= 4; ++k) {
        worst = std::max(worst, std::abs(d[k] - (4 * k + 3)));
        worst = std::max(worst, std::abs(n[k] - (4 * k + 1)));
    }
    return {worst < 1e-6, "max |error| " + fmt(worst)};
}

Outcome interlacing() {
    // Deviations from 2n+1 keep their relative accuracy where the gaps are exponentially small.
    const auto grid = grid_with_step(1e-2);
    int bad = 0;
    std::vector<double> prev(4, INFINITY);
    for (double eta : linspace(-4.0, 6.0, 200)) {
        auto d = solve_spectrum(eta, D, 3, grid);
        auto n = solve_spectrum(eta, N, 4, grid);
        for (int k = 0; k <= 3; ++k) {
            bad += !(n[k].deviation < d[k].deviation);
            bad += !(d[k].lambda < n[k + 1].lambda);
            bad += !(d[k].deviation < prev[k]);
            prev[k] = d[k].deviation;
        }
    }
    return {bad == 0, std::to_string(bad) + " violations on 200 points"};
}

Outcome dauge_helffer() {
    const auto grid = grid_with_step(1e-2);
    const double step = 1e-3;
    double worst = 0.0;
    for (auto bc : {D, N}) {
        for (int n = 0; n <= 2; ++n) {
            for (double eta : linspace(-3.0, 2.0, 20)) {
                auto p = solve_spectrum(eta, bc, n, grid).back();
                const double fd =
                    (branch_value(eta + step, bc, n, grid) - branch_value(eta - step, bc, n, grid)) / (2.0 * step);
                worst = std::max(worst, std::abs(dh_derivative(p, eta, bc) - fd) / std::abs(fd));
            }
        }
    }
    return {worst < 1e-3, "max relative error " + fmt(worst)};
}

Outcome neumann_minima() {
    bool ok = true;
    double value_err = 0.0, curv_err = 0.0;
    double prev_eta = -INFINITY;
    std::ostringstream etas;
    for (int n = 0; n <= 2; ++n) {
        auto m = neumann_minimum(n);
        value_err = std::max(value_err, std::abs(m.lambda - m.eta * m.eta));
        curv_err = std::max(curv_err, std::abs(m.curvature_fd - m.curvature_dh) / std::abs(m.curvature_dh));
        ok = ok && m.eta > prev_eta;
        prev_eta = m.eta;
        etas << (n ? "," : "") << fmt(m.eta);
    }
    ok = ok && value_err < 1e-6 && curv_err < 0.05;
    return {ok, "eta_n " + etas.str() + ", |lambda - eta^2| " + fmt(value_err) + ", curvature " + fmt(curv_err)};
}

Outcome splitting() {
    double worst = 0.0;
    const auto window = linspace(2.5, 3.5, 21);
    for (auto bc : {D, N}) {
        for (int n = 0; n <= 1; ++n) {
            auto fit = fit_leading_coefficient(branch_sample(bc, n, window), {2.5, 3.5});
            worst = std::max(worst, std::abs(fit.c0 - leading_coefficient(n)) / leading_coefficient(n));
        }
    }
    return {worst < 0.1, "max relative error " + fmt(worst)};
}

Outcome airy_regime() {
    const double eta = -8.0;
    const double scale = std::pow(16.0, 2.0 / 3.0);
    const double d = (branch_value(eta, D, 0) - eta * eta) / scale;
    const double n = (branch_value(eta, N, 0) - eta * eta) / scale;
    const double ed = std::abs(d - airy_zero(AiryKind::Ai, 1)) / airy_zero(AiryKind::Ai, 1);
    const double en = std::abs(n - airy_zero(AiryKind::AiPrime, 1)) / airy_zero(AiryKind::AiPrime, 1);
    return {ed < 0.05 && en < 0.05, "relative error D " + fmt(ed) + ", N " + fmt(en)};
}

Outcome robin_bridge() {
    const std::vector<double> alphas = {0.0, 0.5, 1.0, 2.0, 8.0, 32.0};
    auto v = robin_family(0.0, alphas, 0);
    bool increasing = true;
    for (std::size_t i = 1; i < v.size(); ++i) increasing = increasing && v[i] > v[i - 1];
    const double to_n = std::abs(v.front() - branch_value(0.0, N, 0));
    const double to_d = std::abs(v.back() - branch_value(0.0, D, 0));
    return {increasing && to_n < 1e-4 && to_d < 2e-2, std::string(increasing ? "increasing" : "not increasing") +
                                                          ", |alpha=0 - N| " + fmt(to_n) + ", |alpha=32 - D| " +
                                                          fmt(to_d)};
}

Outcome dual_form() {
    const auto grid = grid_with_step(1e-2);
    double worst = 0.0;
    for (auto bc : {D, N}) {
        for (double tau : {0.8, 1.0, 1.3}) {
            for (double hbar : {0.2, 0.1, 0.05}) {
                auto b = bound_correction_branch(bc, tau, hbar, grid);
                auto e = bound_correction_eigfn(bc, tau, hbar, grid);
                worst = std::max(worst, std::abs(b.value - e.value) / (b.quad_error + e.quad_error));
            }
        }
    }
    return {worst <= 1.0, "max difference / combined error " + fmt(worst)};
}

Outcome kappa0() {
    const double limit = kappa0_limit(D, 1.0);
    std::vector<double> dist;
    std::ostringstream vals;
    for (double hbar : {0.2, 0.1, 0.05}) {
        const double v = bound_correction_branch(D, 1.0, hbar).value;
        dist.push_back(std::abs(v - limit));
        vals << (dist.size() > 1 ? "," : "") << fmt(v);
    }
    const bool approaching = dist[1] < dist[0] && dist[2] < dist[1];
    const double rel = dist.back() / std::abs(limit);
    return {approaching && rel < 0.1, "values " + vals.str() + ", relative distance at 0.05 " + fmt(rel)};
}

Outcome trace_identity() {
    const ModelParams p(1.0, 0.25);
    double worst = 0.0;
    for (auto bc : {D, N}) {
        auto td = trace_defect(1.0, p, bc);
        auto nb = bound_correction_branch(bc, 1.0, p.mu() * p.h());
        worst = std::max(worst, std::abs(td.value - nb.value / p.h()) / (td.error + nb.quad_error / p.h()));
    }
    return {worst <= 1.0, "max difference / combined error " + fmt(worst)};
}

/// Periodic strip of width L1 = 6/mu + 6 magnetic lengths, Dirichlet on the far side.
OracleProblem strip_problem(const ModelParams& params, const BoundaryCondition& bc, double V) {
    const double ell = params.hbar_half();
    OracleProblem op;
    op.L1 = 6.0 / params.mu() + 6.0 * ell;
    op.L2 = 40.0 * params.h();
    op.n1 = static_cast<int>(std::ceil(op.L1 * 8.0 / ell));
    op.n2 = static_cast<int>(std::ceil(op.L2 * 4.0 / params.h()));
    op.bc = bc;
    op.V = [V](double, double) { return V; };
    op.params = params;
    op.cap = 200000;
    return op;
}

Outcome two_term_vs_oracle() {
    int better = 0, doubling_ok = 0;
    std::ostringstream rows;
    for (double h : {0.2, 0.14, 0.1, 0.07, 0.05}) {
        const ModelParams params(std::pow(h, -0.5), h);
        auto op = strip_problem(params, D, -1.0);
        const long base = oracle_count_2d(op, 0.0).count;
        OracleProblem fine = op;
        fine.n1 *= 2;
        fine.n2 *= 2;
        const long doubled = oracle_count_2d(fine, 0.0).count;

        RectDomain dom;
        dom.x1_max = op.L1;
        dom.x2_max = op.L2;
        dom.edges = {{EdgeSide::X1Min, D}, {EdgeSide::X1Max, D}};
        auto one = [](double, double) { return 1.0; };
        auto two = two_term_count(dom, one, op.V, params, 0.0, one);

        const double e_two = std::abs(base - two.total);
        const double e_bulk = std::abs(base - two.bulk);
        const double e_grid = std::abs(static_cast<double>(doubled - base));
        better += e_two < e_bulk;
        doubling_ok += e_grid < e_two && e_grid < e_bulk;
        rows << " h=" << h << ":" << base << "/" << doubled << "/" << fmt(two.total) << "/" << fmt(two.bulk);
    }
    return {better >= 4 && doubling_ok == 5,
            std::to_string(better) + "/5 two-term closer, doubling below both in " + std::to_string(doubling_ok) +
                "/5;" + rows.str()};
}

Outcome billiard() {
    const double mu = 10.0;
    const auto W = PotentialField::constant(1.0);
    FlowOptions o;
    o.tol = 1e-12;
    double chord_err = 0.0, time_err = 0.0, speed_err = 0.0;
    for (double eta : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        const auto hm = hop_metrics(1.0, eta, mu);
        auto traj = integrate_flow(apex_state(eta, 1.0, mu), W, ModelParams(mu, 0.01), 51.0 * hm.time, o);
        if (traj.hops.size() < 50) return {false, "fewer than 50 hops at eta " + fmt(eta)};
        for (const auto& hop : traj.hops) {
            chord_err = std::max(chord_err, std::abs(hop.chord() - hm.chord));
            time_err = std::max(time_err, std::abs(hop.time() - hm.time));
        }
        const auto& r0 = traj.reflections.front();
        const auto& r1 = traj.reflections.back();
        const double speed = (r1.x2 - r0.x2) / (r1.t - r0.t);
        const double theory = -2.0 * hop_speed(eta);
        speed_err = std::max(speed_err, std::abs(speed - theory) / std::abs(theory));
    }
    return {chord_err < 1e-6 && time_err < 1e-6 && speed_err < 1e-3,
            "chord " + fmt(chord_err) + ", time " + fmt(time_err) + ", speed " + fmt(speed_err)};
}

Outcome adiabatic() {
    FlowOptions o;
    o.tol = 1e-11;
    o.stop_x2_travel = 1.0;
    auto W0 = [](double x2) { return 1.0 + 0.1 * x2; };
    double C = 0.0;
    for (double mu : {50.0, 100.0}) {
        for (double rho : {0.1, 0.2}) {
            auto traj = integrate_flow(apex_state(rho - 1.0, 1.0, mu), PotentialField::linear(1.0, 0.0, 0.1),
                                       ModelParams(mu, 0.01), 100.0, o);
            auto inv = adiabatic_invariant(traj, W0);
            auto [lo, hi] = std::minmax_element(inv.begin(), inv.end());
            double mean = 0.0;
            for (double v : inv) mean += v;
            mean /= static_cast<double>(inv.size());
            C = std::max(C, (*hi - *lo) / mean / (1.0 / mu + rho));
        }
    }
    return {C <= 2.0, "measured C " + fmt(C)};
}

Outcome spectral_gap() {
    // z = 1, mu h = 2, F = 1, V = 0.5, tau = 0: level tau + z mu h sits below the Dirichlet edge mu h + V.
    const ModelParams params(4.0, 0.5);
    const double mu_h = params.mu() * params.h();
    const double V = 0.5, tau = 0.0, z = 1.0;
    const bool gap = spectral_gap_check({0, 3}, z, mu_h, {1.0, 1.0}, {V, V}, tau, 0.1).gap;
    const bool elliptic = boundary_elliptic(D, 0, z, mu_h, {1.0, 1.0}, {V, V}, tau, 0.1);
    const double corr = superstrong_bound_correction(D, z, params, PotentialField::constant(tau - V),
                                                     [](double, double) { return 1.0; });
    const long count = oracle_count_2d(strip_problem(params, D, V), tau + z * mu_h).count;
    return {gap && elliptic && corr == 0.0 && count == 0,
            std::string(gap ? "gap" : "no gap") + ", " + (elliptic ? "elliptic" : "not elliptic") +
                ", correction " + fmt(corr) + ", oracle count " + std::to_string(count)};
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only, expect_fail;
    CLI::App app{"magspec acceptance suite"};
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--expect-fail", expect_fail, "Criteria known to fail")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "boundary eigenvalues at eta = 0", eta0_values},
        {2, "interlacing and monotonicity", interlacing},
        {3, "Dauge-Helffer derivative", dauge_helffer},
        {4, "Neumann minima", neumann_minima},
        {5, "exponential splitting coefficient", splitting},
        {6, "Airy regime", airy_regime},
        {7, "Robin bridge", robin_bridge},
        {8, "dual-form equality", dual_form},
        {9, "kappa0 limit", kappa0},
        {10, "trace-defect identity", trace_identity},
        {11, "two-term count vs oracle", two_term_vs_oracle},
        {12, "billiard closed forms", billiard},
        {13, "adiabatic invariant", adiabatic},
        {14, "spectral-gap predicate", spectral_gap},
    };

    const std::set<int> xfail(expect_fail.begin(), expect_fail.end());
    int passed = 0, ran = 0, unexpected = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++ran;
        passed += r.pass;
        const bool expected = xfail.count(c.id) != 0;
        if (r.pass == expected) ++unexpected;
        std::printf("%s %2d %s: %s (%.1f s)%s\n", r.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), r.detail.c_str(),
                    secs, expected ? (r.pass ? " [expected to fail]" : " [known failure]") : "");
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", passed, ran);
    return unexpected == 0 ? 0 : 1;
}
