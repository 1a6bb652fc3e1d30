#include "commands.hpp"

#include "magspec/asymptotics.hpp"
#include "magspec/branch_cache.hpp"
#include "magspec/counting.hpp"
#include "magspec/dynamics.hpp"
#include "magspec/model2d.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

namespace magspec::cli {

OscillatorGrid Settings::grid() const {
    OscillatorGrid g;
    g.step = grid_step;
    g.validate();
    return g;
}

BoundaryCondition Settings::boundary() const { return BoundaryCondition::parse(bc); }

std::vector<double> Settings::taus() const { return parse_real_range(tau); }

double Settings::tau_value() const {
    auto t = taus();
    if (t.size() != 1) throw InvalidArgument(subcommand + ": --tau takes a single value here");
    return t.front();
}

unsigned Settings::workers() const { return jobs == 0 ? default_jobs() : jobs; }

namespace {

using Row = std::vector<Cell>;

std::unique_ptr<BranchStore> open_store(const Settings& s) {
    if (s.cache.empty()) return nullptr;
    return std::make_unique<BranchStore>(s.cache);
}

EigfnQuadrature eigfn_quadrature(const Settings& s) {
    EigfnQuadrature q;
    if (s.tol > 0.0) q.panel_tol = s.tol;
    q.jobs = s.workers();
    return q;
}

FlowOptions flow_options(const Settings& s) {
    FlowOptions o;
    if (s.tol > 0.0) o.tol = s.tol;
    return o;
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw InvalidArgument(std::string(what) + " must be positive");
}

std::string side_name(double v) { return v > 0 ? "+" : (v < 0 ? "-" : "0"); }

std::string shape_name(PortraitShape s) { return s == PortraitShape::Linear ? "linear" : "quadratic"; }

}  // namespace

CommandResult cmd_branches(const Settings& s) {
    const auto bc = s.boundary();
    const auto grid = s.grid();
    const auto ns = parse_int_range(s.n);
    const auto etas = parse_real_range(s.eta);
    auto store = open_store(s);

    struct Job {
        int n;
        double eta;
    };
    std::vector<Job> jobs;
    for (int n : ns) {
        if (n < 0) throw InvalidArgument("branches: --n must be >= 0");
        for (double e : etas) jobs.push_back({n, e});
    }
    std::vector<EigenPair> pairs(jobs.size());
    parallel_for(jobs.size(), s.workers(), [&](std::size_t i) {
        pairs[i] = cached_eigenpair(jobs[i].eta, bc, jobs[i].n, grid, store.get());
    });

    Table t("branches", {"bc", "n", "eta", "lambda", "deviation", "boundary_value", "boundary_derivative",
                         "dlambda_deta"});
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& p = pairs[i];
        t.add({bc.to_string(), static_cast<long long>(jobs[i].n), jobs[i].eta, p.lambda, p.deviation,
               p.boundary_value, p.boundary_derivative, dh_derivative(p, jobs[i].eta, bc)});
    }
    return {{std::move(t)}, true};
}

CommandResult cmd_asymptotics(const Settings& s) {
    const auto bc = s.boundary();
    const auto grid = s.grid();
    const auto ns = parse_int_range(s.n_fit);
    const auto window = parse_real_range(s.window);
    if (window.size() < 4) throw InvalidArgument("asymptotics: --window needs at least 4 points");

    Table t("asymptotics", {"kind", "bc", "n", "eta", "value", "reference", "rel_error"});
    auto add = [&](const char* kind, int n, double eta, double value, double reference) {
        t.add({std::string(kind), bc.to_string(), static_cast<long long>(n), eta, value, reference,
               std::abs(value - reference) / std::abs(reference)});
    };
    for (int n : ns) {
        if (n < 0) throw InvalidArgument("asymptotics: --n must be >= 0");
        auto branch = branch_sample(bc, n, window, grid, s.workers());
        auto fit = fit_leading_coefficient(branch, {window.front(), window.back()});
        add("splitting_c0", n, 0.5 * (window.front() + window.back()), fit.c0, leading_coefficient(n));

        if (bc.kind != BcKind::Robin) {
            const double eta = -8.0;
            const double lambda = branch_value(eta, bc, n, grid);
            const double scaled = (lambda - eta * eta) / std::cbrt(4.0 * eta * eta);
            const auto kind = bc.is_dirichlet() ? AiryKind::Ai : AiryKind::AiPrime;
            add("airy_zero", n, eta, scaled, airy_zero(kind, n + 1));
        }
        if (!bc.is_dirichlet()) {
            auto m = branch_minimum(bc, n, grid);
            add("minimum_value", n, m.eta, m.lambda, m.eta * m.eta - bc.alpha * bc.alpha);
            add("minimum_curvature", n, m.eta, m.curvature_fd, m.curvature_dh);
        }
    }
    return {{std::move(t)}, true};
}

CommandResult cmd_bound_correction(const Settings& s) {
    const auto bc = s.boundary();
    const auto grid = s.grid();
    const auto taus = s.taus();
    const auto hbars = parse_real_range(s.hbar);
    if (s.method != "branch" && s.method != "eigfn" && s.method != "both") {
        throw InvalidArgument("bound-correction: --method must be branch, eigfn or both");
    }
    const bool want_branch = s.method != "eigfn";
    const bool want_eigfn = s.method != "branch";

    Table t("bound_correction", {"bc", "tau", "hbar", "method", "value", "quad_error", "truncation", "kappa0"});
    for (double tau : taus) {
        for (double hbar : hbars) {
            require_positive(hbar, "--hbar");
            const double k0 = kappa0_limit(bc, tau);
            if (want_branch) {
                auto r = bound_correction_branch(bc, tau, hbar, grid);
                t.add({bc.to_string(), tau, hbar, std::string("branch"), r.value, r.quad_error, r.eta_max, k0});
            }
            if (want_eigfn) {
                auto r = bound_correction_eigfn(bc, tau, hbar, grid, eigfn_quadrature(s));
                t.add({bc.to_string(), tau, hbar, std::string("eigfn"), r.value, r.quad_error, r.x1_cut, k0});
            }
        }
    }
    return {{std::move(t)}, true};
}

CommandResult cmd_density_profile(const Settings& s) {
    const auto bc = s.boundary();
    const double tau = s.tau_value();
    const ModelParams params(s.mu, s.h);
    const auto x1 = parse_real_range(s.x1);
    KernelOptions ko;
    ko.grid = s.grid();
    ko.jobs = s.workers();

    Table t("density_profile", {"x1", "s", "defect"});
    for (auto [x, d] : defect_profile(tau, params, bc, x1, ko)) t.add({x, x / params.hbar_half(), d});
    CommandResult res{{std::move(t)}, true};

    if (s.trace) {
        auto td = trace_defect(tau, params, bc, ko);
        auto nb = bound_correction_branch(bc, tau, params.hbar_large(), ko.grid);
        Table sum("density_profile_trace", {"bc", "tau", "mu", "h", "trace", "trace_error", "scaled_bound",
                                            "scaled_bound_error"});
        sum.add({bc.to_string(), tau, s.mu, s.h, td.value, td.error, nb.value / s.h, nb.quad_error / s.h});
        res.tables.push_back(std::move(sum));
    }
    return res;
}

CommandResult cmd_count_compare(const Settings& s) {
    const auto bc = s.boundary();
    const double tau = s.tau_value();
    const auto hs = parse_real_range(s.hs);
    require_positive(s.strip, "--strip");
    require_positive(s.cells1, "--cells1");
    require_positive(s.cells2, "--cells2");
    if (s.cap <= 0) throw InvalidArgument("count-compare: --cap must be positive");

    Table t("count_compare", {"h", "mu", "L1", "L2", "n1", "n2", "oracle", "oracle_doubled", "two_term", "bulk",
                              "boundary"});
    for (double h : hs) {
        require_positive(h, "--hs");
        const double mu = std::pow(h, s.mu_power);
        const ModelParams params(mu, h);
        const double ell = params.hbar_half();

        OracleProblem op;
        op.L1 = 6.0 / mu + 6.0 * ell;
        op.L2 = s.strip * h;
        op.n1 = static_cast<int>(std::ceil(op.L1 * s.cells1 / ell));
        op.n2 = static_cast<int>(std::ceil(op.L2 * s.cells2 / h));
        op.bc = bc;
        const double v = s.V;
        op.V = [v](double, double) { return v; };
        op.params = params;
        op.cap = static_cast<std::size_t>(s.cap);
        const long base = oracle_count_2d(op, tau).count;

        std::optional<long> fine;
        if (s.doubled) {
            OracleProblem od = op;
            od.n1 *= 2;
            od.n2 *= 2;
            fine = oracle_count_2d(od, tau).count;
        }

        RectDomain dom;
        dom.x1_max = op.L1;
        dom.x2_max = op.L2;
        dom.edges = {{EdgeSide::X1Min, bc}, {EdgeSide::X1Max, BoundaryCondition::dirichlet()}};
        TwoTermOptions to;
        to.grid = s.grid();
        auto two = two_term_count(dom, [](double, double) { return 1.0; }, op.V, params, tau,
                                  [](double, double) { return 1.0; }, to);

        t.add({h, mu, op.L1, op.L2, static_cast<long long>(op.n1), static_cast<long long>(op.n2),
               static_cast<long long>(base),
               fine ? Cell(static_cast<long long>(*fine)) : Cell(std::string("")), two.total, two.bulk,
               two.boundary});
    }
    return {{std::move(t)}, true};
}

CommandResult cmd_billiard(const Settings& s) {
    require_positive(s.w0, "--w0");
    if (s.hops < 1) throw InvalidArgument("billiard: --hops must be >= 1");
    const ModelParams params(s.mu, s.h);
    const auto W = PotentialField::constant(s.w0);
    const double a = std::sqrt(s.w0);
    const auto etas = parse_real_range(s.etas);

    Table summary("billiard", {"eta", "hops", "chord", "chord_theory", "time", "time_theory", "max_chord_error",
                               "max_time_error", "mean_speed", "mean_speed_theory"});
    Table path("billiard_samples", {"eta", "t", "x1", "x2", "xi1", "xi2", "reflection"});
    for (double eta : etas) {
        if (!(std::abs(eta) < 1.0)) throw InvalidArgument("billiard: hop parameters need |eta| < 1");
        const auto hm = hop_metrics(a, eta, s.mu);
        auto traj = integrate_flow(apex_state(eta, s.w0, s.mu), W, params, (s.hops + 1) * hm.time,
                                   flow_options(s));
        if (traj.hops.empty()) throw NumericalError("billiard: no complete hop within the integration time");
        double ce = 0.0, te = 0.0;
        for (const auto& hop : traj.hops) {
            ce = std::max(ce, std::abs(hop.chord() - hm.chord));
            te = std::max(te, std::abs(hop.time() - hm.time));
        }
        const auto& r0 = traj.reflections.front();
        const auto& r1 = traj.reflections.back();
        const double speed = (r1.x2 - r0.x2) / (r1.t - r0.t);
        const auto& last = traj.hops.back();
        summary.add({eta, static_cast<long long>(traj.hops.size()), last.chord(), hm.chord, last.time(), hm.time, ce,
                     te, speed, -2.0 * a * hop_speed(eta)});
        if (s.samples) {
            for (std::size_t i = 0; i < traj.samples.size(); ++i) {
                const auto& p = traj.samples[i];
                path.add({eta, p.t, p.x1, p.x2, p.xi1, p.xi2, traj.event_flags[i] != 0});
            }
        }
    }
    CommandResult res;
    res.tables.push_back(std::move(summary));
    if (s.samples) res.tables.push_back(std::move(path));
    return res;
}

CommandResult cmd_portraits(const Settings& s) {
    const ModelParams params(s.mu, s.h);
    std::vector<PortraitShape> shapes;
    if (s.shape == "linear" || s.shape == "both") shapes.push_back(PortraitShape::Linear);
    if (s.shape == "quadratic" || s.shape == "both") shapes.push_back(PortraitShape::Quadratic);
    if (shapes.empty()) throw InvalidArgument("portraits: --shape must be linear, quadratic or both");
    if (s.cases.empty()) throw InvalidArgument("portraits: --cases is empty");

    Table samples("portraits", {"case", "shape", "label", "t", "x1", "x2", "xi1", "xi2"});
    Table summary("portraits_summary", {"case", "shape", "W_x1", "W_x2", "hop_torn_off", "drift_collided",
                                        "check_passed"});
    for (char c : s.cases) {
        for (auto shape : shapes) {
            auto b = portrait({c, shape}, params, s.workers());
            const std::string id(1, c);
            for (std::size_t k = 0; k < b.trajectories.size(); ++k) {
                for (const auto& p : b.trajectories[k].samples) {
                    samples.add({id, shape_name(shape), b.labels[k], p.t, p.x1, p.x2, p.xi1, p.xi2});
                }
            }
            auto g = b.W.gradient(0.0, 0.0);
            summary.add({id, shape_name(shape), side_name(g[0]), side_name(g[1]), b.hop_torn_off, b.drift_collided,
                         b.check_passed});
        }
    }
    CommandResult res;
    res.tables.push_back(std::move(samples));
    res.tables.push_back(std::move(summary));
    return res;
}

namespace {

struct Check {
    std::string name;
    std::function<std::pair<bool, std::string>()> run;
};

std::string fmt(double v) { return format_real(v); }

std::vector<Check> invariant_suite(const Settings& s) {
    const auto D = BoundaryCondition::dirichlet();
    const auto N = BoundaryCondition::neumann();
    const OscillatorGrid grid = s.grid();
    OscillatorGrid coarse = grid;
    coarse.step = std::max(grid.step, 1e-2);

    std::vector<Check> checks;
    checks.push_back({"eta0_eigenvalues", [=] {
        double worst = 0.0;
        auto d = solve_eigenvalues(0.0, D, 2, grid);
        auto n = solve_eigenvalues(0.0, N, 2, grid);
        for (int k = 0; k < 3; ++k) {
            worst = std::max(worst, std::abs(d[k] - (4 * k + 3)));
            worst = std::max(worst, std::abs(n[k] - (4 * k + 1)));
        }
        return std::pair{worst < 1e-6, "max error " + fmt(worst)};
    }});
    checks.push_back({"interlacing", [=] {
        int bad = 0;
        double prev = INFINITY;
        for (int i = 0; i <= 20; ++i) {
            const double eta = -3.0 + 0.4 * i;
            auto d = solve_eigenvalues(eta, D, 2, coarse);
            auto n = solve_eigenvalues(eta, N, 3, coarse);
            for (int k = 0; k < 3; ++k) bad += !(n[k] < d[k] && d[k] < n[k + 1]);
            bad += !(d[0] < prev);
            prev = d[0];
        }
        return std::pair{bad == 0, std::to_string(bad) + " violations"};
    }});
    checks.push_back({"dauge_helffer", [=] {
        double worst = 0.0;
        for (auto bc : {D, N}) {
            const double eta = 0.7, step = 1e-3;
            auto p = solve_spectrum(eta, bc, 0, grid).back();
            const double fd =
                (branch_value(eta + step, bc, 0, grid) - branch_value(eta - step, bc, 0, grid)) / (2 * step);
            worst = std::max(worst, std::abs(dh_derivative(p, eta, bc) - fd) / std::abs(fd));
        }
        return std::pair{worst < 1e-3, "max relative error " + fmt(worst)};
    }});
    checks.push_back({"neumann_minimum", [=] {
        auto m = neumann_minimum(0, grid);
        const double err = std::abs(m.lambda - m.eta * m.eta);
        return std::pair{err < 1e-6, "lambda - eta^2 = " + fmt(err)};
    }});
    checks.push_back({"airy_zero", [] {
        const double z = airy_zero(AiryKind::Ai, 1);
        const double v = std::abs(airy_ai(-z));
        return std::pair{v < 1e-10 && std::abs(z - 2.338107410459767) < 1e-9, "|Ai(-a1)| = " + fmt(v)};
    }});
    checks.push_back({"dual_form", [=] {
        double worst = 0.0;
        for (auto bc : {D, N}) {
            auto b = bound_correction_branch(bc, 1.3, 0.2, coarse);
            EigfnQuadrature q;
            q.jobs = s.workers();
            auto e = bound_correction_eigfn(bc, 1.3, 0.2, coarse, q);
            worst = std::max(worst, std::abs(b.value - e.value) / (b.quad_error + e.quad_error + 1e-12));
        }
        return std::pair{worst <= 1.0, "difference / combined error = " + fmt(worst)};
    }});
    checks.push_back({"landau_threshold", [] {
        const double at = 3.0 * 0.5;
        const double l = n_mw_density(1.0, 0.0, at, 0.5, 1.0, HeavisideConvention::LeftContinuous);
        const double r = n_mw_density(1.0, 0.0, at, 0.5, 1.0, HeavisideConvention::RightContinuous);
        const double below = n_mw_density(1.0, 0.0, at - 1e-9, 0.5, 1.0, HeavisideConvention::RightContinuous);
        return std::pair{l == below && r > l, "left " + fmt(l) + ", right " + fmt(r)};
    }});
    checks.push_back({"oracle_gershgorin", [] {
        OracleProblem op;
        op.L1 = 2.0;
        op.L2 = 1.0;
        op.n1 = 12;
        op.n2 = 10;
        op.params = ModelParams(3.0, 0.2);
        auto [lo, hi] = oracle_gershgorin(op);
        const long below = oracle_count_2d(op, lo - 1.0).count;
        const long above = oracle_count_2d(op, hi + 1.0).count;
        return std::pair{below == 0 && above == static_cast<long>(op.unknowns()),
                         std::to_string(below) + " below, " + std::to_string(above) + " above"};
    }});
    checks.push_back({"hop_chord", [] {
        const double mu = 10.0;
        auto traj = integrate_flow(apex_state(0.0, 1.0, mu), PotentialField::constant(1.0), ModelParams(mu, 0.01),
                                   4.0 * std::numbers::pi / mu);
        const double err = std::abs(traj.hops.at(0).chord() - hop_metrics(1.0, 0.0, mu).chord);
        return std::pair{err < 1e-6, "chord error " + fmt(err)};
    }});
    checks.push_back({"cache_round_trip", [=] {
        auto p = solve_spectrum(0.3, N, 1, grid).back();
        BranchRecord r{N, 1, 0.3, grid.fingerprint(), p.lambda, p.deviation, p.boundary_value,
                       p.boundary_derivative};
        auto q = BranchRecord::from_json_line(r.to_json_line());
        const bool same = q.lambda == r.lambda && q.deviation == r.deviation &&
                          q.boundary_value == r.boundary_value && q.boundary_derivative == r.boundary_derivative &&
                          q.eta == r.eta && q.grid == r.grid;
        return std::pair{same, same ? std::string("bit-exact") : std::string("values changed")};
    }});
    return checks;
}

}  // namespace

CommandResult cmd_validate(const Settings& s) {
    Table t("validate", {"check", "passed", "detail"});
    bool ok = true;
    for (const auto& c : invariant_suite(s)) {
        bool passed = false;
        std::string detail;
        try {
            std::tie(passed, detail) = c.run();
        } catch (const std::exception& e) {
            detail = e.what();
        }
        ok = ok && passed;
        t.add({c.name, passed, detail});
    }
    return {{std::move(t)}, ok};
}

}  // namespace magspec::cli
