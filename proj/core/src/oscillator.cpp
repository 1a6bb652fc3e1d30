#include "magspec/oscillator.hpp"

#include "magspec/tridiagonal.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace magspec {
namespace {

constexpr double kGapFloor = 1e-9;
constexpr double kFarMassLimit = 1e-10;
constexpr int kWindowRetries = 3;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Generous upper estimate of lambda_n(eta), used only to size the window.
double lambda_estimate(double eta, int n) {
    double top = 4.0 * n + 3.0;
    if (eta >= 0.0) return top;
    double airy = 1.2 * std::pow(3.0 * std::numbers::pi * (4.0 * n + 3.0) / 8.0, 2.0 / 3.0);
    return eta * eta + std::pow(2.0 * std::abs(eta), 2.0 / 3.0) * airy + top;
}

SymTridiagonal assemble(double eta, const BoundaryCondition& bc, double d, std::size_t N) {
    SymTridiagonal t;
    const double inv = 1.0 / (d * d);
    auto pot = [eta](double s) { return (eta - s) * (eta - s); };
    if (bc.is_dirichlet()) {
        // Unknowns u_1 .. u_{N-1}; u_0 = u_N = 0.
        t.diag.resize(N - 1);
        t.off.assign(N - 2, -inv);
        for (std::size_t i = 1; i < N; ++i) {
            t.diag[i - 1] = 2.0 * inv + pot(static_cast<double>(i) * d);
        }
    } else {
        // Unknowns u_0 .. u_{N-1} with ghost point u_{-1} = u_1 - 2 d alpha u_0,
        // symmetrized by w_0 = u_0 / sqrt(2).
        const double alpha = bc.robin_alpha();
        t.diag.resize(N);
        t.off.assign(N - 1, -inv);
        for (std::size_t i = 0; i < N; ++i) t.diag[i] = 2.0 * inv + pot(static_cast<double>(i) * d);
        t.diag[0] += 2.0 * alpha / d;
        t.off[0] = -std::numbers::sqrt2 * inv;
    }
    return t;
}

std::vector<double> to_samples(const std::vector<double>& w, const BoundaryCondition& bc, double d,
                               std::size_t N) {
    std::vector<double> u(N + 1, 0.0);
    const double scale = 1.0 / std::sqrt(d);
    if (bc.is_dirichlet()) {
        for (std::size_t i = 1; i < N; ++i) u[i] = w[i - 1] * scale;
    } else {
        u[0] = std::numbers::sqrt2 * w[0] * scale;
        for (std::size_t i = 1; i < N; ++i) u[i] = w[i] * scale;
    }
    // The lobe nearest the boundary is positive.
    double peak = 0.0;
    for (double v : u) peak = std::max(peak, std::abs(v));
    for (double v : u) {
        if (std::abs(v) > 1e-3 * peak) {
            if (v < 0.0) {
                for (double& x : u) x = -x;
            }
            break;
        }
    }
    return u;
}

LevelSolution solve_level(double eta, const BoundaryCondition& bc, int n_max, double d, double S,
                          bool want_vectors) {
    const auto N = static_cast<std::size_t>(std::llround(S / d));
    if (N < static_cast<std::size_t>(n_max) + 8) {
        throw NumericalError("oscillator: window of " + std::to_string(N) +
                             " points cannot hold the requested levels");
    }
    SymTridiagonal t = assemble(eta, bc, d, N);
    LevelSolution out;
    out.step = d;
    out.lambda = lowest_eigenvalues(t, static_cast<std::size_t>(n_max) + 1, 1e-14);
    if (want_vectors) {
        out.u.reserve(out.lambda.size());
        for (double lam : out.lambda) {
            out.u.push_back(to_samples(inverse_iteration(t, lam, 3), bc, d, N));
        }
    }
    return out;
}

double far_mass(const std::vector<double>& u, double d) {
    const auto tail = static_cast<std::size_t>(std::llround(1.0 / d));
    double m = 0.0;
    for (std::size_t i = u.size() > tail ? u.size() - tail : 0; i < u.size(); ++i) m += u[i] * u[i];
    return m * d;
}

double boundary_derivative_s(const std::vector<double>& u, double d, const BoundaryCondition& bc) {
    if (bc.is_dirichlet()) {
        return (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * d);
    }
    return bc.robin_alpha() * u[0];
}

void check_gaps(const std::vector<double>& lam, double eta) {
    for (std::size_t i = 0; i + 1 < lam.size(); ++i) {
        if (!(lam[i + 1] - lam[i] > kGapFloor)) {
            throw NumericalError("oscillator: levels " + std::to_string(i) + " and " +
                                 std::to_string(i + 1) + " collide at eta = " + fmt(eta) +
                                 " (grid too coarse to separate them)");
        }
    }
}

bool tunneling_regime(double eta, int n, double deviation, const OscillatorGrid& grid) {
    return grid.tunneling_threshold > 0.0 && std::abs(deviation) < grid.tunneling_threshold &&
           eta > std::sqrt(2.0 * n + 1.0) + 0.5;
}

}  // namespace

void OscillatorGrid::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("OscillatorGrid: step must be > 0");
    if (!(left_cut >= 8.0)) throw InvalidArgument("OscillatorGrid: left_cut must be >= 8");
    if (richardson_levels < 1 || richardson_levels > 5) {
        throw InvalidArgument("OscillatorGrid: richardson_levels must lie in [1, 5]");
    }
    if (!(tunneling_threshold >= 0.0)) throw InvalidArgument("OscillatorGrid: bad tunneling threshold");
}

std::string OscillatorGrid::describe() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "step=%.17g;left_cut=%.17g;levels=%d;tunnel=%.17g", step,
                  left_cut, richardson_levels, tunneling_threshold);
    return buf;
}

std::string OscillatorGrid::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : describe()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double EigenPair::value_at(double s) const {
    if (samples.empty() || s < 0.0) return 0.0;
    double x = s / sample_step;
    auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples.size()) return 0.0;
    double f = x - static_cast<double>(i);
    return samples[i] * (1.0 - f) + samples[i + 1] * f;
}

double EigenPair::partial_mass(double X) const {
    if (samples.empty() || X <= 0.0) return 0.0;
    const double d = sample_step;
    double m = 0.0;
    std::size_t i = 0;
    for (; i + 1 < samples.size() && static_cast<double>(i + 1) * d <= X; ++i) {
        m += 0.5 * d * (samples[i] * samples[i] + samples[i + 1] * samples[i + 1]);
    }
    if (i + 1 < samples.size()) {
        double rest = X - static_cast<double>(i) * d;
        double ux = value_at(X);
        m += 0.5 * rest * (samples[i] * samples[i] + ux * ux);
    }
    return m;
}

std::pair<double, double> richardson(const std::vector<double>& values) {
    const std::size_t L = values.size();
    if (L == 0) throw InvalidArgument("richardson: no values");
    if (L == 1) return {values[0], 0.0};
    std::vector<double> prev(values), cur;
    double previous_best = values.back();
    double factor = 4.0;
    for (std::size_t m = 1; m < L; ++m) {
        cur.assign(L - m, 0.0);
        for (std::size_t k = 0; k + m < L; ++k) {
            cur[k] = prev[k + 1] + (prev[k + 1] - prev[k]) / (factor - 1.0);
        }
        previous_best = prev.back();
        prev.swap(cur);
        factor *= 4.0;
    }
    return {prev.back(), std::abs(prev.back() - previous_best)};
}

SpectrumLevels solve_levels(double eta, const BoundaryCondition& bc, int n_max,
                            const OscillatorGrid& grid, bool want_vectors) {
    grid.validate();
    if (!std::isfinite(eta)) throw InvalidArgument("oscillator: eta must be finite");
    if (n_max < 0) throw InvalidArgument("oscillator: n_max must be >= 0");
    const double lam_top = lambda_estimate(eta, n_max);
    if (grid.step * grid.step * lam_top > 0.25) {
        throw NumericalError("oscillator: step " + fmt(grid.step) + " too coarse for level " +
                             std::to_string(n_max) + " at eta = " + fmt(eta));
    }
    double reach = std::max(0.0, eta + std::sqrt(lam_top)) + grid.left_cut;
    for (int attempt = 0; attempt < kWindowRetries; ++attempt) {
        const double S = std::ceil(reach / grid.step) * grid.step;
        SpectrumLevels out;
        out.eta = eta;
        out.bc = bc;
        out.window = S;
        double d = grid.step;
        for (int l = 0; l < grid.richardson_levels; ++l, d *= 0.5) {
            out.levels.push_back(solve_level(eta, bc, n_max, d, S, want_vectors));
        }
        if (!want_vectors) return out;
        const auto& fine = out.levels.back();
        bool ok = true;
        for (const auto& u : fine.u) {
            if (far_mass(u, fine.step) > kFarMassLimit) ok = false;
        }
        if (ok) return out;
        reach *= 1.5;
    }
    throw NumericalError("oscillator: eigenfunction mass at the far cut exceeds " + fmt(kFarMassLimit) +
                         " at eta = " + fmt(eta) + " even with window " + fmt(reach));
}

std::pair<double, double> hermite_function(int n, double y) {
    double p0 = std::exp(-0.5 * y * y) / std::sqrt(std::sqrt(std::numbers::pi));
    if (n == 0) return {p0, -y * p0};
    double p1 = std::numbers::sqrt2 * y * p0;
    double pm = p0;
    double pk = p1;
    for (int k = 1; k < n; ++k) {
        double next = std::sqrt(2.0 / (k + 1)) * y * pk - std::sqrt(static_cast<double>(k) / (k + 1)) * pm;
        pm = pk;
        pk = next;
    }
    // psi_n' = sqrt(n/2) psi_{n-1} - sqrt((n+1)/2) psi_{n+1}
    double pn1 = std::sqrt(2.0 / (n + 1)) * y * pk - std::sqrt(static_cast<double>(n) / (n + 1)) * pm;
    double deriv = std::sqrt(0.5 * n) * pm - std::sqrt(0.5 * (n + 1)) * pn1;
    return {pk, deriv};
}

TunnelingResult tunneling_deviation(double eta, const BoundaryCondition& bc, int n, double start) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    const double E = 2.0 * n + 1.0;
    const double y0 = -(std::sqrt(E) + 9.0);
    const double alpha = bc.robin_alpha();

    // w solves w'' = (y^2 - E - eps) w - c phi with w -> 0 deep in the forbidden region.
    auto shoot = [&](double eps, double c) {
        State x{0.0, 0.0};
        auto rhs = [&](const State& s, State& dsdt, double y) {
            double phi = hermite_function(n, y).first;
            dsdt[0] = s[1];
            dsdt[1] = (y * y - E - eps) * s[0] - c * phi;
        };
        auto stepper = odeint::make_controlled(1e-30, 1e-13, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_adaptive(stepper, rhs, x, y0, eta, 1e-3);
        return x;
    };
    auto functional = [&](double u, double du) { return bc.is_dirichlet() ? u : du + alpha * u; };
    auto [phi, dphi] = hermite_function(n, eta);
    const double b_phi = functional(phi, dphi);

    // Linearized solve, then fixed-point iteration on the full equation.
    State chi = shoot(0.0, 1.0);
    double eps = -b_phi / functional(chi[0], chi[1]);
    if (!std::isfinite(eps)) eps = start;
    State w{};
    for (int it = 0; it < 8; ++it) {
        w = shoot(eps, eps);
        double ratio = functional(w[0], w[1]) / eps;
        double next = -b_phi / ratio;
        bool done = std::abs(next - eps) <= 1e-13 * std::abs(next);
        eps = next;
        if (done) break;
    }
    w = shoot(eps, eps);
    return {eps, phi + w[0], dphi + w[1]};
}

std::vector<EigenPair> solve_spectrum(double eta, const BoundaryCondition& bc, int n_max,
                                      const OscillatorGrid& grid) {
    SpectrumLevels lv = solve_levels(eta, bc, n_max, grid, true);
    const std::size_t L = lv.levels.size();
    std::vector<EigenPair> out(static_cast<std::size_t>(n_max) + 1);
    std::vector<double> lam_values(L), u0_values(L), du_values(L);
    for (int n = 0; n <= n_max; ++n) {
        for (std::size_t l = 0; l < L; ++l) {
            const auto& level = lv.levels[l];
            const auto& u = level.u[static_cast<std::size_t>(n)];
            lam_values[l] = level.lambda[static_cast<std::size_t>(n)];
            u0_values[l] = u[0];
            du_values[l] = -boundary_derivative_s(u, level.step, bc);
        }
        EigenPair& p = out[static_cast<std::size_t>(n)];
        p.index = n;
        auto [lam, lam_err] = richardson(lam_values);
        p.lambda = lam;
        p.lambda_error = lam_err;
        p.deviation = lam - (2.0 * n + 1.0);
        p.boundary_value = bc.is_dirichlet() ? 0.0 : richardson(u0_values).first;
        p.boundary_derivative = richardson(du_values).first;
        if (!bc.is_dirichlet()) p.boundary_derivative = -bc.robin_alpha() * p.boundary_value;
        p.sample_step = lv.levels.back().step;
        p.samples = lv.levels.back().u[static_cast<std::size_t>(n)];
        if (tunneling_regime(eta, n, p.deviation, grid)) {
            TunnelingResult t = tunneling_deviation(eta, bc, n, p.deviation);
            p.deviation = t.deviation;
            p.lambda = 2.0 * n + 1.0 + t.deviation;
            p.boundary_value = bc.is_dirichlet() ? 0.0 : t.boundary_value;
            p.boundary_derivative = t.boundary_derivative;
            p.refined = true;
        }
    }
    std::vector<double> lam(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) lam[i] = out[i].lambda;
    check_gaps(lam, eta);
    return out;
}

std::vector<double> solve_eigenvalues(double eta, const BoundaryCondition& bc, int n_max,
                                      const OscillatorGrid& grid) {
    SpectrumLevels lv = solve_levels(eta, bc, n_max, grid, false);
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
    std::vector<double> values(lv.levels.size());
    for (int n = 0; n <= n_max; ++n) {
        for (std::size_t l = 0; l < lv.levels.size(); ++l) {
            values[l] = lv.levels[l].lambda[static_cast<std::size_t>(n)];
        }
        double lam = richardson(values).first;
        double dev = lam - (2.0 * n + 1.0);
        if (tunneling_regime(eta, n, dev, grid)) {
            lam = 2.0 * n + 1.0 + tunneling_deviation(eta, bc, n, dev).deviation;
        }
        out[static_cast<std::size_t>(n)] = lam;
    }
    check_gaps(out, eta);
    return out;
}

double branch_value(double eta, const BoundaryCondition& bc, int n, const OscillatorGrid& grid) {
    return solve_eigenvalues(eta, bc, n, grid).back();
}

std::vector<double> EigenBranch::etas() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.eta);
    return v;
}

std::vector<double> EigenBranch::lambdas() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.lambda);
    return v;
}

double dh_derivative(const EigenPair& pair, double eta, const BoundaryCondition& bc) {
    if (pair.samples.empty() && !pair.refined) {
        throw InvalidArgument("dh_derivative: eigenpair carries no boundary data");
    }
    switch (bc.kind) {
        case BcKind::Dirichlet:
            return -pair.boundary_derivative * pair.boundary_derivative;
        case BcKind::Neumann:
            return (eta * eta - pair.lambda) * pair.boundary_value * pair.boundary_value;
        case BcKind::Robin:
            return (eta * eta - bc.alpha * bc.alpha - pair.lambda) * pair.boundary_value *
                   pair.boundary_value;
    }
    return 0.0;
}

EigenBranch branch_sample(const BoundaryCondition& bc, int n, const std::vector<double>& eta_grid,
                          const OscillatorGrid& grid, unsigned jobs) {
    if (n < 0) throw InvalidArgument("branch_sample: n must be >= 0");
    for (std::size_t i = 0; i + 1 < eta_grid.size(); ++i) {
        if (!(eta_grid[i + 1] > eta_grid[i])) {
            throw InvalidArgument("branch_sample: eta grid must be strictly increasing");
        }
    }
    EigenBranch br;
    br.bc = bc;
    br.n = n;
    br.grid_fingerprint = grid.fingerprint();
    br.samples.resize(eta_grid.size());
    parallel_for(eta_grid.size(), jobs, [&](std::size_t i) {
        double eta = eta_grid[i];
        auto pairs = solve_spectrum(eta, bc, n, grid);
        const EigenPair& p = pairs.back();
        br.samples[i] = {eta, p.lambda, p.deviation, p.boundary_value, p.boundary_derivative,
                         dh_derivative(p, eta, bc)};
    });
    const double floor = bc.is_dirichlet() ? 2.0 * n + 1.0 : std::max(2.0 * n - 1.0, 0.0);
    for (std::size_t i = 0; i < br.samples.size(); ++i) {
        const auto& s = br.samples[i];
        bool above = bc.is_dirichlet() ? s.deviation > 0.0 : s.lambda > floor;
        if (!above) {
            throw NumericalError("branch_sample: lambda_" + std::to_string(n) + "(" + fmt(s.eta) +
                                 ") = " + fmt(s.lambda) + " violates the lower bound " + fmt(floor));
        }
        if (i == 0) continue;
        const auto& p = br.samples[i - 1];
        if (bc.is_dirichlet() && !(s.deviation < p.deviation)) {
            throw NumericalError("branch_sample: Dirichlet branch not decreasing between eta = " +
                                 fmt(p.eta) + " and " + fmt(s.eta));
        }
        // Continuity against the local Lipschitz bound from the derivative.
        double lip = std::max(std::abs(s.dh_derivative), std::abs(p.dh_derivative));
        double deta = s.eta - p.eta;
        double jump = std::abs(s.lambda - p.lambda);
        double bound = 2.0 * lip * deta + 2.0 * deta * deta * (1.0 + std::abs(s.eta) + std::abs(p.eta)) + 1e-8;
        if (jump > bound) {
            throw NumericalError("branch_sample: branch " + std::to_string(n) + " jumps by " + fmt(jump) +
                                 " between eta = " + fmt(p.eta) + " and " + fmt(s.eta) +
                                 " (possible branch swap)");
        }
    }
    return br;
}

BranchMinimum branch_minimum(const BoundaryCondition& bc, int n, const OscillatorGrid& grid) {
    if (bc.is_dirichlet()) throw InvalidArgument("branch_minimum: Dirichlet branches are monotone");
    if (n < 0) throw InvalidArgument("branch_minimum: n must be >= 0");
    const double a2 = bc.robin_alpha() * bc.robin_alpha();
    auto g = [&](double eta) { return branch_value(eta, bc, n, grid) - (eta * eta - a2); };
    double lo = 0.0;
    double hi = std::sqrt(2.0 * n + 1.0 + a2) + 0.25;
    double glo = g(lo);
    double ghi = g(hi);
    for (int k = 0; k < 8 && ghi > 0.0; ++k) {
        hi += 1.0;
        ghi = g(hi);
    }
    if (!(glo > 0.0 && ghi < 0.0)) {
        throw NumericalError("branch_minimum: no sign change of lambda - eta^2 on [" + fmt(lo) + ", " +
                             fmt(hi) + "] for branch " + std::to_string(n));
    }
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-13; };
    auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    BranchMinimum m;
    m.eta = 0.5 * (r.first + r.second);
    auto pairs = solve_spectrum(m.eta, bc, n, grid);
    m.lambda = pairs.back().lambda;
    m.boundary_value = pairs.back().boundary_value;
    m.curvature_dh = 2.0 * m.eta * m.boundary_value * m.boundary_value;
    const double delta = 0.02;
    double lp = branch_value(m.eta + delta, bc, n, grid);
    double lm = branch_value(m.eta - delta, bc, n, grid);
    m.curvature_fd = (lp - 2.0 * m.lambda + lm) / (delta * delta);
    return m;
}

BranchMinimum neumann_minimum(int n, const OscillatorGrid& grid) {
    return branch_minimum(BoundaryCondition::neumann(), n, grid);
}

std::vector<double> branch_crossing(const BoundaryCondition& bc, int n, double level,
                                    const OscillatorGrid& grid, std::pair<double, double> search,
                                    double eta_tol) {
    auto [a, b] = search;
    if (!std::isfinite(level) || !std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw InvalidArgument("branch_crossing: need finite level and a < b");
    }
    auto f = [&](double eta) { return branch_value(eta, bc, n, grid) - level; };
    auto tol = [eta_tol](double x, double y) { return std::abs(y - x) < eta_tol; };
    std::vector<double> roots;
    auto monotone_root = [&](double lo, double hi, double flo, double fhi) {
        if (flo == 0.0 || fhi == 0.0) {
            throw NumericalError("branch_crossing: root at the search boundary [" + fmt(lo) + ", " +
                                 fmt(hi) + "]; widen the interval");
        }
        if ((flo > 0.0) == (fhi > 0.0)) return;
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
        roots.push_back(0.5 * (r.first + r.second));
    };
    double fa = f(a);
    double fb = f(b);
    auto edge_check = [&](double x, double fx) {
        if (std::abs(fx) <= 1e-12 * std::max(1.0, std::abs(level))) {
            throw NumericalError("branch_crossing: root at the search boundary eta = " + fmt(x) +
                                 "; widen the interval");
        }
    };
    edge_check(a, fa);
    edge_check(b, fb);
    if (bc.is_dirichlet()) {
        monotone_root(a, b, fa, fb);
        return roots;
    }
    BranchMinimum m = branch_minimum(bc, n, grid);
    if (m.eta <= a || m.eta >= b) {
        monotone_root(a, b, fa, fb);
        return roots;
    }
    double fm = m.lambda - level;
    if (fm == 0.0) {
        roots.push_back(m.eta);
        return roots;
    }
    monotone_root(a, m.eta, fa, fm);
    monotone_root(m.eta, b, fm, fb);
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::vector<double> robin_family(double eta, const std::vector<double>& alphas, int n,
                                 const OscillatorGrid& grid) {
    std::vector<double> out;
    out.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] < 0.0) throw InvalidArgument("robin_family: alpha must be nonnegative");
        if (i > 0 && alphas[i] < alphas[i - 1]) throw InvalidArgument("robin_family: alphas must increase");
        out.push_back(branch_value(eta, BoundaryCondition::robin(alphas[i]), n, grid));
    }
    return out;
}

}  // namespace magspec
