#include "magspec/counting.hpp"

#include "magspec/branch_cache.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>

namespace magspec {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEtaTol = 1e-12;
constexpr double kSearchLimit = 40.0;

/// Maximal intervals of {eta : lambda_j(eta) < level}; b may be +inf.
struct Sublevel {
    int j = 0;
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> crossings;
};

double refine_root(const BoundaryCondition& bc, int j, double level, const OscillatorGrid& grid,
                   double a, double b) {
    auto f = [&](double eta) { return branch_value(eta, bc, j, grid) - level; };
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) throw NumericalError("crossing: bracket lost its sign change");
    std::uintmax_t iters = 200;
    auto tol = [](double x, double y) { return std::abs(x - y) <= kEtaTol; };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    return 0.5 * (r.first + r.second);
}

double crossing_error(const BoundaryCondition& bc, int j, double eta, const OscillatorGrid& grid) {
    EigenPair p = solve_spectrum(eta, bc, j, grid).back();
    double slope = std::abs(dh_derivative(p, eta, bc));
    if (!(slope > 0.0)) return kEtaTol;
    return kEtaTol + p.lambda_error / slope;
}

// Dirichlet branches decrease from +inf to 2j+1.
Sublevel dirichlet_sublevel(int j, double level, const OscillatorGrid& grid) {
    const BoundaryCondition bc = BoundaryCondition::dirichlet();
    Sublevel s{j, {}, {}};
    if (!(level > 2.0 * j + 1.0)) return s;
    double lo = -std::sqrt(level) - 0.5;
    double hi = std::max(1.0, std::sqrt(2.0 * j + 1.0));
    while (branch_value(hi, bc, j, grid) >= level) {
        lo = hi;
        hi += 1.0;
        if (hi > kSearchLimit) throw NumericalError("crossing search window exhausted");
    }
    double a = refine_root(bc, j, level, grid, lo, hi);
    s.intervals.emplace_back(a, kInf);
    s.crossings.push_back(a);
    return s;
}

// Neumann branches decrease to the minimum and then increase towards 2j+1.
Sublevel neumann_sublevel(int j, double level, const OscillatorGrid& grid) {
    const BoundaryCondition bc = BoundaryCondition::neumann();
    Sublevel s{j, {}, {}};
    if (!(level > 2.0 * j - 1.0)) return s;
    BranchMinimum m = branch_minimum(bc, j, grid);
    if (!(level > m.lambda)) return s;
    double a = refine_root(bc, j, level, grid, -std::sqrt(level) - 0.5, m.eta);
    s.crossings.push_back(a);
    if (level < 2.0 * j + 1.0) {
        double hi = m.eta + 1.0;
        double lo = m.eta;
        while (branch_value(hi, bc, j, grid) < level) {
            lo = hi;
            hi += 1.0;
            if (hi > kSearchLimit) throw NumericalError("crossing search window exhausted");
        }
        double b = refine_root(bc, j, level, grid, lo, hi);
        s.intervals.emplace_back(a, b);
        s.crossings.push_back(b);
    } else {
        s.intervals.emplace_back(a, kInf);
    }
    return s;
}

// Robin branches need not be unimodal; sign changes are located on a scan.
Sublevel robin_sublevel(const BoundaryCondition& bc, int j, double level, const OscillatorGrid& grid) {
    Sublevel s{j, {}, {}};
    if (!(level > 2.0 * j - 1.0)) return s;
    const double lo = -std::sqrt(level) - 0.5;
    const double hi = std::sqrt(std::max(level, 2.0 * j + 1.0)) + bc.alpha + 10.0;
    const double step = 0.1;
    double prev_eta = lo;
    bool prev_below = branch_value(lo, bc, j, grid) < level;
    if (prev_below) throw NumericalError("crossing: level reached below the scan window");
    double open = 0.0;
    for (double eta = lo + step; eta <= hi + 0.5 * step; eta += step) {
        bool below = branch_value(eta, bc, j, grid) < level;
        if (below != prev_below) {
            double r = refine_root(bc, j, level, grid, prev_eta, eta);
            s.crossings.push_back(r);
            if (below) {
                open = r;
            } else {
                s.intervals.emplace_back(open, r);
            }
        }
        prev_below = below;
        prev_eta = eta;
    }
    if (prev_below) {
        // Beyond the scan the branch sits within e^{-eta^2} of 2j+1.
        if (!(level > 2.0 * j + 1.0)) throw NumericalError("crossing: sublevel set does not close");
        s.intervals.emplace_back(open, kInf);
    }
    return s;
}

Sublevel sublevel(const BoundaryCondition& bc, int j, double level, const OscillatorGrid& grid) {
    switch (bc.kind) {
        case BcKind::Dirichlet: return dirichlet_sublevel(j, level, grid);
        case BcKind::Neumann: return neumann_sublevel(j, level, grid);
        case BcKind::Robin: return robin_sublevel(bc, j, level, grid);
    }
    throw InvalidArgument("unknown boundary condition");
}

// Branches j with a nonempty sublevel set, ascending. lambda_j > 2j-1 everywhere
// for every supported condition, which bounds the search.
std::vector<Sublevel> sublevels(const BoundaryCondition& bc, double level, const OscillatorGrid& grid) {
    std::vector<Sublevel> out;
    for (int j = 0; 2.0 * j - 1.0 < level; ++j) {
        Sublevel s = sublevel(bc, j, level, grid);
        if (!s.intervals.empty()) out.push_back(std::move(s));
    }
    return out;
}

void check_inputs(double tau, double hbar) {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidArgument("boundary correction: hbar must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("boundary correction: tau must be positive");
}

// Signed length of the sublevel set minus the bulk half-line.
double signed_length(const Sublevel& s, int theta_conv) {
    double len = 0.0;
    bool tail = false;
    for (auto [a, b] : s.intervals) {
        if (std::isinf(b)) {
            tail = true;
            len -= a;
        } else {
            len += b - a;
        }
    }
    if (tail != (theta_conv == 1)) {
        throw NumericalError("boundary correction: sublevel tail inconsistent with the bulk threshold");
    }
    return len;
}

struct GkRule {
    std::vector<double> x;   // nodes on [-1, 1]
    std::vector<double> wk;  // Kronrod weights
    std::vector<double> wg;  // Gauss weights (0 off the Gauss nodes)
};

const GkRule& gk15() {
    static const GkRule rule = [] {
        using boost::math::quadrature::gauss;
        using boost::math::quadrature::gauss_kronrod;
        const auto& a = gauss_kronrod<double, 15>::abscissa();
        const auto& w = gauss_kronrod<double, 15>::weights();
        const auto& gw = gauss<double, 7>::weights();
        GkRule r;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double g = i % 2 == 0 ? gw[i / 2] : 0.0;
            r.x.push_back(a[i]);
            r.wk.push_back(w[i]);
            r.wg.push_back(g);
            if (i > 0) {
                r.x.push_back(-a[i]);
                r.wk.push_back(w[i]);
                r.wg.push_back(g);
            }
        }
        return r;
    }();
    return rule;
}

// Integrand of the kernel form at one eta: theta-weighted masses on [0, X] and
// [0, 2X] after Richardson, and on [0, X] from the finest grid alone.
struct MassSample {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

double trapezoid_mass(const std::vector<double>& u, double step, double X) {
    const std::size_t N = u.size() - 1;
    const double r = X / step;
    std::size_t m = static_cast<std::size_t>(std::llround(r));
    if (m >= N) m = N;
    double sum = 0.5 * (u[0] * u[0] + u[m] * u[m]);
    for (std::size_t i = 1; i < m; ++i) sum += u[i] * u[i];
    return sum * step;
}

// Membership follows the refined crossings rather than the sign of lambda - level at
// the node, so branches that sit on the threshold are counted as the bulk counts them.
bool occupied(const Sublevel& s, double eta) {
    for (auto [a, b] : s.intervals) {
        if (eta >= a && eta < b) return true;
    }
    return false;
}

MassSample mass_sample(double eta, const BoundaryCondition& bc, const std::vector<Sublevel>& subs, int j_hi,
                       double X, const OscillatorGrid& grid) {
    SpectrumLevels lv = solve_levels(eta, bc, j_hi, grid, true);
    MassSample out;
    const std::size_t L = lv.levels.size();
    std::vector<double> mx(L), m2x(L);
    for (const Sublevel& s : subs) {
        if (s.j > j_hi || !occupied(s, eta)) continue;
        const auto j = static_cast<std::size_t>(s.j);
        for (std::size_t l = 0; l < L; ++l) {
            const auto& level_sol = lv.levels[l];
            mx[l] = trapezoid_mass(level_sol.u[j], level_sol.step, X);
            m2x[l] = trapezoid_mass(level_sol.u[j], level_sol.step, 2.0 * X);
        }
        out.a += richardson(mx).first;
        out.b += richardson(m2x).first;
        out.c += mx.back();
    }
    return out;
}

struct PanelResult {
    MassSample integral;
    double error = 0.0;
    std::size_t evaluations = 0;
};

class KernelIntegrator {
public:
    KernelIntegrator(const BoundaryCondition& bc, double X, const OscillatorGrid& grid, const EigfnQuadrature& quad,
                     const std::vector<Sublevel>& subs)
        : bc_(bc), X_(X), grid_(grid), quad_(quad), subs_(subs) {}

    PanelResult integrate(double a, double b) const {
        // Branches whose sublevel set meets the panel.
        int j_hi = -1;
        for (const auto& s : subs_) {
            for (auto [lo, hi] : s.intervals) {
                if (lo < b && hi > a) j_hi = s.j;
            }
        }
        if (j_hi < 0) return {};
        return adapt(a, b, j_hi, 0);
    }

private:
    PanelResult adapt(double a, double b, int j_hi, int depth) const {
        const GkRule& r = gk15();
        const double c = 0.5 * (a + b);
        const double hw = 0.5 * (b - a);
        std::vector<MassSample> f(r.x.size());
        parallel_for(r.x.size(), quad_.jobs, [&](std::size_t i) {
            f[i] = mass_sample(c + hw * r.x[i], bc_, subs_, j_hi, X_, grid_);
        });
        PanelResult k;
        MassSample g;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            k.integral.a += r.wk[i] * f[i].a;
            k.integral.b += r.wk[i] * f[i].b;
            k.integral.c += r.wk[i] * f[i].c;
            g.a += r.wg[i] * f[i].a;
            g.b += r.wg[i] * f[i].b;
            g.c += r.wg[i] * f[i].c;
        }
        k.integral.a *= hw;
        k.integral.b *= hw;
        k.integral.c *= hw;
        k.error = hw * std::max({std::abs(k.integral.a / hw - g.a), std::abs(k.integral.b / hw - g.b),
                                 std::abs(k.integral.c / hw - g.c)});
        k.evaluations = r.x.size();
        if (k.error <= quad_.panel_tol || depth >= quad_.max_depth) return k;
        PanelResult left = adapt(a, c, j_hi, depth + 1);
        PanelResult right = adapt(c, b, j_hi, depth + 1);
        PanelResult sum;
        sum.integral.a = left.integral.a + right.integral.a;
        sum.integral.b = left.integral.b + right.integral.b;
        sum.integral.c = left.integral.c + right.integral.c;
        sum.error = left.error + right.error;
        sum.evaluations = k.evaluations + left.evaluations + right.evaluations;
        return sum;
    }

    BoundaryCondition bc_;
    double X_;
    OscillatorGrid grid_;
    EigfnQuadrature quad_;
    const std::vector<Sublevel>& subs_;
};

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_m.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
    std::vector<double> gx(m), gw(m);
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) p0 = 1.0;
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        gx[i] = x;
        gw[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return {gx, gw};
}

}  // namespace

double n_mw_density(double F, double V, double tau, double mu_h, double sqrt_g, HeavisideConvention conv) {
    return static_cast<double>(landau_count(F, V, tau, mu_h, conv)) * sqrt_g * mu_h * F / kTwoPi;
}

int landau_count(double F, double V, double tau, double mu_h, HeavisideConvention conv) {
    if (!(F > 0.0) || !(mu_h > 0.0)) throw InvalidArgument("n_mw_density: F and mu_h must be positive");
    if (!std::isfinite(V) || !std::isfinite(tau) || !std::isfinite(F)) {
        throw InvalidArgument("n_mw_density: non-finite input");
    }
    int count = 0;
    while (heaviside(tau - V - (2.0 * count + 1.0) * mu_h * F, conv) == 1) ++count;
    return count;
}

std::string to_string(CorrectionMethod m) {
    return m == CorrectionMethod::EigenfunctionIntegral ? "eigenfunction" : "branch";
}

std::vector<BranchTerm> branch_terms(const BoundaryCondition& bc, double level, const OscillatorGrid& grid) {
    grid.validate();
    if (!std::isfinite(level)) throw InvalidArgument("branch_terms: non-finite level");
    const HeavisideConvention conv = counting_convention(bc);
    std::vector<BranchTerm> out;
    for (const Sublevel& s : sublevels(bc, level, grid)) {
        BranchTerm t;
        t.j = s.j;
        t.crossings = s.crossings;
        t.length = signed_length(s, heaviside(level - (2.0 * s.j + 1.0), conv));
        for (double x : s.crossings) t.error += crossing_error(bc, s.j, x, grid);
        out.push_back(std::move(t));
    }
    return out;
}

BoundaryCorrection bound_correction_branch(const BoundaryCondition& bc, double tau, double hbar,
                                           const OscillatorGrid& grid) {
    check_inputs(tau, hbar);
    BoundaryCorrection r;
    r.bc = bc;
    r.tau = tau;
    r.hbar = hbar;
    r.method = CorrectionMethod::BranchIntegral;
    const double pref = std::sqrt(hbar) / kTwoPi;
    double len = 0.0;
    double err = 0.0;
    bool any = false;
    for (const BranchTerm& t : branch_terms(bc, tau / hbar, grid)) {
        len += t.length;
        err += t.error;
        r.j_max = t.j;
        for (double x : t.crossings) {
            r.eta_min = any ? std::min(r.eta_min, x) : x;
            r.eta_max = any ? std::max(r.eta_max, x) : x;
            any = true;
        }
    }
    r.value = pref * len;
    r.quad_error = pref * err;
    return r;
}

BoundaryCorrection bound_correction_eigfn(const BoundaryCondition& bc, double tau, double hbar,
                                          const OscillatorGrid& grid, const EigfnQuadrature& quad) {
    check_inputs(tau, hbar);
    grid.validate();
    if (!(quad.panel_tol > 0.0) || !(quad.doubling_tol > 0.0) || !(quad.max_panel > 0.0)) {
        throw InvalidArgument("bound_correction_eigfn: quadrature tolerances must be positive");
    }
    BoundaryCorrection r;
    r.bc = bc;
    r.tau = tau;
    r.hbar = hbar;
    r.method = CorrectionMethod::EigenfunctionIntegral;
    const double level = tau / hbar;
    const double pref = std::sqrt(hbar) / kTwoPi;
    const HeavisideConvention conv = counting_convention(bc);

    const std::vector<Sublevel> subs = sublevels(bc, level, grid);
    if (subs.empty()) return r;

    double theta_sum = 0.0;
    double reach = std::sqrt(level);
    std::vector<double> crossings;
    for (const Sublevel& s : subs) {
        theta_sum += heaviside(level - (2.0 * s.j + 1.0), conv);
        for (double x : s.crossings) {
            reach = std::max(reach, std::abs(x));
            crossings.push_back(x);
        }
    }
    const int j_max = subs.back().j;
    r.j_max = j_max;

    double X = reach + std::sqrt(level) + 6.0;
    double previous = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
        X = std::ceil(X / grid.step) * grid.step;
        const double eta_lo = -std::sqrt(level) - 0.5;
        const double eta_hi = 2.0 * X + std::sqrt(2.0 * j_max + 1.0) + 8.0;
        std::vector<double> cuts = {eta_lo, eta_hi, 0.0, X, 2.0 * X};
        for (double x : crossings) cuts.push_back(x);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        KernelIntegrator integ(bc, X, grid, quad, subs);
        MassSample total;
        double gk_err = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double a = cuts[i];
            double b = cuts[i + 1];
            if (b <= eta_lo || a >= eta_hi) continue;
            int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / quad.max_panel)));
            for (int p = 0; p < pieces; ++p) {
                double pa = a + (b - a) * p / pieces;
                double pb = p + 1 == pieces ? b : a + (b - a) * (p + 1) / pieces;
                PanelResult pr = integ.integrate(pa, pb);
                total.a += pr.integral.a;
                total.b += pr.integral.b;
                total.c += pr.integral.c;
                gk_err += pr.error;
            }
        }
        const double i_x = total.a - X * theta_sum;
        const double i_2x = total.b - 2.0 * X * theta_sum;
        const double i_fine = total.c - X * theta_sum;
        r.value = pref * i_2x;
        r.eta_min = eta_lo;
        r.eta_max = eta_hi;
        r.x1_cut = 2.0 * X;
        const double trunc = pref * std::abs(i_2x - i_x);
        r.quad_error = pref * (gk_err + std::abs(i_x - i_fine)) + trunc;
        if (trunc <= quad.doubling_tol * std::abs(r.value) + 1e-9 * pref) return r;
        previous = r.value;
        X *= 2.0;
    }
    throw NumericalError("bound_correction_eigfn: doubling the boundary cut still changes the value (last " +
                         std::to_string(previous) + ")");
}

double kappa0_limit(const BoundaryCondition& bc, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("kappa0_limit: tau must be positive");
    const double k = std::sqrt(tau) / (4.0 * std::numbers::pi);
    return bc.is_dirichlet() ? -k : k;
}

TwoTermCount two_term_count(const RectDomain& domain, const ScalarField& F, const ScalarField& V,
                            const ModelParams& params, double tau, const ScalarField& psi,
                            const TwoTermOptions& options) {
    if (!(domain.x1_max > domain.x1_min) || !(domain.x2_max > domain.x2_min)) {
        throw InvalidArgument("two_term_count: empty domain");
    }
    if (options.panels < 1 || options.nodes < 1 || options.nodes > 64) {
        throw InvalidArgument("two_term_count: bad quadrature size");
    }
    if (!(options.lattice > 0.0)) throw InvalidArgument("two_term_count: lattice must be positive");
    const double h = params.h();
    const double mu_h = params.hbar_large();

    // Composite Gauss-Legendre nodes on [lo, hi].
    auto rule = [&](double lo, double hi) {
        std::vector<std::pair<double, double>> pts;
        const int m = options.nodes;
        const auto [gx, gw] = gauss_legendre(m);
        const double w = (hi - lo) / options.panels;
        for (int p = 0; p < options.panels; ++p) {
            double c = lo + (p + 0.5) * w;
            for (int i = 0; i < m; ++i) pts.emplace_back(c + 0.5 * w * gx[i], 0.5 * w * gw[i]);
        }
        return pts;
    };

    auto local_F = [&](double x1, double x2) {
        double f = F(x1, x2);
        if (!(f >= options.F_floor)) throw InvalidArgument("two_term_count: F below floor");
        return f;
    };

    TwoTermCount out;
    const auto r1 = rule(domain.x1_min, domain.x1_max);
    const auto r2 = rule(domain.x2_min, domain.x2_max);
    double bulk = 0.0;
    for (auto [x1, w1] : r1) {
        for (auto [x2, w2] : r2) {
            double wgt = psi(x1, x2);
            if (wgt == 0.0) continue;
            bulk += w1 * w2 * wgt *
                    n_mw_density(local_F(x1, x2), V(x1, x2), tau, mu_h, 1.0, HeavisideConvention::LeftContinuous);
        }
    }
    out.bulk = bulk / (h * h);

    std::map<std::tuple<std::string, long, long>, double> cache;
    auto correction = [&](const BoundaryCondition& bc, double level_tau, double hbar) {
        if (!(level_tau > 0.0)) return 0.0;
        long kt = std::lround(std::log(level_tau) / options.lattice);
        long kh = std::lround(std::log(hbar) / options.lattice);
        auto key = std::make_tuple(bc.to_string(), kt, kh);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        double v = bound_correction_branch(bc, std::exp(kt * options.lattice), std::exp(kh * options.lattice),
                                           options.grid)
                       .value;
        cache.emplace(key, v);
        return v;
    };

    double boundary = 0.0;
    for (const DomainEdge& e : domain.edges) {
        const bool along_x2 = e.side == EdgeSide::X1Min || e.side == EdgeSide::X1Max;
        const auto& pts = along_x2 ? r2 : r1;
        for (auto [t, w] : pts) {
            double x1 = along_x2 ? (e.side == EdgeSide::X1Min ? domain.x1_min : domain.x1_max) : t;
            double x2 = along_x2 ? t : (e.side == EdgeSide::X2Min ? domain.x2_min : domain.x2_max);
            double wgt = psi(x1, x2);
            if (wgt == 0.0) continue;
            // Local hbar = mu h F and local level tau - V.
            boundary += w * wgt * correction(e.bc, tau - V(x1, x2), mu_h * local_F(x1, x2));
        }
    }
    out.boundary = boundary / h;
    out.total = out.bulk + out.boundary;
    return out;
}

double cutoff_zeta(double t) {
    const double a = std::abs(t);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    // Quintic smoothstep from 1 at 1/2 to 0 at 1.
    const double s = 2.0 * (1.0 - a);
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double superstrong_bound_correction(const BoundaryCondition& bc, double z_frak, const ModelParams& params,
                                    const PotentialField& W_eff, const ScalarField& psi,
                                    const SuperstrongOptions& options) {
    if (!W_eff.valid()) throw InvalidArgument("superstrong: W_eff is not set");
    if (!(options.x2_max > options.x2_min)) throw InvalidArgument("superstrong: empty x2 range");
    if (options.x2_nodes < 1 || options.x1_samples < 2 || options.n_limit < 1) {
        throw InvalidArgument("superstrong: bad sampling options");
    }
    const double mu = params.mu();
    const double mu_h = params.hbar_large();
    const double hh = params.hbar_half();
    const double eps = options.epsilon_cut > 0.0 ? options.epsilon_cut : 5.0 * hh;
    const HeavisideConvention conv = counting_convention(bc);
    const int K = options.x1_samples;

    // Gauss-Legendre in x2 over one panel.
    std::vector<double> x2s, w2s;
    {
        const auto [gx, gw] = gauss_legendre(options.x2_nodes);
        const double half = 0.5 * (options.x2_max - options.x2_min);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            x2s.push_back(options.x2_min + half * (1.0 + gx[i]));
            w2s.push_back(half * gw[i]);
        }
    }
    std::vector<double> x1s(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) x1s[k] = eps * k / K;

    double w_min = kInf, w_max = -kInf;
    std::vector<std::vector<double>> wv(x2s.size(), std::vector<double>(x1s.size()));
    for (std::size_t i = 0; i < x2s.size(); ++i) {
        for (std::size_t k = 0; k < x1s.size(); ++k) {
            double w = W_eff.value(x1s[k], x2s[i]);
            if (!std::isfinite(w)) throw NumericalError("superstrong: W_eff evaluation failed");
            wv[i][k] = w;
            w_min = std::min(w_min, w);
            w_max = std::max(w_max, w);
        }
    }

    // Range of lambda_n over eta >= 0 by the branch bounds.
    auto bounds = [&](int n) -> std::pair<double, double> {
        switch (bc.kind) {
            case BcKind::Dirichlet: return {2.0 * n + 1.0, 4.0 * n + 3.0};
            case BcKind::Neumann: return {std::max(2.0 * n - 1.0, 0.0), 4.0 * n + 1.0};
            case BcKind::Robin: return {std::max(2.0 * n - 1.0, 0.0), 4.0 * n + 3.0};
        }
        return {0.0, 0.0};
    };

    // The integrand of branch n vanishes when both theta arguments keep one sign on the support.
    std::vector<int> active;
    int n = 0;
    for (;; ++n) {
        if (n > options.n_limit) throw NumericalError("superstrong: n-sum did not terminate");
        auto [lb, ub] = bounds(n);
        double bulk_lo = mu_h * (2.0 * n + 1.0 - z_frak) - w_max;
        double bulk_hi = mu_h * (2.0 * n + 1.0 - z_frak) - w_min;
        double br_lo = mu_h * (lb - z_frak) - w_max;
        double br_hi = mu_h * (ub - z_frak) - w_min;
        if (br_lo > 0.0 && bulk_lo > 0.0) break;  // both thetas are 1 here and for all larger n
        if (br_hi <= 0.0 && bulk_hi <= 0.0 && !(br_hi == 0.0 && conv == HeavisideConvention::RightContinuous)) {
            continue;
        }
        active.push_back(n);
    }
    if (active.empty()) return 0.0;

    BranchTable table(bc, active.back(), options.grid);
    const GkRule& r = gk15();
    double total = 0.0;
    for (int nn : active) {
        const double bulk_level = mu_h * (2.0 * nn + 1.0 - z_frak);
        for (std::size_t i = 0; i < x2s.size(); ++i) {
            const double x2 = x2s[i];
            auto args = [&](double x1) {
                double w = W_eff.value(x1, x2);
                double lam = table.value(nn, x1 / hh);
                return std::make_pair(heaviside(mu_h * (lam - z_frak) - w, conv), heaviside(bulk_level - w, conv));
            };
            auto integrand = [&](double x1) {
                auto [t1, t2] = args(x1);
                if (t1 == t2) return 0.0;
                return (t1 - t2) * psi(x1, x2) * cutoff_zeta(x1 / eps);
            };
            // Sample, locate jumps of either theta by bisection, then integrate each smooth piece.
            std::vector<double> cuts = {0.0};
            auto prev = args(x1s[0]);
            for (std::size_t k = 1; k < x1s.size(); ++k) {
                auto cur = args(x1s[k]);
                if (cur != prev) {
                    double a = x1s[k - 1], b = x1s[k];
                    for (int it = 0; it < 50 && b - a > 1e-14 * eps; ++it) {
                        double m = 0.5 * (a + b);
                        if (args(m) == prev) a = m; else b = m;
                    }
                    cuts.push_back(0.5 * (a + b));
                }
                prev = cur;
            }
            cuts.push_back(eps);
            double line = 0.0;
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                double a = cuts[c], b = cuts[c + 1];
                if (!(b > a)) continue;
                double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
                for (std::size_t q = 0; q < r.x.size(); ++q) line += hw * r.wk[q] * integrand(mid + hw * r.x[q]);
            }
            total += w2s[i] * line;
        }
    }
    return mu * total / kTwoPi;
}

GapResult spectral_gap_check(std::pair<int, int> m_range, double z_frak, double mu_h,
                             std::pair<double, double> F_range, std::pair<double, double> V_range, double tau,
                             double eps0) {
    if (m_range.first > m_range.second || F_range.first > F_range.second || V_range.first > V_range.second) {
        throw InvalidArgument("spectral_gap_check: empty range");
    }
    if (!(mu_h > 0.0)) throw InvalidArgument("spectral_gap_check: mu_h must be positive");
    for (int m = m_range.first; m <= m_range.second; ++m) {
        // The expression is affine in F and V, so its extremes sit at the corners.
        double lo = kInf, hi = -kInf;
        for (double F : {F_range.first, F_range.second}) {
            for (double V : {V_range.first, V_range.second}) {
                double v = (2.0 * m + 1.0 - z_frak) * mu_h * F + V - tau;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        double dist = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
        if (dist < eps0 * mu_h) return {false, m};
    }
    return {true, std::nullopt};
}

bool boundary_elliptic(const BoundaryCondition& bc, int n, double z_frak, double mu_h,
                       std::pair<double, double> F_range, std::pair<double, double> V_range, double tau,
                       double eps, const OscillatorGrid& grid) {
    if (n < 0) throw InvalidArgument("boundary_elliptic: n must be >= 0");
    const double t = bc.is_dirichlet() ? 2.0 * n + 1.0 : branch_minimum(bc, n, grid).lambda;
    for (double F : {F_range.first, F_range.second}) {
        for (double V : {V_range.first, V_range.second}) {
            if ((t - z_frak - eps) * mu_h * F + V - tau < 0.0) return false;
        }
    }
    return true;
}

}  // namespace magspec
