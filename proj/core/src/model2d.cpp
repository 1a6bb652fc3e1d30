#include "magspec/model2d.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace magspec {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Gk15 {
    std::vector<double> x, wk, wg;
};

const Gk15& gk15() {
    static const Gk15 rule = [] {
        using boost::math::quadrature::gauss;
        using boost::math::quadrature::gauss_kronrod;
        const auto& a = gauss_kronrod<double, 15>::abscissa();
        const auto& w = gauss_kronrod<double, 15>::weights();
        const auto& gw = gauss<double, 7>::weights();
        Gk15 r;
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

// p(s) = sum_j int theta(L - lambda_j) u_j(s; eta)^2 deta on the coarse s grid.
struct KernelTable {
    double step = 0.0;
    std::vector<double> p;       // Richardson-extrapolated integrand
    std::vector<double> p_fine;  // finest grid only
    std::vector<double> p_err;   // Gauss-Kronrod difference
    double count_conv = 0.0;
    double reach = 0.0;

    double at(const std::vector<double>& v, double s) const {
        const double x = s / step;
        const long k = static_cast<long>(std::floor(x));
        const long n = static_cast<long>(v.size());
        if (k >= n - 1) return v.back();
        const double t = x - static_cast<double>(k);
        if (t == 0.0) return v[static_cast<std::size_t>(k)];
        // Cubic Lagrange on k-1..k+2, shifted inward at the ends.
        long k0 = std::clamp(k - 1, 0L, n - 4);
        double tt = x - static_cast<double>(k0);
        double f[4];
        for (int i = 0; i < 4; ++i) f[i] = v[static_cast<std::size_t>(k0 + i)];
        double out = 0.0;
        for (int i = 0; i < 4; ++i) {
            double w = 1.0;
            for (int m = 0; m < 4; ++m) {
                if (m != i) w *= (tt - m) / static_cast<double>(i - m);
            }
            out += w * f[i];
        }
        return out;
    }
};

KernelTable build_table(const BoundaryCondition& bc, double level, double s_needed, const KernelOptions& opt,
                        bool extend_for_tail) {
    const OscillatorGrid& grid = opt.grid;
    grid.validate();
    if (!(opt.max_panel > 0.0)) throw InvalidArgument("kernel: max_panel must be positive");
    KernelTable t;
    t.step = grid.step;
    const HeavisideConvention conv = counting_convention(bc);
    std::vector<BranchTerm> terms = level > 0.0 ? branch_terms(bc, level, grid) : std::vector<BranchTerm>{};
    bool any = false;
    int j_max = -1;
    t.reach = std::sqrt(std::max(level, 0.0));
    std::vector<double> cuts;
    for (const auto& term : terms) {
        t.count_conv += heaviside(level - (2.0 * term.j + 1.0), conv);
        j_max = term.j;
        for (double x : term.crossings) {
            any = true;
            t.reach = std::max(t.reach, std::abs(x));
            cuts.push_back(x);
        }
    }
    double s_max = s_needed;
    if (extend_for_tail) s_max = std::max(s_max, t.reach + std::sqrt(std::max(level, 0.0)) + 10.0);
    long K = static_cast<long>(std::ceil(s_max / t.step));
    if (K % 2) ++K;
    t.p.assign(static_cast<std::size_t>(K) + 1, 0.0);
    t.p_fine = t.p;
    t.p_err = t.p;
    if (!any) return t;

    const double eta_hi = K * t.step + std::sqrt(2.0 * j_max + 1.0) + 8.0;
    cuts.push_back(eta_hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<double, double>> panels;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / opt.max_panel)));
        for (int k = 0; k < pieces; ++k) {
            panels.emplace_back(a + (b - a) * k / pieces, k + 1 == pieces ? b : a + (b - a) * (k + 1) / pieces);
        }
    }

    const Gk15& r = gk15();
    const std::size_t npts = r.x.size();
    const std::size_t S = t.p.size();
    // Per node: sum over occupied j of u^2 on the coarse s grid.
    std::vector<std::vector<double>> val(panels.size() * npts), fine(panels.size() * npts);
    parallel_for(panels.size() * npts, opt.jobs, [&](std::size_t idx) {
        const auto [a, b] = panels[idx / npts];
        const double eta = 0.5 * (a + b) + 0.5 * (b - a) * r.x[idx % npts];
        SpectrumLevels lv = solve_levels(eta, bc, j_max, grid, true);
        const std::size_t L = lv.levels.size();
        std::vector<double> v(S, 0.0), vf(S, 0.0), lam(L), sq(L);
        for (int j = 0; j <= j_max; ++j) {
            for (std::size_t l = 0; l < L; ++l) lam[l] = lv.levels[l].lambda[static_cast<std::size_t>(j)];
            if (!(richardson(lam).first < level)) continue;
            for (std::size_t k = 0; k < S; ++k) {
                bool inside = true;
                for (std::size_t l = 0; l < L; ++l) {
                    const auto& u = lv.levels[l].u[static_cast<std::size_t>(j)];
                    const std::size_t i = k << l;
                    if (i >= u.size()) {
                        inside = false;
                        break;
                    }
                    sq[l] = u[i] * u[i];
                }
                if (!inside) break;
                v[k] += richardson(sq).first;
                vf[k] += sq.back();
            }
        }
        val[idx] = std::move(v);
        fine[idx] = std::move(vf);
    });
    // Deterministic reduction in panel order.
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const double hw = 0.5 * (panels[pi].second - panels[pi].first);
        for (std::size_t k = 0; k < S; ++k) {
            double kr = 0.0, g = 0.0, f = 0.0;
            for (std::size_t q = 0; q < npts; ++q) {
                const std::size_t idx = pi * npts + q;
                kr += r.wk[q] * val[idx][k];
                g += r.wg[q] * val[idx][k];
                f += r.wk[q] * fine[idx][k];
            }
            t.p[k] += hw * kr;
            t.p_fine[k] += hw * f;
            t.p_err[k] += hw * std::abs(kr - g);
        }
    }
    return t;
}

void check_level(double tau) {
    if (!std::isfinite(tau)) throw InvalidArgument("kernel: tau must be finite");
}

}  // namespace

void KernelQuery::validate() const {
    if (!(x1 >= 0.0) || !std::isfinite(x1)) throw InvalidArgument("KernelQuery: x1 must be finite and >= 0");
    if (!std::isfinite(tau)) throw InvalidArgument("KernelQuery: tau must be finite");
}

double kernel_density(const KernelQuery& q, const KernelOptions& options) {
    q.validate();
    const double level = q.tau / q.params.hbar_large();
    const double s = q.x1 / q.params.hbar_half();
    KernelTable t = build_table(q.bc, level, s + 4.0 * options.grid.step, options, false);
    return q.params.mu() / q.params.h() / kTwoPi * t.at(t.p, s);
}

TraceDefect trace_defect(double tau, const ModelParams& params, const BoundaryCondition& bc,
                         const KernelOptions& options) {
    check_level(tau);
    const double level = tau / params.hbar_large();
    const double pref = std::sqrt(params.mu() / params.h()) / kTwoPi;
    KernelTable t = build_table(bc, level, 0.0, options, true);
    TraceDefect out;
    const std::size_t K = t.p.size() - 1;
    const double d = t.step;
    out.s_max = K * d;
    out.bulk = params.mu() / params.h() / kTwoPi * t.count_conv;
    if (t.count_conv == 0.0 && std::all_of(t.p.begin(), t.p.end(), [](double v) { return v == 0.0; })) {
        return out;
    }
    // Simpson on the coarse grid, trapezoid for the error estimate.
    auto simpson = [&](const std::vector<double>& v, std::size_t from, std::size_t to) {
        double sum = 0.0;
        for (std::size_t k = from; k + 2 <= to; k += 2) {
            sum += (v[k] - t.count_conv) + 4.0 * (v[k + 1] - t.count_conv) + (v[k + 2] - t.count_conv);
        }
        return sum * d / 3.0;
    };
    double trap = 0.0;
    for (std::size_t k = 0; k < K; ++k) trap += 0.5 * d * ((t.p[k] - t.count_conv) + (t.p[k + 1] - t.count_conv));
    const double main = simpson(t.p, 0, K);
    const double fine = simpson(t.p_fine, 0, K);
    double gk = 0.0;
    for (std::size_t k = 0; k + 1 <= K; ++k) gk += 0.5 * d * (t.p_err[k] + t.p_err[k + 1]);

    // Geometric tail from the last two unit blocks.
    const std::size_t unit = static_cast<std::size_t>(std::llround(1.0 / d)) & ~std::size_t{1};
    double tail = 0.0;
    if (unit >= 2 && K >= 2 * unit) {
        const double b1 = simpson(t.p, K - 2 * unit, K - unit);
        const double b2 = simpson(t.p, K - unit, K);
        const double ratio = b1 != 0.0 ? std::abs(b2 / b1) : 0.0;
        tail = ratio < 1.0 ? std::abs(b2) * ratio / (1.0 - ratio) : std::abs(b2);
        if (ratio >= 0.5 && std::abs(b2) > 1e-9 * (std::abs(main) + 1.0)) throw NumericalError("trace_defect: integrand tail does not decay");
    }
    out.value = pref * main;
    out.error = pref * (std::abs(main - trap) / 15.0 + std::abs(main - fine) + gk + tail);
    return out;
}

std::vector<std::pair<double, double>> defect_profile(double tau, const ModelParams& params,
                                                      const BoundaryCondition& bc,
                                                      const std::vector<double>& x1_grid,
                                                      const KernelOptions& options) {
    check_level(tau);
    for (std::size_t i = 0; i < x1_grid.size(); ++i) {
        if (!(x1_grid[i] >= 0.0) || (i > 0 && !(x1_grid[i] > x1_grid[i - 1]))) {
            throw InvalidArgument("defect_profile: x1 grid must be increasing and nonnegative");
        }
    }
    std::vector<std::pair<double, double>> out;
    if (x1_grid.empty()) return out;
    const double level = tau / params.hbar_large();
    const double scale = params.mu() / params.h() / kTwoPi;
    const double s_last = x1_grid.back() / params.hbar_half();
    KernelTable t = build_table(bc, level, s_last + 4.0 * options.grid.step, options, false);
    for (double x : x1_grid) {
        double s = x / params.hbar_half();
        out.emplace_back(x, scale * (t.at(t.p, s) - t.count_conv));
    }
    return out;
}

void OracleProblem::validate() const {
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw InvalidArgument("OracleProblem: extents must be positive");
    if (n1 < 2 || n2 < 3) throw InvalidArgument("OracleProblem: need n1 >= 2 and n2 >= 3");
    if (bc.kind == BcKind::Robin) throw InvalidArgument("OracleProblem: Robin is not supported by the oracle");
    if (!V) throw InvalidArgument("OracleProblem: V is not set");
    if (unknowns() > cap) {
        throw InvalidArgument("OracleProblem: " + std::to_string(unknowns()) + " unknowns exceed the cap of " +
                              std::to_string(cap));
    }
}

double OracleProblem::d1() const {
    // Dirichlet: unknowns at i*d, i = 1..n1, walls at 0 and L1. Neumann: i = 0..n1-1, wall at L1.
    return bc.is_dirichlet() ? L1 / (n1 + 1) : L1 / n1;
}

double OracleProblem::d2() const { return L2 / n2; }

double OracleProblem::x1(int i) const { return bc.is_dirichlet() ? (i + 1) * d1() : i * d1(); }

namespace {

struct Entry {
    std::size_t col;
    double re;
    double im;
};

// Site ordering: either x1 fast inside x2 blocks (blocks interleaved so the
// periodic wrap stays within two blocks) or x2 fast inside x1 blocks.
struct Ordering {
    bool x1_fast = true;
    int n1 = 0;
    int n2 = 0;
    std::vector<int> block_pos;  // x2 index -> block position (x1_fast only)
    std::vector<int> block_of;   // block position -> x2 index

    std::size_t index(int i1, int i2) const {
        if (x1_fast) return static_cast<std::size_t>(block_pos[i2]) * n1 + i1;
        return static_cast<std::size_t>(i1) * n2 + i2;
    }
    std::size_t bandwidth() const { return x1_fast ? 2 * static_cast<std::size_t>(n1) : static_cast<std::size_t>(n2); }
};

Ordering make_ordering(int n1, int n2) {
    Ordering o;
    o.n1 = n1;
    o.n2 = n2;
    // Cost N b^2: pick the smaller bandwidth.
    o.x1_fast = 2 * n1 < n2;
    if (o.x1_fast) {
        o.block_pos.assign(n2, 0);
        int lo = 0, hi = n2 - 1, pos = 0;
        while (lo <= hi) {
            o.block_pos[lo] = pos++;
            if (hi != lo) o.block_pos[hi] = pos++;
            ++lo;
            --hi;
        }
    }
    return o;
}

struct Assembled {
    std::vector<double> diag;
    // Strictly lower entries per row, any order.
    std::vector<std::vector<Entry>> lower;
};

Assembled assemble(const OracleProblem& p, const Ordering& o) {
    const double h = p.params.h();
    const double mu = p.params.mu();
    const double d1 = p.d1();
    const double d2 = p.d2();
    const double c1 = h * h / (d1 * d1);
    const double c2 = h * h / (d2 * d2);
    const std::size_t N = p.unknowns();
    Assembled a;
    a.diag.assign(N, 0.0);
    a.lower.assign(N, {});
    for (int i1 = 0; i1 < p.n1; ++i1) {
        const double x1 = p.x1(i1);
        // Peierls phase of the hop k -> k+1.
        const double theta = mu * x1 * d2 / h;
        for (int i2 = 0; i2 < p.n2; ++i2) {
            const std::size_t r = o.index(i1, i2);
            a.diag[r] = 2.0 * c1 + 2.0 * c2 + p.V(x1, (i2 + 0.5) * d2);
            auto add = [&](std::size_t c, double re, double im) {
                // (r, c) entry; store in the lower triangle as the conjugate when needed.
                if (c < r) a.lower[r].push_back({c, re, im});
                else a.lower[c].push_back({r, re, -im});
            };
            if (i1 + 1 < p.n1) {
                double w = -c1;
                if (!p.bc.is_dirichlet() && i1 == 0) w *= std::sqrt(2.0);
                add(o.index(i1 + 1, i2), w, 0.0);
            }
            // Row k couples to k+1 with -c2 e^{-i theta}.
            add(o.index(i1, (i2 + 1) % p.n2), -c2 * std::cos(theta), c2 * std::sin(theta));
        }
    }
    return a;
}

// Negative pivots of the Hermitian band LDL^H of A - shift; -1 on breakdown.
long negative_pivots(const Assembled& a, std::size_t b, double shift) {
    const std::size_t N = a.diag.size();
    // Ring buffer of conj-free L rows: row j stores l_{j,k} at position k - j + b.
    std::vector<double> lre((b + 1) * b, 0.0), lim((b + 1) * b, 0.0);
    std::vector<double> d(N, 0.0);
    std::vector<double> wre(b), wim(b);
    long neg = 0;
    double scale = 0.0;
    for (std::size_t i = 0; i < N; ++i) scale = std::max(scale, std::abs(a.diag[i] - shift));
    for (const auto& row : a.lower) {
        for (const auto& e : row) scale = std::max(scale, std::hypot(e.re, e.im));
    }
    const double tiny = 1e-14 * std::max(scale, 1.0);
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t lo = i >= b ? i - b : 0;
        std::fill(wre.begin(), wre.end(), 0.0);
        std::fill(wim.begin(), wim.end(), 0.0);
        for (const auto& e : a.lower[i]) {
            wre[e.col - i + b] = e.re;
            wim[e.col - i + b] = e.im;
        }
        const std::size_t slot_i = i % (b + 1);
        double di = a.diag[i] - shift;
        for (std::size_t j = lo; j < i; ++j) {
            const std::size_t slot_j = j % (b + 1);
            const double* ljr = &lre[slot_j * b];
            const double* lji = &lim[slot_j * b];
            const std::size_t kstart = std::max(lo, j >= b ? j - b : 0);
            // s = a_ij - sum_k w_ik conj(l_jk), with w_ik = l_ik d_k.
            double sr = wre[j - i + b], si = wim[j - i + b];
            const double* wr = &wre[kstart - i + b];
            const double* wi = &wim[kstart - i + b];
            const double* lr = ljr + (kstart - j + b);
            const double* li = lji + (kstart - j + b);
            const std::size_t len = j - kstart;
            for (std::size_t k = 0; k < len; ++k) {
                sr -= wr[k] * lr[k] + wi[k] * li[k];
                si -= wi[k] * lr[k] - wr[k] * li[k];
            }
            wre[j - i + b] = sr;
            wim[j - i + b] = si;
            di -= (sr * sr + si * si) / d[j];
        }
        if (std::abs(di) <= tiny || !std::isfinite(di)) return -1;
        d[i] = di;
        if (di < 0.0) ++neg;
        double* lir = &lre[slot_i * b];
        double* lii = &lim[slot_i * b];
        for (std::size_t j = lo; j < i; ++j) {
            lir[j - i + b] = wre[j - i + b] / d[j];
            lii[j - i + b] = wim[j - i + b] / d[j];
        }
        for (std::size_t q = 0; q < b - std::min(b, i - lo); ++q) {
            lir[q] = 0.0;
            lii[q] = 0.0;
        }
    }
    return neg;
}

}  // namespace

std::pair<double, double> oracle_gershgorin(const OracleProblem& p) {
    p.validate();
    const Ordering o = make_ordering(p.n1, p.n2);
    const Assembled a = assemble(p, o);
    std::vector<double> radius(a.diag.size(), 0.0);
    for (std::size_t r = 0; r < a.lower.size(); ++r) {
        for (const auto& e : a.lower[r]) {
            const double m = std::hypot(e.re, e.im);
            radius[r] += m;
            radius[e.col] += m;
        }
    }
    double lo = a.diag[0] - radius[0], hi = a.diag[0] + radius[0];
    for (std::size_t r = 0; r < a.diag.size(); ++r) {
        lo = std::min(lo, a.diag[r] - radius[r]);
        hi = std::max(hi, a.diag[r] + radius[r]);
    }
    return {lo, hi};
}

OracleCount oracle_count_2d(const OracleProblem& p, double tau) {
    p.validate();
    if (!std::isfinite(tau)) throw InvalidArgument("oracle_count_2d: tau must be finite");
    const Ordering o = make_ordering(p.n1, p.n2);
    const Assembled a = assemble(p, o);
    OracleCount out;
    out.unknowns = p.unknowns();
    out.bandwidth = o.bandwidth();
    out.tau_used = tau;
    // Eigenvalues <= tau are the negative pivots of A - tau' for tau' just above tau.
    const double step = 1e-12 * std::max(1.0, std::abs(tau));
    for (double shift : {tau + step, tau + 2.0 * step, tau - step}) {
        long neg = negative_pivots(a, o.bandwidth(), shift);
        if (neg >= 0) {
            out.count = neg;
            out.tau_used = shift;
            return out;
        }
    }
    throw NumericalError("oracle_count_2d: factorization broke down at every shift near tau");
}

}  // namespace magspec
