#include "magspec/tridiagonal.hpp"

#include "magspec/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magspec {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr std::size_t kLanes = 8;

// Sturm counts for M shifts. Interleaving the independent recurrences hides
// the latency of the divisions.
template <std::size_t M>
void sturm_lanes(const double* d, const double* e2, std::size_t n, const double* x,
                 std::size_t* out, double pivmin) {
    double q[M];
    std::size_t c[M];
    for (std::size_t s = 0; s < M; ++s) {
        q[s] = d[0] - x[s];
        if (std::abs(q[s]) < pivmin) q[s] = -pivmin;
        c[s] = q[s] < 0.0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double di = d[i];
        const double ei = e2[i - 1];
        for (std::size_t s = 0; s < M; ++s) {
            double v = (di - x[s]) - ei / q[s];
            if (std::abs(v) < pivmin) v = -pivmin;
            q[s] = v;
            c[s] += v < 0.0;
        }
    }
    for (std::size_t s = 0; s < M; ++s) out[s] = c[s];
}

void sturm_block(const double* d, const double* e2, std::size_t n, const double* x,
                 std::size_t m, std::size_t* out, double pivmin) {
    switch (m) {
        case 1: return sturm_lanes<1>(d, e2, n, x, out, pivmin);
        case 2: return sturm_lanes<2>(d, e2, n, x, out, pivmin);
        case 3: return sturm_lanes<3>(d, e2, n, x, out, pivmin);
        case 4: return sturm_lanes<4>(d, e2, n, x, out, pivmin);
        case 5: return sturm_lanes<5>(d, e2, n, x, out, pivmin);
        case 6: return sturm_lanes<6>(d, e2, n, x, out, pivmin);
        case 7: return sturm_lanes<7>(d, e2, n, x, out, pivmin);
        default: return sturm_lanes<kLanes>(d, e2, n, x, out, pivmin);
    }
}

double pivot_floor(const std::vector<double>& e2) {
    double emax = 1.0;
    for (double v : e2) emax = std::max(emax, v);
    return std::numeric_limits<double>::min() * emax;
}

std::vector<double> squared_off(const SymTridiagonal& t) {
    std::vector<double> e2(t.off.size());
    for (std::size_t i = 0; i < e2.size(); ++i) e2[i] = t.off[i] * t.off[i];
    return e2;
}

}  // namespace

void sturm_counts(const SymTridiagonal& t, std::span<const double> shifts,
                  std::span<std::size_t> counts) {
    const std::size_t n = t.size();
    if (n == 0) {
        std::fill(counts.begin(), counts.end(), 0);
        return;
    }
    auto e2 = squared_off(t);
    const double pivmin = pivot_floor(e2);
    for (std::size_t s = 0; s < shifts.size(); s += kLanes) {
        std::size_t m = std::min(kLanes, shifts.size() - s);
        sturm_block(t.diag.data(), e2.data(), n, shifts.data() + s, m, counts.data() + s, pivmin);
    }
}

std::size_t sturm_count(const SymTridiagonal& t, double x) {
    std::size_t c = 0;
    sturm_counts(t, std::span<const double>(&x, 1), std::span<std::size_t>(&c, 1));
    return c;
}

std::pair<double, double> gershgorin_bounds(const SymTridiagonal& t) {
    const std::size_t n = t.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.off[i - 1]);
        if (i + 1 < n) r += std::abs(t.off[i]);
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
    return {lo, hi};
}

std::vector<double> lowest_eigenvalues(const SymTridiagonal& t, std::size_t k, double abs_tol) {
    const std::size_t n = t.size();
    if (k == 0) return {};
    if (k > n) throw InvalidArgument("lowest_eigenvalues: requested more eigenvalues than rows");
    auto e2 = squared_off(t);
    const double pivmin = pivot_floor(e2);
    auto [glo, ghi] = gershgorin_bounds(t);
    const double scale = std::max(std::abs(glo), std::abs(ghi));

    // Upper bracket: grow from the lower bound until k eigenvalues are enclosed.
    double lo = glo - 2.0 * kEps * scale - pivmin;
    double hi = lo + 1.0;
    for (;;) {
        std::size_t c = 0;
        sturm_block(t.diag.data(), e2.data(), n, &hi, 1, &c, pivmin);
        if (c >= k || hi >= ghi) break;
        hi = std::min(ghi + 2.0 * kEps * scale, lo + 2.0 * (hi - lo));
    }

    // Interval [a_i, b_i] encloses the i-th eigenvalue: count(a_i) <= i < count(b_i).
    std::vector<double> a(k, lo), b(k, hi);
    std::vector<std::size_t> active;
    active.reserve(k);
    for (int iter = 0; iter < 200; ++iter) {
        active.clear();
        for (std::size_t i = 0; i < k; ++i) {
            double width = b[i] - a[i];
            double tol = abs_tol + 4.0 * kEps * std::max(std::abs(a[i]), std::abs(b[i])) + pivmin;
            if (width > tol) active.push_back(i);
        }
        if (active.empty()) break;
        for (std::size_t s = 0; s < active.size(); s += kLanes) {
            std::size_t m = std::min(kLanes, active.size() - s);
            double x[kLanes];
            std::size_t c[kLanes];
            for (std::size_t j = 0; j < m; ++j) {
                std::size_t i = active[s + j];
                x[j] = 0.5 * (a[i] + b[i]);
            }
            sturm_block(t.diag.data(), e2.data(), n, x, m, c, pivmin);
            for (std::size_t j = 0; j < m; ++j) {
                std::size_t i = active[s + j];
                if (c[j] > i) {
                    b[i] = x[j];
                } else {
                    a[i] = x[j];
                }
                // Share the information with neighbouring intervals.
                for (std::size_t q = 0; q < k; ++q) {
                    if (q == i) continue;
                    if (c[j] > q && x[j] < b[q] && x[j] > a[q]) b[q] = x[j];
                    if (c[j] <= q && x[j] > a[q] && x[j] < b[q]) a[q] = x[j];
                }
            }
        }
    }
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = 0.5 * (a[i] + b[i]);
    return out;
}

void shifted_solve(const SymTridiagonal& t, double shift, std::span<double> rhs) {
    const std::size_t n = t.size();
    if (rhs.size() != n) throw InvalidArgument("shifted_solve: size mismatch");
    if (n == 0) return;
    // LU of the shifted matrix with partial pivoting: U has two superdiagonals.
    std::vector<double> d(n), du(n, 0.0), du2(n, 0.0), dl(n, 0.0);
    std::vector<char> swapped(n, 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - shift;
    for (std::size_t i = 0; i + 1 < n; ++i) du[i] = t.off[i];
    std::vector<double> sub(t.off);
    auto [glo, ghi] = gershgorin_bounds(t);
    const double tiny = kEps * std::max({std::abs(glo), std::abs(ghi), 1.0});
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(sub[i])) {
            if (d[i] == 0.0) d[i] = tiny;
            double l = sub[i] / d[i];
            dl[i] = l;
            d[i + 1] -= l * du[i];
        } else {
            swapped[i] = 1;
            double l = d[i] / sub[i];
            d[i] = sub[i];
            dl[i] = l;
            double tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - l * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -l * du[i + 1];
            }
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = tiny;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (swapped[i]) {
            double tmp = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = tmp - dl[i] * rhs[i + 1];
        } else {
            rhs[i + 1] -= dl[i] * rhs[i];
        }
    }
    rhs[n - 1] /= d[n - 1];
    if (n > 1) rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    for (std::size_t ii = n >= 2 ? n - 2 : 0; ii-- > 0;) {
        rhs[ii] = (rhs[ii] - du[ii] * rhs[ii + 1] - du2[ii] * rhs[ii + 2]) / d[ii];
    }
}

std::vector<double> inverse_iteration(const SymTridiagonal& t, double lambda, int iterations) {
    const std::size_t n = t.size();
    std::vector<double> x(n);
    // Deterministic start vector with no special symmetry.
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.25 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    for (int it = 0; it < iterations; ++it) {
        shifted_solve(t, lambda, x);
        double norm = 0.0;
        for (double v : x) norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw NumericalError("inverse_iteration: breakdown at lambda = " + std::to_string(lambda));
        }
        for (double& v : x) v /= norm;
    }
    return x;
}

}  // namespace magspec
