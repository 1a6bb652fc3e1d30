#include "oracles.hpp"

#include "magspec/cli.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/airy.hpp>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace magspec::testing {
namespace {

// Boundary functional after integrating from the far wall to s = 0; its zeros
// in lambda are the eigenvalues, in increasing order.
double boundary_mismatch(double eta, const BoundaryCondition& bc, double lambda, double step) {
    const double S = std::max(eta, 0.0) + std::sqrt(std::max(lambda, 1.0)) + 10.0;
    const long N = static_cast<long>(std::ceil(S / step));
    const double d = S / static_cast<double>(N);
    auto q = [&](long i) {
        const double s = static_cast<double>(i) * d;
        return (eta - s) * (eta - s) - lambda;
    };
    // Numerov on u'' = q u, marching from s = S towards 0.
    std::vector<double> u(static_cast<std::size_t>(N) + 1, 0.0);
    u[N] = 0.0;
    u[N - 1] = 1e-30;
    const double k = d * d / 12.0;
    for (long i = N - 1; i >= 1; --i) {
        const double a = 1.0 - k * q(i + 1);
        const double b = 2.0 + 10.0 * k * q(i);
        const double c = 1.0 - k * q(i - 1);
        u[i - 1] = (b * u[i] - a * u[i + 1]) / c;
        if (std::abs(u[i - 1]) > 1e200) {
            for (long j = i - 1; j <= N; ++j) u[j] *= 1e-200;
        }
    }
    double norm = 0.0;
    for (int i = 0; i <= 4; ++i) norm = std::max(norm, std::abs(u[i]));
    const double u0 = u[0] / norm;
    const double du = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * d) / norm;
    switch (bc.kind) {
        case BcKind::Dirichlet: return u0;
        case BcKind::Neumann: return du;
        // u_x + alpha u = 0 with x = -s.
        case BcKind::Robin: return -du + bc.alpha * u0;
    }
    throw std::logic_error("unknown boundary condition");
}

}  // namespace

double shooting_eigenvalue(double eta, const BoundaryCondition& bc, int n, double step) {
    auto f = [&](double l) { return boundary_mismatch(eta, bc, l, step); };
    double lo = 0.0;
    double flo = f(lo);
    int found = 0;
    for (double hi = 0.01; hi < 400.0; hi += 0.01) {
        const double fhi = f(hi);
        if ((flo > 0.0) != (fhi > 0.0)) {
            if (found == n) {
                double a = lo, b = hi, fa = flo;
                for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
                    const double m = 0.5 * (a + b);
                    const double fm = f(m);
                    if ((fm > 0.0) == (fa > 0.0)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return 0.5 * (a + b);
            }
            ++found;
        }
        lo = hi;
        flo = fhi;
    }
    throw std::runtime_error("shooting_eigenvalue: root not bracketed");
}

double airy_prime_zero(int k) {
    auto f = [](double x) { return boost::math::airy_ai_prime(-x); };
    int found = 0;
    double lo = 0.0;
    for (double hi = 1e-3; hi < 40.0; hi += 1e-3) {
        if ((f(lo) > 0.0) != (f(hi) > 0.0)) {
            if (++found == k) {
                double a = lo, b = hi;
                for (int it = 0; it < 100; ++it) {
                    const double m = 0.5 * (a + b);
                    if ((f(m) > 0.0) == (f(a) > 0.0)) a = m;
                    else b = m;
                }
                return 0.5 * (a + b);
            }
        }
        lo = hi;
    }
    throw std::runtime_error("airy_prime_zero: zero not bracketed");
}

long dense_oracle_count(const OracleProblem& p, double tau) {
    p.validate();
    const int n1 = p.n1, n2 = p.n2;
    const double h = p.params.h(), mu = p.params.mu();
    const double d1 = p.d1(), d2 = p.d2();
    const double c1 = h * h / (d1 * d1), c2 = h * h / (d2 * d2);
    const int N = n1 * n2;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
    auto idx = [&](int i1, int i2) { return i1 * n2 + ((i2 % n2) + n2) % n2; };
    for (int i1 = 0; i1 < n1; ++i1) {
        const double x1 = p.x1(i1);
        const std::complex<double> phase = std::polar(1.0, -mu * x1 * d2 / h);
        for (int i2 = 0; i2 < n2; ++i2) {
            const int r = idx(i1, i2);
            M(r, r) = 2.0 * c1 + 2.0 * c2 + p.V(x1, (i2 + 0.5) * d2);
            // Ghost point u_{-1} = u_1 for Neumann doubles the inward coupling of row 0.
            if (i1 + 1 < n1) M(r, idx(i1 + 1, i2)) += (!p.bc.is_dirichlet() && i1 == 0) ? -2.0 * c1 : -c1;
            if (i1 > 0) M(r, idx(i1 - 1, i2)) += -c1;
            M(r, idx(i1, i2 + 1)) += -c2 * phase;
            M(r, idx(i1, i2 - 1)) += -c2 * std::conj(phase);
        }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    long count = 0;
    for (int i = 0; i < N; ++i) count += es.eigenvalues()[i].real() <= tau;
    return count;
}

CircleHop circle_hop(double a, double eta, double mu) {
    const double r = a / mu;
    const double c = eta * r;
    CircleHop out;
    out.chord = 2.0 * std::sqrt(r * r - c * c);
    // Angle of the arc with x1 > 0, traversed at angular speed 2 mu.
    const double angle = 2.0 * std::acos(-c / r);
    out.time = angle / (2.0 * mu);
    return out;
}

CliRun run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> storage = {"magspec"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    std::ostringstream out, err;
    CliRun r;
    r.code = magspec::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace magspec::testing
