#pragma once

#include "magspec/core.hpp"
#include "magspec/counting.hpp"
#include "magspec/oscillator.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace magspec {

/// Diagonal of the spectral projector of the half-plane model at distance x1.
struct KernelQuery {
    double x1 = 0.0;
    double tau = 0.0;
    ModelParams params{1.0, 1.0};
    BoundaryCondition bc;

    void validate() const;
};

struct KernelOptions {
    OscillatorGrid grid;
    /// Widest eta panel of the fixed Gauss-Kronrod rule.
    double max_panel = 0.5;
    unsigned jobs = 1;
};

/// e(x, x, tau) = (2 pi)^{-1} (mu/h) sum_j int theta(tau - mu h lambda_j) u_j^2(x1/sqrt(h/mu), eta) deta.
double kernel_density(const KernelQuery& q, const KernelOptions& options = {});

struct TraceDefect {
    double value = 0.0;
    double error = 0.0;
    /// Largest boundary distance in magnetic lengths covered by the quadrature.
    double s_max = 0.0;
    /// Bulk density h^{-2} N^MW subtracted from e.
    double bulk = 0.0;
};

/// int_0^inf (e(x, x, tau) - h^{-2} N^MW) dx1; the bulk uses the counting
/// convention of the boundary condition.
TraceDefect trace_defect(double tau, const ModelParams& params, const BoundaryCondition& bc,
                         const KernelOptions& options = {});

/// Samples of e - h^{-2} N^MW at the given distances.
std::vector<std::pair<double, double>> defect_profile(double tau, const ModelParams& params,
                                                      const BoundaryCondition& bc,
                                                      const std::vector<double>& x1_grid,
                                                      const KernelOptions& options = {});

/// Strip [0, L1] x (L2-periodic) discretized by centered differences; the
/// magnetic term uses a Peierls phase so the gauge A = (0, mu x1) is exact
/// along x2. The wall at x1 = L1 is Dirichlet.
struct OracleProblem {
    double L1 = 1.0;
    double L2 = 1.0;
    int n1 = 32;
    int n2 = 32;
    BoundaryCondition bc;
    ScalarField V = [](double, double) { return 0.0; };
    ModelParams params{1.0, 1.0};
    std::size_t cap = 40000;

    void validate() const;
    std::size_t unknowns() const noexcept { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
    double d1() const;
    double d2() const;
    /// x1 of row i (0-based).
    double x1(int i) const;
};

struct OracleCount {
    long count = 0;
    /// Level actually factored (differs from tau after a breakdown retry).
    double tau_used = 0.0;
    std::size_t bandwidth = 0;
    std::size_t unknowns = 0;
};

/// Number of eigenvalues <= tau of the discrete operator, by counting the
/// negative pivots of a banded LDL^H factorization of M - tau.
OracleCount oracle_count_2d(const OracleProblem& p, double tau);

/// Gershgorin interval of the discrete operator.
std::pair<double, double> oracle_gershgorin(const OracleProblem& p);

}  // namespace magspec
