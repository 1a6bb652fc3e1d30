#pragma once

#include "magspec/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace magspec {

/// Discretization of the half-line oscillator L(eta) = -d^2 + (x + eta)^2, x < 0.
///
/// The solver works with s = distance from the boundary, so the operator reads
/// -u'' + (eta - s)^2 u on [0, S] with an artificial Dirichlet wall at S.
struct OscillatorGrid {
    /// Coarsest grid spacing.
    double step = 5e-3;
    /// Window length kept beyond the outer classical turning point.
    double left_cut = 12.0;
    /// Number of grids (step, step/2, ...) combined by Richardson extrapolation.
    int richardson_levels = 2;
    /// Below this |lambda - (2n+1)| the deviation is recomputed by perturbative
    /// shooting around the Hermite function (0 disables).
    double tunneling_threshold = 1e-7;

    void validate() const;
    /// Stable text form of every discretization parameter.
    std::string describe() const;
    /// 64-bit FNV-1a hash of describe(), as 16 hex digits.
    std::string fingerprint() const;
};

/// One eigenpair of L(eta) after extrapolation.
struct EigenPair {
    int index = 0;
    double lambda = 0.0;
    /// lambda - (2n+1), carried separately to keep relative accuracy when tiny.
    double deviation = 0.0;
    /// Normalized eigenfunction sampled at s_i = i * sample_step (finest grid).
    std::vector<double> samples;
    double sample_step = 0.0;
    /// u at the boundary x = eta.
    double boundary_value = 0.0;
    /// du/dx at the boundary x = eta (x increases towards the boundary).
    double boundary_derivative = 0.0;
    /// Richardson error estimate of lambda.
    double lambda_error = 0.0;
    /// True when the tunneling refinement replaced the grid eigenvalue.
    bool refined = false;

    /// Linear interpolation of the samples (zero beyond the window).
    double value_at(double s) const;
    /// Trapezoidal mass of u^2 on [0, X].
    double partial_mass(double X) const;
};

/// Grid-level eigenvalues and eigenvectors before extrapolation.
struct LevelSolution {
    double step = 0.0;
    std::vector<double> lambda;
    /// u on s_i = i * step, i = 0..N, normalized; empty when vectors were skipped.
    std::vector<std::vector<double>> u;
};

struct SpectrumLevels {
    double eta = 0.0;
    BoundaryCondition bc;
    double window = 0.0;
    std::vector<LevelSolution> levels;
};

/// Raw per-level solutions on a shared window; building block for callers that
/// extrapolate their own functionals of the eigenfunctions.
SpectrumLevels solve_levels(double eta, const BoundaryCondition& bc, int n_max,
                            const OscillatorGrid& grid, bool want_vectors);

/// Richardson tableau for values on steps d, d/2, d/4, ... of a 2nd-order scheme.
/// Returns the extrapolated value and the difference to the previous column.
std::pair<double, double> richardson(const std::vector<double>& values);

/// Lowest n_max + 1 eigenpairs of L(eta), ascending.
std::vector<EigenPair> solve_spectrum(double eta, const BoundaryCondition& bc, int n_max,
                                      const OscillatorGrid& grid = {});

/// Eigenvalues only (no eigenvectors), same accuracy as solve_spectrum.
std::vector<double> solve_eigenvalues(double eta, const BoundaryCondition& bc, int n_max,
                                      const OscillatorGrid& grid = {});

/// Single branch value lambda_n(eta).
double branch_value(double eta, const BoundaryCondition& bc, int n, const OscillatorGrid& grid = {});

struct BranchSample {
    double eta = 0.0;
    double lambda = 0.0;
    double deviation = 0.0;
    double boundary_value = 0.0;
    double boundary_derivative = 0.0;
    double dh_derivative = 0.0;
};

/// Sampled curve eta -> lambda_n(eta).
struct EigenBranch {
    BoundaryCondition bc;
    int n = 0;
    std::vector<BranchSample> samples;
    std::string grid_fingerprint;

    std::vector<double> etas() const;
    std::vector<double> lambdas() const;
};

EigenBranch branch_sample(const BoundaryCondition& bc, int n, const std::vector<double>& eta_grid,
                          const OscillatorGrid& grid = {}, unsigned jobs = 1);

/// Dauge-Helffer expression for d lambda / d eta from the boundary data.
double dh_derivative(const EigenPair& pair, double eta, const BoundaryCondition& bc);

struct BranchMinimum {
    double eta = 0.0;
    double lambda = 0.0;
    /// Second derivative by centered differences of the branch.
    double curvature_fd = 0.0;
    /// Second derivative predicted from the boundary value, 2 eta u(eta)^2.
    double curvature_dh = 0.0;
    double boundary_value = 0.0;
};

/// Minimum of the Neumann (or Robin) branch n, where lambda = eta^2 - alpha^2.
BranchMinimum branch_minimum(const BoundaryCondition& bc, int n, const OscillatorGrid& grid = {});
BranchMinimum neumann_minimum(int n, const OscillatorGrid& grid = {});

/// All eta in (lo, hi) with lambda_n(eta) = level, ascending.
std::vector<double> branch_crossing(const BoundaryCondition& bc, int n, double level,
                                    const OscillatorGrid& grid, std::pair<double, double> search,
                                    double eta_tol = 1e-12);

/// lambda_n(eta; alpha) for each alpha (Robin with alpha = 0 is Neumann).
std::vector<double> robin_family(double eta, const std::vector<double>& alphas, int n,
                                 const OscillatorGrid& grid = {});

/// Normalized Hermite function and its derivative at y.
std::pair<double, double> hermite_function(int n, double y);

/// lambda_n(eta) - (2n+1) by shooting around the Hermite function.
///
/// Accurate to relative precision when the deviation is exponentially small.
/// `start` seeds the iteration. Returns (deviation, u(eta), u'(eta)).
struct TunnelingResult {
    double deviation = 0.0;
    double boundary_value = 0.0;
    double boundary_derivative = 0.0;
};
TunnelingResult tunneling_deviation(double eta, const BoundaryCondition& bc, int n, double start);

}  // namespace magspec
