#pragma once

#include "magspec/core.hpp"
#include "magspec/oscillator.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace magspec {

/// Landau-level count density #{j : (2j+1) mu_h F + V <= tau} (2 pi)^{-1} sqrt_g mu_h F.
///
/// The threshold case (equality) is counted only under RightContinuous.
double n_mw_density(double F, double V, double tau, double mu_h, double sqrt_g,
                    HeavisideConvention conv);

/// Number of occupied Landau levels behind n_mw_density.
int landau_count(double F, double V, double tau, double mu_h, HeavisideConvention conv);

enum class CorrectionMethod { EigenfunctionIntegral, BranchIntegral };

std::string to_string(CorrectionMethod m);

/// Boundary correction to the magnetic Weyl count per unit boundary length.
struct BoundaryCorrection {
    BoundaryCondition bc;
    double tau = 0.0;
    double hbar = 0.0;
    double value = 0.0;
    CorrectionMethod method = CorrectionMethod::BranchIntegral;
    double quad_error = 0.0;
    /// Largest branch index that contributed.
    int j_max = -1;
    /// Integration window in eta.
    double eta_min = 0.0;
    double eta_max = 0.0;
    /// Cut in the boundary distance (eigenfunction form only).
    double x1_cut = 0.0;
};

struct EigfnQuadrature {
    /// Absolute tolerance per eta panel for the Gauss-Kronrod estimate.
    double panel_tol = 1e-9;
    /// Relative change allowed when the boundary cut is doubled.
    double doubling_tol = 1e-6;
    /// Widest initial eta panel.
    double max_panel = 2.0;
    int max_depth = 12;
    unsigned jobs = 1;
};

/// Kernel form: integral over the boundary distance of the eigenfunction
/// densities, with the eta and distance integrals exchanged.
BoundaryCorrection bound_correction_eigfn(const BoundaryCondition& bc, double tau, double hbar,
                                          const OscillatorGrid& grid = {},
                                          const EigfnQuadrature& quad = {});

/// Branch form: signed lengths of the sublevel sets {lambda_j < tau/hbar}.
BoundaryCorrection bound_correction_branch(const BoundaryCondition& bc, double tau, double hbar,
                                           const OscillatorGrid& grid = {});

/// Semiclassical limit of the correction: -(4 pi)^{-1} sqrt(tau) for Dirichlet,
/// +(4 pi)^{-1} sqrt(tau) for Neumann and Robin.
double kappa0_limit(const BoundaryCondition& bc, double tau);

/// Sublevel geometry of one branch at a level: the signed eta-length that the
/// branch form integrates, with the crossing points found.
struct BranchTerm {
    int j = 0;
    double length = 0.0;
    std::vector<double> crossings;
    double error = 0.0;
};
std::vector<BranchTerm> branch_terms(const BoundaryCondition& bc, double level,
                                     const OscillatorGrid& grid);

using ScalarField = std::function<double(double, double)>;

enum class EdgeSide { X1Min, X1Max, X2Min, X2Max };

struct DomainEdge {
    EdgeSide side = EdgeSide::X1Min;
    BoundaryCondition bc;
};

/// Axis-aligned rectangle; only the listed edges are boundary (the others are
/// periodic or excluded from the boundary term).
struct RectDomain {
    double x1_min = 0.0;
    double x1_max = 1.0;
    double x2_min = 0.0;
    double x2_max = 1.0;
    std::vector<DomainEdge> edges;
};

struct TwoTermOptions {
    int panels = 8;
    int nodes = 16;
    double F_floor = 1e-6;
    /// Relative lattice spacing for caching boundary corrections.
    double lattice = 1e-3;
    OscillatorGrid grid;
};

struct TwoTermCount {
    double bulk = 0.0;
    double boundary = 0.0;
    double total = 0.0;
};

/// h^{-2} int N^MW psi dx + h^{-1} int_{edges} N^MW_bound psi ds with local
/// hbar = mu h F and local level tau - V.
TwoTermCount two_term_count(const RectDomain& domain, const ScalarField& F, const ScalarField& V,
                            const ModelParams& params, double tau, const ScalarField& psi,
                            const TwoTermOptions& options = {});

/// C^2 cutoff: 1 on [-1/2, 1/2], 0 outside [-1, 1].
double cutoff_zeta(double t);

struct SuperstrongOptions {
    double x2_min = 0.0;
    double x2_max = 1.0;
    /// Cut width; 0 selects 5 hbar_half.
    double epsilon_cut = 0.0;
    int x2_nodes = 8;
    int x1_samples = 200;
    int n_limit = 200;
    OscillatorGrid grid;
};

/// Boundary term of the very strong field regime, summed over branches n.
double superstrong_bound_correction(const BoundaryCondition& bc, double z_frak,
                                    const ModelParams& params, const PotentialField& W_eff,
                                    const ScalarField& psi, const SuperstrongOptions& options = {});

struct GapResult {
    bool gap = true;
    /// First violating m when gap is false.
    std::optional<int> witness;
};

/// |(2m+1-z) mu_h F + V - tau| >= eps0 mu_h for every m in [m_lo, m_hi] and F, V in the ranges.
GapResult spectral_gap_check(std::pair<int, int> m_range, double z_frak, double mu_h,
                             std::pair<double, double> F_range, std::pair<double, double> V_range,
                             double tau, double eps0);

/// Boundary ellipticity predicate for branch n: (t - z - eps) mu_h F + V - tau >= 0 over the
/// ranges, with t = 2n+1 (Dirichlet) or the branch minimum (Neumann, Robin).
bool boundary_elliptic(const BoundaryCondition& bc, int n, double z_frak, double mu_h,
                       std::pair<double, double> F_range, std::pair<double, double> V_range,
                       double tau, double eps, const OscillatorGrid& grid = {});

}  // namespace magspec
