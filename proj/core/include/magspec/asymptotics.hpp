#pragma once

#include "magspec/core.hpp"
#include "magspec/oscillator.hpp"

#include <utility>
#include <vector>

namespace magspec {

enum class AsymptoticSide { PlusInfinity, MinusInfinity };

/// Leading coefficient of an eigenvalue branch at one end of the eta axis.
struct AsymptoticCoefficient {
    BoundaryCondition bc;
    int n = 0;
    AsymptoticSide side = AsymptoticSide::PlusInfinity;
    double value = 0.0;
    double theory_value = 0.0;
};

/// 2^{n+1} / (n! sqrt(pi)): prefactor of the exponentially small splitting.
double leading_coefficient(int n);

/// Predicted |lambda_n(eta) - (2n+1)| ~ c0 eta^{2n+1} exp(-eta^2) for eta > 0.
double epsilon_leading(const BoundaryCondition& bc, int n, double eta);

struct LeadingFit {
    double c0 = 0.0;
    double c1 = 0.0;
    /// Largest absolute residual of the two-term model over the window.
    double max_residual = 0.0;
    std::size_t samples = 0;

    AsymptoticCoefficient coefficient(const BoundaryCondition& bc, int n) const;
};

/// Least-squares fit of |lambda - (2n+1)| eta^{-(2n+1)} e^{eta^2} to c0 + c1 eta^{-2}.
LeadingFit fit_leading_coefficient(const EigenBranch& branch, std::pair<double, double> window);

enum class AiryKind { Ai, AiPrime };

/// Ai(x) and Ai'(x) from the Maclaurin series, evaluated in 50-digit arithmetic.
/// Valid for |x| <= kAiryRange.
inline constexpr double kAiryRange = 14.0;
double airy_ai(double x);
double airy_ai_prime(double x);

/// Magnitude of the k-th negative zero of Ai or Ai' (1 <= k <= 10).
double airy_zero(AiryKind kind, int k);

/// eta^2 + (2|eta|)^{2/3} a_{n+1} for eta <= -2, with a the Ai (Dirichlet) or Ai' (Neumann) zero.
double lambda_neg_asymptote(const BoundaryCondition& bc, int n, double eta);

/// Sign changes of the second difference of a sampled branch, located by
/// linear interpolation. Reported for exploration only.
std::vector<double> inflection_points(const EigenBranch& branch);

}  // namespace magspec
