#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace magspec {

/// Real symmetric tridiagonal matrix: diag[0..n), off[0..n-1).
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const noexcept { return diag.size(); }
};

/// Number of eigenvalues strictly below x (Sturm sequence count).
std::size_t sturm_count(const SymTridiagonal& t, double x);

/// Sturm counts for several shifts in one sweep over the matrix.
void sturm_counts(const SymTridiagonal& t, std::span<const double> shifts,
                  std::span<std::size_t> counts);

/// Gershgorin interval containing the whole spectrum.
std::pair<double, double> gershgorin_bounds(const SymTridiagonal& t);

/// Lowest k eigenvalues in ascending order by bisection.
///
/// Each eigenvalue is located to abs_tol + 4 eps |lambda|.
std::vector<double> lowest_eigenvalues(const SymTridiagonal& t, std::size_t k, double abs_tol);

/// Eigenvector for an accurately known eigenvalue by inverse iteration.
///
/// Uses tridiagonal LU with partial pivoting; the result has unit Euclidean norm.
std::vector<double> inverse_iteration(const SymTridiagonal& t, double lambda, int iterations = 3);

/// Solves (T - shift I) x = rhs in place with partial pivoting.
void shifted_solve(const SymTridiagonal& t, double shift, std::span<double> rhs);

}  // namespace magspec
