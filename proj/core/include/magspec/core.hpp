#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace magspec {

/// Library version, "major.minor.patch".
const char* version() noexcept;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not deliver the requested accuracy.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Scaling constants of the magnetic problem.
///
/// mu is the field intensity, h the semiclassical parameter. The derived
/// constants are hbar_large = mu*h (spectral scale), hbar_small = h/mu
/// (kernel scale) and hbar_half = sqrt(h/mu) (boundary layer length).
class ModelParams {
public:
    ModelParams(double mu, double h);

    double mu() const noexcept { return mu_; }
    double h() const noexcept { return h_; }
    double hbar_large() const noexcept { return hbar_large_; }
    double hbar_small() const noexcept { return hbar_small_; }
    double hbar_half() const noexcept { return hbar_half_; }

private:
    double mu_;
    double h_;
    double hbar_large_;
    double hbar_small_;
    double hbar_half_;
};

struct DerivedConstants {
    double hbar_large;
    double hbar_small;
    double hbar_half;
};

DerivedConstants derive_constants(const ModelParams& p) noexcept;

enum class BcKind { Dirichlet, Neumann, Robin };

/// Boundary condition at the edge; Robin means (u' + alpha u) = 0.
struct BoundaryCondition {
    BcKind kind = BcKind::Dirichlet;
    double alpha = 0.0;

    static BoundaryCondition dirichlet() { return {BcKind::Dirichlet, 0.0}; }
    static BoundaryCondition neumann() { return {BcKind::Neumann, 0.0}; }
    static BoundaryCondition robin(double alpha);

    /// Robin coefficient entering the discretization (0 for Neumann).
    double robin_alpha() const noexcept { return kind == BcKind::Robin ? alpha : 0.0; }
    bool is_dirichlet() const noexcept { return kind == BcKind::Dirichlet; }

    /// "dirichlet", "neumann" or "robin:<alpha>".
    std::string to_string() const;
    static BoundaryCondition parse(std::string_view text);

    friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

enum class HeavisideConvention { LeftContinuous, RightContinuous };

/// theta(x): 1 for x > 0, and also for x == 0 under RightContinuous.
int heaviside(double x, HeavisideConvention conv);

/// Threshold convention used by the counting formulas for a boundary condition.
HeavisideConvention counting_convention(const BoundaryCondition& bc) noexcept;

/// W(x1, x2) together with its first and second partial derivatives.
///
/// Missing analytic derivatives fall back to 4th-order central differences.
class PotentialField {
public:
    using Scalar = std::function<double(double, double)>;
    using Gradient = std::function<std::array<double, 2>(double, double)>;
    /// Hessian entries (w11, w12, w22).
    using Hessian = std::function<std::array<double, 3>(double, double)>;

    static constexpr double kDefaultStep = 1e-4;

    PotentialField() = default;
    explicit PotentialField(Scalar value, Gradient gradient = {}, Hessian hessian = {},
                            double fd_step = kDefaultStep);

    /// W = (tau - V) / F built from separate V and F fields.
    static PotentialField from_tau_v_f(double tau, Scalar V, Scalar F);
    static PotentialField constant(double c);
    /// W = c + g1 x1 + g2 x2.
    static PotentialField linear(double c, double g1, double g2);
    /// W = c + g1 x1 + g2 x2 + (a11 x1^2 + 2 a12 x1 x2 + a22 x2^2) / 2.
    static PotentialField quadratic(double c, double g1, double g2, double a11, double a12,
                                    double a22);

    double value(double x1, double x2) const;
    std::array<double, 2> gradient(double x1, double x2) const;
    std::array<double, 3> hessian(double x1, double x2) const;

    std::array<double, 2> fd_gradient(double x1, double x2) const;
    std::array<double, 3> fd_hessian(double x1, double x2) const;

    bool has_analytic_gradient() const noexcept { return static_cast<bool>(gradient_); }
    bool has_analytic_hessian() const noexcept { return static_cast<bool>(hessian_); }
    bool valid() const noexcept { return static_cast<bool>(value_); }

private:
    Scalar value_;
    Gradient gradient_;
    Hessian hessian_;
    double step_ = kDefaultStep;
};

/// Number of workers to use when the caller passes 0.
unsigned default_jobs() noexcept;

/// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f);

}  // namespace magspec
