#include "magspec/core.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>

namespace magspec {

const char* version() noexcept { return MAGSPEC_VERSION_STRING; }

ModelParams::ModelParams(double mu, double h) : mu_(mu), h_(h) {
    if (!std::isfinite(mu) || mu < 1.0) {
        throw InvalidArgument("ModelParams: mu must be finite and >= 1, got " + std::to_string(mu));
    }
    if (!std::isfinite(h) || h <= 0.0 || h > 1.0) {
        throw InvalidArgument("ModelParams: h must lie in (0, 1], got " + std::to_string(h));
    }
    hbar_large_ = mu * h;
    hbar_small_ = h / mu;
    hbar_half_ = std::sqrt(hbar_small_);
}

DerivedConstants derive_constants(const ModelParams& p) noexcept {
    return {p.hbar_large(), p.hbar_small(), p.hbar_half()};
}

BoundaryCondition BoundaryCondition::robin(double alpha) {
    if (!std::isfinite(alpha) || alpha < 0.0) {
        throw InvalidArgument("Robin coefficient must be finite and nonnegative");
    }
    return {BcKind::Robin, alpha};
}

std::string BoundaryCondition::to_string() const {
    switch (kind) {
        case BcKind::Dirichlet:
            return "dirichlet";
        case BcKind::Neumann:
            return "neumann";
        case BcKind::Robin: {
            std::ostringstream os;
            os.precision(17);
            os << "robin:" << alpha;
            return os.str();
        }
    }
    return "unknown";
}

BoundaryCondition BoundaryCondition::parse(std::string_view text) {
    if (text == "dirichlet" || text == "D") return dirichlet();
    if (text == "neumann" || text == "N") return neumann();
    if (text.substr(0, 6) == "robin:") {
        std::string rest(text.substr(6));
        char* end = nullptr;
        double a = std::strtod(rest.c_str(), &end);
        if (rest.empty() || end != rest.c_str() + rest.size()) {
            throw InvalidArgument("bad Robin coefficient in '" + std::string(text) + "'");
        }
        return robin(a);
    }
    throw InvalidArgument("unknown boundary condition '" + std::string(text) +
                          "' (expected dirichlet, neumann or robin:ALPHA)");
}

int heaviside(double x, HeavisideConvention conv) {
    if (!std::isfinite(x)) throw InvalidArgument("heaviside: non-finite argument");
    if (x > 0.0) return 1;
    if (x == 0.0 && conv == HeavisideConvention::RightContinuous) return 1;
    return 0;
}

HeavisideConvention counting_convention(const BoundaryCondition& bc) noexcept {
    return bc.is_dirichlet() ? HeavisideConvention::LeftContinuous
                             : HeavisideConvention::RightContinuous;
}

PotentialField::PotentialField(Scalar value, Gradient gradient, Hessian hessian, double fd_step)
    : value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      step_(fd_step) {
    if (!value_) throw InvalidArgument("PotentialField: value evaluator is required");
    if (!(fd_step > 0.0)) throw InvalidArgument("PotentialField: step must be positive");
}

PotentialField PotentialField::from_tau_v_f(double tau, Scalar V, Scalar F) {
    if (!V || !F) throw InvalidArgument("PotentialField: V and F evaluators are required");
    return PotentialField([tau, V = std::move(V), F = std::move(F)](double x1, double x2) {
        double f = F(x1, x2);
        if (!(f > 0.0)) throw InvalidArgument("PotentialField: F must be positive");
        return (tau - V(x1, x2)) / f;
    });
}

PotentialField PotentialField::constant(double c) {
    return PotentialField([c](double, double) { return c; },
                          [](double, double) { return std::array<double, 2>{0.0, 0.0}; },
                          [](double, double) { return std::array<double, 3>{0.0, 0.0, 0.0}; });
}

PotentialField PotentialField::linear(double c, double g1, double g2) {
    return PotentialField([=](double x1, double x2) { return c + g1 * x1 + g2 * x2; },
                          [=](double, double) { return std::array<double, 2>{g1, g2}; },
                          [](double, double) { return std::array<double, 3>{0.0, 0.0, 0.0}; });
}

PotentialField PotentialField::quadratic(double c, double g1, double g2, double a11, double a12,
                                         double a22) {
    return PotentialField(
        [=](double x1, double x2) {
            return c + g1 * x1 + g2 * x2 + 0.5 * (a11 * x1 * x1 + 2.0 * a12 * x1 * x2 + a22 * x2 * x2);
        },
        [=](double x1, double x2) {
            return std::array<double, 2>{g1 + a11 * x1 + a12 * x2, g2 + a12 * x1 + a22 * x2};
        },
        [=](double, double) { return std::array<double, 3>{a11, a12, a22}; });
}

double PotentialField::value(double x1, double x2) const {
    if (!value_) throw InvalidArgument("PotentialField: empty field");
    double w = value_(x1, x2);
    if (!std::isfinite(w)) throw NumericalError("PotentialField: non-finite value");
    return w;
}

std::array<double, 2> PotentialField::fd_gradient(double x1, double x2) const {
    const double s = step_;
    auto d = [&](double dx1, double dx2) {
        double fp1 = value(x1 + dx1, x2 + dx2), fm1 = value(x1 - dx1, x2 - dx2);
        double fp2 = value(x1 + 2 * dx1, x2 + 2 * dx2), fm2 = value(x1 - 2 * dx1, x2 - 2 * dx2);
        return (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * s);
    };
    return {d(s, 0.0), d(0.0, s)};
}

std::array<double, 3> PotentialField::fd_hessian(double x1, double x2) const {
    const double s = std::sqrt(step_) * 1e-1;
    auto second = [&](double dx1, double dx2) {
        double f0 = value(x1, x2);
        double fp1 = value(x1 + dx1, x2 + dx2), fm1 = value(x1 - dx1, x2 - dx2);
        double fp2 = value(x1 + 2 * dx1, x2 + 2 * dx2), fm2 = value(x1 - 2 * dx1, x2 - 2 * dx2);
        return (-(fp2 + fm2) + 16.0 * (fp1 + fm1) - 30.0 * f0) / (12.0 * s * s);
    };
    double w11 = second(s, 0.0);
    double w22 = second(0.0, s);
    double wpp = value(x1 + s, x2 + s), wpm = value(x1 + s, x2 - s);
    double wmp = value(x1 - s, x2 + s), wmm = value(x1 - s, x2 - s);
    double w12 = (wpp - wpm - wmp + wmm) / (4.0 * s * s);
    return {w11, w12, w22};
}

std::array<double, 2> PotentialField::gradient(double x1, double x2) const {
    if (gradient_) return gradient_(x1, x2);
    return fd_gradient(x1, x2);
}

std::array<double, 3> PotentialField::hessian(double x1, double x2) const {
    if (hessian_) return hessian_(x1, x2);
    return fd_hessian(x1, x2);
}

unsigned default_jobs() noexcept {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f) {
    if (jobs == 0) jobs = default_jobs();
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    unsigned count = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace magspec
