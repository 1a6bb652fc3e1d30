#include "magspec/asymptotics.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace magspec {
namespace {

using Real = boost::multiprecision::cpp_bin_float_50;

struct AiryConstants {
    Real c1;  // Ai(0)
    Real c2;  // -Ai'(0)
};

const AiryConstants& airy_constants() {
    static const AiryConstants k = [] {
        Real three = 3;
        AiryConstants c;
        c.c1 = 1 / (pow(three, Real(2) / 3) * boost::multiprecision::tgamma(Real(2) / 3));
        c.c2 = 1 / (pow(three, Real(1) / 3) * boost::multiprecision::tgamma(Real(1) / 3));
        return c;
    }();
    return k;
}

// Sums the Maclaurin series of f, f', g, g' where Ai = c1 f - c2 g.
// Terms are summed until the geometric tail bound drops below 1e-45.
struct AirySeries {
    Real f, df, g, dg;
};

AirySeries airy_series(double xd) {
    if (!(std::abs(xd) <= kAiryRange)) {
        throw InvalidArgument("airy: |x| must not exceed " + std::to_string(kAiryRange));
    }
    const Real x = xd;
    const Real x3 = x * x * x;
    const Real tiny = Real("1e-45");
    AirySeries s{0, 0, 0, 0};
    // a_k x^{3k} with a_{k+1} = a_k / ((3k+2)(3k+3)); b_k x^{3k+1} with b_{k+1} = b_k / ((3k+3)(3k+4)).
    Real a = 1;
    Real b = x;
    Real da = 0;      // 3k a_k x^{3k-1}
    Real db = 1;      // (3k+1) b_k x^{3k}
    for (int k = 0; k < 400; ++k) {
        s.f += a;
        s.g += b;
        s.df += da;
        s.dg += db;
        const Real ka = Real(3 * k + 2) * Real(3 * k + 3);
        const Real kb = Real(3 * k + 3) * Real(3 * k + 4);
        Real next_a = a * x3 / ka;
        Real next_b = b * x3 / kb;
        Real next_da = next_a * Real(3 * (k + 1)) / (x == 0 ? Real(1) : x);
        if (x == 0) next_da = 0;
        Real next_db = next_b * Real(3 * (k + 1) + 1) / (x == 0 ? Real(1) : x);
        if (x == 0) next_db = 0;
        a = next_a;
        b = next_b;
        da = next_da;
        db = next_db;
        // Ratios of successive terms decrease; bound the tail by a geometric series.
        Real r = abs(x3) / (Real(3 * k + 5) * Real(3 * k + 6));
        if (r < 0.5) {
            Real bound = (abs(a) + abs(b) + abs(da) + abs(db)) * 2;
            if (bound < tiny) break;
        }
    }
    return s;
}

double airy_eval(AiryKind kind, double x) {
    const auto& c = airy_constants();
    AirySeries s = airy_series(x);
    Real v = kind == AiryKind::Ai ? c.c1 * s.f - c.c2 * s.g : c.c1 * s.df - c.c2 * s.dg;
    return static_cast<double>(v);
}

}  // namespace

double leading_coefficient(int n) {
    if (n < 0) throw InvalidArgument("leading_coefficient: n must be >= 0");
    return std::pow(2.0, n + 1) / (std::tgamma(n + 1.0) * std::sqrt(std::numbers::pi));
}

double epsilon_leading(const BoundaryCondition&, int n, double eta) {
    return leading_coefficient(n) * std::pow(eta, 2 * n + 1) * std::exp(-eta * eta);
}

AsymptoticCoefficient LeadingFit::coefficient(const BoundaryCondition& bc, int n) const {
    return {bc, n, AsymptoticSide::PlusInfinity, c0, leading_coefficient(n)};
}

LeadingFit fit_leading_coefficient(const EigenBranch& branch, std::pair<double, double> window) {
    auto [lo, hi] = window;
    if (!(lo >= 2.0) || !(hi > lo)) {
        throw InvalidArgument("fit_leading_coefficient: window must satisfy 2 <= lo < hi");
    }
    const int n = branch.n;
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : branch.samples) {
        if (s.eta < lo || s.eta > hi) continue;
        double r = std::abs(s.deviation) * std::pow(s.eta, -(2 * n + 1)) * std::exp(s.eta * s.eta);
        double z = 1.0 / (s.eta * s.eta);
        s11 += 1.0;
        s12 += z;
        s22 += z * z;
        r1 += r;
        r2 += r * z;
        pts.emplace_back(z, r);
    }
    if (pts.size() < 4) {
        throw InvalidArgument("fit_leading_coefficient: fewer than 4 samples in the window");
    }
    double det = s11 * s22 - s12 * s12;
    LeadingFit fit;
    fit.samples = pts.size();
    fit.c0 = (s22 * r1 - s12 * r2) / det;
    fit.c1 = (s11 * r2 - s12 * r1) / det;
    for (auto [z, r] : pts) fit.max_residual = std::max(fit.max_residual, std::abs(r - fit.c0 - fit.c1 * z));
    if (fit.max_residual > 0.2 * std::abs(fit.c0)) {
        throw NumericalError("fit_leading_coefficient: residual exceeds 20% of c0; solver accuracy insufficient");
    }
    return fit;
}

double airy_ai(double x) { return airy_eval(AiryKind::Ai, x); }

double airy_ai_prime(double x) { return airy_eval(AiryKind::AiPrime, x); }

double airy_zero(AiryKind kind, int k) {
    if (k < 1 || k > 10) throw InvalidArgument("airy_zero: k must lie in [1, 10]");
    auto f = [kind](double t) { return airy_eval(kind, -t); };
    // Scan outward for the k-th sign change, then bisect.
    const double dt = 0.05;
    double a = 0.0;
    double fa = f(a);
    int found = 0;
    for (double b = dt; b <= kAiryRange; b += dt) {
        double fb = f(b);
        if ((fa > 0.0) != (fb > 0.0)) {
            if (++found == k) {
                for (int it = 0; it < 100 && b - a > 1e-15 * b; ++it) {
                    double m = 0.5 * (a + b);
                    double fm = f(m);
                    if ((fm > 0.0) == (fa > 0.0)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return 0.5 * (a + b);
            }
        }
        a = b;
        fa = fb;
    }
    throw NumericalError("airy_zero: zero " + std::to_string(k) + " not found within the series range");
}

double lambda_neg_asymptote(const BoundaryCondition& bc, int n, double eta) {
    if (!(eta <= -2.0)) throw InvalidArgument("lambda_neg_asymptote: requires eta <= -2");
    if (bc.kind == BcKind::Robin) {
        throw InvalidArgument("lambda_neg_asymptote: defined for Dirichlet and Neumann only");
    }
    if (n < 0 || n > 9) throw InvalidArgument("lambda_neg_asymptote: n must lie in [0, 9]");
    double a = airy_zero(bc.is_dirichlet() ? AiryKind::Ai : AiryKind::AiPrime, n + 1);
    return eta * eta + std::pow(2.0 * std::abs(eta), 2.0 / 3.0) * a;
}

std::vector<double> inflection_points(const EigenBranch& branch) {
    std::vector<double> out;
    const auto& s = branch.samples;
    if (s.size() < 4) return out;
    std::vector<double> d2(s.size() - 2), mid(s.size() - 2);
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        double h1 = s[i].eta - s[i - 1].eta;
        double h2 = s[i + 1].eta - s[i].eta;
        d2[i - 1] = 2.0 * ((s[i + 1].lambda - s[i].lambda) / h2 - (s[i].lambda - s[i - 1].lambda) / h1) / (h1 + h2);
        mid[i - 1] = s[i].eta;
    }
    for (std::size_t i = 0; i + 1 < d2.size(); ++i) {
        if ((d2[i] > 0.0) != (d2[i + 1] > 0.0)) {
            double t = d2[i] / (d2[i] - d2[i + 1]);
            out.push_back(mid[i] + t * (mid[i + 1] - mid[i]));
        }
    }
    return out;
}

}  // namespace magspec
