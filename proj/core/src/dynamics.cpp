#include "magspec/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace magspec {
namespace {

using State = std::array<double, 4>;  // x1, x2, xi1, xi2

struct Rhs {
    const PotentialField& W;
    double mu;

    State operator()(const State& y) const {
        const auto g = W.gradient(y[0], y[1]);
        const double p = y[3] - mu * y[0];
        return {2.0 * y[2], 2.0 * p, 2.0 * mu * p + g[0], g[1]};
    }
};

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
    State y;
    State err;
};

StepResult dp45(const Rhs& f, const State& y, double h) {
    auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
        State out = y;
        for (auto [c, k] : terms) {
            for (int i = 0; i < 4; ++i) out[i] += h * c * (*k)[i];
        }
        return out;
    };
    const State k1 = f(y);
    const State k2 = f(comb({{a21, &k1}}));
    const State k3 = f(comb({{a31, &k1}, {a32, &k2}}));
    const State k4 = f(comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = f(comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    StepResult r;
    r.y = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = f(r.y);
    for (int i = 0; i < 4; ++i) {
        r.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    return r;
}

// Smallest dt in (0, h] where pred(state after dt) holds, given it holds at h and not at 0.
template <class Pred>
double locate(const Rhs& f, const State& y0, double h, double tol, Pred pred) {
    double lo = 0.0, hi = h;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (pred(dp45(f, y0, mid).y)) hi = mid;
        else lo = mid;
    }
    return hi;
}

PhaseState to_phase(const State& y, double t) { return {y[0], y[1], y[2], y[3], t}; }

}  // namespace

double hamiltonian(const PhaseState& s, const PotentialField& W, double mu) {
    const double p = s.xi2 - mu * s.x1;
    return s.xi1 * s.xi1 + p * p - W.value(s.x1, s.x2);
}

Trajectory integrate_flow(const PhaseState& initial, const PotentialField& W, const ModelParams& params, double T,
                          const FlowOptions& opt) {
    if (!W.valid()) throw InvalidArgument("integrate_flow: W is not set");
    if (!(initial.x1 >= 0.0)) throw InvalidArgument("integrate_flow: initial x1 must be >= 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("integrate_flow: T must be positive");
    if (!(opt.tol > 0.0) || !(opt.event_tol > 0.0) || opt.sample_stride < 1) {
        throw InvalidArgument("integrate_flow: bad options");
    }
    const double mu = params.mu();
    const double W0 = W.value(initial.x1, initial.x2);
    if (W0 > 0.0) {
        const double eta = initial.xi2 / std::sqrt(W0);
        if (std::abs(eta + 1.0) < 1e-3) {
            throw InvalidArgument("integrate_flow: start too close to the gliding limit eta = -1");
        }
    }
    const Rhs f{W, mu};
    Trajectory tr;
    tr.mu = mu;
    const double H0 = hamiltonian(initial, W, mu);
    State y{initial.x1, initial.x2, initial.xi1, initial.xi2};
    double t = initial.t;
    const double t_end = initial.t + T;

    auto record = [&](const State& s, double time, int flag) {
        PhaseState ps = to_phase(s, time);
        const double H = hamiltonian(ps, W, mu);
        if (std::abs(H - H0) > opt.energy_tol * (1.0 + std::abs(H0))) {
            std::ostringstream msg;
            msg << "integrate_flow: energy drift " << std::abs(H - H0) << " at t = " << time;
            throw NumericalError(msg.str());
        }
        tr.samples.push_back(ps);
        tr.event_flags.push_back(flag);
        tr.energy.push_back(H);
    };

    HopSummary hop;
    bool in_hop = false;
    auto reflect = [&](double time) {
        tr.reflections.push_back({time, y[1], y[2]});
        y[0] = 0.0;
        y[2] = -y[2];
        if (in_hop) {
            hop.t_end = time;
            hop.x2_end = y[1];
            tr.hops.push_back(hop);
        }
        hop = HopSummary{};
        hop.t_start = time;
        hop.x2_start = y[1];
        in_hop = true;
        record(y, time, 1);
    };

    record(y, t, 0);
    if (y[0] == 0.0 && y[2] < 0.0) reflect(t);

    double h = std::min(T, 1e-2 / mu);
    std::size_t steps = 0;
    while (t < t_end) {
        if (++steps > opt.max_steps) throw NumericalError("integrate_flow: step budget exhausted");
        h = std::min(h, t_end - t);
        const StepResult r = dp45(f, y, h);
        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double sc = opt.tol * (1.0 + std::max(std::abs(y[i]), std::abs(r.y[i])));
            err = std::max(err, std::abs(r.err[i]) / sc);
        }
        if (!std::isfinite(err)) throw NumericalError("integrate_flow: non-finite state");
        if (err > 1.0) {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            if (h < 1e-14 * std::max(1.0, std::abs(t))) {
                std::ostringstream msg;
                msg << "integrate_flow: step size underflow near tangency at (x1, x2) = (" << y[0] << ", " << y[1]
                    << "), t = " << t;
                throw NumericalError(msg.str());
            }
            continue;
        }
        State y1 = r.y;
        double dt = h;
        bool wall = false;
        if (y1[0] < 0.0) {
            dt = locate(f, y, h, opt.event_tol, [](const State& s) { return s[0] < 0.0; });
            y1 = dp45(f, y, dt).y;
            wall = true;
        }
        // Apex: xi1 turns from positive to nonpositive.
        if (y[2] > 0.0 && y1[2] <= 0.0) {
            const double da = locate(f, y, dt, opt.event_tol, [](const State& s) { return s[2] <= 0.0; });
            const State ya = dp45(f, y, da).y;
            if (ya[0] > hop.apex_x1) {
                hop.apex_x1 = ya[0];
                hop.apex_x2 = ya[1];
                hop.apex_W = W.value(ya[0], ya[1]);
            }
        }
        y = y1;
        t += dt;
        if (wall) {
            reflect(t);
        } else if (steps % static_cast<std::size_t>(opt.sample_stride) == 0 || t >= t_end) {
            record(y, t, 0);
        }
        if (opt.stop_x2_travel > 0.0 && std::abs(y[1] - initial.x2) >= opt.stop_x2_travel) break;
        h = dt * std::clamp(0.9 * std::pow(std::max(err, 1e-30), -0.2), 0.2, 5.0);
        if (wall) h = std::max(h, 1e-6 / mu);
    }
    if (tr.samples.back().t != t) record(y, t, 0);
    return tr;
}

HopMetrics hop_metrics(double a, double eta, double mu) {
    if (!(std::abs(eta) < 1.0)) throw InvalidArgument("hop_metrics: |eta| must be < 1");
    if (!(a > 0.0)) throw InvalidArgument("hop_metrics: a must be positive");
    if (!(mu >= 1.0)) throw InvalidArgument("hop_metrics: mu must be >= 1");
    const double angle = std::numbers::pi - std::acos(eta);
    return {2.0 * a / mu * std::sqrt(1.0 - eta * eta), 2.0 * a / mu * angle, angle / mu};
}

double hop_speed(double eta) {
    if (!(std::abs(eta) < 1.0)) throw InvalidArgument("hop_speed: |eta| must be < 1");
    return std::sqrt(1.0 - eta * eta) / (std::numbers::pi - std::acos(eta));
}

std::array<double, 2> drift_velocity(double x1, double x2, const PotentialField& W, double mu) {
    if (!(mu > 0.0)) throw InvalidArgument("drift_velocity: mu must be positive");
    const auto g = W.gradient(x1, x2);
    if (!std::isfinite(g[0]) || !std::isfinite(g[1])) throw NumericalError("drift_velocity: gradient failed");
    return {g[1] / mu, -g[0] / mu};
}

std::string to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::Circular: return "circular";
        case RegimeKind::Hop: return "hop";
        case RegimeKind::Gliding: return "gliding";
        case RegimeKind::Transitional: return "transitional";
    }
    return "unknown";
}

Regime classify(const PhaseState& s, double W0, double margin) {
    if (!(W0 > 0.0)) throw InvalidArgument("classify: W0 must be positive");
    Regime r;
    r.eta = s.xi2 / std::sqrt(W0);
    if (r.eta >= 1.0 + margin) r.kind = RegimeKind::Circular;
    else if (std::abs(r.eta) < 1.0 - margin) r.kind = RegimeKind::Hop;
    else if (r.eta <= -1.0 + margin) r.kind = RegimeKind::Gliding;
    else r.kind = RegimeKind::Transitional;
    return r;
}

double default_margin(double mu, double C0) { return C0 / mu; }

PhaseState apex_state(double eta, double W0, double mu, double x2) {
    if (!(W0 > 0.0)) throw InvalidArgument("apex_state: W0 must be positive");
    if (!(eta > -1.0)) throw InvalidArgument("apex_state: eta must exceed -1");
    const double a = std::sqrt(W0);
    return {(1.0 + eta) * a / mu, x2, 0.0, eta * a, 0.0};
}

std::vector<double> adiabatic_invariant(const Trajectory& traj, const std::function<double(double)>& W0) {
    if (traj.hops.empty()) throw NumericalError("adiabatic_invariant: trajectory has no hops");
    std::vector<double> out;
    const double max_hop_time = 1.05 * std::numbers::pi / traj.mu;
    for (std::size_t i = 0; i < traj.hops.size(); ++i) {
        const HopSummary& h = traj.hops[i];
        if (h.time() > max_hop_time || !(h.apex_x1 > 0.0) || !(h.apex_W > 0.0)) {
            throw NumericalError("adiabatic_invariant: trajectory leaves the hop regime at hop " + std::to_string(i));
        }
        const double rho = traj.mu * h.apex_x1 / std::sqrt(h.apex_W);
        if (!(rho < 2.0)) {
            throw NumericalError("adiabatic_invariant: trajectory leaves the hop regime at hop " + std::to_string(i));
        }
        const double w = W0(h.apex_x2);
        if (!(w > 0.0)) throw InvalidArgument("adiabatic_invariant: W0 must be positive");
        out.push_back(rho * std::exp(-4.0 / 3.0 * std::sqrt(w)));
    }
    if (!traj.reflections.empty() && !traj.samples.empty() &&
        traj.samples.back().t - traj.reflections.back().t > max_hop_time) {
        throw NumericalError("adiabatic_invariant: trajectory leaves the hop regime at hop " +
                             std::to_string(traj.hops.size()));
    }
    return out;
}

std::vector<std::array<double, 3>> guiding_centers(const Trajectory& traj) {
    const auto& s = traj.samples;
    std::vector<double> up;  // times of upward xi1 zero crossings
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (traj.event_flags[i]) continue;
        if (s[i - 1].xi1 < 0.0 && s[i].xi1 >= 0.0) {
            const double w = s[i - 1].xi1 / (s[i - 1].xi1 - s[i].xi1);
            up.push_back(s[i - 1].t + w * (s[i].t - s[i - 1].t));
            idx.push_back(i);
        }
    }
    std::vector<std::array<double, 3>> out;
    for (std::size_t k = 0; k + 1 < up.size(); ++k) {
        double a1 = 0.0, a2 = 0.0;
        for (std::size_t i = idx[k]; i < idx[k + 1]; ++i) {
            const double dt = s[i].t - s[i - 1].t;
            a1 += 0.5 * dt * (s[i].x1 + s[i - 1].x1);
            a2 += 0.5 * dt * (s[i].x2 + s[i - 1].x2);
        }
        // Trapezoid between the bracketing samples approximates the window [up_k, up_{k+1}].
        const double span = s[idx[k + 1] - 1].t - s[idx[k] - 1].t;
        out.push_back({0.5 * (up[k] + up[k + 1]), a1 / span, a2 / span});
    }
    return out;
}

PortraitBundle portrait(const PortraitCase& which, const ModelParams& params, unsigned jobs) {
    double s1 = 0.0, s2 = 0.0;
    switch (which.id) {
        case 'a': s1 = 1; s2 = 1; break;
        case 'b': s1 = -1; s2 = 1; break;
        case 'c': s1 = 1; s2 = -1; break;
        case 'd': s1 = -1; s2 = -1; break;
        default: throw InvalidArgument(std::string("portrait: unknown case '") + which.id + "'");
    }
    const double mu = params.mu();
    const double g = 1.0;
    PortraitBundle b;
    b.which = which;
    if (which.shape == PortraitShape::Linear) {
        b.W = PotentialField::linear(1.0, s1 * g, s2 * g);
    } else {
        // W(0) = 1 with the case signs in the gradient; minimum 1 - g^2 |s|^2 / (2k) at -g s / k.
        const double k = 1.0;
        b.W = PotentialField::quadratic(1.0, s1 * g, s2 * g, k, 0.0, k);
    }
    // Apex start consistent with the local level.
    auto start = [&](double eta) {
        double W0 = b.W.value(0.0, 0.0);
        for (int it = 0; it < 20; ++it) W0 = b.W.value((1.0 + eta) * std::sqrt(W0) / mu, 0.0);
        return apex_state(eta, W0, mu);
    };
    const PhaseState hop0 = start(0.6);
    const PhaseState drift0 = start(2.0);
    b.labels = {"hop", "drift"};
    b.trajectories.resize(2);
    FlowOptions hop_opt;
    hop_opt.tol = 1e-9;
    hop_opt.stop_x2_travel = 0.5;
    hop_opt.sample_stride = 4;
    FlowOptions drift_opt = hop_opt;
    drift_opt.stop_x2_travel = 0.0;
    parallel_for(2, jobs, [&](std::size_t i) {
        b.trajectories[i] = i == 0 ? integrate_flow(hop0, b.W, params, 4.0, hop_opt)
                                   : integrate_flow(drift0, b.W, params, 4.0, drift_opt);
    });
    const Trajectory& hop = b.trajectories[0];
    const PhaseState& last = hop.samples.back();
    const double W_last = b.W.value(last.x1, last.x2);
    b.hop_torn_off = W_last > 0.0 && last.xi2 / std::sqrt(W_last) > 1.0;
    b.drift_collided = !b.trajectories[1].reflections.empty();
    // xi2' = W_x2 pushes hops off the boundary, and the drift x1' = W_x2 / mu has the same sign.
    const bool rising = b.W.gradient(0.0, 0.0)[1] > 0.0;
    b.check_passed = rising ? (b.hop_torn_off && !b.drift_collided) : (!b.hop_torn_off && b.drift_collided);
    return b;
}

}  // namespace magspec
