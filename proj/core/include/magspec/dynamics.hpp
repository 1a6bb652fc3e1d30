#pragma once

#include "magspec/core.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace magspec {

/// Point of the classical billiard in the half-plane x1 >= 0.
struct PhaseState {
    double x1 = 0.0;
    double x2 = 0.0;
    double xi1 = 0.0;
    double xi2 = 0.0;
    double t = 0.0;
};

/// xi1^2 + (xi2 - mu x1)^2 - W(x); trajectories live on its zero level.
double hamiltonian(const PhaseState& s, const PotentialField& W, double mu);

struct ReflectionEvent {
    double t = 0.0;
    double x2 = 0.0;
    /// xi1 just before the reflection (negative: moving into the wall).
    double xi1_in = 0.0;
};

/// Arc between two consecutive reflections.
struct HopSummary {
    double t_start = 0.0;
    double t_end = 0.0;
    double x2_start = 0.0;
    double x2_end = 0.0;
    /// Point of largest x1 on the arc.
    double apex_x1 = 0.0;
    double apex_x2 = 0.0;
    double apex_W = 0.0;

    double chord() const noexcept { return std::abs(x2_end - x2_start); }
    double time() const noexcept { return t_end - t_start; }
};

struct Trajectory {
    double mu = 1.0;
    std::vector<PhaseState> samples;
    /// 1 for the sample recorded at a reflection.
    std::vector<int> event_flags;
    std::vector<ReflectionEvent> reflections;
    std::vector<HopSummary> hops;
    /// Hamiltonian at every sample.
    std::vector<double> energy;
};

struct FlowOptions {
    double tol = 1e-10;
    /// Allowed |H - H0| relative to 1 + |H0| before integration stops with an error.
    double energy_tol = 1e-6;
    /// Event times are refined by bisection to this width.
    double event_tol = 1e-12;
    /// Stop once |x2 - x2(0)| reaches this distance (0 disables).
    double stop_x2_travel = 0.0;
    /// Record every n-th accepted step (events are always recorded).
    int sample_stride = 1;
    std::size_t max_steps = 20'000'000;
};

/// Dormand-Prince 5(4) with specular reflection at x1 = 0 (xi1 -> -xi1).
Trajectory integrate_flow(const PhaseState& initial, const PotentialField& W, const ModelParams& params,
                          double T, const FlowOptions& options = {});

struct HopMetrics {
    double chord = 0.0;
    double arc = 0.0;
    double time = 0.0;
};

/// Chord 2 a mu^{-1} (1 - eta^2)^{1/2}, arc 2 a mu^{-1} (pi - arccos eta), time mu^{-1} (pi - arccos eta).
HopMetrics hop_metrics(double a, double eta, double mu);

/// (1 - eta^2)^{1/2} / (pi - arccos eta); the mean x2 speed of hops is -2 a v.
double hop_speed(double eta);

/// (mu^{-1} W_x2, -mu^{-1} W_x1).
std::array<double, 2> drift_velocity(double x1, double x2, const PotentialField& W, double mu);

enum class RegimeKind { Circular, Hop, Gliding, Transitional };

std::string to_string(RegimeKind k);

struct Regime {
    RegimeKind kind = RegimeKind::Hop;
    double eta = 0.0;
};

/// eta = xi2 / W0^{1/2}; Circular for eta >= 1 + margin, Hop for |eta| < 1 - margin,
/// Gliding for eta <= -1 + margin, Transitional otherwise.
Regime classify(const PhaseState& s, double W0, double margin = 0.0);

/// Default margin C0 / mu.
double default_margin(double mu, double C0 = 1.0);

/// Initial state at the apex of a hop (or circle) with parameter eta at local level W0.
PhaseState apex_state(double eta, double W0, double mu, double x2 = 0.0);

/// Per-hop rho' exp(-(4/3) W0(x2)^{1/2}) with rho' = 1 + eta read at the apex.
std::vector<double> adiabatic_invariant(const Trajectory& traj, const std::function<double(double)>& W0);

/// Cyclotron centres: time averages of (x1, x2) between successive upward
/// zero crossings of xi1. Entries are (t_mid, x1, x2).
std::vector<std::array<double, 3>> guiding_centers(const Trajectory& traj);

enum class PortraitShape { Linear, Quadratic };

/// Sign pattern of (W_x1, W_x2): a (+,+), b (-,+), c (+,-), d (-,-).
struct PortraitCase {
    char id = 'a';
    PortraitShape shape = PortraitShape::Linear;
};

struct PortraitBundle {
    PortraitCase which;
    PotentialField W;
    std::vector<std::string> labels;
    std::vector<Trajectory> trajectories;
    /// Hop start torn from the boundary (eta ends above 1).
    bool hop_torn_off = false;
    /// Drift start reached the boundary.
    bool drift_collided = false;
    /// Observed behaviour matches the sign rule for W_x2.
    bool check_passed = false;
};

PortraitBundle portrait(const PortraitCase& which, const ModelParams& params, unsigned jobs = 1);

}  // namespace magspec
