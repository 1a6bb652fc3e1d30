#pragma once

#include "magspec/core.hpp"
#include "magspec/oscillator.hpp"
#include "magspec/output.hpp"

#include <string>
#include <vector>

namespace magspec::cli {

/// Resolved experiment configuration shared by every subcommand.
struct Settings {
    std::string subcommand;

    std::string bc = "dirichlet";
    double mu = 1.0;
    double h = 0.25;
    std::string tau = "1";
    double grid_step = 5e-3;
    /// 0 keeps the per-module defaults.
    double tol = 0.0;
    std::string out;
    std::string cache;
    unsigned jobs = 0;
    std::string format = "csv";
    std::string config;

    std::string n = "0..2";
    std::string eta = "-2..6:0.05";

    std::string n_fit = "0..1";
    std::string window = "2.5..3.5:0.05";

    std::string hbar = "0.2,0.1,0.05";
    std::string method = "both";

    std::string x1 = "0..3:0.05";
    bool trace = false;

    std::string hs = "0.2,0.14,0.1,0.07,0.05";
    double mu_power = -0.5;
    double V = 0.0;
    double strip = 40.0;
    double cells1 = 8.0;
    double cells2 = 4.0;
    bool doubled = false;
    long long cap = 200000;

    std::string etas = "-0.9,-0.5,0,0.5,0.9";
    int hops = 50;
    double w0 = 1.0;
    bool samples = false;

    std::string cases = "abcd";
    std::string shape = "both";

    OscillatorGrid grid() const;
    BoundaryCondition boundary() const;
    std::vector<double> taus() const;
    /// Single tau; rejects lists.
    double tau_value() const;
    unsigned workers() const;
};

struct CommandResult {
    std::vector<Table> tables;
    /// False when a validation check failed.
    bool ok = true;
};

CommandResult cmd_branches(const Settings& s);
CommandResult cmd_asymptotics(const Settings& s);
CommandResult cmd_bound_correction(const Settings& s);
CommandResult cmd_density_profile(const Settings& s);
CommandResult cmd_count_compare(const Settings& s);
CommandResult cmd_billiard(const Settings& s);
CommandResult cmd_portraits(const Settings& s);
CommandResult cmd_validate(const Settings& s);

}  // namespace magspec::cli
