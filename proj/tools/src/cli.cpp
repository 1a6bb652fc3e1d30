#include "magspec/cli.hpp"

#include "commands.hpp"
#include "magspec/core.hpp"
#include "magspec/output.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace magspec::cli {
namespace {

const std::vector<std::string> kSubcommands = {"branches",    "asymptotics",   "bound-correction", "density-profile",
                                               "count-compare", "billiard",    "portraits",        "validate"};

/// Options that change no numbers in the output; excluded from the config hash.
const std::vector<std::string> kUnhashed = {"out", "cache", "jobs", "config"};

struct Binding {
    const CLI::App* owner;
    std::string name;
    std::function<std::string()> value;
};

class Binder {
public:
    template <class T>
    CLI::Option* option(CLI::App* app, const std::string& name, T& ref, const std::string& help) {
        auto* opt = app->add_option("--" + name, ref, help)->capture_default_str();
        record(app, name, ref);
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& name, bool& ref, const std::string& help) {
        auto* opt = app->add_flag("--" + name, ref, help);
        record(app, name, ref);
        return opt;
    }

    /// Sorted name=value pairs of the main app and the selected subcommand.
    std::string canonical(const CLI::App* main, const CLI::App* sub) const {
        std::map<std::string, std::string> kv;
        for (const auto& b : bindings_) {
            if (b.owner != main && b.owner != sub) continue;
            if (std::find(kUnhashed.begin(), kUnhashed.end(), b.name) != kUnhashed.end()) continue;
            kv[b.name] = b.value();
        }
        std::string out = sub->get_name();
        for (const auto& [k, v] : kv) out += ";" + k + "=" + v;
        return out;
    }

private:
    template <class T>
    void record(const CLI::App* app, const std::string& name, T& ref) {
        bindings_.push_back({app, name, [&ref] {
                                 if constexpr (std::is_same_v<T, std::string>) {
                                     return ref;
                                 } else if constexpr (std::is_same_v<T, bool>) {
                                     return std::string(ref ? "true" : "false");
                                 } else if constexpr (std::is_floating_point_v<T>) {
                                     return format_real(ref);
                                 } else {
                                     return std::to_string(ref);
                                 }
                             }});
    }

    std::vector<Binding> bindings_;
};

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
}

std::string json_scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_real(v.get<double>());
    throw CLI::ValidationError("--config", "unsupported value " + v.dump());
}

/// Appends the entries of a JSON config file that are not already given as flags.
void merge_config(std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return;

    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw CLI::ValidationError("--config", path + ": " + e.what());
    }
    if (!doc.is_object()) throw CLI::ValidationError("--config", path + ": expected a JSON object");

    const bool has_sub = std::any_of(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
    });
    for (const auto& [key, value] : doc.items()) {
        if (key == "subcommand") {
            if (!has_sub) args.insert(args.begin(), value.get<std::string>());
            continue;
        }
        const std::string flag = "--" + key;
        if (has_flag(args, flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) joined += (joined.empty() ? "" : ",") + json_scalar(v);
            args.push_back(flag);
            args.push_back(joined);
        } else {
            args.push_back(flag);
            args.push_back(json_scalar(value));
        }
    }
}

using Handler = CommandResult (*)(const Settings&);

}  // namespace

int run(int argc, char** argv) { return run(argc, argv, std::cout, std::cerr); }

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    Settings s;
    if (const char* env = std::getenv("MAGSPEC_CACHE")) s.cache = env;

    CLI::App app{"Boundary corrections, eigenvalue branches and billiards of the 2D magnetic Schrodinger operator",
                 "magspec"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    Binder bind;
    bind.option(&app, "bc", s.bc, "Boundary condition: dirichlet, neumann or robin:ALPHA");
    bind.option(&app, "mu", s.mu, "Field intensity mu");
    bind.option(&app, "h", s.h, "Semiclassical parameter h");
    bind.option(&app, "tau", s.tau, "Spectral level (a value, a list a,b,c or a..b:step)");
    bind.option(&app, "grid-step", s.grid_step, "Coarsest oscillator grid step");
    bind.option(&app, "tol", s.tol, "Quadrature / integrator tolerance (0 keeps the defaults)");
    bind.option(&app, "out", s.out, "Output directory (stdout when empty)");
    bind.option(&app, "cache", s.cache, "Branch cache directory (default: $MAGSPEC_CACHE)");
    bind.option(&app, "jobs", s.jobs, "Worker threads (0: available parallelism)");
    bind.option(&app, "format", s.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    bind.option(&app, "config", s.config, "JSON file with flag values; explicit flags win");

    std::map<const CLI::App*, Handler> handlers;
    auto sub = [&](const char* name, const char* help, Handler h) {
        auto* c = app.add_subcommand(name, help);
        handlers[c] = h;
        return c;
    };

    auto* branches = sub("branches", "Sample eigenvalue branches lambda_n(eta)", cmd_branches);
    bind.option(branches, "n", s.n, "Branch indices (a..b or a,b,c)");
    bind.option(branches, "eta", s.eta, "eta samples (a..b:step or a,b,c)");

    auto* asym = sub("asymptotics", "Splitting coefficient, Airy regime and branch minima", cmd_asymptotics);
    bind.option(asym, "n", s.n_fit, "Branch indices");
    bind.option(asym, "window", s.window, "eta samples used by the splitting fit");

    auto* bound = sub("bound-correction", "Boundary correction to the magnetic Weyl count", cmd_bound_correction);
    bind.option(bound, "hbar", s.hbar, "Effective semiclassical parameters");
    bind.option(bound, "method", s.method, "branch, eigfn or both")
        ->check(CLI::IsMember({"branch", "eigfn", "both"}));

    auto* density = sub("density-profile", "Kernel density minus its bulk value across the boundary layer",
                        cmd_density_profile);
    bind.option(density, "x1", s.x1, "Boundary distances");
    bind.flag(density, "trace", s.trace, "Also integrate the defect and compare with the boundary correction");

    auto* count = sub("count-compare", "Two-term count against the 2D finite-difference oracle", cmd_count_compare);
    bind.option(count, "hs", s.hs, "Values of h");
    bind.option(count, "mu-power", s.mu_power, "mu = h^p");
    bind.option(count, "V", s.V, "Constant potential");
    bind.option(count, "strip", s.strip, "Period L2 in units of h");
    bind.option(count, "cells1", s.cells1, "Grid points per magnetic length across the strip");
    bind.option(count, "cells2", s.cells2, "Grid points per h along the strip");
    bind.flag(count, "doubled", s.doubled, "Repeat the oracle on the doubled grid");
    bind.option(count, "cap", s.cap, "Largest oracle matrix size");

    auto* billiard = sub("billiard", "Hop chords, times and speeds of the magnetic billiard", cmd_billiard);
    bind.option(billiard, "etas", s.etas, "Hop parameters eta");
    bind.option(billiard, "hops", s.hops, "Hops per trajectory");
    bind.option(billiard, "w0", s.w0, "Constant W");
    bind.flag(billiard, "samples", s.samples, "Also emit the trajectory samples");

    auto* portraits = sub("portraits", "Hop and drift trajectories for the four gradient sign cases", cmd_portraits);
    bind.option(portraits, "cases", s.cases, "Subset of abcd");
    bind.option(portraits, "shape", s.shape, "linear, quadratic or both")
        ->check(CLI::IsMember({"linear", "quadratic", "both"}));

    sub("validate", "Run the fast invariant suite; nonzero exit on failure", cmd_validate);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        merge_config(args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    s.subcommand = chosen->get_name();
    OutputMeta meta{version(), fnv1a_hex(bind.canonical(&app, chosen)), ""};

    try {
        meta.grid = s.grid().fingerprint();
        const Format format = parse_format(s.format);
        CommandResult res = handlers.at(chosen)(s);
        emit(res.tables, format, s.out, out, meta);
        out.flush();
        return res.ok ? 0 : 1;
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }
}

}  // namespace magspec::cli
