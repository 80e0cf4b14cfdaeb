// qhqm command-line tool. Flags are folded into the JSON config (file keys are
// overridden) and handed to qhqm::cli::run_json.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qhqm/cli.hpp"

namespace {

using qhqm::cli::json;

struct Flags {
    std::optional<std::string> config, model, matrix_file, perturbation_file, out, format, regime, mode, grid, pade;
    std::vector<std::string> params;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol, condition_cap, boundary_tol;
    std::optional<long long> resolution, samples, level, order, k, bit_cap, truncation, threads;
    std::vector<double> kappa, eps, lambdas;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file; flags override its keys");
    sub->add_option("--model", f.model, "pt2x2 | dyson_generated | discrete_cubic_fd | cubic_oscillator_basis");
    sub->add_option("--param", f.params, "model parameter key=value (repeatable)");
    sub->add_option("--matrix-file", f.matrix_file, "matrix JSON file instead of a model");
    sub->add_option("--perturbation-file", f.perturbation_file, "perturbation matrix for perturb --matrix-file");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--format", f.format, "json | csv");
    sub->add_option("--seed", f.seed, "Monte Carlo seed");
    sub->add_option("--tol", f.tol, "degeneracy / reality tolerance");
    sub->add_option("--condition-cap", f.condition_cap, "largest accepted cond(Theta)");
    sub->add_option("--kappa", f.kappa, "metric weights kappa_n^2")->delimiter(',');
    sub->add_option("--grid", f.grid, "re_min,re_max,im_min,im_max,nx,ny");
    sub->add_option("--resolution", f.resolution, "points per side of the automatic grid");
    sub->add_option("--eps", f.eps, "epsilon values")->delimiter(',');
    sub->add_option("--samples", f.samples, "Monte Carlo samples per epsilon");
    sub->add_option("--regime", f.regime, "k_norm | theta_norm");
    sub->add_option("--boundary-tol", f.boundary_tol, "slack for the Monte Carlo inclusion test");
    sub->add_option("--level", f.level, "unperturbed level index");
    sub->add_option("--order", f.order, "highest perturbation order");
    sub->add_option("--mode", f.mode, "perturb: hermitian | quasi; series: bw_rational | matrix_rs_float");
    sub->add_option("--lambda", f.lambdas, "coupling values to evaluate at")->delimiter(',');
    sub->add_option("--K", f.k, "number of series coefficients b_1..b_K");
    sub->add_option("--bit-cap", f.bit_cap, "bit budget per exact polynomial");
    sub->add_option("--truncation", f.truncation, "float-mode basis size (0 = automatic)");
    sub->add_option("--pade", f.pade, "Pade orders L,M");
    sub->add_option("--threads", f.threads, "worker threads for grids and Monte Carlo");
}

[[noreturn]] void bad_flag(const std::string& msg) { throw qhqm::Error("cli", qhqm::ErrorCode::ConfigInvalid, msg); }

double parse_number(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        bad_flag(what + ": '" + s + "' is not a number");
    }
    if (used != s.size()) bad_flag(what + ": '" + s + "' is not a number");
    return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

json merge(const std::string& command, const Flags& f) {
    json c = f.config ? qhqm::io::read_json_file(*f.config) : json::object();
    if (!c.is_object()) bad_flag("config file must hold a JSON object");
    c["command"] = command;
    if (f.model) {
        json model = c.contains("model") && c["model"].is_object() ? c["model"] : json::object();
        if (model.contains("name") && model["name"] != *f.model) model.erase("params");
        model["name"] = *f.model;
        c["model"] = model;
        c.erase("matrix_file");
    }
    for (const auto& kv : f.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) bad_flag("--param expects key=value, got '" + kv + "'");
        if (!c.contains("model") || !c["model"].is_object()) c["model"] = json::object();
        c["model"]["params"][kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), "--param " + kv.substr(0, eq));
    }
    if (f.matrix_file) {
        c["matrix_file"] = *f.matrix_file;
        c.erase("model");
    }
    if (f.perturbation_file) c["perturbation_file"] = *f.perturbation_file;
    if (f.out) c["out"] = *f.out;
    if (f.format) c["format"] = *f.format;
    if (f.seed) c["seed"] = *f.seed;
    if (f.tol) c["tol"] = *f.tol;
    if (f.condition_cap) c["condition_cap"] = *f.condition_cap;
    if (!f.kappa.empty()) c["kappa"] = f.kappa;
    if (f.grid) {
        const auto parts = split(*f.grid, ',');
        if (parts.size() != 6) bad_flag("--grid expects re_min,re_max,im_min,im_max,nx,ny");
        json g;
        const char* keys[] = {"re_min", "re_max", "im_min", "im_max", "nx", "ny"};
        for (std::size_t i = 0; i < 6; ++i) g[keys[i]] = parse_number(parts[i], "--grid");
        c["grid"] = g;
    }
    if (f.resolution) c["resolution"] = *f.resolution;
    if (!f.eps.empty()) c["epsilons"] = f.eps;
    if (f.samples) c["samples"] = *f.samples;
    if (f.regime) c["regime"] = *f.regime;
    if (f.boundary_tol) c["boundary_tolerance"] = *f.boundary_tol;
    if (f.level) c["level"] = *f.level;
    if (f.order) c["order"] = *f.order;
    if (f.mode) c["mode"] = *f.mode;
    if (!f.lambdas.empty()) c["lambdas"] = f.lambdas;
    if (f.k) c["K"] = *f.k;
    if (f.bit_cap) c["bit_cap"] = *f.bit_cap;
    if (f.truncation) c["truncation"] = *f.truncation;
    if (f.pade) {
        const auto parts = split(*f.pade, ',');
        if (parts.size() != 2) bad_flag("--pade expects L,M");
        c["pade"] = json::array({parse_number(parts[0], "--pade"), parse_number(parts[1], "--pade")});
    }
    if (f.threads) c["threads"] = *f.threads;
    return c;
}

int fail(const qhqm::Error& e) {
    std::cerr << qhqm::cli::error_object(e).dump() << "\n";
    return e.code() == qhqm::ErrorCode::ConfigInvalid ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-Hermitian spectral analysis, metrics, perturbation theory and pseudospectra"};
    app.set_version_flag("--version", QHQM_VERSION);
    app.require_subcommand(1);

    Flags flags;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"eig", "biorthogonal eigen-decomposition"},
        {"metric", "physical metric Theta, Dyson map and Hermitized matrix"},
        {"perturb", "Rayleigh-Schroedinger series for one level"},
        {"pseudospec", "resolvent-norm grid in one norm regime"},
        {"montecarlo", "random-perturbation eigenvalue clouds"},
        {"series", "weak-coupling series of the imaginary cubic oscillator"},
        {"contrast", "both norm regimes side by side"}};
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(qhqm::Error("cli", qhqm::ErrorCode::ConfigInvalid, e.what()));
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        const auto result = qhqm::cli::run_json(merge(command, flags));
        if (result.error) {
            std::cerr << result.error->dump() << "\n";
            return result.exit_code;
        }
        std::cout << json{{"status", "ok"}, {"outputs", result.outputs}}.dump() << "\n";
        return 0;
    } catch (const qhqm::Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        return fail(qhqm::Error("cli", qhqm::ErrorCode::Io, e.what()));
    }
}
