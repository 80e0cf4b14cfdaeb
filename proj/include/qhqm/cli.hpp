#pragma once

// Run orchestration behind the qhqm binary. A run is described by a flat JSON
// config (flags are merged into it by the tool), validated up front, executed,
// and persisted as result files plus manifest.json.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"
#include "qhqm/io.hpp"
#include "qhqm/metric.hpp"
#include "qhqm/models.hpp"
#include "qhqm/perturb.hpp"
#include "qhqm/pseudospec.hpp"
#include "qhqm/series.hpp"

#ifndef QHQM_VERSION
#define QHQM_VERSION "0.0.0"
#endif

namespace qhqm::cli {

using json = io::json;

enum class Command { eig, metric, perturb, pseudospec, montecarlo, series, contrast };
enum class Format { json, csv };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::eig: return "eig";
        case Command::metric: return "metric";
        case Command::perturb: return "perturb";
        case Command::pseudospec: return "pseudospec";
        case Command::montecarlo: return "montecarlo";
        case Command::series: return "series";
        case Command::contrast: return "contrast";
    }
    return "?";
}

inline Command command_from_string(const std::string& s) {
    for (Command c : {Command::eig, Command::metric, Command::perturb, Command::pseudospec, Command::montecarlo,
                      Command::series, Command::contrast})
        if (to_string(c) == s) return c;
    throw Error("cli", ErrorCode::ConfigInvalid, "unknown command '" + s + "'");
}

inline std::string to_string(Format f) { return f == Format::json ? "json" : "csv"; }

struct RunConfig {
    Command command = Command::eig;
    std::optional<models::ModelSpec> model;
    std::optional<std::string> matrix_file;
    std::optional<std::string> perturbation_file;
    std::string out = ".";
    Format format = Format::json;
    std::uint64_t seed = 1;
    double tol = 1e-8;
    double condition_cap = 1e8;
    std::optional<std::vector<double>> kappa;
    std::optional<pseudospec::GridSpec> grid;
    Index resolution = 101;
    std::vector<double> epsilons{0.1};
    std::int64_t samples = 1000;
    pseudospec::Regime regime = pseudospec::Regime::k_norm;
    std::optional<double> boundary_tolerance;
    Index level = 0;
    int order = 6;
    std::string mode;  // perturb: hermitian | quasi; series: bw_rational | matrix_rs_float
    std::vector<double> lambdas;
    int k = 4;
    std::size_t bit_cap = 1000000;
    Index truncation = 0;
    std::optional<std::pair<int, int>> pade;
    unsigned threads = 1;
};

namespace detail {

[[noreturn]] inline void invalid(const std::string& msg) { throw Error("cli", ErrorCode::ConfigInvalid, msg); }

inline double number(const json& j, const std::string& key) {
    if (!j.is_number()) invalid("'" + key + "' must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) invalid("'" + key + "' must be finite");
    return x;
}

inline long long integer(const json& j, const std::string& key) {
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number_float()) {
        const double x = j.get<double>();
        if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
    }
    invalid("'" + key + "' must be an integer");
}

inline std::string text(const json& j, const std::string& key) {
    if (!j.is_string()) invalid("'" + key + "' must be a string");
    return j.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& key) {
    if (j.is_number()) return {number(j, key)};
    if (!j.is_array()) invalid("'" + key + "' must be a number or an array of numbers");
    std::vector<double> out;
    for (const auto& x : j) out.push_back(number(x, key));
    return out;
}

inline models::ModelSpec model_spec(json j) {
    if (j.is_string()) j = json{{"name", j}};
    if (!j.is_object() || !j.contains("name")) invalid("'model' needs a 'name'");
    for (const auto& [key, _] : j.items())
        if (key != "name" && key != "params") invalid("unknown model key '" + key + "'");
    models::ModelSpec spec;
    try {
        spec.name = models::model_name_from_string(text(j["name"], "model.name"));
    } catch (const Error& e) {
        invalid(e.detail());
    }
    if (j.contains("params")) {
        if (!j["params"].is_object()) invalid("'model.params' must be an object");
        for (const auto& [key, value] : j["params"].items()) spec.params[key] = number(value, "model.params." + key);
    }
    return spec;
}

template <typename Fn>
auto rethrow_invalid(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigInvalid) throw;
        invalid(e.detail());
    }
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "command", "model",   "matrix_file",        "perturbation_file", "out",     "format", "seed",
        "tol",     "condition_cap", "kappa",         "grid",              "resolution", "epsilons", "samples",
        "regime",  "boundary_tolerance", "level",   "order",             "mode",    "lambdas", "K",
        "bit_cap", "truncation", "pade",            "threads"};
    return keys;
}

}  // namespace detail

/// Parses and validates a config object. Every rejection is ConfigInvalid.
inline RunConfig parse_config(const json& j) {
    using detail::invalid;
    if (!j.is_object()) invalid("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!detail::known_keys().count(key)) invalid("unknown config key '" + key + "'");
    if (!j.contains("command")) invalid("missing 'command'");

    RunConfig c;
    c.command = command_from_string(detail::text(j["command"], "command"));
    if (j.contains("model")) c.model = detail::model_spec(j["model"]);
    if (j.contains("matrix_file")) c.matrix_file = detail::text(j["matrix_file"], "matrix_file");
    if (j.contains("perturbation_file")) c.perturbation_file = detail::text(j["perturbation_file"], "perturbation_file");
    if (j.contains("out")) c.out = detail::text(j["out"], "out");

    const bool grid_output = c.command == Command::perturb || c.command == Command::pseudospec ||
                             c.command == Command::series || c.command == Command::contrast;
    c.format = grid_output ? Format::csv : Format::json;
    if (j.contains("format")) {
        const auto f = detail::text(j["format"], "format");
        if (f == "json") c.format = Format::json;
        else if (f == "csv") c.format = Format::csv;
        else invalid("format must be json or csv");
    }

    if (j.contains("seed")) {
        const long long s = detail::integer(j["seed"], "seed");
        if (s < 0) invalid("'seed' must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (j.contains("tol")) c.tol = detail::number(j["tol"], "tol");
    if (j.contains("condition_cap")) c.condition_cap = detail::number(j["condition_cap"], "condition_cap");
    if (j.contains("kappa")) c.kappa = detail::numbers(j["kappa"], "kappa");
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (!g.is_object()) invalid("'grid' must be an object");
        for (const char* key : {"re_min", "re_max", "im_min", "im_max", "nx", "ny"})
            if (!g.contains(key)) invalid(std::string("'grid' needs '") + key + "'");
        const double a = detail::number(g["re_min"], "grid.re_min"), b = detail::number(g["re_max"], "grid.re_max");
        const double lo = detail::number(g["im_min"], "grid.im_min"), hi = detail::number(g["im_max"], "grid.im_max");
        const auto nx = static_cast<Index>(detail::integer(g["nx"], "grid.nx"));
        const auto ny = static_cast<Index>(detail::integer(g["ny"], "grid.ny"));
        c.grid = detail::rethrow_invalid([&] { return pseudospec::GridSpec(a, b, lo, hi, nx, ny); });
    }
    if (j.contains("resolution")) c.resolution = static_cast<Index>(detail::integer(j["resolution"], "resolution"));
    if (j.contains("epsilons")) c.epsilons = detail::numbers(j["epsilons"], "epsilons");
    if (j.contains("samples")) c.samples = detail::integer(j["samples"], "samples");
    if (j.contains("regime"))
        c.regime = detail::rethrow_invalid([&] { return pseudospec::regime_from_string(detail::text(j["regime"], "regime")); });
    if (j.contains("boundary_tolerance"))
        c.boundary_tolerance = detail::number(j["boundary_tolerance"], "boundary_tolerance");
    if (j.contains("level")) c.level = static_cast<Index>(detail::integer(j["level"], "level"));
    if (j.contains("order")) c.order = static_cast<int>(detail::integer(j["order"], "order"));
    if (j.contains("lambdas")) c.lambdas = detail::numbers(j["lambdas"], "lambdas");
    if (j.contains("K")) c.k = static_cast<int>(detail::integer(j["K"], "K"));
    if (j.contains("bit_cap")) {
        const long long b = detail::integer(j["bit_cap"], "bit_cap");
        if (b < 1) invalid("'bit_cap' must be >= 1");
        c.bit_cap = static_cast<std::size_t>(b);
    }
    if (j.contains("truncation")) c.truncation = static_cast<Index>(detail::integer(j["truncation"], "truncation"));
    if (j.contains("pade")) {
        const json& p = j["pade"];
        if (!p.is_array() || p.size() != 2) invalid("'pade' must be [L, M]");
        c.pade = std::pair<int, int>(static_cast<int>(detail::integer(p[0], "pade")),
                                     static_cast<int>(detail::integer(p[1], "pade")));
    }
    if (j.contains("threads")) {
        const long long t = detail::integer(j["threads"], "threads");
        if (t < 1 || t > 256) invalid("'threads' must be in [1, 256]");
        c.threads = static_cast<unsigned>(t);
    }

    if (c.command == Command::perturb) c.mode = "quasi";
    if (c.command == Command::series) c.mode = "bw_rational";
    if (j.contains("mode")) c.mode = detail::text(j["mode"], "mode");

    // Cross-field checks.
    if (c.command == Command::series) {
        if (c.model || c.matrix_file) invalid("series runs on the fixed cubic oscillator and takes no model");
        detail::rethrow_invalid([&] { return series::method_from_string(c.mode); });
        if (c.k < 1) invalid("'K' must be >= 1");
        if (c.truncation < 0 || (c.truncation > 0 && c.truncation < 3)) invalid("'truncation' must be 0 or >= 3");
        if (c.pade) {
            if (c.pade->first < 0 || c.pade->second < 0) invalid("Pade orders must be >= 0");
            if (c.pade->first + c.pade->second > c.k) invalid("Pade [L/M] needs L + M <= K");
        }
    } else {
        if (c.model.has_value() == c.matrix_file.has_value())
            invalid("exactly one of 'model' and 'matrix_file' is required");
        if (c.mode.size() && c.command != Command::perturb) invalid("'mode' applies to perturb and series only");
    }
    if (c.command == Command::perturb) {
        detail::rethrow_invalid([&] { return perturb::mode_from_string(c.mode); });
        if (c.matrix_file && !c.perturbation_file) invalid("perturb with 'matrix_file' needs 'perturbation_file'");
        if (c.model && c.model->name == models::ModelName::dyson_generated)
            invalid("dyson_generated has no coupling parameter to perturb in");
        if (c.order < 1) invalid("'order' must be >= 1");
        if (c.level < 0) invalid("'level' must be >= 0");
    } else if (c.perturbation_file) {
        invalid("'perturbation_file' applies to perturb only");
    }
    if ((c.command == Command::eig || c.command == Command::metric) && c.format == Format::csv)
        invalid(to_string(c.command) + " writes JSON only");
    if (!(c.tol > 0.0)) invalid("'tol' must be > 0");
    if (!(c.condition_cap > 1.0)) invalid("'condition_cap' must be > 1");
    if (c.kappa)
        for (double k : *c.kappa)
            if (!(k > 0.0)) invalid("kappa entries must be > 0");
    if (c.epsilons.empty()) invalid("'epsilons' is empty");
    for (double e : c.epsilons)
        if (!(e > 0.0)) invalid("epsilons must be > 0");
    if (c.samples < 1) invalid("'samples' must be >= 1");
    if (c.resolution < 2) invalid("'resolution' must be >= 2");
    if (c.boundary_tolerance && !(*c.boundary_tolerance >= 0.0)) invalid("'boundary_tolerance' must be >= 0");
    if (c.out.empty()) invalid("'out' is empty");
    return c;
}

/// Effective config with every default spelled out.
inline json to_json(const RunConfig& c) {
    json j;
    j["command"] = to_string(c.command);
    if (c.model) {
        json params = json::object();
        for (const auto& [k, v] : c.model->params) params[k] = v;
        j["model"] = json{{"name", models::to_string(c.model->name)}, {"params", std::move(params)}};
    } else {
        j["model"] = nullptr;
    }
    j["matrix_file"] = c.matrix_file ? json(*c.matrix_file) : json(nullptr);
    j["perturbation_file"] = c.perturbation_file ? json(*c.perturbation_file) : json(nullptr);
    j["out"] = c.out;
    j["format"] = to_string(c.format);
    j["seed"] = c.seed;
    j["tol"] = c.tol;
    j["condition_cap"] = c.condition_cap;
    j["kappa"] = c.kappa ? json(*c.kappa) : json(nullptr);
    j["grid"] = c.grid ? io::to_json(*c.grid) : json(nullptr);
    j["resolution"] = c.resolution;
    j["epsilons"] = c.epsilons;
    j["samples"] = c.samples;
    j["regime"] = pseudospec::to_string(c.regime);
    j["boundary_tolerance"] = c.boundary_tolerance ? json(*c.boundary_tolerance) : json(nullptr);
    j["level"] = c.level;
    j["order"] = c.order;
    j["mode"] = c.mode.empty() ? json(nullptr) : json(c.mode);
    j["lambdas"] = c.lambdas;
    j["K"] = c.k;
    j["bit_cap"] = c.bit_cap;
    j["truncation"] = c.truncation;
    j["pade"] = c.pade ? json::array({c.pade->first, c.pade->second}) : json(nullptr);
    j["threads"] = c.threads;
    return j;
}

struct RunResult {
    int exit_code = 0;
    json manifest;
    std::optional<json> error;
    std::vector<std::string> outputs;
};

inline json error_object(const Error& e) {
    return json{{"error", {{"module", e.module()}, {"code", to_string(e.code())}, {"message", e.detail()}}}};
}

namespace detail {

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;  // name, contents; written in order
    json residuals = json::object();
    json tolerances = json::object();
    json summary = json::object();
    json seeds = json::object();
};

inline ComplexMatrix load_model(const RunConfig& c) {
    return c.matrix_file ? io::read_matrix_file(*c.matrix_file) : models::build(*c.model);
}

inline metric::MetricBundle make_bundle(const RunConfig& c, const BiorthoSystem& sys) {
    const metric::Options opts{c.tol, c.condition_cap};
    return c.kappa ? metric::build_metric(sys, metric::KappaWeights(*c.kappa), opts) : metric::build_metric(sys, opts);
}

inline void base_tolerances(const RunConfig& c, Artifacts& a) {
    a.tolerances["biortho_tol"] = c.tol;
    a.tolerances["metric_real_tol"] = c.tol;
    a.tolerances["condition_cap"] = c.condition_cap;
}

inline double max_epsilon(const RunConfig& c) { return *std::max_element(c.epsilons.begin(), c.epsilons.end()); }

inline json areas_json(const pseudospec::PseudospectrumGrid& g, const std::vector<double>& eps) {
    json out = json::array();
    for (double e : eps) out.push_back(json{{"epsilon", e}, {"area", g.sublevel_area(e)}});
    return out;
}

inline void run_eig(const RunConfig& c, Artifacts& a) {
    const auto sys = biortho::decompose(load_model(c), {c.tol});
    a.tolerances["biortho_tol"] = c.tol;
    json j = io::to_json(sys);
    j["residuals"] = io::to_json(biortho::residuals(sys));
    a.residuals["biortho"] = j["residuals"];
    a.files.emplace_back("eig.json", j.dump(2) + "\n");
}

inline void run_metric(const RunConfig& c, Artifacts& a) {
    const auto sys = biortho::decompose(load_model(c), {c.tol});
    const auto bundle = make_bundle(c, sys);
    base_tolerances(c, a);
    a.residuals["biortho"] = io::to_json(biortho::residuals(sys));
    a.residuals["metric"] = io::to_json(bundle.residuals());
    a.summary["condition_theta"] = bundle.condition();
    a.files.emplace_back("metric.json", io::to_json(bundle).dump(2) + "\n");
}

inline std::pair<ComplexMatrix, ComplexMatrix> perturbation_pair(const RunConfig& c) {
    if (c.matrix_file) return {io::read_matrix_file(*c.matrix_file), io::read_matrix_file(*c.perturbation_file)};
    return models::perturbation_split(*c.model);
}

inline void run_perturb(const RunConfig& c, Artifacts& a) {
    auto [h0, v] = perturbation_pair(c);
    const perturb::PerturbationProblem prob(std::move(h0), std::move(v), c.level, c.order);
    const auto mode = perturb::mode_from_string(c.mode);
    const perturb::Options opts{c.tol};
    const auto exp = mode == perturb::Mode::hermitian ? perturb::rs_hermitian(prob, opts) : perturb::rs_quasi(prob, opts);
    a.tolerances["perturb_tol"] = c.tol;
    if (mode == perturb::Mode::quasi)
        a.residuals["unperturbed_biortho"] = io::to_json(biortho::residuals(biortho::decompose(prob.h0(), {c.tol})));

    json evals = json::array();
    for (double lam : c.lambdas) {
        const cplx series_value = perturb::evaluate_series(exp, lam, c.order);
        const cplx exact = perturb::nearest_eigenvalue(prob.at(lam), series_value);
        evals.push_back(json{{"lambda", lam},
                             {"series", io::to_json(series_value)},
                             {"diagonalization", io::to_json(exact)},
                             {"abs_difference", std::abs(series_value - exact)}});
    }
    a.summary["evaluations"] = evals;
    if (c.format == Format::csv) {
        a.files.emplace_back("perturb.csv", io::energy_csv(exp));
    } else {
        json j = io::to_json(exp);
        j["evaluations"] = std::move(evals);
        a.files.emplace_back("perturb.json", j.dump(2) + "\n");
    }
}

inline void run_pseudospec(const RunConfig& c, Artifacts& a) {
    const ComplexMatrix h = load_model(c);
    std::optional<metric::MetricBundle> bundle;
    if (c.regime == pseudospec::Regime::theta_norm) {
        bundle = make_bundle(c, biortho::decompose(h, {c.tol}));
        base_tolerances(c, a);
        a.residuals["metric"] = io::to_json(bundle->residuals());
    }
    const metric::MetricBundle* bp = bundle ? &*bundle : nullptr;
    const auto spec = c.grid.value_or(pseudospec::enclosing_grid(h, c.regime, bp, max_epsilon(c), c.resolution));
    const auto ps = pseudospec::pseudospectrum(h, spec, c.regime, bp, c.threads);
    a.summary["grid"] = io::to_json(spec);
    a.summary["sublevel_areas"] = areas_json(ps, c.epsilons);
    if (c.format == Format::csv) {
        a.files.emplace_back("pseudospec.csv", io::grid_csv(ps));
    } else {
        json j{{"grid", io::to_json(spec)},
               {"norm_regime", pseudospec::to_string(c.regime)},
               {"epsilon_note", pseudospec::PseudospectrumGrid::epsilon_note},
               {"values", ps.values},
               {"sublevel_areas", areas_json(ps, c.epsilons)}};
        a.files.emplace_back("pseudospec.json", j.dump(2) + "\n");
    }
}

inline void run_montecarlo(const RunConfig& c, Artifacts& a) {
    const ComplexMatrix h = load_model(c);
    std::optional<metric::MetricBundle> bundle;
    if (c.regime == pseudospec::Regime::theta_norm) {
        bundle = make_bundle(c, biortho::decompose(h, {c.tol}));
        base_tolerances(c, a);
        a.residuals["metric"] = io::to_json(bundle->residuals());
    }
    pseudospec::MonteCarloOptions opts;
    opts.boundary_tolerance = c.boundary_tolerance;
    opts.grid = c.grid;
    opts.threads = c.threads;
    opts.keep_cloud = c.format == Format::csv;
    a.seeds["montecarlo"] = c.seed;

    json reports = json::array();
    std::string cloud = "epsilon,re,im\n";
    for (double eps : c.epsilons) {
        const auto rep = pseudospec::roch_silberman_mc(h, eps, c.samples, c.regime, bundle ? &*bundle : nullptr, c.seed, opts);
        reports.push_back(io::to_json(rep));
        for (const cplx& z : rep.eigenvalue_cloud)
            cloud += io::format_double(eps) + "," + io::format_double(z.real()) + "," + io::format_double(z.imag()) + "\n";
        a.tolerances["boundary_tolerance"] = rep.boundary_tolerance;
    }
    a.summary["reports"] = reports;
    a.files.emplace_back("montecarlo.json", json{{"reports", reports}}.dump(2) + "\n");
    if (c.format == Format::csv) a.files.emplace_back("montecarlo_cloud.csv", cloud);
}

inline void run_series(const RunConfig& c, Artifacts& a) {
    const auto method = series::method_from_string(c.mode);
    series::Options opts;
    opts.bit_cap = c.bit_cap;
    opts.truncation = c.truncation;
    const auto s = series::bender_wu_coefficients(c.k, method, opts);
    a.tolerances["bit_cap"] = c.bit_cap;
    if (method == series::Method::matrix_rs_float) {
        json tols = json::array();
        for (int n = 1; n <= c.k; ++n) tols.push_back(series::float_tolerance(n));
        a.tolerances["float_relative_tolerances"] = tols;
        a.tolerances["truncation"] = s.truncation;
    }

    std::vector<std::string> values;
    for (std::size_t i = 0; i < s.size(); ++i)
        values.push_back(s.exact.empty() ? io::format_double(s.b[i]) : series::to_string(s.exact[i]));

    json j{{"method", series::to_string(method)}, {"K", c.k}, {"f", s.f}, {"truncation", s.truncation}, {"b", values}};
    if (s.size() >= 6) j["asymptotic_ratios"] = series::asymptotic_check(s);
    if (c.pade) {
        json evals = json::array();
        for (double lam : c.lambdas)
            evals.push_back(json{{"lambda", lam}, {"value", io::to_json(series::pade_resummation(s, lam, *c.pade))}});
        j["pade"] = json{{"L", c.pade->first}, {"M", c.pade->second}, {"evaluations", std::move(evals)}};
    }
    if (j.contains("asymptotic_ratios")) a.summary["asymptotic_ratios"] = j["asymptotic_ratios"];
    if (j.contains("pade")) a.summary["pade"] = j["pade"];

    if (c.format == Format::csv) {
        std::string out = "n,b_n\n";
        for (std::size_t i = 0; i < values.size(); ++i) out += std::to_string(i + 1) + "," + values[i] + "\n";
        a.files.emplace_back("series.csv", out);
    } else {
        a.files.emplace_back("series.json", j.dump(2) + "\n");
    }
}

}  // namespace detail

/// Both regimes on one model, grid and epsilon list: a side-by-side grid CSV
/// and a summary with areas, triviality constants, Monte Carlo reports and
/// cond(Theta).
inline void contrast_report(const RunConfig& c, detail::Artifacts& a) {
    const ComplexMatrix h = detail::load_model(c);
    const auto bundle = detail::make_bundle(c, biortho::decompose(h, {c.tol}));
    detail::base_tolerances(c, a);
    a.residuals["metric"] = io::to_json(bundle.residuals());

    using pseudospec::Regime;
    const auto spec = c.grid.value_or(
        pseudospec::enclosing_grid(h, Regime::k_norm, nullptr, detail::max_epsilon(c), c.resolution));
    const auto kn = pseudospec::pseudospectrum(h, spec, Regime::k_norm, nullptr, c.threads);
    const auto tn = pseudospec::pseudospectrum(h, spec, Regime::theta_norm, &bundle, c.threads);

    json areas = json::array();
    for (double e : c.epsilons) {
        const double ka = kn.sublevel_area(e), ta = tn.sublevel_area(e);
        areas.push_back(json{{"epsilon", e},
                             {"k_norm_area", ka},
                             {"theta_norm_area", ta},
                             {"area_ratio", ta > 0.0 ? json(ka / ta) : json(nullptr)}});
    }
    const auto k_fit = pseudospec::triviality_constant(h, nullptr, c.epsilons, Regime::k_norm, spec, c.threads);
    const auto t_fit = pseudospec::triviality_constant(h, &bundle, c.epsilons, Regime::theta_norm, spec, c.threads);

    pseudospec::MonteCarloOptions opts;
    opts.boundary_tolerance = c.boundary_tolerance;
    opts.grid = spec;
    opts.threads = c.threads;
    opts.keep_cloud = false;
    json mc = json::array();
    for (double e : c.epsilons) {
        const auto rk = pseudospec::roch_silberman_mc(h, e, c.samples, Regime::k_norm, nullptr, c.seed, opts);
        const auto rt = pseudospec::roch_silberman_mc(h, e, c.samples, Regime::theta_norm, &bundle, c.seed, opts);
        mc.push_back(json{{"epsilon", e}, {"k_norm", io::to_json(rk)}, {"theta_norm", io::to_json(rt)}});
        a.tolerances["boundary_tolerance"] = rk.boundary_tolerance;
    }
    a.seeds["montecarlo"] = c.seed;

    json summary{{"grid", io::to_json(spec)},
                 {"condition_theta", bundle.condition()},
                 {"sublevel_areas", areas},
                 {"triviality_constant", {{"k_norm", k_fit.constant}, {"theta_norm", t_fit.constant}}},
                 {"montecarlo", mc}};
    a.summary = summary;

    std::string csv = "re,im,k_norm,theta_norm\n";
    for (Index i = 0; i < spec.size(); ++i) {
        const cplx z = spec.point(i);
        const auto u = static_cast<std::size_t>(i);
        csv += io::format_double(z.real()) + "," + io::format_double(z.imag()) + "," + io::format_double(kn.values[u]) +
               "," + io::format_double(tn.values[u]) + "\n";
    }
    a.files.emplace_back("contrast.csv", std::move(csv));
    a.files.emplace_back("contrast_summary.json", summary.dump(2) + "\n");
}

namespace detail {

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline json manifest_skeleton(const json& config, const std::string& command) {
    return json{{"tool", "qhqm"}, {"version", QHQM_VERSION}, {"command", command}, {"config", config}};
}

inline void prepare_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out)) invalid("output directory '" + out + "' cannot be created");
}

}  // namespace detail

/// Executes a validated config, writing result files and manifest.json.
inline RunResult run(const RunConfig& c) {
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    detail::prepare_out_dir(c.out);
    const std::filesystem::path dir(c.out);

    RunResult result;
    json manifest = detail::manifest_skeleton(to_json(c), to_string(c.command));
    detail::Artifacts a;
    if (c.model && c.model->name == models::ModelName::dyson_generated)
        a.seeds["model"] = c.model->param("seed", 1);
    try {
        switch (c.command) {
            case Command::eig: detail::run_eig(c, a); break;
            case Command::metric: detail::run_metric(c, a); break;
            case Command::perturb: detail::run_perturb(c, a); break;
            case Command::pseudospec: detail::run_pseudospec(c, a); break;
            case Command::montecarlo: detail::run_montecarlo(c, a); break;
            case Command::series: detail::run_series(c, a); break;
            case Command::contrast: contrast_report(c, a); break;
        }
        for (const auto& [name, contents] : a.files) {
            io::write_text_file((dir / name).string(), contents);
            result.outputs.push_back(name);
        }
        manifest["status"] = "ok";
    } catch (const Error& e) {
        result.exit_code = e.code() == ErrorCode::ConfigInvalid ? 2 : 1;
        result.error = error_object(e);
        manifest["status"] = "error";
        manifest["error"] = (*result.error)["error"];
    }
    manifest["seeds"] = a.seeds;
    manifest["tolerances"] = a.tolerances;
    manifest["residuals"] = a.residuals;
    manifest["summary"] = a.summary;
    manifest["outputs"] = result.outputs;
    manifest["timestamp"] = detail::utc_timestamp(started);
    manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    io::write_json_file((dir / "manifest.json").string(), manifest);
    result.manifest = std::move(manifest);
    return result;
}

/// Parses, validates and runs a raw config. Config errors still produce a
/// manifest when the output directory is known.
inline RunResult run_json(const json& raw) {
    try {
        return run(parse_config(raw));
    } catch (const Error& e) {
        RunResult result;
        result.exit_code = e.code() == ErrorCode::ConfigInvalid ? 2 : 1;
        result.error = error_object(e);
        const std::string command = raw.is_object() && raw.contains("command") && raw["command"].is_string()
                                        ? raw["command"].get<std::string>()
                                        : std::string();
        json manifest = detail::manifest_skeleton(raw, command);
        manifest["status"] = "error";
        manifest["error"] = (*result.error)["error"];
        manifest["timestamp"] = detail::utc_timestamp(std::chrono::system_clock::now());
        manifest["wall_time_s"] = 0.0;
        if (raw.is_object() && raw.contains("out") && raw["out"].is_string()) {
            try {
                detail::prepare_out_dir(raw["out"].get<std::string>());
                io::write_json_file((std::filesystem::path(raw["out"].get<std::string>()) / "manifest.json").string(),
                                    manifest);
            } catch (const Error&) {
            }
        }
        result.manifest = std::move(manifest);
        return result;
    }
}

}  // namespace qhqm::cli
