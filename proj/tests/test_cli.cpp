#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qhqm/cli.hpp"
#include "test_support.hpp"

using namespace qhqm;
using cli::json;

namespace {

std::string scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("qhqm_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, SeriesCsvMatchesKnownIntegers) {
    const auto out = scratch("series");
    const auto r = cli::run_json(json{{"command", "series"}, {"K", 4}, {"mode", "bw_rational"}, {"out", out}});
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_EQ(slurp(out + "/series.csv"), "n,b_n\n1,11\n2,-930\n3,158836\n4,-38501610\n");
    const json manifest = json::parse(slurp(out + "/manifest.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["version"], QHQM_VERSION);
    EXPECT_EQ(manifest["config"]["K"], 4);
    EXPECT_TRUE(manifest.contains("timestamp"));
    EXPECT_TRUE(manifest.contains("wall_time_s"));
}

TEST(Cli, EigOnPtModel) {
    const auto out = scratch("eig");
    const auto r = cli::run_json(
        json{{"command", "eig"}, {"model", {{"name", "pt2x2"}, {"params", {{"g", 0.5}}}}}, {"out", out}});
    ASSERT_EQ(r.exit_code, 0);
    const json j = json::parse(slurp(out + "/eig.json"));
    EXPECT_NEAR(j["eigenvalues"][0][0].get<double>(), -0.8660254037844386, 1e-14);
    EXPECT_NEAR(j["eigenvalues"][1][0].get<double>(), 0.8660254037844386, 1e-14);
    EXPECT_LT(j["residuals"]["biorthonormality"].get<double>(), 1e-14);
    EXPECT_EQ(r.manifest["tolerances"]["biortho_tol"], 1e-8);
}

TEST(Cli, EmptyGridIsRejectedBeforeCompute) {
    const auto out = scratch("badgrid");
    const json grid{{"re_min", -1}, {"re_max", 1}, {"im_min", -1}, {"im_max", 1}, {"nx", 1}, {"ny", 5}};
    const auto r = cli::run_json(json{{"command", "pseudospec"}, {"model", "pt2x2"}, {"grid", grid}, {"out", out}});
    EXPECT_EQ(r.exit_code, 2);
    ASSERT_TRUE(r.error.has_value());
    EXPECT_EQ((*r.error)["error"]["code"], "ConfigInvalid");
    const json manifest = json::parse(slurp(out + "/manifest.json"));
    EXPECT_EQ(manifest["status"], "error");
    EXPECT_FALSE(std::filesystem::exists(out + "/pseudospec.csv"));
}

TEST(Cli, ConfigValidation) {
    auto code_of = [](const json& j) {
        try {
            cli::parse_config(j);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    EXPECT_EQ(code_of(json{{"command", "eig"}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "eig"}, {"model", "pt2x2"}, {"matrix_file", "m.json"}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "fly"}, {"model", "pt2x2"}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "eig"}, {"model", "pt2x2"}, {"colour", 1}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "montecarlo"}, {"model", "pt2x2"}, {"samples", 0}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "pseudospec"}, {"model", "pt2x2"}, {"epsilons", {0.1, -1}}}),
              ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "series"}, {"K", 4}, {"pade", {3, 3}}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "series"}, {"mode", "exact"}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "eig"}, {"model", "pt2x2"}, {"format", "csv"}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "perturb"}, {"matrix_file", "h.json"}}), ErrorCode::ConfigInvalid);
    EXPECT_EQ(code_of(json{{"command", "eig"}, {"model", {{"name", "pt2x2"}, {"params", {{"g", "big"}}}}}}),
              ErrorCode::ConfigInvalid);

    const auto c = cli::parse_config(json{{"command", "pseudospec"}, {"model", "pt2x2"}});
    EXPECT_EQ(c.format, cli::Format::csv);
    const json eff = cli::to_json(c);
    for (const char* key : {"tol", "condition_cap", "epsilons", "regime", "seed", "resolution", "threads"})
        EXPECT_TRUE(eff.contains(key)) << key;
}

TEST(Cli, ModuleErrorsCarryModuleAndCode) {
    const auto out = scratch("complex");
    const auto r = cli::run_json(
        json{{"command", "metric"}, {"model", {{"name", "pt2x2"}, {"params", {{"g", 1.5}}}}}, {"out", out}});
    EXPECT_EQ(r.exit_code, 1);
    ASSERT_TRUE(r.error.has_value());
    EXPECT_EQ((*r.error)["error"]["module"], "metric");
    EXPECT_EQ((*r.error)["error"]["code"], "ComplexSpectrum");
    EXPECT_EQ(json::parse(slurp(out + "/manifest.json"))["error"]["code"], "ComplexSpectrum");
}

TEST(Cli, MatrixFileInput) {
    const auto out = scratch("matrixfile");
    std::filesystem::create_directories(out);
    io::write_json_file(out + "/h.json", io::to_json(ComplexMatrix::diagonal({0.0, 2.0})));
    io::write_json_file(out + "/v.json", io::to_json(ComplexMatrix(Matrix::Ones(2, 2))));
    const auto r = cli::run_json(json{{"command", "perturb"},
                                      {"matrix_file", out + "/h.json"},
                                      {"perturbation_file", out + "/v.json"},
                                      {"mode", "hermitian"},
                                      {"order", 2},
                                      {"out", out}});
    ASSERT_EQ(r.exit_code, 0) << r.error.value_or(json()).dump();
    EXPECT_EQ(slurp(out + "/perturb.csv"), "order,re,im\n0,0,0\n1,1,0\n2,-0.5,0\n");
}

TEST(Cli, OutputsAreDeterministic) {
    const json base{{"command", "contrast"},  {"model", {{"name", "pt2x2"}, {"params", {{"g", 0.9}}}}},
                    {"epsilons", {0.05, 0.1}}, {"samples", 200},
                    {"resolution", 41},        {"seed", 5}};
    json a = base, b = base;
    a["out"] = scratch("det_a");
    b["out"] = scratch("det_b");
    b["threads"] = 3;
    ASSERT_EQ(cli::run_json(a).exit_code, 0);
    ASSERT_EQ(cli::run_json(b).exit_code, 0);
    for (const char* f : {"contrast.csv", "contrast_summary.json"})
        EXPECT_EQ(slurp(a["out"].get<std::string>() + "/" + f), slurp(b["out"].get<std::string>() + "/" + f)) << f;
}

TEST(Cli, ContrastDirectionNearExceptionalPoint) {
    const auto out = scratch("contrast");
    const auto r = cli::run_json(json{{"command", "contrast"},
                                      {"model", {{"name", "pt2x2"}, {"params", {{"g", 0.9}}}}},
                                      {"epsilons", {0.05}},
                                      {"samples", 200},
                                      {"out", out}});
    ASSERT_EQ(r.exit_code, 0);
    const json& areas = r.manifest["summary"]["sublevel_areas"][0];
    EXPECT_GT(areas["k_norm_area"].get<double>(), areas["theta_norm_area"].get<double>());
}

TEST(Cli, ContrastHermitianRegimesAgree) {
    const auto out = scratch("contrast_herm");
    const auto r = cli::run_json(json{{"command", "contrast"},
                                      {"model", {{"name", "pt2x2"}, {"params", {{"g", 0.0}}}}},
                                      {"epsilons", {0.1}},
                                      {"samples", 100},
                                      {"out", out}});
    ASSERT_EQ(r.exit_code, 0);
    const json& areas = r.manifest["summary"]["sublevel_areas"][0];
    EXPECT_NEAR(areas["area_ratio"].get<double>(), 1.0, 1e-9);
}

TEST(Cli, DysonContrastTrivialityConstant) {
    const auto out = scratch("contrast_dyson");
    const auto r = cli::run_json(json{{"command", "contrast"},
                                      {"model", {{"name", "dyson_generated"}, {"params", {{"dim", 8}}}}},
                                      {"epsilons", {0.05}},
                                      {"samples", 100},
                                      {"resolution", 81},
                                      {"out", out}});
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_LE(r.manifest["summary"]["triviality_constant"]["theta_norm"].get<double>(), 1.0 + 1e-8);
}
