#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "qhqm/io.hpp"
#include "qhqm/models.hpp"
#include "test_support.hpp"

using namespace qhqm;
using io::json;

TEST(Io, FormatDoubleRoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 11.0}) {
        const std::string s = io::format_double(x);
        EXPECT_EQ(std::stod(s), x) << s;
    }
    EXPECT_EQ(io::format_double(11.0), "11");
    EXPECT_EQ(io::format_double(0.1), "0.1");
}

TEST(Io, MatrixJsonRoundTrip) {
    const auto h = models::pt2x2(0.37);
    const json j = io::to_json(h);
    EXPECT_EQ(j["dim"], 2);
    EXPECT_EQ(io::matrix_from_json(j).mat(), h.mat());
    EXPECT_EQ(io::matrix_from_json(json::parse(j.dump())).mat(), h.mat());

    const auto path = (std::filesystem::temp_directory_path() / "qhqm_io_roundtrip.json").string();
    io::write_json_file(path, j);
    EXPECT_EQ(io::read_matrix_file(path).mat(), h.mat());
    std::filesystem::remove(path);
}

TEST(Io, RealEntriesAreAccepted) {
    const auto m = io::matrix_from_json(json::parse(R"({"dim": 2, "entries": [[1, 2], [3, [4, 5]]]})"));
    EXPECT_EQ(m(0, 1), cplx(2.0));
    EXPECT_EQ(m(1, 1), cplx(4.0, 5.0));
}

TEST(Io, RejectsMalformedMatrices) {
    test::expect_error(ErrorCode::Io, [] {
        io::matrix_from_json(json::parse(R"({"dim": 2, "entries": [[[1, 0], [2, 0]], [[3, 0]]]})"));
    });
    test::expect_error(ErrorCode::Io, [] { io::matrix_from_json(json::parse(R"({"dim": 3, "entries": [[1]]})")); });
    test::expect_error(ErrorCode::Io, [] { io::matrix_from_json(json::parse(R"({"entries": [[1]]})")); });
    test::expect_error(ErrorCode::Io, [] { io::matrix_from_json(json::parse(R"({"dim": 1, "entries": [["x"]]})")); });
    test::expect_error(ErrorCode::Io, [] { io::matrix_from_json(json::parse(R"({"dim": 1, "entries": [[[1, 2, 3]]]})")); });
    json inf = json::parse(R"({"dim": 1, "entries": [[[0, 0]]]})");
    inf["entries"][0][0][0] = std::numeric_limits<double>::infinity();
    test::expect_error(ErrorCode::NonFinite, [&] { io::matrix_from_json(inf); });
    test::expect_error(ErrorCode::Io, [] { io::read_matrix_file("/nonexistent/matrix.json"); });
}

TEST(Io, GridCsvLayout) {
    const pseudospec::GridSpec g(0.0, 1.0, 0.0, 0.5, 2, 2);
    const pseudospec::PseudospectrumGrid ps{g, pseudospec::Regime::k_norm, {0.25, 0.5, 1.0, 2.0}};
    EXPECT_EQ(io::grid_csv(ps), "re,im,value\n0,0,0.25\n1,0,0.5\n0,0.5,1\n1,0.5,2\n");
}
