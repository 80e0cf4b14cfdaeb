#pragma once

// JSON and CSV encodings shared by the CLI and tests.
//
// Matrix file: { "dim": n, "entries": [[ [re, im], ... ], ...] }, row-major.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"
#include "qhqm/metric.hpp"
#include "qhqm/perturb.hpp"
#include "qhqm/pseudospec.hpp"

namespace qhqm::io {

using json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) { return format_number(x); }

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(to_json(v(i)));
    return arr;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return json{{"dim", m.rows()}, {"entries", std::move(rows)}};
}

inline json to_json(const ComplexMatrix& m) { return matrix_to_json(m.mat()); }

inline double finite_number(const json& j, const char* what) {
    if (!j.is_number()) throw Error("io", ErrorCode::Io, std::string(what) + " must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw Error("io", ErrorCode::NonFinite, std::string(what) + " is not finite");
    return x;
}

inline cplx complex_from_json(const json& j) {
    if (j.is_number()) return {finite_number(j, "entry"), 0.0};
    if (!j.is_array() || j.size() != 2) throw Error("io", ErrorCode::Io, "complex entry must be [re, im]");
    return {finite_number(j[0], "real part"), finite_number(j[1], "imaginary part")};
}

inline ComplexMatrix matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
        throw Error("io", ErrorCode::Io, "matrix object needs 'dim' and 'entries'");
    if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
        throw Error("io", ErrorCode::Io, "'dim' must be a positive integer");
    const auto n = static_cast<Index>(j["dim"].get<long long>());
    const json& rows = j["entries"];
    if (!rows.is_array() || static_cast<Index>(rows.size()) != n)
        throw Error("io", ErrorCode::Io, "'entries' must have dim rows");
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n)
            throw Error("io", ErrorCode::Io, "ragged row " + std::to_string(i));
        for (Index k = 0; k < n; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
    }
    return ComplexMatrix(std::move(m));
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", ErrorCode::Io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("io", ErrorCode::Io, "invalid JSON in '" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", ErrorCode::Io, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("io", ErrorCode::Io, "write failed for '" + path + "'");
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline ComplexMatrix read_matrix_file(const std::string& path) { return matrix_from_json(read_json_file(path)); }

inline json to_json(const biortho::Residuals& r) {
    return json{{"biorthonormality", r.biorthonormality},
                {"completeness", r.completeness},
                {"reconstruction", r.reconstruction}};
}

inline json to_json(const BiorthoSystem& sys) {
    json right = json::array(), left = json::array();
    for (Index n = 0; n < sys.dim(); ++n) {
        right.push_back(to_json(Vector(sys.right().col(n))));
        left.push_back(to_json(Vector(sys.left().col(n))));
    }
    json gap = std::isfinite(sys.degeneracy_gap()) ? json(sys.degeneracy_gap()) : json(nullptr);
    return json{{"dim", sys.dim()},
                {"eigenvalues", to_json(sys.eigenvalues())},
                {"right_vectors", std::move(right)},
                {"left_vectors", std::move(left)},
                {"degeneracy_gap", std::move(gap)}};
}

inline std::string hex_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline json to_json(const metric::BundleResiduals& r) {
    return json{{"quasi_hermiticity", r.quasi_hermiticity},
                {"dyson_factor", r.dyson_factor},
                {"hermiticity", r.hermiticity},
                {"theta_hermiticity", r.theta_hermiticity},
                {"min_theta_eigenvalue", r.min_theta_eigenvalue}};
}

inline json to_json(const metric::MetricBundle& b) {
    return json{{"theta", to_json(b.theta())},
                {"omega", to_json(b.omega())},
                {"hermitized", to_json(b.hermitized())},
                {"kappa_sq", b.kappa().values()},
                {"source_hash", hex_hash(b.source_hash())},
                {"condition_theta", b.condition()},
                {"residuals", to_json(b.residuals())}};
}

inline json to_json(const perturb::RSExpansion& e) {
    json energies = json::array(), kets = json::array(), ketkets = json::array();
    for (const auto& x : e.energy) energies.push_back(to_json(x));
    for (const auto& v : e.kets) kets.push_back(to_json(v));
    for (const auto& v : e.ketkets) ketkets.push_back(to_json(v));
    return json{{"mode", perturb::to_string(e.mode)},
                {"level", e.level},
                {"max_order", e.max_order()},
                {"energy_coeffs", std::move(energies)},
                {"ket_coeffs", std::move(kets)},
                {"ketket_coeffs", std::move(ketkets)},
                {"complex_unperturbed_energy", e.complex_unperturbed_energy}};
}

inline std::string energy_csv(const perturb::RSExpansion& e) {
    std::string out = "order,re,im\n";
    for (std::size_t k = 0; k < e.energy.size(); ++k)
        out += std::to_string(k) + "," + format_double(e.energy[k].real()) + "," + format_double(e.energy[k].imag()) + "\n";
    return out;
}

inline std::string grid_csv(const pseudospec::PseudospectrumGrid& g) {
    std::string out = "re,im,value\n";
    for (Index i = 0; i < g.spec.size(); ++i) {
        const cplx z = g.spec.point(i);
        out += format_double(z.real()) + "," + format_double(z.imag()) + "," +
               format_double(g.values[static_cast<std::size_t>(i)]) + "\n";
    }
    return out;
}

inline json to_json(const pseudospec::GridSpec& s) {
    return json{{"re_min", s.re_min()}, {"re_max", s.re_max()}, {"im_min", s.im_min()},
                {"im_max", s.im_max()}, {"nx", s.nx()},         {"ny", s.ny()}};
}

inline json to_json(const pseudospec::MonteCarloReport& r, bool include_cloud = false) {
    json j{{"epsilon", r.epsilon},
           {"samples", r.samples},
           {"seed", r.seed},
           {"ensemble", r.ensemble},
           {"norm_regime", pseudospec::to_string(r.regime)},
           {"boundary_tolerance", r.boundary_tolerance},
           {"inclusion_fraction", r.inclusion_fraction},
           {"max_dist_to_spectrum", r.max_dist_to_spectrum},
           {"max_value_over_eps", r.max_value_over_eps}};
    if (include_cloud) {
        json cloud = json::array();
        for (const auto& z : r.eigenvalue_cloud) cloud.push_back(to_json(z));
        j["eigenvalue_cloud"] = std::move(cloud);
    }
    return j;
}

}  // namespace qhqm::io
