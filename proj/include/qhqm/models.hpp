#pragma once

// Matrix families: the 2x2 PT toy model, Dyson-generated quasi-Hermitian
// matrices with known Hermitian seed, and two truncations of the imaginary
// cubic oscillator  -d^2/dx^2 + (f^2/4) x^2 + i g x^3.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"

namespace qhqm::models {

enum class ModelName { pt2x2, dyson_generated, discrete_cubic_fd, cubic_oscillator_basis };

inline std::string to_string(ModelName n) {
    switch (n) {
        case ModelName::pt2x2: return "pt2x2";
        case ModelName::dyson_generated: return "dyson_generated";
        case ModelName::discrete_cubic_fd: return "discrete_cubic_fd";
        case ModelName::cubic_oscillator_basis: return "cubic_oscillator_basis";
    }
    return "unknown";
}

inline ModelName model_name_from_string(const std::string& s) {
    if (s == "pt2x2") return ModelName::pt2x2;
    if (s == "dyson_generated") return ModelName::dyson_generated;
    if (s == "discrete_cubic_fd") return ModelName::discrete_cubic_fd;
    if (s == "cubic_oscillator_basis") return ModelName::cubic_oscillator_basis;
    throw Error("models", ErrorCode::BadParams, "unknown model name '" + s + "'");
}

/// Model name plus named numeric parameters. Missing parameters take the
/// documented defaults in `param`.
struct ModelSpec {
    ModelName name = ModelName::pt2x2;
    std::map<std::string, double> params;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

inline ComplexMatrix pt2x2(double g) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error("models", ErrorCode::BadParams, "pt2x2 requires g >= 0");
    Matrix m(2, 2);
    m << cplx(0, g), 1.0, 1.0, cplx(0, -g);
    return ComplexMatrix(std::move(m));
}

struct DysonModel {
    ComplexMatrix h;       // Hermitian (real diagonal) seed
    ComplexMatrix omega;   // invertible map, singular values in [0.1, 10]
    ComplexMatrix hamiltonian;  // Omega^-1 h Omega
};

/// Seeded; eigenvalues are n + U(-0.3, 0.3), so neighbouring levels are at
/// least 0.4 apart. Omega is a complex Gaussian matrix with its singular
/// values clipped to [0.1, 10].
inline DysonModel dyson_generated(std::uint64_t seed, Index dim) {
    if (dim < 1) throw Error("models", ErrorCode::BadParams, "dyson_generated requires dim >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    std::normal_distribution<double> normal(0.0, 1.0);

    Vector diag(dim);
    for (Index i = 0; i < dim; ++i) diag(i) = static_cast<double>(i) + jitter(rng);

    Matrix g(dim, dim);
    for (Index j = 0; j < dim; ++j)
        for (Index i = 0; i < dim; ++i) g(i, j) = cplx(normal(rng), normal(rng));
    Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd s = svd.singularValues();
    // Stretch to unit median before clipping so the clip actually bites.
    const double mid = s(dim / 2) > 0.0 ? s(dim / 2) : 1.0;
    for (Index i = 0; i < dim; ++i) s(i) = std::clamp(s(i) / mid, 0.1, 10.0);
    Matrix omega = svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();

    Matrix h = diag.asDiagonal().toDenseMatrix();
    Eigen::PartialPivLU<Matrix> lu(omega);
    Matrix ham = lu.solve(h * omega);
    return DysonModel{ComplexMatrix(std::move(h)), ComplexMatrix(std::move(omega)), ComplexMatrix(std::move(ham))};
}

struct Grid1d {
    std::vector<double> x;
    double dx = 0.0;
};

inline Grid1d fd_grid(Index n, double half_width) {
    Grid1d g;
    g.dx = 2.0 * half_width / static_cast<double>(n + 1);
    g.x.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) g.x[static_cast<std::size_t>(i)] = -half_width + static_cast<double>(i + 1) * g.dx;
    return g;
}

/// Tridiagonal pieces of the Dirichlet finite-difference operator.
struct Tridiagonal {
    std::vector<cplx> diag;
    std::vector<cplx> off;  // symmetric off-diagonal
};

inline Tridiagonal discrete_cubic_fd_tridiagonal(Index n, double half_width, double f, double g) {
    if (n < 2 || !(half_width > 0.0) || !(f > 0.0) || !std::isfinite(g))
        throw Error("models", ErrorCode::BadParams, "discrete_cubic_fd requires N >= 2, L > 0, f > 0");
    const auto grid = fd_grid(n, half_width);
    const double inv = 1.0 / (grid.dx * grid.dx);
    Tridiagonal t;
    t.diag.resize(static_cast<std::size_t>(n));
    t.off.assign(static_cast<std::size_t>(n - 1), cplx(-inv, 0.0));
    for (Index i = 0; i < n; ++i) {
        const double x = grid.x[static_cast<std::size_t>(i)];
        t.diag[static_cast<std::size_t>(i)] = cplx(2.0 * inv + 0.25 * f * f * x * x, g * x * x * x);
    }
    return t;
}

inline ComplexMatrix discrete_cubic_fd(Index n, double half_width = 12.0, double f = 1.0, double g = 0.0) {
    const auto t = discrete_cubic_fd_tridiagonal(n, half_width, f, g);
    Matrix m = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = t.diag[static_cast<std::size_t>(i)];
    for (Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = t.off[static_cast<std::size_t>(i)];
    return ComplexMatrix(std::move(m));
}

/// Eigenvalue of a complex-symmetric tridiagonal matrix nearest to `shift`,
/// by shifted inverse iteration with a banded LU solve. Lets the
/// finite-difference model run on grids too large for a dense solver.
inline cplx tridiagonal_eigenvalue_near(const Tridiagonal& t, cplx shift, int max_iter = 200, double tol = 1e-14) {
    const std::size_t n = t.diag.size();
    std::vector<cplx> x(n, 1.0), y(n), c(n), d(n);
    auto solve = [&](const std::vector<cplx>& rhs, std::vector<cplx>& out) {
        // Thomas algorithm on (T - shift).
        c[0] = t.off.empty() ? 0.0 : t.off[0] / (t.diag[0] - shift);
        d[0] = rhs[0] / (t.diag[0] - shift);
        for (std::size_t i = 1; i < n; ++i) {
            const cplx denom = t.diag[i] - shift - t.off[i - 1] * c[i - 1];
            c[i] = i + 1 < n ? t.off[i] / denom : 0.0;
            d[i] = (rhs[i] - t.off[i - 1] * d[i - 1]) / denom;
        }
        out[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) out[i] = d[i] - c[i] * out[i + 1];
    };
    auto apply = [&](const std::vector<cplx>& v, std::size_t i) {
        cplx s = t.diag[i] * v[i];
        if (i > 0) s += t.off[i - 1] * v[i - 1];
        if (i + 1 < n) s += t.off[i] * v[i + 1];
        return s;
    };
    cplx lambda = shift, previous = shift;
    for (int it = 0; it < max_iter; ++it) {
        solve(x, y);
        double norm = 0.0;
        for (auto& v : y) norm += std::norm(v);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
        cplx num = 0.0;
        for (std::size_t i = 0; i < n; ++i) num += std::conj(x[i]) * apply(x, i);
        lambda = num;  // x has unit norm
        if (it > 2 && std::abs(lambda - previous) <= tol * std::max(1.0, std::abs(lambda))) break;
        previous = lambda;
    }
    return lambda;
}

/// (a + a^dagger) on the first `m` oscillator states.
inline Matrix position_ladder(Index m) {
    Matrix x = Matrix::Zero(m, m);
    for (Index k = 1; k < m; ++k) x(k - 1, k) = x(k, k - 1) = std::sqrt(static_cast<double>(k));
    return x;
}

/// M x M truncation of f (N + 1/2) + i g f^(-3/2) (a + a^dagger)^3. The cube is
/// formed in a larger space before truncating so the kept block is exact.
inline ComplexMatrix cubic_oscillator_basis(Index m, double f = 1.0, double g = 0.0) {
    if (m < 2 || !(f > 0.0) || !std::isfinite(g))
        throw Error("models", ErrorCode::BadParams, "cubic_oscillator_basis requires M >= 2, f > 0");
    const Matrix x = position_ladder(m + 3);
    const Matrix x3 = (x * x * x).topLeftCorner(m, m);
    Matrix h = cplx(0.0, g * std::pow(f, -1.5)) * x3;
    for (Index k = 0; k < m; ++k) h(k, k) += f * (static_cast<double>(k) + 0.5);
    return ComplexMatrix(std::move(h));
}

namespace detail {
inline Index int_param(const ModelSpec& s, const std::string& key, double fallback) {
    const double v = s.param(key, fallback);
    if (!std::isfinite(v) || v != std::floor(v))
        throw Error("models", ErrorCode::BadParams, "parameter '" + key + "' must be an integer");
    return static_cast<Index>(v);
}
}  // namespace detail

inline ComplexMatrix build(const ModelSpec& spec) {
    switch (spec.name) {
        case ModelName::pt2x2: return pt2x2(spec.param("g", 0.5));
        case ModelName::dyson_generated: {
            const Index seed = detail::int_param(spec, "seed", 1);
            const Index dim = detail::int_param(spec, "dim", 8);
            if (seed < 0) throw Error("models", ErrorCode::BadParams, "seed must be >= 0");
            return dyson_generated(static_cast<std::uint64_t>(seed), dim).hamiltonian;
        }
        case ModelName::discrete_cubic_fd:
            return discrete_cubic_fd(detail::int_param(spec, "N", 400), spec.param("L", 12.0), spec.param("f", 1.0),
                                     spec.param("g", 0.0));
        case ModelName::cubic_oscillator_basis:
            return cubic_oscillator_basis(detail::int_param(spec, "M", 40), spec.param("f", 1.0),
                                          spec.param("g", 0.0));
    }
    throw Error("models", ErrorCode::BadParams, "unhandled model");
}

/// Splits a model into H(0) and dH/dg for perturbation runs in the coupling
/// g. Every zoo family is affine in g.
inline std::pair<ComplexMatrix, ComplexMatrix> perturbation_split(const ModelSpec& spec) {
    ModelSpec at0 = spec, at1 = spec;
    at0.params["g"] = 0.0;
    at1.params["g"] = 1.0;
    if (spec.name == ModelName::dyson_generated)
        throw Error("models", ErrorCode::BadParams, "dyson_generated has no coupling parameter");
    const ComplexMatrix h0 = build(at0);
    return {h0, ComplexMatrix(build(at1).mat() - h0.mat())};
}

/// Follows one eigenvalue branch from lambdas.front() by nearest-neighbour
/// matching. A step where the two nearest candidates are not clearly
/// separated, or where the tracked value sits within `tol` of another
/// eigenvalue, is a branch collision.
inline std::vector<cplx> continuation_track(const std::function<ComplexMatrix(double)>& family,
                                            const std::vector<double>& lambdas, Index level, double tol = 1e-6) {
    if (lambdas.empty()) return {};
    std::vector<cplx> branch;
    branch.reserve(lambdas.size());
    for (std::size_t s = 0; s < lambdas.size(); ++s) {
        const ComplexMatrix m = family(lambdas[s]);
        const Vector ev = biortho::sorted_eigenvalues(m);
        const double scale = std::max(1.0, m.frobenius());
        Index pick = 0;
        if (s == 0) {
            if (level < 0 || level >= ev.size())
                throw Error("models", ErrorCode::BadParams, "level index out of range");
            pick = level;
        } else {
            double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
            for (Index k = 0; k < ev.size(); ++k) {
                const double d = std::abs(ev(k) - branch.back());
                if (d < d1) {
                    d2 = d1;
                    d1 = d;
                    pick = k;
                } else if (d < d2) {
                    d2 = d;
                }
            }
            if (ev.size() > 1 && d2 < 2.0 * d1)
                throw Error("models", ErrorCode::BranchCollision,
                            "ambiguous continuation at lambda = " + std::to_string(lambdas[s]));
        }
        for (Index k = 0; k < ev.size(); ++k) {
            if (k != pick && std::abs(ev(k) - ev(pick)) <= tol * scale)
                throw Error("models", ErrorCode::BranchCollision,
                            "branches meet at lambda = " + std::to_string(lambdas[s]));
        }
        branch.push_back(ev(pick));
    }
    return branch;
}

}  // namespace qhqm::models
