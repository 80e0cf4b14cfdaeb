#pragma once

// Rayleigh-Schroedinger perturbation series for H(lambda) = H0 + lambda V.
//
// Both engines use intermediate normalization and collect lambda^k in
//   [H0 - E(0) + lambda (V - E1) - lambda^2 E2 - ...][|0> + lambda|psi1> + ...] = 0,
// which gives, with P the projector off the target level,
//   E_k       = <<0| V |psi_{k-1}>
//   |psi_k>   = P (E(0) - P H0 P)^-1 P [ (V - E1)|psi_{k-1}> - sum_{j=2}^{k-1} E_j |psi_{k-j}> ].
// The quasi-Hermitian engine additionally runs the same recursion for the
// ketkets of H^dagger + lambda V^dagger.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"
#include "qhqm/metric.hpp"

namespace qhqm::perturb {

enum class Mode { hermitian, quasi };

inline std::string to_string(Mode m) { return m == Mode::hermitian ? "hermitian" : "quasi"; }

inline Mode mode_from_string(const std::string& s) {
    if (s == "hermitian") return Mode::hermitian;
    if (s == "quasi") return Mode::quasi;
    throw Error("perturb", ErrorCode::BadParams, "unknown perturbation mode '" + s + "'");
}

class PerturbationProblem {
public:
    PerturbationProblem(ComplexMatrix h0, ComplexMatrix v, Index level, int max_order)
        : h0_(std::move(h0)), v_(std::move(v)), level_(level), max_order_(max_order) {
        if (h0_.dim() != v_.dim())
            throw Error("perturb", ErrorCode::DimensionMismatch, "H0 and V dimensions differ");
        if (level_ < 0 || level_ >= h0_.dim())
            throw Error("perturb", ErrorCode::BadParams, "level index out of range");
        if (max_order_ < 1) throw Error("perturb", ErrorCode::BadParams, "max_order must be >= 1");
    }

    const ComplexMatrix& h0() const noexcept { return h0_; }
    const ComplexMatrix& v() const noexcept { return v_; }
    Index level() const noexcept { return level_; }
    int max_order() const noexcept { return max_order_; }

    ComplexMatrix at(cplx lambda) const { return ComplexMatrix(h0_.mat() + lambda * v_.mat()); }

private:
    ComplexMatrix h0_;
    ComplexMatrix v_;
    Index level_;
    int max_order_;
};

struct RSExpansion {
    Mode mode = Mode::quasi;
    Index level = 0;
    std::vector<cplx> energy;   // E^(0) .. E^(N)
    std::vector<Vector> kets;   // |psi^(0)> .. |psi^(N)>
    std::vector<Vector> ketkets;  // |psi^(0)>> .. (empty in hermitian mode)
    bool complex_unperturbed_energy = false;

    int max_order() const { return static_cast<int>(energy.size()) - 1; }
};

struct Options {
    /// Degeneracy and Hermiticity tolerance relative to ||H0||_F.
    double tol = 1e-8;
};

namespace detail {

inline double scale_of(const Matrix& m) {
    const double s = m.norm();
    return s > 0.0 ? s : 1.0;
}

inline void require_simple_level(const Vector& values, Index level, double threshold) {
    for (Index j = 0; j < values.size(); ++j) {
        if (j != level && std::abs(values(j) - values(level)) <= threshold) {
            throw Error("perturb", ErrorCode::DegenerateLevel,
                        "level " + std::to_string(level) + " is within " + std::to_string(threshold) +
                            " of level " + std::to_string(j));
        }
    }
}

/// Recursion in eigen-coordinates of H0. `w` is V expressed in that basis,
/// `resolvent(j)` = 1/(E(0) - E_j) for j != level.
template <typename ResolventFn>
void coordinate_recursion(const Matrix& w, Index level, cplx e0, int order, const ResolventFn& resolvent,
                          std::vector<cplx>& energy, std::vector<Vector>& coeffs) {
    const Index n = w.rows();
    energy.assign(1, e0);
    coeffs.assign(1, Vector::Unit(n, level));
    for (int k = 1; k <= order; ++k) {
        const Vector w_prev = w * coeffs[static_cast<std::size_t>(k - 1)];
        energy.push_back(w_prev(level));
        Vector rhs = w_prev;
        for (int j = 1; j < k; ++j) rhs -= energy[static_cast<std::size_t>(j)] * coeffs[static_cast<std::size_t>(k - j)];
        Vector next = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            if (i != level) next(i) = resolvent(i) * rhs(i);
        }
        coeffs.push_back(std::move(next));
    }
}

}  // namespace detail

/// Textbook engine for Hermitian H0 and V. Works in the original space with
/// Q = I - |psi0><psi0|; the restricted resolvent is solved on range(Q).
inline RSExpansion rs_hermitian(const PerturbationProblem& prob, const Options& opts = {}) {
    const Matrix& h0 = prob.h0().mat();
    const Matrix& v = prob.v().mat();
    const double scale = detail::scale_of(h0);
    if (relative_hermiticity_defect(h0) > opts.tol || (v - v.adjoint()).norm() > opts.tol * std::max(1.0, v.norm()))
        throw Error("perturb", ErrorCode::NotHermitian, "rs_hermitian requires Hermitian H0 and V");

    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h0 + h0.adjoint()));
    const Index n = h0.rows();
    const Index level = prob.level();
    const Vector values = es.eigenvalues().cast<cplx>();
    detail::require_simple_level(values, level, opts.tol * scale);
    const double e0 = es.eigenvalues()(level);

    const Vector psi0 = es.eigenvectors().col(level);
    // Orthonormal basis of range(Q).
    Matrix complement(n, n - 1);
    for (Index j = 0, c = 0; j < n; ++j)
        if (j != level) complement.col(c++) = es.eigenvectors().col(j);
    const Matrix restricted = Matrix::Identity(n - 1, n - 1) * e0 - complement.adjoint() * h0 * complement;
    Eigen::PartialPivLU<Matrix> lu;
    if (n > 1) lu.compute(restricted);
    auto apply_resolvent = [&](const Vector& x) -> Vector {
        if (n == 1) return Vector::Zero(1);
        return complement * lu.solve(complement.adjoint() * x);
    };

    RSExpansion out;
    out.mode = Mode::hermitian;
    out.level = level;
    out.energy.push_back(e0);
    out.kets.push_back(psi0);
    for (int k = 1; k <= prob.max_order(); ++k) {
        const Vector v_prev = v * out.kets[static_cast<std::size_t>(k - 1)];
        out.energy.push_back(psi0.dot(v_prev));
        Vector rhs = v_prev;
        for (int j = 1; j < k; ++j) rhs -= out.energy[static_cast<std::size_t>(j)] * out.kets[static_cast<std::size_t>(k - j)];
        out.kets.push_back(apply_resolvent(rhs));
    }
    return out;
}

/// Amended engine for arbitrary (diagonalizable, simple target level) H0 and
/// V, built on the biorthonormal basis of H0. Ket corrections use
/// P = I - |0><<0|, ketket corrections use P^dagger; both restricted
/// resolvents are diagonal in that basis.
inline RSExpansion rs_quasi(const PerturbationProblem& prob, const Options& opts = {}) {
    const Matrix& h0 = prob.h0().mat();
    const double scale = detail::scale_of(h0);
    const Index level = prob.level();
    detail::require_simple_level(biortho::sorted_eigenvalues(prob.h0()), level, opts.tol * scale);

    const BiorthoSystem sys = biortho::decompose(prob.h0(), biortho::Options{opts.tol});
    const Vector& e = sys.eigenvalues();
    const cplx e0 = e(level);

    // <<i| V |j>: V in the biorthonormal basis; its adjoint drives the ketkets.
    const Matrix w = sys.left().adjoint() * prob.v().mat() * sys.right();
    const Matrix w_dag = w.adjoint();

    RSExpansion out;
    out.mode = Mode::quasi;
    out.level = level;
    out.complex_unperturbed_energy = std::abs(e0.imag()) > opts.tol * scale;

    std::vector<Vector> ket_coords, ketket_coords;
    detail::coordinate_recursion(
        w, level, e0, prob.max_order(), [&](Index j) { return 1.0 / (e0 - e(j)); }, out.energy, ket_coords);
    std::vector<cplx> conj_energy;
    detail::coordinate_recursion(
        w_dag, level, std::conj(e0), prob.max_order(), [&](Index j) { return 1.0 / std::conj(e0 - e(j)); },
        conj_energy, ketket_coords);

    for (const auto& c : ket_coords) out.kets.push_back(sys.right() * c);
    for (const auto& d : ketket_coords) out.ketkets.push_back(sys.left() * d);
    return out;
}

inline cplx evaluate_series(const RSExpansion& exp, cplx lambda, int order) {
    if (order < 0 || order > exp.max_order())
        throw Error("perturb", ErrorCode::BadParams, "order exceeds computed max_order");
    cplx sum = 0.0, power = 1.0;
    for (int k = 0; k <= order; ++k) {
        sum += power * exp.energy[static_cast<std::size_t>(k)];
        power *= lambda;
    }
    return sum;
}

/// Truncated ket and ketket at coupling lambda. The ketket belongs to
/// H^dagger + conj(lambda) V^dagger, hence the conjugate powers.
inline std::pair<Vector, Vector> evaluate_states(const RSExpansion& exp, cplx lambda, int order) {
    if (exp.mode != Mode::quasi) throw Error("perturb", ErrorCode::BadParams, "ketkets need a quasi expansion");
    if (order < 0 || order > exp.max_order())
        throw Error("perturb", ErrorCode::BadParams, "order exceeds computed max_order");
    Vector ket = Vector::Zero(exp.kets.front().size());
    Vector ketket = ket;
    cplx power = 1.0;
    for (int k = 0; k <= order; ++k) {
        ket += power * exp.kets[static_cast<std::size_t>(k)];
        ketket += std::conj(power) * exp.ketkets[static_cast<std::size_t>(k)];
        power *= lambda;
    }
    return {ket, ketket};
}

/// <<psi|A|psi> / <<psi|psi> from the truncated ket and ketket series.
inline cplx predict_from_series(const RSExpansion& exp, const ComplexMatrix& a, cplx lambda, int order) {
    const auto [ket, ketket] = evaluate_states(exp, lambda, order);
    return ketket.dot(a.mat() * ket) / ketket.dot(ket);
}

/// Metric of H(lambda) built directly from its biorthogonal system, used to
/// cross-check series predictions.
inline metric::MetricBundle reconstruct_metric_nonperturbatively(const ComplexMatrix& h_lambda,
                                                                 const metric::KappaWeights& weights,
                                                                 const metric::Options& opts = {}) {
    return metric::build_metric(biortho::decompose(h_lambda), weights, opts);
}

/// Eigenvalue of `m` closest to `anchor`.
inline cplx nearest_eigenvalue(const ComplexMatrix& m, cplx anchor) {
    const Vector ev = biortho::sorted_eigenvalues(m);
    Index best = 0;
    for (Index k = 1; k < ev.size(); ++k)
        if (std::abs(ev(k) - anchor) < std::abs(ev(best) - anchor)) best = k;
    return ev(best);
}

struct OrderScaling {
    int order = 0;
    int leading_omitted = 0;  // first order above `order` with a nonzero coefficient
    double lambda = 0.0;
    double error_full = 0.0;  // |series - exact| at lambda
    double error_half = 0.0;  // same at lambda / 2
    double exponent = 0.0;    // log2(error_full / error_half)
};

/// Richardson test of the truncation error: at small lambda the order-N
/// error behaves like c lambda^k, where k is the first order above N with
/// nonzero coefficient, so halving lambda divides it by 2^k.
/// `exact` returns the eigenvalue of H(lambda) continued from the target level.
inline OrderScaling order_scaling(const RSExpansion& exp, int order,
                                  const std::function<cplx(double, cplx)>& exact, double target_error = 1e-6) {
    const int available = exp.max_order();
    auto mag = [&](int k) { return std::abs(exp.energy[static_cast<std::size_t>(k)]); };
    double coeff_scale = 1.0;
    for (int k = 0; k <= available; ++k) coeff_scale = std::max(coeff_scale, std::pow(mag(k), 1.0 / std::max(k, 1)));
    auto vanishes = [&](int k) { return mag(k) <= 1e-9 * std::pow(coeff_scale, k); };

    int lead = -1, next = -1;
    for (int k = order + 1; k <= available; ++k) {
        if (vanishes(k)) continue;
        if (lead < 0) {
            lead = k;
        } else {
            next = k;
            break;
        }
    }
    if (lead < 0 || next < 0)
        throw Error("perturb", ErrorCode::InsufficientOrders,
                    "expansion too short to locate the leading omitted order above " + std::to_string(order));

    OrderScaling r;
    r.order = order;
    r.leading_omitted = lead;
    const double scale = std::max(1.0, std::abs(exp.energy[0]));
    const double lambda_err = std::pow(target_error * scale / mag(lead), 1.0 / lead);
    const double lambda_conv = 0.1 * std::pow(mag(lead) / mag(next), 1.0 / (next - lead));
    r.lambda = std::min(lambda_err, lambda_conv);
    auto error_at = [&](double lam) {
        const cplx series = evaluate_series(exp, lam, order);
        return std::abs(series - exact(lam, series));
    };
    r.error_full = error_at(r.lambda);
    r.error_half = error_at(0.5 * r.lambda);
    r.exponent = std::log2(r.error_full / r.error_half);
    return r;
}

}  // namespace qhqm::perturb
