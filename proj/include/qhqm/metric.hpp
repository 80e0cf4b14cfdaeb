#pragma once

// Physical inner-product metrics for a quasi-Hermitian H:
//   Theta = sum_n |n>> kappa_n^2 <<n|,  Omega = Theta^(1/2),  h = Omega H Omega^-1,
// and the measurement predictions built from them.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"

namespace qhqm::metric {

/// Positive weights |kappa_n|^2, one per eigenstate.
class KappaWeights {
public:
    explicit KappaWeights(std::vector<double> kappa_sq) : k_(std::move(kappa_sq)) {
        if (k_.empty()) throw Error("metric", ErrorCode::BadParams, "kappa vector is empty");
        for (double k : k_) {
            if (!std::isfinite(k) || !(k > 0.0))
                throw Error("metric", ErrorCode::BadParams, "kappa_sq entries must be finite and > 0");
        }
    }
    static KappaWeights uniform(Index dim, double value = 1.0) {
        return KappaWeights(std::vector<double>(static_cast<std::size_t>(dim), value));
    }

    Index dim() const noexcept { return static_cast<Index>(k_.size()); }
    const std::vector<double>& values() const noexcept { return k_; }
    double operator[](Index n) const { return k_[static_cast<std::size_t>(n)]; }

private:
    std::vector<double> k_;
};

struct Options {
    /// Max |Im E_n| relative to ||H||_F for the spectrum to count as real.
    double real_tol = 1e-8;
    double condition_cap = 1e8;
};

struct BundleResiduals {
    double quasi_hermiticity = 0.0;  // ||H^dagger Theta - Theta H|| / (||H|| ||Theta||)
    double dyson_factor = 0.0;       // ||Omega^dagger Omega - Theta|| / ||Theta||
    double hermiticity = 0.0;        // ||h - h^dagger|| / ||h||
    double theta_hermiticity = 0.0;  // ||Theta - Theta^dagger|| / ||Theta||
    double min_theta_eigenvalue = 0.0;
};

class MetricBundle {
public:
    MetricBundle(ComplexMatrix theta, ComplexMatrix omega, ComplexMatrix omega_inv, ComplexMatrix hermitized,
                 KappaWeights kappa, std::uint64_t source_hash, double condition, BundleResiduals residuals)
        : theta_(std::move(theta)),
          omega_(std::move(omega)),
          omega_inv_(std::move(omega_inv)),
          h_(std::move(hermitized)),
          kappa_(std::move(kappa)),
          source_hash_(source_hash),
          condition_(condition),
          residuals_(residuals) {}

    const ComplexMatrix& theta() const noexcept { return theta_; }
    const ComplexMatrix& omega() const noexcept { return omega_; }
    const ComplexMatrix& omega_inverse() const noexcept { return omega_inv_; }
    const ComplexMatrix& hermitized() const noexcept { return h_; }
    const KappaWeights& kappa() const noexcept { return kappa_; }
    std::uint64_t source_hash() const noexcept { return source_hash_; }
    /// Condition number of Theta.
    double condition() const noexcept { return condition_; }
    const BundleResiduals& residuals() const noexcept { return residuals_; }

private:
    ComplexMatrix theta_;
    ComplexMatrix omega_;
    ComplexMatrix omega_inv_;
    ComplexMatrix h_;
    KappaWeights kappa_;
    std::uint64_t source_hash_;
    double condition_;
    BundleResiduals residuals_;
};

inline double check_quasi_hermiticity(const Matrix& h, const Matrix& theta) {
    if (h.rows() != theta.rows() || h.cols() != theta.cols())
        throw Error("metric", ErrorCode::DimensionMismatch, "H and Theta dimensions differ");
    const double denom = h.norm() * theta.norm();
    if (denom == 0.0) return 0.0;
    return (h.adjoint() * theta - theta * h).norm() / denom;
}

inline double check_quasi_hermiticity(const ComplexMatrix& h, const ComplexMatrix& theta) {
    return check_quasi_hermiticity(h.mat(), theta.mat());
}

namespace detail {

struct HermitianRoot {
    Matrix root;
    Matrix inverse_root;
    double condition;
    double min_eigenvalue;
};

inline HermitianRoot principal_root(const Matrix& theta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(theta);
    const Eigen::VectorXd& w = es.eigenvalues();
    HermitianRoot out;
    out.min_eigenvalue = w(0);
    out.condition = w(0) > 0.0 ? w(w.size() - 1) / w(0) : std::numeric_limits<double>::infinity();
    if (!(w(0) > 0.0)) return out;
    const Matrix& u = es.eigenvectors();
    out.root = u * w.cwiseSqrt().cast<cplx>().asDiagonal() * u.adjoint();
    out.inverse_root = u * w.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * u.adjoint();
    return out;
}

}  // namespace detail

inline MetricBundle build_metric(const BiorthoSystem& sys, const KappaWeights& weights, const Options& opts = {}) {
    if (weights.dim() != sys.dim())
        throw Error("metric", ErrorCode::DimensionMismatch,
                    "kappa dim " + std::to_string(weights.dim()) + " != system dim " + std::to_string(sys.dim()));
    const Matrix& h = sys.source().mat();
    const double scale = h.norm() > 0.0 ? h.norm() : 1.0;
    const double max_im = sys.eigenvalues().imag().cwiseAbs().maxCoeff();
    if (max_im > opts.real_tol * scale)
        throw Error("metric", ErrorCode::ComplexSpectrum,
                    "max |Im E_n| = " + format_number(max_im) + " exceeds tolerance; no positive metric exists");

    Eigen::VectorXd k(sys.dim());
    for (Index n = 0; n < sys.dim(); ++n) k(n) = weights[n];
    Matrix theta = sys.left() * k.cast<cplx>().asDiagonal() * sys.left().adjoint();
    theta = (0.5 * (theta + theta.adjoint())).eval();

    const auto root = detail::principal_root(theta);
    if (!(root.condition <= opts.condition_cap))
        throw Error("metric", ErrorCode::IllConditioned,
                    "condition(Theta) = " + format_number(root.condition) + " exceeds cap " +
                        format_number(opts.condition_cap));

    Matrix hermitized = root.root * h * root.inverse_root;

    BundleResiduals res;
    res.quasi_hermiticity = check_quasi_hermiticity(h, theta);
    res.dyson_factor = (root.root.adjoint() * root.root - theta).norm() / theta.norm();
    res.hermiticity = relative_hermiticity_defect(hermitized);
    res.theta_hermiticity = relative_hermiticity_defect(theta);
    res.min_theta_eigenvalue = root.min_eigenvalue;

    return MetricBundle(ComplexMatrix(std::move(theta)), ComplexMatrix(root.root), ComplexMatrix(root.inverse_root),
                        ComplexMatrix(std::move(hermitized)), weights, content_hash(sys.source()), root.condition,
                        res);
}

inline MetricBundle build_metric(const BiorthoSystem& sys, const Options& opts = {}) {
    return build_metric(sys, KappaWeights::uniform(sys.dim()), opts);
}

/// rho_n = |n><<n| / <<n|n>.
inline Matrix density_projector(const BiorthoSystem& sys, Index n, double tol = 1e-8) {
    if (n < 0 || n >= sys.dim()) throw Error("metric", ErrorCode::BadParams, "level index out of range");
    const auto r = sys.right().col(n);
    const auto l = sys.left().col(n);
    const cplx ov = l.dot(r);
    if (std::abs(ov) < tol * l.norm() * r.norm())
        throw Error("metric", ErrorCode::SelfOrthogonal,
                    "normalized overlap |<<n|n>| = " + format_number(std::abs(ov) / (l.norm() * r.norm())) +
                        " below tolerance (exceptional-point vicinity)");
    return r * l.adjoint() / ov;
}

struct PredictOptions {
    double observability_tol = 1e-8;
    double agreement_tol = 1e-10;
    /// Accept an A that is not quasi-Hermitian with respect to Theta.
    bool allow_non_observable = false;
};

/// a_n computed three ways; `value` is <n|Theta A|n>/<n|Theta|n>.
struct Prediction {
    cplx value;
    cplx via_trace;    // Tr[A rho_n]
    cplx via_ketket;   // <<n|A|n>/<<n|n>
    double spread = 0.0;
    double observability_residual = 0.0;
};

inline Prediction predict(const BiorthoSystem& sys, const ComplexMatrix& theta, const ComplexMatrix& a, Index n,
                          const PredictOptions& opts = {}) {
    if (theta.dim() != sys.dim() || a.dim() != sys.dim())
        throw Error("metric", ErrorCode::DimensionMismatch, "Theta/A dimension mismatch");
    if (n < 0 || n >= sys.dim()) throw Error("metric", ErrorCode::BadParams, "level index out of range");

    Prediction p;
    p.observability_residual = check_quasi_hermiticity(a, theta);
    if (p.observability_residual > opts.observability_tol && !opts.allow_non_observable)
        throw Error("metric", ErrorCode::NotObservable,
                    "A^dagger Theta - Theta A residual " + format_number(p.observability_residual));

    const auto ket = sys.right().col(n);
    const auto ketket = sys.left().col(n);
    const Vector theta_ket = theta.mat() * ket;
    p.value = theta_ket.dot(a.mat() * ket) / theta_ket.dot(ket);
    p.via_trace = (a.mat() * density_projector(sys, n)).trace();
    p.via_ketket = ketket.dot(a.mat() * ket) / ketket.dot(ket);
    p.spread = std::max({std::abs(p.value - p.via_trace), std::abs(p.value - p.via_ketket),
                         std::abs(p.via_trace - p.via_ketket)});

    const double scale = std::max(1.0, a.mat().norm());
    if (p.spread > opts.agreement_tol * scale)
        throw Error("metric", ErrorCode::PredictionMismatch,
                    "prediction routes disagree by " + format_number(p.spread) +
                        " (is Theta a metric for this H?)");
    return p;
}

/// <n|A|n>/<n|n> with the trivial metric; the value an observer who ignores
/// Theta would report.
inline cplx naive_expectation(const BiorthoSystem& sys, const ComplexMatrix& a, Index n) {
    const auto ket = sys.right().col(n);
    return ket.dot(a.mat() * ket) / ket.squaredNorm();
}

/// Q = Omega^-1 a Omega for a Hermitian observable a of the Hermitized picture.
inline Matrix pullback_observable(const ComplexMatrix& fancy_a, const ComplexMatrix& omega,
                                  double condition_cap = 1e8, double hermiticity_tol = 1e-10) {
    if (fancy_a.dim() != omega.dim())
        throw Error("metric", ErrorCode::DimensionMismatch, "observable and Omega dimension mismatch");
    if (relative_hermiticity_defect(fancy_a.mat()) > hermiticity_tol)
        throw Error("metric", ErrorCode::NotHermitian, "observable must be Hermitian");
    const double cond = condition_number(omega.mat());
    if (!(cond <= condition_cap))
        throw Error("metric", ErrorCode::IllConditioned, "condition(Omega) = " + format_number(cond));
    Eigen::PartialPivLU<Matrix> lu(omega.mat());
    return lu.solve(fancy_a.mat() * omega.mat());
}

}  // namespace qhqm::metric
