#pragma once

// Dense complex matrices and the biorthogonal eigensystem of a
// diagonalizable non-Hermitian matrix: right eigenvectors |n>, left
// eigenvectors |n>> (eigenvectors of H^dagger), normalized so <<m|n> = delta.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qhqm/error.hpp"

namespace qhqm {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Square, finite, dense complex matrix. Validated on construction and
/// immutable afterwards.
class ComplexMatrix {
public:
    explicit ComplexMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols()) {
            throw Error("biortho", ErrorCode::NotSquare,
                        "matrix must be square with dim >= 1, got " + std::to_string(m_.rows()) + "x" +
                            std::to_string(m_.cols()));
        }
        if (!m_.allFinite()) {
            throw Error("biortho", ErrorCode::NonFinite, "matrix contains NaN or Inf");
        }
    }

    static ComplexMatrix identity(Index n) { return ComplexMatrix(Matrix::Identity(n, n)); }
    static ComplexMatrix diagonal(const std::vector<cplx>& d) {
        Vector v(static_cast<Index>(d.size()));
        for (Index i = 0; i < v.size(); ++i) v(i) = d[static_cast<std::size_t>(i)];
        return ComplexMatrix(v.asDiagonal().toDenseMatrix());
    }

    Index dim() const noexcept { return m_.rows(); }
    const Matrix& mat() const noexcept { return m_; }
    cplx operator()(Index i, Index j) const { return m_(i, j); }

    ComplexMatrix adjoint() const { return ComplexMatrix(m_.adjoint()); }
    double frobenius() const { return m_.norm(); }

    bool operator==(const ComplexMatrix& other) const { return m_ == other.m_; }

private:
    Matrix m_;
};

/// FNV-1a over the raw entry bytes; identifies the matrix a derived object
/// (metric bundle, pseudospectrum) was built for.
inline std::uint64_t content_hash(const ComplexMatrix& m) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    const auto dim = static_cast<std::int64_t>(m.dim());
    mix(&dim, sizeof dim);
    for (Index i = 0; i < m.dim(); ++i) {
        for (Index j = 0; j < m.dim(); ++j) {
            const double parts[2] = {m(i, j).real() + 0.0, m(i, j).imag() + 0.0};
            mix(parts, sizeof parts);
        }
    }
    return h;
}

inline double relative_hermiticity_defect(const Matrix& m) {
    const double n = m.norm();
    return n == 0.0 ? 0.0 : (m - m.adjoint()).norm() / n;
}

/// 2-norm condition number via singular values; +inf when singular.
inline double condition_number(const Matrix& m) {
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin == 0.0 ? std::numeric_limits<double>::infinity() : s(0) / smin;
}

inline double smallest_singular_value(const Matrix& m) {
    if (!m.allFinite()) throw Error("biortho", ErrorCode::NonFinite, "matrix contains NaN or Inf");
    if (m.rows() != m.cols() || m.rows() < 1) throw Error("biortho", ErrorCode::NotSquare, "expected square matrix");
    if (m.rows() <= 16) {
        Eigen::JacobiSVD<Matrix> svd(m);
        return svd.singularValues()(m.rows() - 1);
    }
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()(m.rows() - 1);
}

inline double smallest_singular_value(const ComplexMatrix& m) { return smallest_singular_value(m.mat()); }

namespace biortho {

struct Options {
    /// Degeneracy tolerance relative to the Frobenius scale of H.
    double tol = 1e-8;
};

struct Residuals {
    double biorthonormality = 0.0;  // max |<<m|n> - delta_mn|
    double completeness = 0.0;      // max |sum |n><<n| - I|
    double reconstruction = 0.0;    // max |sum |n>E_n<<n| - H| / ||H||_F
};

namespace detail {

/// Stable (Re, Im) ordering: sort on Re, then order runs of numerically equal
/// real parts by Im. Avoids a tolerance-based comparator, which would not be a
/// strict weak ordering.
inline std::vector<Index> lexicographic_order(const Vector& values, double fuzz) {
    std::vector<Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return values(a).real() < values(b).real(); });
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t end = start + 1;
        while (end < idx.size() && values(idx[end]).real() - values(idx[end - 1]).real() <= fuzz) ++end;
        std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](Index a, Index b) { return values(a).imag() < values(b).imag(); });
        start = end;
    }
    return idx;
}

inline double min_pairwise_gap(const Vector& values) {
    double gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < values.size(); ++i)
        for (Index j = i + 1; j < values.size(); ++j) gap = std::min(gap, std::abs(values(i) - values(j)));
    return gap;
}

inline double scale_of(const Matrix& m) {
    const double s = m.norm();
    return s > 0.0 ? s : 1.0;
}

}  // namespace detail

/// Eigenvalues of H in (Re, Im) order, without eigenvectors.
inline Vector sorted_eigenvalues(const ComplexMatrix& h) {
    Eigen::ComplexEigenSolver<Matrix> solver(h.mat(), false);
    if (solver.info() != Eigen::Success)
        throw Error("biortho", ErrorCode::NonFinite, "eigenvalue iteration did not converge");
    const Vector raw = solver.eigenvalues();
    const auto order = detail::lexicographic_order(raw, 1e-12 * detail::scale_of(h.mat()));
    Vector out(raw.size());
    for (Index k = 0; k < raw.size(); ++k) out(k) = raw(order[static_cast<std::size_t>(k)]);
    return out;
}

class BiorthoSystem {
public:
    BiorthoSystem(ComplexMatrix source, Vector eigenvalues, Matrix right, Matrix left)
        : source_(std::move(source)),
          eigenvalues_(std::move(eigenvalues)),
          right_(std::move(right)),
          left_(std::move(left)) {
        const Index n = source_.dim();
        if (eigenvalues_.size() != n || right_.rows() != n || right_.cols() != n || left_.rows() != n ||
            left_.cols() != n) {
            throw Error("biortho", ErrorCode::DimensionMismatch, "eigen data does not match source dimension");
        }
        gap_ = detail::min_pairwise_gap(eigenvalues_);
    }

    Index dim() const noexcept { return source_.dim(); }
    const ComplexMatrix& source() const noexcept { return source_; }
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    cplx eigenvalue(Index n) const { return eigenvalues_(n); }
    /// Columns are the right eigenvectors |n>.
    const Matrix& right() const noexcept { return right_; }
    /// Columns are the left eigenvectors |n>> (ketkets).
    const Matrix& left() const noexcept { return left_; }
    double degeneracy_gap() const noexcept { return gap_; }

    BiorthoSystem permuted(std::span<const Index> order) const {
        if (static_cast<Index>(order.size()) != dim())
            throw Error("biortho", ErrorCode::DimensionMismatch, "permutation length mismatch");
        Vector e(dim());
        Matrix r(dim(), dim()), l(dim(), dim());
        for (Index k = 0; k < dim(); ++k) {
            const Index src = order[static_cast<std::size_t>(k)];
            e(k) = eigenvalues_(src);
            r.col(k) = right_.col(src);
            l.col(k) = left_.col(src);
        }
        return BiorthoSystem(source_, std::move(e), std::move(r), std::move(l));
    }

private:
    ComplexMatrix source_;
    Vector eigenvalues_;
    Matrix right_;
    Matrix left_;
    double gap_ = 0.0;
};

/// Right and left eigensystems are computed independently (H and H^dagger),
/// paired by maximal overlap, and the left vectors rescaled so <<n|n> = 1.
inline BiorthoSystem decompose(const ComplexMatrix& h, const Options& opts = {}) {
    const Index n = h.dim();
    const double scale = detail::scale_of(h.mat());

    Eigen::ComplexEigenSolver<Matrix> right_solver(h.mat());
    Eigen::ComplexEigenSolver<Matrix> left_solver(h.mat().adjoint());
    if (right_solver.info() != Eigen::Success || left_solver.info() != Eigen::Success)
        throw Error("biortho", ErrorCode::NonFinite, "eigenvalue iteration did not converge");

    const Vector& raw_values = right_solver.eigenvalues();
    const double gap = detail::min_pairwise_gap(raw_values);
    if (n > 1 && !(gap > opts.tol * scale)) {
        throw Error("biortho", ErrorCode::DegenerateSpectrum,
                    "minimal eigenvalue distance " + format_number(gap) + " <= tol*scale " +
                        format_number(opts.tol * scale));
    }

    Matrix right_raw = right_solver.eigenvectors();
    right_raw.colwise().normalize();
    const Matrix& left_raw = left_solver.eigenvectors();

    // Greedy assignment on |<left_m|right_n>|, largest overlaps first.
    const Eigen::MatrixXd overlap = (left_raw.adjoint() * right_raw).cwiseAbs();
    std::vector<Index> left_for_right(static_cast<std::size_t>(n), -1);
    std::vector<bool> left_used(static_cast<std::size_t>(n), false);
    std::vector<bool> right_used(static_cast<std::size_t>(n), false);
    for (Index step = 0; step < n; ++step) {
        double best = -1.0;
        Index bm = -1, bn = -1;
        for (Index m = 0; m < n; ++m) {
            if (left_used[static_cast<std::size_t>(m)]) continue;
            for (Index k = 0; k < n; ++k) {
                if (right_used[static_cast<std::size_t>(k)]) continue;
                if (overlap(m, k) > best) {
                    best = overlap(m, k);
                    bm = m;
                    bn = k;
                }
            }
        }
        left_used[static_cast<std::size_t>(bm)] = true;
        right_used[static_cast<std::size_t>(bn)] = true;
        left_for_right[static_cast<std::size_t>(bn)] = bm;
    }

    const auto order = detail::lexicographic_order(raw_values, opts.tol * scale);
    Vector values(n);
    Matrix right(n, n), left(n, n);
    for (Index k = 0; k < n; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        values(k) = raw_values(src);
        right.col(k) = right_raw.col(src);
        Vector l = left_raw.col(left_for_right[static_cast<std::size_t>(src)]);
        const cplx ov = l.dot(right.col(k));  // <<n|n> before rescaling
        if (std::abs(ov) == 0.0)
            throw Error("biortho", ErrorCode::SelfOrthogonal, "left and right eigenvectors are orthogonal");
        left.col(k) = l / std::conj(ov);
    }
    return BiorthoSystem(h, std::move(values), std::move(right), std::move(left));
}

inline Matrix spectral_reconstruct(const BiorthoSystem& sys) {
    return sys.right() * sys.eigenvalues().asDiagonal() * sys.left().adjoint();
}

inline Residuals residuals(const BiorthoSystem& sys) {
    const Index n = sys.dim();
    Residuals r;
    r.biorthonormality = (sys.left().adjoint() * sys.right() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    r.completeness = (sys.right() * sys.left().adjoint() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    r.reconstruction = (spectral_reconstruct(sys) - sys.source().mat()).cwiseAbs().maxCoeff() /
                       detail::scale_of(sys.source().mat());
    return r;
}

}  // namespace biortho

using biortho::BiorthoSystem;

}  // namespace qhqm
