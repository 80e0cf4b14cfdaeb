#pragma once

// Weak-coupling series of the imaginary cubic oscillator ground state,
//   H = -d^2/dx^2 + x^2/4 + i lambda x^3,   E(lambda) ~ 1/2 + sum_n b_n lambda^(2n).
//
// Exact route: psi = exp(-x^2/4) sum_k (i lambda)^k P_k(x), E = 1/2 + sum_k (i lambda)^k e_k
// turns the eigenproblem into
//   -P_k'' + x P_k' + x^3 P_{k-1} = sum_{j=1}^{k} e_j P_{k-j},   P_0 = 1,
// solved degree by degree with (x D - D^2) x^m = m x^m - m(m-1) x^(m-2).
// The constant term fixes e_k; P_k(0) = 0 is the normalization. b_n = (-1)^n e_{2n}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Dense>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"
#include "qhqm/models.hpp"
#include "qhqm/perturb.hpp"

namespace qhqm::series {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

enum class Method { bw_rational, matrix_rs_float };

inline std::string to_string(Method m) { return m == Method::bw_rational ? "bw_rational" : "matrix_rs_float"; }

inline Method method_from_string(const std::string& s) {
    if (s == "bw_rational") return Method::bw_rational;
    if (s == "matrix_rs_float") return Method::matrix_rs_float;
    throw Error("series", ErrorCode::BadParams, "unknown series mode '" + s + "'");
}

inline std::string to_string(const Rational& q) {
    const BigInt num = boost::multiprecision::numerator(q);
    const BigInt den = boost::multiprecision::denominator(q);
    return den == 1 ? num.str() : num.str() + "/" + den.str();
}

/// b_1 .. b_K. `exact` is filled in bw_rational mode only; index n-1 holds b_n.
struct CubicSeries {
    Method method = Method::bw_rational;
    double f = 1.0;
    std::vector<double> b;
    std::vector<Rational> exact;
    /// Truncation used in float mode, 0 otherwise.
    Index truncation = 0;

    std::size_t size() const noexcept { return b.size(); }
    /// 1/2, b_1, b_2, ... as coefficients of t = lambda^2.
    std::vector<double> t_coefficients() const {
        std::vector<double> c{0.5};
        c.insert(c.end(), b.begin(), b.end());
        return c;
    }
};

/// Structural byproducts of the exact recursion.
struct BenderWuTrace {
    std::vector<Rational> e;             // e_0 = 1/2 (unused), e_1 .. e_{2K}
    std::vector<int> degree;             // deg P_k
    std::vector<bool> parity_matches_k;  // P_k has only powers of parity k
    std::size_t max_bits = 0;            // largest per-polynomial bit count seen
};

struct Options {
    /// Cap on the summed numerator+denominator bits of one polynomial.
    std::size_t bit_cap = 1000000;
    /// Float mode truncation; 0 selects 3 * (2K) + 10.
    Index truncation = 0;
};

namespace detail {

using Poly = std::vector<Rational>;  // coefficient of x^m at index m

inline std::size_t bit_size(const Poly& p) {
    std::size_t bits = 0;
    for (const auto& c : p) {
        const BigInt num = boost::multiprecision::numerator(c);
        const BigInt den = boost::multiprecision::denominator(c);
        if (num != 0) bits += boost::multiprecision::msb(boost::multiprecision::abs(num)) + 1;
        bits += boost::multiprecision::msb(den) + 1;
    }
    return bits;
}

inline int degree_of(const Poly& p) {
    for (int m = static_cast<int>(p.size()) - 1; m >= 0; --m)
        if (p[static_cast<std::size_t>(m)] != 0) return m;
    return -1;
}

}  // namespace detail

inline std::pair<CubicSeries, BenderWuTrace> bender_wu_exact(int k_max, const Options& opts = {}) {
    if (k_max < 1) throw Error("series", ErrorCode::BadParams, "K must be >= 1");
    const int orders = 2 * k_max;

    std::vector<detail::Poly> p{detail::Poly{Rational(1)}};
    BenderWuTrace trace;
    trace.e.push_back(Rational(1, 2));
    trace.degree.push_back(0);
    trace.parity_matches_k.push_back(true);

    for (int k = 1; k <= orders; ++k) {
        const int deg = 3 * k;
        // rhs = sum_{j=1}^{k-1} e_j P_{k-j} - x^3 P_{k-1}; e_k enters the constant term only.
        detail::Poly rhs(static_cast<std::size_t>(deg + 1), Rational(0));
        const auto& prev = p[static_cast<std::size_t>(k - 1)];
        for (std::size_t m = 0; m < prev.size(); ++m) rhs[m + 3] -= prev[m];
        for (int j = 1; j < k; ++j) {
            const auto& ej = trace.e[static_cast<std::size_t>(j)];
            if (ej == 0) continue;
            const auto& pk = p[static_cast<std::size_t>(k - j)];
            for (std::size_t m = 0; m < pk.size(); ++m) rhs[m] += ej * pk[m];
        }
        // Back substitution from the top degree: m p_m - (m+2)(m+1) p_{m+2} = rhs_m.
        detail::Poly pk(static_cast<std::size_t>(deg + 3), Rational(0));
        for (int m = deg; m >= 1; --m) {
            const auto um = static_cast<std::size_t>(m);
            pk[um] = (rhs[um] + Rational((m + 2) * (m + 1)) * pk[um + 2]) / m;
        }
        // Constant term: -2 p_2 = rhs_0 + e_k.
        trace.e.push_back(-2 * pk[2] - rhs[0]);
        pk.resize(static_cast<std::size_t>(deg + 1));

        const std::size_t bits = detail::bit_size(pk);
        trace.max_bits = std::max(trace.max_bits, bits);
        if (bits > opts.bit_cap)
            throw Error("series", ErrorCode::OverflowGuard,
                        "P_" + std::to_string(k) + " needs " + std::to_string(bits) + " bits (cap " +
                            std::to_string(opts.bit_cap) + ")");

        trace.degree.push_back(detail::degree_of(pk));
        bool parity = true;
        for (std::size_t m = 0; m < pk.size(); ++m)
            if (pk[m] != 0 && static_cast<int>(m % 2) != k % 2) parity = false;
        trace.parity_matches_k.push_back(parity);
        p.push_back(std::move(pk));
    }

    CubicSeries s;
    s.method = Method::bw_rational;
    for (int n = 1; n <= k_max; ++n) {
        Rational bn = trace.e[static_cast<std::size_t>(2 * n)];
        if (n % 2 == 1) bn = -bn;
        s.b.push_back(static_cast<double>(bn));
        s.exact.push_back(std::move(bn));
    }
    return {std::move(s), std::move(trace)};
}

namespace detail {

inline std::vector<double> float_coefficients(int k_max, Index m) {
    const models::ModelSpec spec{models::ModelName::cubic_oscillator_basis, {{"M", static_cast<double>(m)}, {"f", 1.0}}};
    auto [h0, v] = models::perturbation_split(spec);
    const perturb::PerturbationProblem prob(std::move(h0), std::move(v), 0, 2 * k_max);
    const auto exp = perturb::rs_quasi(prob);
    std::vector<double> b;
    for (int n = 1; n <= k_max; ++n) b.push_back(exp.energy[static_cast<std::size_t>(2 * n)].real());
    return b;
}

}  // namespace detail

/// Relative tolerance for float-mode b_n against a doubled truncation.
inline double float_tolerance(int n) {
    static constexpr double table[] = {1e-9, 1e-8, 1e-6, 1e-4};
    return n <= 4 ? table[n - 1] : 1e-4 * std::pow(10.0, n - 4);
}

inline CubicSeries bender_wu_coefficients(int k_max, Method mode, const Options& opts = {}) {
    if (k_max < 1) throw Error("series", ErrorCode::BadParams, "K must be >= 1");
    if (mode == Method::bw_rational) return bender_wu_exact(k_max, opts).first;

    const Index m = opts.truncation > 0 ? opts.truncation : static_cast<Index>(3 * (2 * k_max) + 10);
    if (m < 3) throw Error("series", ErrorCode::BadParams, "truncation must be >= 3");
    const auto b = detail::float_coefficients(k_max, m);
    const auto b_wide = detail::float_coefficients(k_max, 2 * m);
    for (int n = 1; n <= k_max; ++n) {
        const double x = b[static_cast<std::size_t>(n - 1)], y = b_wide[static_cast<std::size_t>(n - 1)];
        if (std::abs(x - y) > float_tolerance(n) * std::max(std::abs(y), 1e-300))
            throw Error("series", ErrorCode::TruncationTooSmall,
                        "b_" + std::to_string(n) + " changes from " + format_number(x) + " to " + format_number(y) +
                            " when M doubles from " + std::to_string(m));
    }
    CubicSeries s;
    s.method = Method::matrix_rs_float;
    s.b = b;
    s.truncation = m;
    return s;
}

/// r_n = b_n / [(-1)^(n+1) 60^(n+1/2) (2 pi)^(-3/2) Gamma(n+1/2)].
inline std::vector<double> asymptotic_check(const CubicSeries& s) {
    if (s.size() < 6) throw Error("series", ErrorCode::InsufficientOrders, "need at least 6 coefficients");
    std::vector<double> r;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        const double log_mag = (n + 0.5) * std::log(60.0) - 1.5 * std::log(2.0 * std::numbers::pi) + std::lgamma(n + 0.5);
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        // b_n as exact rational keeps precision when it exceeds double range.
        double log_b;
        double b_sign;
        if (!s.exact.empty()) {
            const Rational& q = s.exact[i];
            b_sign = q < 0 ? -1.0 : 1.0;
            const BigInt num = boost::multiprecision::abs(boost::multiprecision::numerator(q));
            const BigInt den = boost::multiprecision::denominator(q);
            const auto nb = boost::multiprecision::msb(num), db = boost::multiprecision::msb(den);
            const auto shift_n = nb > 52 ? nb - 52 : 0, shift_d = db > 52 ? db - 52 : 0;
            log_b = std::log(static_cast<double>(BigInt(num >> shift_n))) + static_cast<double>(shift_n) * std::log(2.0) -
                    std::log(static_cast<double>(BigInt(den >> shift_d))) - static_cast<double>(shift_d) * std::log(2.0);
        } else {
            b_sign = s.b[i] < 0 ? -1.0 : 1.0;
            log_b = std::log(std::abs(s.b[i]));
        }
        r.push_back(b_sign * sign * std::exp(log_b - log_mag));
    }
    return r;
}

struct PadeApproximant {
    std::vector<double> numerator;    // p_0 .. p_L in t
    std::vector<double> denominator;  // q_0 = 1 .. q_M
    std::vector<cplx> poles;          // roots of the denominator in t

    cplx operator()(cplx t) const {
        cplx num = 0.0, den = 0.0;
        for (std::size_t i = numerator.size(); i-- > 0;) num = num * t + numerator[i];
        for (std::size_t i = denominator.size(); i-- > 0;) den = den * t + denominator[i];
        return num / den;
    }
};

/// [L/M] Pade approximant of 1/2 + sum b_n t^n. Coefficients are solved in
/// exact arithmetic when the series carries rationals.
inline PadeApproximant pade(const CubicSeries& s, int l, int m) {
    if (l < 0 || m < 0) throw Error("series", ErrorCode::BadParams, "Pade orders must be >= 0");
    if (static_cast<std::size_t>(l + m) > s.size())
        throw Error("series", ErrorCode::InsufficientOrders,
                    "[" + std::to_string(l) + "/" + std::to_string(m) + "] needs " + std::to_string(l + m) +
                        " coefficients, have " + std::to_string(s.size()));

    std::vector<Rational> c;
    if (!s.exact.empty()) {
        c.push_back(Rational(1, 2));
        c.insert(c.end(), s.exact.begin(), s.exact.end());
    } else {
        // Float coefficients are converted exactly, so the solve below is
        // still free of rounding.
        for (double x : s.t_coefficients()) c.push_back(Rational(x));
    }
    auto coef = [&](int i) { return i < 0 ? Rational(0) : c[static_cast<std::size_t>(i)]; };

    // sum_{j=1}^{M} q_j c_{L+i-j} = -c_{L+i},  i = 1..M.
    std::vector<std::vector<Rational>> a(static_cast<std::size_t>(m), std::vector<Rational>(static_cast<std::size_t>(m + 1)));
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= m; ++j) a[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] = coef(l + i - j);
        a[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(m)] = -coef(l + i);
    }
    for (int col = 0; col < m; ++col) {
        int piv = col;
        while (piv < m && a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)] == 0) ++piv;
        if (piv == m) throw Error("series", ErrorCode::SpuriousPole, "singular Pade system (degenerate table entry)");
        std::swap(a[static_cast<std::size_t>(piv)], a[static_cast<std::size_t>(col)]);
        for (int r = 0; r < m; ++r) {
            if (r == col || a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] == 0) continue;
            const Rational factor = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                                    a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int k = col; k <= m; ++k)
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -=
                    factor * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(k)];
        }
    }
    std::vector<Rational> q{Rational(1)};
    for (int j = 0; j < m; ++j)
        q.push_back(a[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] / a[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)]);
    std::vector<Rational> pnum;
    for (int i = 0; i <= l; ++i) {
        Rational acc = 0;
        for (int j = 0; j <= std::min(i, m); ++j) acc += q[static_cast<std::size_t>(j)] * coef(i - j);
        pnum.push_back(acc);
    }

    PadeApproximant out;
    for (const auto& x : pnum) out.numerator.push_back(static_cast<double>(x));
    for (const auto& x : q) out.denominator.push_back(static_cast<double>(x));

    int deg = m;
    while (deg > 0 && out.denominator[static_cast<std::size_t>(deg)] == 0.0) --deg;
    if (deg > 0) {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
        const double lead = out.denominator[static_cast<std::size_t>(deg)];
        for (int i = 0; i < deg; ++i) companion(0, i) = -out.denominator[static_cast<std::size_t>(deg - 1 - i)] / lead;
        for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
        Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
        for (Index i = 0; i < deg; ++i) out.poles.push_back(es.eigenvalues()(i));
    }
    return out;
}

/// [L/M] Pade of the series evaluated at t = lambda^2.
inline cplx pade_resummation(const CubicSeries& s, cplx lambda, std::pair<int, int> order_pair) {
    const auto approximant = pade(s, order_pair.first, order_pair.second);
    const cplx t = lambda * lambda;
    for (const cplx& pole : approximant.poles) {
        if (std::abs(pole - t) < 0.1 * std::abs(t))
            throw Error("series", ErrorCode::SpuriousPole,
                        "pole at t = " + format_number(pole.real()) + (pole.imag() < 0 ? "" : "+") +
                            format_number(pole.imag()) + "i within 10% of evaluation point");
    }
    return approximant(t);
}

}  // namespace qhqm::series
