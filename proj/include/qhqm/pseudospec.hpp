#pragma once

// Pseudospectra in two norm regimes.
//   k_norm:     value(z) = sigma_min(z - H)
//   theta_norm: value(z) = sigma_min(Omega (z - H) Omega^-1) = sigma_min(z - h)
// In either regime z lies in the epsilon-pseudospectrum iff value(z) < epsilon,
// and the union of spectra of H + P over regime-norm(P) < epsilon is that set.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qhqm/biortho.hpp"
#include "qhqm/error.hpp"
#include "qhqm/metric.hpp"

namespace qhqm::pseudospec {

enum class Regime { k_norm, theta_norm };

inline std::string to_string(Regime r) { return r == Regime::k_norm ? "k_norm" : "theta_norm"; }

inline Regime regime_from_string(const std::string& s) {
    if (s == "k_norm") return Regime::k_norm;
    if (s == "theta_norm") return Regime::theta_norm;
    throw Error("pseudospec", ErrorCode::BadParams, "unknown regime '" + s + "'");
}

class GridSpec {
public:
    GridSpec(double re_min, double re_max, double im_min, double im_max, Index nx, Index ny)
        : re_min_(re_min), re_max_(re_max), im_min_(im_min), im_max_(im_max), nx_(nx), ny_(ny) {
        if (!(re_min < re_max) || !(im_min < im_max) || !std::isfinite(re_max - re_min) ||
            !std::isfinite(im_max - im_min))
            throw Error("pseudospec", ErrorCode::BadParams, "grid requires re_min < re_max and im_min < im_max");
        if (nx < 2 || ny < 2) throw Error("pseudospec", ErrorCode::BadParams, "grid requires nx, ny >= 2");
    }

    double re_min() const noexcept { return re_min_; }
    double re_max() const noexcept { return re_max_; }
    double im_min() const noexcept { return im_min_; }
    double im_max() const noexcept { return im_max_; }
    Index nx() const noexcept { return nx_; }
    Index ny() const noexcept { return ny_; }
    Index size() const noexcept { return nx_ * ny_; }

    double dx() const noexcept { return (re_max_ - re_min_) / static_cast<double>(nx_ - 1); }
    double dy() const noexcept { return (im_max_ - im_min_) / static_cast<double>(ny_ - 1); }
    double cell_diagonal() const noexcept { return std::hypot(dx(), dy()); }
    double cell_area() const noexcept { return dx() * dy(); }

    /// Row-major: imaginary rows outer, real columns inner.
    cplx point(Index flat) const {
        const Index iy = flat / nx_, ix = flat % nx_;
        return {re_min_ + static_cast<double>(ix) * dx(), im_min_ + static_cast<double>(iy) * dy()};
    }

private:
    double re_min_, re_max_, im_min_, im_max_;
    Index nx_, ny_;
};

struct PseudospectrumGrid {
    GridSpec spec;
    Regime regime;
    std::vector<double> values;  // row-major, see GridSpec::point
    static constexpr const char* epsilon_note = "z is in sigma_eps iff value(z) < eps";

    /// Area of {value < eps} estimated by counting grid points.
    double sublevel_area(double eps) const {
        const auto count = std::count_if(values.begin(), values.end(), [eps](double v) { return v < eps; });
        return static_cast<double>(count) * spec.cell_area();
    }
};

namespace detail {

/// Runs body(i) for i in [0, n) on `threads` workers. Each index writes only
/// its own output slot, so results do not depend on scheduling.
inline void parallel_for(Index n, unsigned threads, const std::function<void(Index)>& body) {
    if (threads <= 1 || n < 2) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const Index chunk = (n + static_cast<Index>(threads) - 1) / static_cast<Index>(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const Index lo = static_cast<Index>(t) * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (Index i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline const metric::MetricBundle& require_bundle(const ComplexMatrix& h, const metric::MetricBundle* bundle) {
    if (bundle == nullptr)
        throw Error("pseudospec", ErrorCode::MissingMetric, "theta_norm regime needs a metric bundle");
    if (bundle->source_hash() != content_hash(h) || bundle->theta().dim() != h.dim())
        throw Error("pseudospec", ErrorCode::MissingMetric, "metric bundle was built for a different matrix");
    return *bundle;
}

}  // namespace detail

/// Resolvent-norm evaluator for one matrix and regime; value() is
/// sigma_min of (z - M) with M = H or M = h.
class ResolventProbe {
public:
    ResolventProbe(const ComplexMatrix& h, Regime regime, const metric::MetricBundle* bundle)
        : regime_(regime),
          m_(regime == Regime::k_norm ? h.mat() : detail::require_bundle(h, bundle).hermitized().mat()) {}

    double value(cplx z) const {
        Matrix shifted = -m_;
        shifted.diagonal().array() += z;
        return smallest_singular_value(shifted);
    }
    Regime regime() const noexcept { return regime_; }

private:
    Regime regime_;
    Matrix m_;
};

inline PseudospectrumGrid pseudospectrum(const ComplexMatrix& h, const GridSpec& spec, Regime regime,
                                         const metric::MetricBundle* bundle = nullptr, unsigned threads = 1) {
    const ResolventProbe probe(h, regime, bundle);
    PseudospectrumGrid out{spec, regime, std::vector<double>(static_cast<std::size_t>(spec.size()))};
    detail::parallel_for(spec.size(), threads,
                         [&](Index i) { out.values[static_cast<std::size_t>(i)] = probe.value(spec.point(i)); });
    return out;
}

/// Random perturbation generator: returns an unnormalized dim x dim matrix.
struct Ensemble {
    std::string name;
    std::function<Matrix(std::mt19937_64&, Index)> draw;
};

inline Ensemble ginibre_ensemble() {
    return {"ginibre_complex_gaussian", [](std::mt19937_64& rng, Index n) {
                std::normal_distribution<double> normal(0.0, 1.0);
                Matrix v(n, n);
                for (Index j = 0; j < n; ++j)
                    for (Index i = 0; i < n; ++i) v(i, j) = cplx(normal(rng), normal(rng));
                return v;
            }};
}

struct MonteCarloOptions {
    /// Absolute slack for the inclusion test; value(z) < eps + tolerance.
    /// Defaults to one grid-cell diagonal when a grid is given.
    std::optional<double> boundary_tolerance;
    std::optional<GridSpec> grid;
    unsigned threads = 1;
    bool keep_cloud = true;
};

struct MonteCarloReport {
    double epsilon = 0.0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    Regime regime = Regime::k_norm;
    std::string ensemble;
    double boundary_tolerance = 0.0;
    std::vector<cplx> eigenvalue_cloud;
    double inclusion_fraction = 0.0;
    double max_dist_to_spectrum = 0.0;
    double max_value_over_eps = 0.0;  // max sigma_min(z - M) / eps over the cloud
};

inline double distance_to_set(cplx z, const Vector& points) {
    double d = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < points.size(); ++k) d = std::min(d, std::abs(z - points(k)));
    return d;
}

/// Samples H0 + P with P = s V / norm(V), s ~ U(0, eps), V from the ensemble
/// and norm(.) the regime norm (||Omega V Omega^-1|| for theta_norm). Each
/// sample seeds its own engine from (seed, sample index).
inline MonteCarloReport roch_silberman_mc(const ComplexMatrix& h0, double epsilon, std::int64_t samples, Regime regime,
                                          const metric::MetricBundle* bundle, std::uint64_t seed,
                                          const MonteCarloOptions& opts = {},
                                          const Ensemble& ensemble = ginibre_ensemble()) {
    if (samples < 1) throw Error("pseudospec", ErrorCode::BadParams, "samples must be >= 1");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw Error("pseudospec", ErrorCode::BadParams, "epsilon must be > 0");

    const ResolventProbe probe(h0, regime, bundle);
    const Index n = h0.dim();
    const Vector spectrum = biortho::sorted_eigenvalues(h0);
    const Matrix* omega = nullptr;
    const Matrix* omega_inv = nullptr;
    if (regime == Regime::theta_norm) {
        omega = &bundle->omega().mat();
        omega_inv = &bundle->omega_inverse().mat();
    }

    MonteCarloReport rep;
    rep.epsilon = epsilon;
    rep.samples = samples;
    rep.seed = seed;
    rep.regime = regime;
    rep.ensemble = ensemble.name;
    rep.boundary_tolerance = opts.boundary_tolerance.value_or(opts.grid ? opts.grid->cell_diagonal() : 0.0);

    const auto total = static_cast<std::size_t>(samples) * static_cast<std::size_t>(n);
    std::vector<cplx> cloud(total);
    std::vector<double> values(total);
    detail::parallel_for(samples, opts.threads, [&](Index s) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(static_cast<std::uint64_t>(s) >> 32)};
        std::mt19937_64 rng(seq);
        const Matrix v = ensemble.draw(rng, n);
        const double norm = regime == Regime::k_norm ? Eigen::JacobiSVD<Matrix>(v).singularValues()(0)
                                                     : Eigen::JacobiSVD<Matrix>(*omega * v * *omega_inv).singularValues()(0);
        const double size = std::uniform_real_distribution<double>(0.0, epsilon)(rng);
        const Matrix perturbed = h0.mat() + (size / norm) * v;
        Eigen::ComplexEigenSolver<Matrix> es(perturbed, false);
        for (Index k = 0; k < n; ++k) {
            const auto slot = static_cast<std::size_t>(s * n + k);
            cloud[slot] = es.eigenvalues()(k);
            values[slot] = probe.value(cloud[slot]);
        }
    });

    std::size_t included = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (values[i] < epsilon + rep.boundary_tolerance) ++included;
        rep.max_dist_to_spectrum = std::max(rep.max_dist_to_spectrum, distance_to_set(cloud[i], spectrum));
        rep.max_value_over_eps = std::max(rep.max_value_over_eps, values[i] / epsilon);
    }
    rep.inclusion_fraction = static_cast<double>(included) / static_cast<double>(total);
    if (opts.keep_cloud) rep.eigenvalue_cloud = std::move(cloud);
    return rep;
}

/// Grid enclosing every eps-pseudospectrum for eps <= max_eps: the spectrum's
/// bounding box padded by max_eps times the eigenvector condition number
/// (Bauer-Fike), which bounds the regime's sublevel sets.
inline GridSpec enclosing_grid(const ComplexMatrix& h, Regime regime, const metric::MetricBundle* bundle,
                               double max_eps, Index resolution = 201) {
    const Matrix& m = regime == Regime::k_norm ? h.mat() : detail::require_bundle(h, bundle).hermitized().mat();
    Eigen::ComplexEigenSolver<Matrix> es(m);
    const double kappa = condition_number(es.eigenvectors());
    const Vector& ev = es.eigenvalues();
    const double pad = 1.25 * max_eps * kappa;
    return GridSpec(ev.real().minCoeff() - pad, ev.real().maxCoeff() + pad, ev.imag().minCoeff() - pad,
                    ev.imag().maxCoeff() + pad, resolution, resolution);
}

struct TrivialityFit {
    double constant = 0.0;          // sup over eps of max-distance / eps
    std::vector<double> per_epsilon;
};

/// Fits the constant c in sigma_eps(H) within {dist(z, sigma(H)) < c eps}
/// from the grid points of each eps-sublevel set.
inline TrivialityFit triviality_constant(const ComplexMatrix& h0, const metric::MetricBundle* bundle,
                                         const std::vector<double>& epsilons, Regime regime = Regime::theta_norm,
                                         std::optional<GridSpec> grid = std::nullopt, unsigned threads = 1) {
    if (epsilons.empty()) throw Error("pseudospec", ErrorCode::BadParams, "epsilon list is empty");
    if (regime == Regime::theta_norm) detail::require_bundle(h0, bundle);
    const double max_eps = *std::max_element(epsilons.begin(), epsilons.end());
    const GridSpec g = grid.value_or(enclosing_grid(h0, regime, bundle, max_eps));
    const auto ps = pseudospectrum(h0, g, regime, bundle, threads);
    const Vector spectrum = biortho::sorted_eigenvalues(h0);

    TrivialityFit fit;
    for (double eps : epsilons) {
        if (!(eps > 0.0)) throw Error("pseudospec", ErrorCode::BadParams, "epsilons must be > 0");
        double worst = 0.0;
        for (Index i = 0; i < g.size(); ++i)
            if (ps.values[static_cast<std::size_t>(i)] < eps) worst = std::max(worst, distance_to_set(g.point(i), spectrum));
        fit.per_epsilon.push_back(worst / eps);
        fit.constant = std::max(fit.constant, worst / eps);
    }
    return fit;
}

}  // namespace qhqm::pseudospec
