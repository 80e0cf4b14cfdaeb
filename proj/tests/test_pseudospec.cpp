#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qhqm/metric.hpp"
#include "qhqm/models.hpp"
#include "qhqm/pseudospec.hpp"
#include "test_support.hpp"

using namespace qhqm;
using pseudospec::GridSpec;
using pseudospec::Regime;

TEST(Pseudospec, HermitianDiagonalValues) {
    const auto h = ComplexMatrix::diagonal({0.0, 2.0});
    const pseudospec::ResolventProbe probe(h, Regime::k_norm, nullptr);
    EXPECT_NEAR(probe.value(1.0), 1.0, 1e-15);
    EXPECT_NEAR(probe.value(cplx(0.0, 0.5)), 0.5, 1e-15);
    EXPECT_NEAR(probe.value(cplx(3.0, 0.0)), 1.0, 1e-15);
}

TEST(Pseudospec, NonNormalJordanBlock) {
    Matrix m(2, 2);
    m << 0.0, 100.0, 0.0, 0.0;
    const pseudospec::ResolventProbe probe(ComplexMatrix(m), Regime::k_norm, nullptr);
    // sigma_min(z - J) ~ |z|^2 / 100 for |z| << 100.
    EXPECT_NEAR(probe.value(0.1), 1e-4, 1e-8);
}

TEST(Pseudospec, GridLayoutAndValidation) {
    const GridSpec g(-1.0, 1.0, 0.0, 2.0, 3, 5);
    EXPECT_EQ(g.size(), 15);
    EXPECT_EQ(g.point(0), cplx(-1.0, 0.0));
    EXPECT_EQ(g.point(2), cplx(1.0, 0.0));
    EXPECT_EQ(g.point(3), cplx(-1.0, 0.5));
    EXPECT_EQ(g.point(14), cplx(1.0, 2.0));
    EXPECT_DOUBLE_EQ(g.cell_area(), 0.5);
    test::expect_error(ErrorCode::BadParams, [] { GridSpec(0.0, 1.0, 0.0, 1.0, 1, 5); });
    test::expect_error(ErrorCode::BadParams, [] { GridSpec(1.0, 0.0, 0.0, 1.0, 5, 5); });
    test::expect_error(ErrorCode::BadParams, [] { GridSpec(0.0, 1.0, 0.0, std::nan(""), 5, 5); });
}

TEST(Pseudospec, ThetaNormEqualsDistanceToSpectrum) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto d = models::dyson_generated(seed, 6);
        const auto bundle = metric::build_metric(biortho::decompose(d.hamiltonian));
        const auto spectrum = biortho::sorted_eigenvalues(d.hamiltonian);
        const GridSpec g(-0.5, 6.5, -1.5, 1.5, 21, 11);
        const auto ps = pseudospec::pseudospectrum(d.hamiltonian, g, Regime::theta_norm, &bundle);
        for (Index i = 0; i < g.size(); ++i)
            EXPECT_NEAR(ps.values[static_cast<std::size_t>(i)], pseudospec::distance_to_set(g.point(i), spectrum), 1e-8);
    }
}

TEST(Pseudospec, ThreadCountDoesNotChangeValues) {
    const auto h = models::pt2x2(0.8);
    const GridSpec g(-2.0, 2.0, -1.0, 1.0, 17, 9);
    const auto a = pseudospec::pseudospectrum(h, g, Regime::k_norm, nullptr, 1);
    const auto b = pseudospec::pseudospectrum(h, g, Regime::k_norm, nullptr, 4);
    EXPECT_EQ(a.values, b.values);
}

TEST(Pseudospec, SublevelSetsAreNested) {
    const auto h = models::pt2x2(0.9);
    const GridSpec g(-2.0, 2.0, -1.5, 1.5, 41, 31);
    const auto ps = pseudospec::pseudospectrum(h, g, Regime::k_norm);
    double previous = 0.0;
    for (double eps : {0.01, 0.05, 0.1, 0.2, 0.4}) {
        const double area = ps.sublevel_area(eps);
        EXPECT_GE(area, previous) << eps;
        previous = area;
    }
}

TEST(Pseudospec, ThetaNormNeedsMatchingBundle) {
    const auto h = models::pt2x2(0.5);
    const GridSpec g(-1.0, 1.0, -1.0, 1.0, 3, 3);
    test::expect_error(ErrorCode::MissingMetric, [&] { pseudospec::pseudospectrum(h, g, Regime::theta_norm); });
    const auto other = metric::build_metric(biortho::decompose(models::pt2x2(0.4)));
    test::expect_error(ErrorCode::MissingMetric,
                       [&] { pseudospec::pseudospectrum(h, g, Regime::theta_norm, &other); });
    test::expect_error(ErrorCode::BadParams, [] { pseudospec::regime_from_string("theta"); });
}

TEST(MonteCarlo, TinyEpsilonCollapsesOntoSpectrum) {
    const auto h = models::pt2x2(0.5);
    const auto rep = pseudospec::roch_silberman_mc(h, 1e-12, 200, Regime::k_norm, nullptr, 7);
    EXPECT_LE(rep.max_dist_to_spectrum, 1e-9);
    EXPECT_EQ(rep.eigenvalue_cloud.size(), 400u);
}

TEST(MonteCarlo, HermitianCloudStaysInsideDisks) {
    const auto h = ComplexMatrix::diagonal({0.0, 2.0});
    const auto rep = pseudospec::roch_silberman_mc(h, 0.1, 10000, Regime::k_norm, nullptr, 3);
    EXPECT_EQ(rep.inclusion_fraction, 1.0);
    EXPECT_LE(rep.max_dist_to_spectrum, 0.1);
    EXPECT_LT(rep.max_value_over_eps, 1.0);
}

TEST(MonteCarlo, ThetaNormCloudBoundedByEpsilon) {
    const auto d = models::dyson_generated(4, 8);
    const auto bundle = metric::build_metric(biortho::decompose(d.hamiltonian));
    const double eps = 0.05;
    const auto rep = pseudospec::roch_silberman_mc(d.hamiltonian, eps, 2000, Regime::theta_norm, &bundle, 11);
    EXPECT_EQ(rep.inclusion_fraction, 1.0);
    EXPECT_LE(rep.max_dist_to_spectrum, 1.05 * eps);
}

TEST(MonteCarlo, DeterministicForSeedAndThreads) {
    const auto h = models::pt2x2(0.7);
    pseudospec::MonteCarloOptions one, four;
    four.threads = 4;
    const auto a = pseudospec::roch_silberman_mc(h, 0.05, 300, Regime::k_norm, nullptr, 99, one);
    const auto b = pseudospec::roch_silberman_mc(h, 0.05, 300, Regime::k_norm, nullptr, 99, four);
    EXPECT_EQ(a.eigenvalue_cloud, b.eigenvalue_cloud);
    const auto c = pseudospec::roch_silberman_mc(h, 0.05, 300, Regime::k_norm, nullptr, 100, one);
    EXPECT_NE(a.eigenvalue_cloud, c.eigenvalue_cloud);
}

TEST(MonteCarlo, RejectsBadArguments) {
    const auto h = models::pt2x2(0.5);
    test::expect_error(ErrorCode::BadParams, [&] { pseudospec::roch_silberman_mc(h, 0.0, 10, Regime::k_norm, nullptr, 1); });
    test::expect_error(ErrorCode::BadParams, [&] { pseudospec::roch_silberman_mc(h, 0.1, 0, Regime::k_norm, nullptr, 1); });
    test::expect_error(ErrorCode::MissingMetric,
                       [&] { pseudospec::roch_silberman_mc(h, 0.1, 10, Regime::theta_norm, nullptr, 1); });
}

TEST(Triviality, ThetaNormConstantIsOne) {
    const auto d = models::dyson_generated(6, 6);
    const auto bundle = metric::build_metric(biortho::decompose(d.hamiltonian));
    const auto fit = pseudospec::triviality_constant(d.hamiltonian, &bundle, {0.02, 0.05, 0.1});
    EXPECT_LE(fit.constant, 1.0 + 1e-8);
    EXPECT_GT(fit.constant, 0.9);
}

TEST(Triviality, HermitianKNormConstantIsOne) {
    std::mt19937_64 rng(8);
    const ComplexMatrix h(test::random_hermitian(rng, 5));
    const auto fit = pseudospec::triviality_constant(h, nullptr, {0.05, 0.1}, Regime::k_norm);
    EXPECT_LE(fit.constant, 1.0 + 1e-8);
    const auto bundle = metric::build_metric(biortho::decompose(h));
    const auto theta = pseudospec::triviality_constant(h, &bundle, {0.05, 0.1});
    EXPECT_NEAR(theta.constant, fit.constant, 1e-8);
}

TEST(Triviality, KNormConstantGrowsNearExceptionalPoint) {
    const auto fit = pseudospec::triviality_constant(models::pt2x2(0.9), nullptr, {0.05, 0.1}, Regime::k_norm);
    EXPECT_GT(fit.constant, 1.5);
}

TEST(Contrast, ExceptionalPointWidensKNormPseudospectra) {
    const GridSpec g(-2.0, 2.0, -1.5, 1.5, 81, 61);
    const double eps = 0.1;
    double previous_cond = 0.0;
    for (double gval : {0.5, 0.9, 0.99}) {
        const auto h = models::pt2x2(gval);
        const auto bundle = metric::build_metric(biortho::decompose(h));
        const double k_area = pseudospec::pseudospectrum(h, g, Regime::k_norm).sublevel_area(eps);
        const double t_area = pseudospec::pseudospectrum(h, g, Regime::theta_norm, &bundle).sublevel_area(eps);
        EXPECT_GT(k_area, t_area) << gval;
        EXPECT_GT(bundle.condition(), previous_cond) << gval;
        previous_cond = bundle.condition();
    }
}
