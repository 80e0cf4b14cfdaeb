#include <cmath>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "qhqm/metric.hpp"
#include "qhqm/models.hpp"
#include "test_support.hpp"

using namespace qhqm;
using models::ModelName;
using models::ModelSpec;

TEST(Models, PtHermitianLimit) {
    const auto h = models::pt2x2(0.0);
    Matrix expected(2, 2);
    expected << 0.0, 1.0, 1.0, 0.0;
    EXPECT_EQ(h.mat(), expected);
    const auto ev = biortho::sorted_eigenvalues(h);
    EXPECT_NEAR(std::abs(ev(0) + 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(ev(1) - 1.0), 0.0, 1e-15);
    test::expect_error(ErrorCode::BadParams, [] { models::pt2x2(-0.1); });
}

TEST(Models, PtClosedFormSpectrumAndMetricCondition) {
    for (double g : {0.0, 0.1, 0.5, 0.9, 0.99}) {
        const auto ev = biortho::sorted_eigenvalues(models::pt2x2(g));
        const double e = std::sqrt(1.0 - g * g);
        EXPECT_NEAR(std::abs(ev(0) + e), 0.0, 1e-12) << g;
        EXPECT_NEAR(std::abs(ev(1) - e), 0.0, 1e-12) << g;
    }
    double previous = 0.0;
    for (double g : {0.5, 0.9, 0.99}) {
        const auto bundle = metric::build_metric(biortho::decompose(models::pt2x2(g)));
        EXPECT_GT(bundle.condition(), previous) << g;
        previous = bundle.condition();
    }
}

TEST(Models, CubicBasisHarmonicLimit) {
    // -u'' + x^2/4 u = E u has E_n = n + 1/2.
    const auto h = models::cubic_oscillator_basis(5, 1.0, 0.0);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) EXPECT_EQ(h(i, j), i == j ? cplx(double(i) + 0.5, 0.0) : cplx(0.0));

    const auto h2 = models::cubic_oscillator_basis(6, 2.5, 0.0);
    for (Index i = 0; i < 6; ++i) EXPECT_NEAR(std::abs(h2(i, i) - 2.5 * (double(i) + 0.5)), 0.0, 1e-15);
}

TEST(Models, CubicBasisBandwidthAndCubeEntries) {
    const auto h = models::cubic_oscillator_basis(12, 1.0, 0.3);
    for (Index i = 0; i < 12; ++i)
        for (Index j = 0; j < 12; ++j) {
            if (std::abs(i - j) > 3) {
                EXPECT_EQ(h(i, j), cplx(0.0));
            }
        }
    // (a + a^dagger)^3 |0> = 3|1> + sqrt(6)|3>.
    EXPECT_NEAR(std::abs(h(1, 0) - cplx(0.0, 0.3 * 3.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h(3, 0) - cplx(0.0, 0.3 * std::sqrt(6.0))), 0.0, 1e-15);
    // The last row is exact, not clipped: <M-1|x^3|M-2> includes paths through M.
    const auto wide = models::cubic_oscillator_basis(20, 1.0, 0.3);
    EXPECT_NEAR(std::abs(h(11, 10) - wide(11, 10)), 0.0, 1e-13);
}

TEST(Models, CubicScalingMatchesFiniteDifference) {
    // Ladder scaling check against an independent discretization at f != 1.
    const double f = 2.0, g = 0.02;
    const auto basis = biortho::sorted_eigenvalues(models::cubic_oscillator_basis(80, f, g));
    const auto fd = models::discrete_cubic_fd_tridiagonal(3000, 10.0, f, g);
    const cplx fd0 = models::tridiagonal_eigenvalue_near(fd, basis(0));
    EXPECT_NEAR(std::abs(fd0 - basis(0)), 0.0, 1e-5);
}

TEST(Models, FiniteDifferenceHarmonicGroundState) {
    const auto h = models::discrete_cubic_fd(400, 12.0, 1.0, 0.0);
    const auto ev = biortho::sorted_eigenvalues(h);
    EXPECT_NEAR(ev(0).real(), 0.5, 1e-4);
    EXPECT_NEAR(ev(0).imag(), 0.0, 1e-12);
    const auto tri = models::discrete_cubic_fd_tridiagonal(400, 12.0, 1.0, 0.0);
    EXPECT_NEAR(std::abs(models::tridiagonal_eigenvalue_near(tri, 0.4) - ev(0)), 0.0, 1e-11);
}

TEST(Models, FiniteDifferenceCubicLowLevelsReal) {
    const auto ev = biortho::sorted_eigenvalues(models::discrete_cubic_fd(240, 8.0, 1.0, 0.04));
    for (Index k = 0; k < 5; ++k) EXPECT_LE(std::abs(ev(k).imag()), 1e-6) << k;
}

TEST(Models, DysonGeneratedGroundTruth) {
    for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
        const auto d = models::dyson_generated(seed, 7);
        EXPECT_LE(condition_number(d.omega.mat()), 100.0 * (1 + 1e-12));
        EXPECT_LT((d.omega.mat() * d.hamiltonian.mat() - d.h.mat() * d.omega.mat()).norm(), 1e-12 * d.h.frobenius() * 10);
        const auto ev = biortho::sorted_eigenvalues(d.hamiltonian);
        for (Index k = 0; k < 7; ++k) EXPECT_NEAR(std::abs(ev(k) - d.h(k, k)), 0.0, 1e-10);
        const auto b = metric::build_metric(biortho::decompose(d.hamiltonian));
        EXPECT_LE(b.residuals().quasi_hermiticity, 1e-10);
        // The seed's own Dyson map yields a metric too.
        const Matrix theta = d.omega.mat().adjoint() * d.omega.mat();
        EXPECT_LE(metric::check_quasi_hermiticity(d.hamiltonian, ComplexMatrix(theta)), 1e-10);
    }
    const auto a = models::dyson_generated(5, 6), b = models::dyson_generated(5, 6);
    EXPECT_EQ(a.hamiltonian.mat(), b.hamiltonian.mat());
}

TEST(Models, BuildFromSpec) {
    EXPECT_EQ(models::build(ModelSpec{ModelName::pt2x2, {{"g", 0.3}}}).mat(), models::pt2x2(0.3).mat());
    EXPECT_EQ(models::build(ModelSpec{ModelName::dyson_generated, {{"seed", 4}, {"dim", 5}}}).dim(), 5);
    EXPECT_EQ(models::build(ModelSpec{ModelName::cubic_oscillator_basis, {{"M", 9}}}).dim(), 9);
    EXPECT_EQ(models::build(ModelSpec{ModelName::discrete_cubic_fd, {{"N", 30}, {"L", 5}}}).dim(), 30);
    test::expect_error(ErrorCode::BadParams,
                       [] { models::build(ModelSpec{ModelName::discrete_cubic_fd, {{"N", 1}}}); });
    test::expect_error(ErrorCode::BadParams,
                       [] { models::build(ModelSpec{ModelName::discrete_cubic_fd, {{"L", -1}}}); });
    test::expect_error(ErrorCode::BadParams,
                       [] { models::build(ModelSpec{ModelName::cubic_oscillator_basis, {{"f", 0}}}); });
    test::expect_error(ErrorCode::BadParams,
                       [] { models::build(ModelSpec{ModelName::cubic_oscillator_basis, {{"M", 4.5}}}); });
    test::expect_error(ErrorCode::BadParams, [] { models::model_name_from_string("cubic"); });
}

TEST(Models, PerturbationSplitIsAffine) {
    const ModelSpec spec{ModelName::cubic_oscillator_basis, {{"M", 10}, {"g", 0.7}}};
    const auto [h0, v] = models::perturbation_split(spec);
    EXPECT_LT((h0.mat() + 0.7 * v.mat() - models::build(spec).mat()).norm(), 1e-14);
}

TEST(Models, ContinuationTracksPtBranch) {
    std::vector<double> gs;
    for (int i = 0; i <= 90; ++i) gs.push_back(0.01 * i);
    const auto branch = models::continuation_track([](double g) { return models::pt2x2(g); }, gs, 0);
    ASSERT_EQ(branch.size(), gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i)
        EXPECT_NEAR(std::abs(branch[i] + std::sqrt(1.0 - gs[i] * gs[i])), 0.0, 1e-12);
}

TEST(Models, ContinuationConstantFamily) {
    const auto fixed = ComplexMatrix::diagonal({-1.0, 3.0, 7.0});
    const auto branch = models::continuation_track([&](double) { return fixed; }, {0.0, 0.5, 1.0, 2.0}, 1);
    for (const auto& e : branch) EXPECT_EQ(e, cplx(3.0));
}

TEST(Models, ContinuationCollidesAtExceptionalPoint) {
    std::vector<double> gs;
    for (int i = 0; i <= 120; ++i) gs.push_back(0.01 * i);
    test::expect_error(ErrorCode::BranchCollision, [&] {
        models::continuation_track([](double g) { return models::pt2x2(g); }, gs, 0);
    });
    // Collision is reported near g = 1, not earlier.
    std::vector<double> before(gs.begin(), gs.begin() + 98);
    EXPECT_NO_THROW(models::continuation_track([](double g) { return models::pt2x2(g); }, before, 0));
}
