// Copyright 2026 The qcnoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qcnoise/algebra.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qcnoise/metrics.hpp"
#include "test_util.hpp"

using namespace qcnoise;

namespace {

RVector sorted_eigenvalues(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

}  // namespace

TEST(SpinRep, SpinHalfJz) {
    const SpinRep r = build_spin_rep(1);
    EXPECT_EQ(r.dim, 2);
    EXPECT_EQ(r.jz(0, 0), Complex(0.5, 0.0));
    EXPECT_EQ(r.jz(1, 1), Complex(-0.5, 0.0));
    EXPECT_EQ(r.jz(0, 1), Complex(0.0, 0.0));
}

TEST(SpinRep, SpinOneJxEntries) {
    const SpinRep r = build_spin_rep(2);
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(r.jx(i, i), Complex(0.0, 0.0));
    EXPECT_NEAR(std::abs(r.jx(0, 1) - s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r.jx(1, 2) - s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r.jx(1, 0) - s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r.jx(2, 1) - s), 0.0, 1e-15);
    EXPECT_EQ(r.jx(0, 2), Complex(0.0, 0.0));
}

TEST(SpinRep, SpinOneCasimir) {
    const SpinRep r = build_spin_rep(2);
    const CMatrix c = r.jx * r.jx + r.jy * r.jy + r.jz * r.jz;
    EXPECT_LE(max_abs_diff(c, 2.0 * CMatrix::Identity(3, 3)), 1e-14);
}

TEST(SpinRep, DescendingM) {
    const SpinRep r = build_spin_rep(7);
    for (int i = 0; i < r.dim; ++i) EXPECT_DOUBLE_EQ(r.jz(i, i).real(), 3.5 - i);
}

class SpinRepIdentities : public ::testing::TestWithParam<int> {};

TEST_P(SpinRepIdentities, CommutatorsCasimirHermiticity) {
    const int two_j = GetParam();
    const SpinRep r = build_spin_rep(two_j);
    // Entries of J_a J_b reach j^2 / 2; the commutator inherits their rounding.
    const double j = r.j();
    const double comm_tol = std::max(1e-12, 8.0 * std::numeric_limits<double>::epsilon() * j * (j + 1.0));
    EXPECT_LE(max_abs_diff(r.jx * r.jy - r.jy * r.jx, kI * r.jz), comm_tol);
    EXPECT_LE(max_abs_diff(r.jy * r.jz - r.jz * r.jy, kI * r.jx), comm_tol);
    EXPECT_LE(max_abs_diff(r.jz * r.jx - r.jx * r.jz, kI * r.jy), comm_tol);
    const CMatrix cas = r.jx * r.jx + r.jy * r.jy + r.jz * r.jz;
    EXPECT_LE(max_abs_diff(cas, r.casimir() * CMatrix::Identity(r.dim, r.dim)), 1e-10);
    EXPECT_LE(max_abs_diff(r.jx, r.jx.adjoint()), 1e-14);
    EXPECT_LE(max_abs_diff(r.jy, r.jy.adjoint()), 1e-14);
    EXPECT_LE(max_abs_diff(r.jz, r.jz.adjoint()), 1e-14);
}

INSTANTIATE_TEST_SUITE_P(Sizes, SpinRepIdentities, ::testing::Values(1, 2, 3, 10, 40, 400));

TEST(SpinRep, SmallSpinsMeetAbsoluteCommutatorTolerance) {
    for (int two_j : {1, 2, 3, 10, 40}) {
        const SpinRep r = build_spin_rep(two_j);
        EXPECT_LE(max_abs_diff(r.jx * r.jy - r.jy * r.jx, kI * r.jz), 1e-12) << "two_j=" << two_j;
    }
}

TEST(SpinRep, RejectsBadSizes) {
    EXPECT_THROW(build_spin_rep(-1), std::invalid_argument);
    EXPECT_THROW(build_spin_rep(kMaxDim), std::invalid_argument);
    EXPECT_NO_THROW(build_spin_rep(0));
}

TEST(Drift, SpinHalfEigenvalues) {
    const SpinRep r = build_spin_rep(1);
    const RVector w = sorted_eigenvalues(build_drift(ModelParams{15.0, 0.0, 1}, r));
    EXPECT_NEAR(w[0], -15.0, 1e-12);
    EXPECT_NEAR(w[1], 15.0, 1e-12);
}

TEST(Drift, ZeroHoppingIsDiagonal) {
    const SpinRep r = build_spin_rep(6);
    const CMatrix h = build_drift(ModelParams{0.0, 0.7, 6}, r);
    for (int a = 0; a < r.dim; ++a) {
        for (int b = 0; b < r.dim; ++b) {
            const double expect = a == b ? 0.7 * r.m(a) * r.m(a) : 0.0;
            EXPECT_NEAR(std::abs(h(a, b) - expect), 0.0, 1e-15);
        }
    }
}

TEST(Drift, TwentyParticlesIsHermitian) {
    const SpinRep r = build_spin_rep(40);
    const ModelParams p = ModelParams::scaled_interaction(40);
    EXPECT_DOUBLE_EQ(p.u_int, 1.5);
    const CMatrix h = build_drift(p, r);
    EXPECT_EQ(h.rows(), 41);
    EXPECT_EQ(h.cols(), 41);
    EXPECT_LE(max_abs_diff(h, h.adjoint()), 1e-14);
    EXPECT_LE(max_abs_diff(h, drift_tridiagonal(p, r).dense()), 1e-14);
}

TEST(Drift, RejectsMismatchedModel) {
    const SpinRep r = build_spin_rep(4);
    EXPECT_THROW(build_drift(ModelParams{15.0, 1.0, 6}, r), std::invalid_argument);
    EXPECT_THROW(build_drift(ModelParams{std::nan(""), 1.0, 4}, r), std::invalid_argument);
}

TEST(BoseHubbard, SingleParticle) {
    const CMatrix h = build_bose_hubbard(1, 15.0, 3.0);
    EXPECT_NEAR(std::abs(h(0, 0) - 1.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h(1, 1) - 1.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h(0, 1) + 15.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h(1, 0) + 15.0), 0.0, 1e-15);
}

TEST(BoseHubbard, NoHoppingTwoParticles) {
    const double u = 1.3;
    const CMatrix h = build_bose_hubbard(2, 0.0, u);
    EXPECT_NEAR(h(0, 0).real(), 2.0 * u, 1e-15);
    EXPECT_NEAR(h(1, 1).real(), u, 1e-15);
    EXPECT_NEAR(h(2, 2).real(), 2.0 * u, 1e-15);
    EXPECT_EQ((h - h.diagonal().asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BoseHubbard, SpectrumMatchesSu2AfterShift) {
    const double delta = 15.0;
    for (int n = 1; n <= 20; ++n) {
        const double u = 2.0 * delta / (0.5 * n);
        const RVector bh = sorted_eigenvalues(build_bose_hubbard(n, delta, u));
        const RVector su2 = sorted_eigenvalues(build_drift(ModelParams{delta, u, n}, build_spin_rep(n)));
        const double shift = u * n * n / 4.0;
        EXPECT_LE((bh - (su2.array() + shift).matrix()).cwiseAbs().maxCoeff(), 1e-10) << "N=" << n;
    }
}

TEST(BoseHubbard, RejectsEmptySector) { EXPECT_THROW(build_bose_hubbard(0, 1.0, 1.0), std::invalid_argument); }

TEST(Scs, ThetaZeroIsHighestWeight) {
    const SpinRep r = build_spin_rep(10);
    const QuantumState s = scs_state(r, 0.0, 1.234);
    EXPECT_EQ(s.amplitudes[0], Complex(1.0, 0.0));
    for (int i = 1; i < r.dim; ++i) EXPECT_EQ(s.amplitudes[i], Complex(0.0, 0.0));
    EXPECT_NEAR(variance(s, r.jz), 0.0, 1e-15);
    EXPECT_NEAR(total_uncertainty(s, r), 5.0, 1e-12);
}

TEST(Scs, RandomAnglesHaveUnitGeneralizedPurity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    for (int two_j : {1, 4, 9, 20}) {
        const SpinRep r = build_spin_rep(two_j);
        for (int k = 0; k < 25; ++k) {
            const double th = ang(rng), ph = ang(rng);
            const QuantumState s = scs_state(r, th, ph);
            EXPECT_NEAR(s.amplitudes.norm(), 1.0, 1e-12);
            const Eigen::Vector3d m = spin_expectations(s, r);
            EXPECT_NEAR(m.squaredNorm() / (r.j() * r.j()), 1.0, 1e-10);
            // Bloch direction
            EXPECT_NEAR(m[0], r.j() * std::sin(th) * std::cos(ph), 1e-10 * r.j());
            EXPECT_NEAR(m[1], r.j() * std::sin(th) * std::sin(ph), 1e-10 * r.j());
            EXPECT_NEAR(m[2], r.j() * std::cos(th), 1e-10 * r.j());
        }
    }
}

TEST(Scs, MatchesBinomialAmplitudes) {
    // |<j, m | theta, 0>| = sqrt(C(2j, j-m)) cos(th/2)^(j+m) sin(th/2)^(j-m)
    const SpinRep r = build_spin_rep(12);
    const double th = 0.9;
    const QuantumState s = scs_state(r, th, 0.0);
    for (int i = 0; i < r.dim; ++i) {
        const int k = i;  // j - m
        const double binom = std::tgamma(13.0) / (std::tgamma(k + 1.0) * std::tgamma(13.0 - k));
        const double expect = std::sqrt(binom) * std::pow(std::cos(th / 2), 12 - k) * std::pow(std::sin(th / 2), k);
        EXPECT_NEAR(std::abs(s.amplitudes[i]), expect, 1e-12);
    }
}

TEST(QuantumStateTest, NormalizedRejectsZero) {
    EXPECT_THROW(QuantumState::normalized(CVector::Zero(3)), std::invalid_argument);
}

TEST(HermitianExp, IsUnitary) {
    std::mt19937_64 rng(3);
    const CMatrix h = testutil::random_hermitian(6, rng);
    const CMatrix u = hermitian_exp(h, 0.37);
    EXPECT_LE(max_abs_diff(u * u.adjoint(), CMatrix::Identity(6, 6)), 1e-13);
    EXPECT_LE(max_abs_diff(hermitian_exp(h, 0.0), CMatrix::Identity(6, 6)), 1e-14);
}
