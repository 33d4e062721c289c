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

#include "qcnoise/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace qcnoise;
using qcnoise::testutil::random_hermitian;
using qcnoise::testutil::random_state;

TEST(Purity, PureAndMixed) {
    std::mt19937_64 rng(1);
    EXPECT_NEAR(purity(DensityMatrix::pure(random_state(7, rng))), 1.0, 1e-14);
    EXPECT_NEAR(purity(DensityMatrix::maximally_mixed(5)), 0.2, 1e-15);
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 0.75;
    m(1, 1) = 0.25;
    EXPECT_NEAR(purity(DensityMatrix{m}), 0.625, 1e-15);
}

TEST(Fidelity, Examples) {
    const QuantumState a = QuantumState::basis(3, 0);
    const QuantumState b = QuantumState::normalized(CVector::Ones(3));
    EXPECT_NEAR(fidelity(DensityMatrix::pure(a), a), 1.0, 1e-15);
    EXPECT_NEAR(fidelity(DensityMatrix::pure(a), b), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(fidelity(DensityMatrix::maximally_mixed(3), b), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(overlap2(a, b), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(fidelity(DensityMatrix::maximally_mixed(2), b), std::invalid_argument);
}

TEST(Variance, DiagonalMatchesDense) {
    std::mt19937_64 rng(2);
    const SpinRep r = build_spin_rep(9);
    const QuantumState psi = random_state(r.dim, rng);
    const RVector x = control_diagonal(r);
    EXPECT_NEAR(variance_diagonal(psi.amplitudes, x), variance(psi, control_operator(r)), 1e-12);
    EXPECT_NEAR(variance(QuantumState::basis(r.dim, 3), r.jz), 0.0, 1e-14);
}

TEST(SpinExpectations, FastMatchesDense) {
    std::mt19937_64 rng(3);
    for (int tj : {1, 2, 7, 30}) {
        const SpinRep r = build_spin_rep(tj);
        const QuantumState psi = random_state(r.dim, rng);
        EXPECT_LE((spin_expectations(psi, r) - spin_expectations_fast(psi.amplitudes, r)).norm(), 1e-12);
        EXPECT_NEAR(generalized_purity(psi, r), generalized_purity_fast(psi.amplitudes, r), 1e-12);
    }
}

TEST(GeneralizedPurity, CoherentStatesArePure) {
    const SpinRep r = build_spin_rep(20);
    for (double th : {0.0, 0.4, 1.3, 2.9}) {
        const QuantumState s = scs_state(r, th, 0.7);
        EXPECT_NEAR(generalized_purity(s, r), 1.0, 1e-12);
        EXPECT_NEAR(total_uncertainty(s, r), r.j(), 1e-10);
    }
}

TEST(GeneralizedPurity, DickeStates) {
    const SpinRep r = build_spin_rep(10);  // j = 5
    for (int i = 0; i < r.dim; ++i) {
        const double m = r.m(i);
        const QuantumState d = QuantumState::basis(r.dim, i);
        EXPECT_NEAR(generalized_purity(d, r), m * m / 25.0, 1e-14);
        EXPECT_NEAR(total_uncertainty(d, r), 30.0 - m * m, 1e-12);
    }
    EXPECT_THROW(generalized_purity(QuantumState::basis(1, 0), build_spin_rep(0)), std::invalid_argument);
}

TEST(GeneralizedPurity, BoundedByOne) {
    std::mt19937_64 rng(4);
    const SpinRep r = build_spin_rep(12);
    for (int k = 0; k < 50; ++k) {
        const double gp = generalized_purity(random_state(r.dim, rng), r);
        EXPECT_GE(gp, 0.0);
        EXPECT_LE(gp, 1.0 + 1e-12);
    }
}

TEST(PurityLossRate, MatchesLindbladDerivative) {
    std::mt19937_64 rng(5);
    const int two_j = 8;
    const SpinRep r = build_spin_rep(two_j);
    const ModelParams p = ModelParams::scaled_interaction(two_j);
    const QuantumState psi = random_state(r.dim, rng);
    const double gamma = 0.05;
    const double rate = purity_loss_rate(psi, {DephasingChannel{gamma, control_operator(r)}});
    EXPECT_NEAR(rate, 4.0 * gamma * variance_diagonal(psi.amplitudes, control_diagonal(r)), 1e-12);

    // short forward run, Richardson-extrapolated to h -> 0
    auto loss_after = [&](double h) {
        LindbladOptions lo;
        lo.stride = 1;
        const auto tr = propagate_lindblad(DensityMatrix::pure(psi), ControlField::constant(h, 1, 0.0),
                                           NoiseSpec{gamma, 0.0}, r, p, lo);
        return (1.0 - purity(tr.back())) / h;
    };
    const double h = 1e-4;
    const double est = 2.0 * loss_after(h) - loss_after(2.0 * h);
    EXPECT_NEAR(est / rate, 1.0, 0.01);
}

TEST(PurityLossRate, ZeroForEigenstatesOfTheChannel) {
    const SpinRep r = build_spin_rep(6);
    EXPECT_EQ(purity_loss_rate(QuantumState::basis(r.dim, 2), {DephasingChannel{0.3, control_operator(r)}}), 0.0);
}

TEST(QuasiDistance, IdenticalStatesGiveZero) {
    std::mt19937_64 rng(6);
    const SpinRep r = build_spin_rep(10);
    const CMatrix h0 = build_drift(ModelParams::scaled_interaction(10), r);
    const QuantumState psi = random_state(r.dim, rng);
    const auto q = quasi_distance(psi, psi, h0);
    EXPECT_LE(q.norm, 1e-13);
    EXPECT_NEAR(q.r_i.squaredNorm(), 1.0, 1e-12);
}

TEST(QuasiDistance, InvariantUnderFreeEvolution) {
    std::mt19937_64 rng(7);
    const SpinRep r = build_spin_rep(10);
    const CMatrix h0 = build_drift(ModelParams::scaled_interaction(10), r);
    const QuantumState psi = random_state(r.dim, rng);
    const QuantumState moved{hermitian_exp(h0, 3.7) * psi.amplitudes};
    EXPECT_LE(quasi_distance(psi, moved, h0).norm, 1e-11);
}

TEST(QuasiDistance, EigenstatesByHand) {
    // H0 = diag(1, 2): basis states are eigenstates
    CMatrix h0 = CMatrix::Zero(2, 2);
    h0(0, 0) = 1.0;
    h0(1, 1) = 2.0;
    const auto q = quasi_distance(QuantumState::basis(2, 0), QuantumState::basis(2, 1), h0);
    EXPECT_NEAR(q.norm, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(q.delta_r[0], -1.0, 1e-15);
    EXPECT_NEAR(q.delta_r[1], 1.0, 1e-15);
}

TEST(QuasiDistance, AOperatorBound) {
    std::mt19937_64 rng(8);
    const SpinRep r = build_spin_rep(12);
    const CMatrix h0 = build_drift(ModelParams::scaled_interaction(12), r);
    for (int k = 0; k < 20; ++k) {
        const QuantumState a = random_state(r.dim, rng);
        const QuantumState b = random_state(r.dim, rng);
        const auto q = quasi_distance(a, b, h0);
        const CMatrix A = build_A_operator(q, h0);
        EXPECT_LE((A * A - CMatrix::Identity(r.dim, r.dim)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_GE(expectation(b, A) - expectation(a, A), q.norm * q.norm - 1e-10);
    }
}

TEST(CanonicalEigenbasis, DeterministicForDegenerateSpectrum) {
    // J_z^2 is doubly degenerate for +-m
    const SpinRep r = build_spin_rep(6);
    const CMatrix h = r.jz * r.jz;
    const Eigenbasis a = canonical_eigenbasis(h);
    const Eigenbasis b = canonical_eigenbasis(h);
    EXPECT_TRUE(a.vectors == b.vectors);
    for (int c = 0; c < r.dim; ++c) {
        Eigen::Index idx = 0;
        a.vectors.col(c).cwiseAbs().maxCoeff(&idx);
        EXPECT_GT(a.vectors(idx, c).real(), 0.0);
        EXPECT_NEAR(a.vectors(idx, c).imag(), 0.0, 1e-15);
    }
    // leading index increases within each degenerate pair
    for (int c = 1; c < r.dim; ++c) {
        if (std::abs(a.values[c] - a.values[c - 1]) < 1e-9) {
            Eigen::Index i0 = 0, i1 = 0;
            a.vectors.col(c - 1).cwiseAbs().maxCoeff(&i0);
            a.vectors.col(c).cwiseAbs().maxCoeff(&i1);
            EXPECT_LT(i0, i1);
        }
    }
}

TEST(TraceDistance, Examples) {
    const DensityMatrix a = DensityMatrix::pure(QuantumState::basis(2, 0));
    const DensityMatrix b = DensityMatrix::pure(QuantumState::basis(2, 1));
    EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-15);
    EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
    EXPECT_NEAR(trace_distance(a, DensityMatrix::maximally_mixed(2)), 0.5, 1e-15);
}
