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

#include "qcnoise/control.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qcnoise;

TEST(RandomField, StartsAtZeroAndIsReproducible) {
    const ControlField a = random_field(10.0, 200, 10000, 7);
    const ControlField b = random_field(10.0, 200, 10000, 7);
    const ControlField c = random_field(10.0, 200, 10000, 8);
    EXPECT_EQ(a.samples.front(), 0.0);
    EXPECT_TRUE(a.samples == b.samples);
    EXPECT_FALSE(a.samples == c.samples);
    EXPECT_EQ(a.samples.size(), 10001u);
}

TEST(RandomField, CoefficientsInUnitInterval) {
    for (double v : random_field_coefficients(500, 3)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_THROW(random_field_coefficients(0, 3), std::invalid_argument);
}

TEST(RandomField, ZeroCoefficientsGiveZeroField) {
    const ControlField f = random_field_from_coefficients(10.0, std::vector<double>(200, 0.0), 1000);
    for (double v : f.samples) EXPECT_EQ(v, 0.0);
}

TEST(RandomField, EnvelopeAtFinalTime) {
    // the mode sum vanishes at T itself, so compare the whole grid to the closed form
    const std::vector<double> a{0.3, 0.0, 0.7};
    const int n = 8;
    const ControlField f = random_field_from_coefficients(2.0, a, n);
    for (int i = 0; i <= n; ++i) {
        const double t = f.time(i);
        const double x = std::numbers::pi * t / 2.0;
        const double sum = 0.3 * std::sin(x) + 0.7 * std::sin(3.0 * x);
        EXPECT_NEAR(f.samples[static_cast<std::size_t>(i)], std::exp(-std::pow(5.0 * t / 2.0, 2)) * sum, 1e-15);
    }
    EXPECT_NEAR(std::exp(-25.0), 1.3887943864964021e-11, 1e-24);
}

TEST(MakeTarget, EigenstateUnderZeroField) {
    const int two_j = 10;
    const SpinRep r = build_spin_rep(two_j);
    const ModelParams p = ModelParams::scaled_interaction(two_j);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(build_drift(p, r));
    const QuantumState psi{es.eigenvectors().col(0)};
    const QuantumState t = make_target(psi, ControlField::zeros(10.0, 1000), r, p);
    EXPECT_NEAR(overlap2(psi, t), 1.0, 1e-10);
    EXPECT_NEAR(t.amplitudes.norm(), 1.0, 1e-10);
}

TEST(MakeTarget, RandomFieldTargetIsNotCoherent) {
    const int two_j = 40;
    const SpinRep r = build_spin_rep(two_j);
    const QuantumState t =
        make_target(scs_state(r, 0.0, 0.0), random_field(10.0, 200, 10000, 1), r, ModelParams::scaled_interaction(two_j));
    EXPECT_NEAR(t.amplitudes.norm(), 1.0, 1e-10);
    EXPECT_LT(generalized_purity(t, r), 0.9);
}

TEST(LocalControl, CandidatesOrderedByMagnitude) {
    const auto c = local_control_candidates(5, 2.0);
    EXPECT_EQ(c, (std::vector<double>{0.0, -1.0, 1.0, -2.0, 2.0}));
    EXPECT_EQ(local_control_candidates(41, 60.0).size(), 41u);
    EXPECT_EQ(local_control_candidates(1, 60.0), std::vector<double>{0.0});
}

TEST(LocalControl, LinearHamiltonianKeepsCoherence) {
    const int two_j = 20;
    const SpinRep r = build_spin_rep(two_j);
    const ModelParams p{15.0, 0.0, two_j};
    const LocalControlResult res = local_scs_control(scs_state(r, 0.0, 0.0), r, p, 10.0, 10000, 60.0);
    EXPECT_GE(res.min_generalized_purity, 1.0 - 1e-9);
    EXPECT_TRUE(res.purity_floor_met);
    StateTrajectory tr = propagate_deterministic(scs_state(r, 0.0, 0.0), res.field, r, p);
    for (const auto& s : tr.states) EXPECT_GE(generalized_purity(s, r), 1.0 - 1e-9);
}

TEST(LocalControl, KeepsPurityHighWithInteraction) {
    const int two_j = 20;
    const SpinRep r = build_spin_rep(two_j);
    const ModelParams p = ModelParams::scaled_interaction(two_j);
    const LocalControlResult res = local_scs_control(scs_state(r, 0.0, 0.0), r, p, 10.0, 10000, 60.0);
    EXPECT_TRUE(res.purity_floor_met);
    EXPECT_GE(res.min_generalized_purity, 0.9);
    EXPECT_EQ(res.field.n_steps, 10000);
    EXPECT_EQ(res.field.t_final, 10.0);
    for (double u : res.field.samples) EXPECT_LE(std::abs(u), 60.0);
    // the reported minimum is that of the actual trajectory
    double worst = 1.0;
    propagate_deterministic(scs_state(r, 0.0, 0.0), res.field, r, p, {},
                            [&](int, const CVector& psi) { worst = std::min(worst, generalized_purity_fast(psi, r)); });
    EXPECT_NEAR(worst, res.min_generalized_purity, 1e-8);
}

TEST(LocalControl, CachedAndUncachedLookaheadAgree) {
    const int two_j = 10;
    const SpinRep r = build_spin_rep(two_j);
    const ModelParams p = ModelParams::scaled_interaction(two_j);
    LocalControlOptions cached, direct;
    direct.cache_bytes = 0;
    const auto a = local_scs_control(scs_state(r, 0.0, 0.0), r, p, 2.0, 2000, 60.0, cached);
    const auto b = local_scs_control(scs_state(r, 0.0, 0.0), r, p, 2.0, 2000, 60.0, direct);
    std::size_t differ = 0;
    for (std::size_t k = 0; k < a.field.samples.size(); ++k) differ += a.field.samples[k] != b.field.samples[k];
    EXPECT_EQ(differ, 0u);
    EXPECT_NEAR(a.min_generalized_purity, b.min_generalized_purity, 1e-9);
}

TEST(LocalControl, RejectsBadArguments) {
    const SpinRep r = build_spin_rep(4);
    const ModelParams p = ModelParams::scaled_interaction(4);
    EXPECT_THROW(local_scs_control(scs_state(r, 0, 0), r, p, 1.0, 100, 0.0), std::invalid_argument);
    LocalControlOptions o;
    o.horizon_steps = 0;
    EXPECT_THROW(local_scs_control(scs_state(r, 0, 0), r, p, 1.0, 100, 1.0, o), std::invalid_argument);
}

TEST(FieldIo, RoundTrip) {
    const ControlField f = random_field(10.0, 50, 500, 11);
    std::stringstream ss;
    write_field(ss, f, FieldHeader{"random", 11, {{"n_modes", "50"}}});
    FieldHeader h;
    const ControlField g = read_field(ss, &h);
    EXPECT_EQ(g.n_steps, 500);
    EXPECT_EQ(g.t_final, 10.0);
    EXPECT_TRUE(g.samples == f.samples);
    EXPECT_EQ(h.generator, "random");
    EXPECT_EQ(h.seed, 11u);
    EXPECT_EQ(h.params.at("n_modes"), "50");
}

TEST(FieldIo, MalformedRowsAreRejected) {
    std::stringstream bad("# n_steps: 2\n0 0\n0.5 x\n1 0\n");
    EXPECT_THROW(read_field(bad), std::runtime_error);
    std::stringstream short_file("# n_steps: 3\n0 0\n0.5 1\n1 0\n");
    EXPECT_THROW(read_field(short_file), std::invalid_argument);
    std::stringstream uneven("0 0\n0.2 1\n1 0\n");
    EXPECT_THROW(read_field(uneven), std::runtime_error);
}
