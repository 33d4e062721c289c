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

#pragma once

// su(2) representations, the Bose-Hubbard dimer and spin-coherent states.
//
// Basis convention shared by the whole library: the J_z eigenbasis ordered
// by descending m, so index 0 is |j, m = j> (all particles in well 1).

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "qcnoise/core.hpp"

namespace qcnoise {

/// Irreducible spin-j representation, j = two_j / 2.
struct SpinRep {
    int two_j = 0;
    int dim = 1;
    CMatrix jx, jy, jz;

    double j() const { return 0.5 * two_j; }
    /// Magnetic quantum number of basis index i.
    double m(int i) const { return j() - i; }
    double casimir() const { return j() * (j() + 1.0); }
};

struct ModelParams {
    double delta = 15.0;  // hopping rate
    double u_int = 0.0;   // on-site interaction
    int two_j = 0;

    /// U = 2 delta / j, the strongly mixing regime used for the scaling studies.
    static ModelParams scaled_interaction(int two_j, double delta = 15.0) {
        if (two_j <= 0) throw std::invalid_argument("scaled_interaction: two_j must be positive");
        return ModelParams{delta, 2.0 * delta / (0.5 * two_j), two_j};
    }
};

struct QuantumState {
    CVector amplitudes;

    int dim() const { return static_cast<int>(amplitudes.size()); }

    static QuantumState normalized(CVector v) {
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw std::invalid_argument("QuantumState: vector has zero or non-finite norm");
        }
        v /= n;
        return QuantumState{std::move(v)};
    }

    static QuantumState basis(int dim, int index) {
        CVector v = CVector::Zero(dim);
        v[index] = 1.0;
        return QuantumState{std::move(v)};
    }
};

inline SpinRep build_spin_rep(int two_j) {
    if (two_j < 0) throw std::invalid_argument("build_spin_rep: two_j must be >= 0, got " + std::to_string(two_j));
    if (two_j + 1 > kMaxDim) {
        throw std::invalid_argument("build_spin_rep: dimension " + std::to_string(two_j + 1) +
                                    " exceeds the dense-storage cap " + std::to_string(kMaxDim));
    }
    SpinRep rep;
    rep.two_j = two_j;
    rep.dim = two_j + 1;
    const int n = rep.dim;
    const double j = rep.j();

    CMatrix jp = CMatrix::Zero(n, n);  // J+ raises m, i.e. lowers the index
    for (int i = 1; i < n; ++i) {
        const double m = rep.m(i);
        jp(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const CMatrix jm = jp.adjoint();
    rep.jx = 0.5 * (jp + jm);
    rep.jy = (jp - jm) / (2.0 * kI);
    rep.jz = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) rep.jz(i, i) = rep.m(i);
    return rep;
}

namespace detail {

inline void check_model(const ModelParams& params, const SpinRep& rep) {
    if (params.two_j != rep.two_j) {
        throw std::invalid_argument("model/rep mismatch: params.two_j = " + std::to_string(params.two_j) +
                                    ", rep.two_j = " + std::to_string(rep.two_j));
    }
    if (!std::isfinite(params.delta) || !std::isfinite(params.u_int)) {
        throw std::invalid_argument("model parameters must be finite");
    }
}

}  // namespace detail

/// H0 = -2 delta J_x + U J_z^2 in tridiagonal form.
inline Tridiagonal drift_tridiagonal(const ModelParams& params, const SpinRep& rep) {
    detail::check_model(params, rep);
    Tridiagonal h;
    h.diag.resize(rep.dim);
    h.off.resize(std::max(rep.dim - 1, 0));
    for (int i = 0; i < rep.dim; ++i) h.diag[i] = params.u_int * rep.m(i) * rep.m(i);
    for (int i = 0; i + 1 < rep.dim; ++i) h.off[i] = -2.0 * params.delta * rep.jx(i, i + 1).real();
    return h;
}

/// Dense drift Hamiltonian H0 = -2 delta J_x + U J_z^2.
inline CMatrix build_drift(const ModelParams& params, const SpinRep& rep) {
    detail::check_model(params, rep);
    return -2.0 * params.delta * rep.jx + params.u_int * rep.jz * rep.jz;
}

/// Fixed-N sector of -delta (a1^+ a2 + a2^+ a1) + U/2 [n1^2 + n2^2].
/// Basis ordered by n1 = N, N-1, ..., 0, matching descending m = n1 - N/2.
inline CMatrix build_bose_hubbard(int n_particles, double delta, double u_int) {
    if (n_particles < 1) throw std::invalid_argument("build_bose_hubbard: need at least one particle");
    const int n = n_particles + 1;
    CMatrix h = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double n1 = n_particles - i;
        const double n2 = i;
        h(i, i) = 0.5 * u_int * (n1 * n1 + n2 * n2);
    }
    // a1^+ a2 |n1, n2> = sqrt((n1 + 1) n2) |n1 + 1, n2 - 1>, i.e. index i -> i - 1.
    for (int i = 1; i < n; ++i) {
        const double n1 = n_particles - i;
        const double n2 = i;
        const double amp = -delta * std::sqrt((n1 + 1.0) * n2);
        h(i - 1, i) = amp;
        h(i, i - 1) = amp;
    }
    return h;
}

/// Unitary exp(-i t H) for a Hermitian H via eigendecomposition.
inline CMatrix hermitian_exp(const CMatrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    if (es.info() != Eigen::Success) throw PropagationError("hermitian_exp: eigendecomposition failed");
    const RVector& w = es.eigenvalues();
    CVector phase(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) phase[k] = std::exp(-kI * (w[k] * t));
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

/// Spin-coherent state pointing along (sin th cos ph, sin th sin ph, cos th):
/// |j, j> rotated by exp(-i th (J_y cos ph - J_x sin ph)).
inline QuantumState scs_state(const SpinRep& rep, double theta, double phi) {
    QuantumState top = QuantumState::basis(rep.dim, 0);
    if (theta == 0.0) return top;
    const CMatrix gen = rep.jy * std::cos(phi) - rep.jx * std::sin(phi);
    CVector v = hermitian_exp(gen, theta) * top.amplitudes;
    return QuantumState::normalized(std::move(v));
}

}  // namespace qcnoise
