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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qcnoise/algebra.hpp"
#include "qcnoise/core.hpp"
#include "qcnoise/dynamics.hpp"

namespace qcnoise {

inline double purity(const DensityMatrix& rho) {
    // Tr rho^2 = sum |rho_ab|^2 for Hermitian rho
    return rho.matrix.cwiseAbs2().sum();
}

/// <psi_ref| rho |psi_ref>.
inline double fidelity(const DensityMatrix& rho, const QuantumState& psi_ref) {
    if (rho.dim() != psi_ref.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
    return psi_ref.amplitudes.dot(rho.matrix * psi_ref.amplitudes).real();
}

/// |<a|b>|^2 for pure states.
inline double overlap2(const QuantumState& a, const QuantumState& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("overlap2: dimension mismatch");
    return std::norm(a.amplitudes.dot(b.amplitudes));
}

inline double expectation(const QuantumState& psi, const CMatrix& op) {
    return psi.amplitudes.dot(op * psi.amplitudes).real();
}

/// <X^2> - <X>^2.
inline double variance(const QuantumState& psi, const CMatrix& x) {
    if (x.rows() != psi.dim()) throw std::invalid_argument("variance: dimension mismatch");
    const CVector xv = x * psi.amplitudes;
    const double mean = psi.amplitudes.dot(xv).real();
    return xv.squaredNorm() - mean * mean;
}

/// Variance of a diagonal operator; O(dim).
inline double variance_diagonal(const CVector& psi, const RVector& x) {
    const RVector p = psi.cwiseAbs2();
    const double mean = p.dot(x);
    return p.dot(x.cwiseProduct(x)) - mean * mean;
}

struct DephasingChannel {
    double rate;
    CMatrix op;
};

/// -d/dt Tr rho^2 at rho = |psi><psi|: 4 sum_k Gamma_k Var_{X_k}.
inline double purity_loss_rate(const QuantumState& psi, const std::vector<DephasingChannel>& channels) {
    double r = 0.0;
    for (const auto& c : channels) {
        if (c.rate == 0.0) continue;
        r += 4.0 * c.rate * variance(psi, c.op);
    }
    return std::max(r, 0.0);
}

/// (<J_x>, <J_y>, <J_z>).
inline Eigen::Vector3d spin_expectations(const QuantumState& psi, const SpinRep& rep) {
    if (psi.dim() != rep.dim) throw std::invalid_argument("spin_expectations: dimension mismatch");
    return {expectation(psi, rep.jx), expectation(psi, rep.jy), expectation(psi, rep.jz)};
}

/// O(dim) spin expectations using the tridiagonal structure of J_x, J_y.
inline Eigen::Vector3d spin_expectations_fast(const CVector& psi, const SpinRep& rep) {
    double z = 0.0;
    Complex plus = 0.0;  // <J+> = sum conj(psi_{i-1}) (J+)_{i-1,i} psi_i
    for (int i = 0; i < rep.dim; ++i) {
        z += std::norm(psi[i]) * rep.m(i);
        if (i > 0) plus += std::conj(psi[i - 1]) * rep.jx(i - 1, i).real() * 2.0 * psi[i];
    }
    return {plus.real(), plus.imag(), z};
}

/// Sum of the variances of J_x, J_y, J_z.
inline double total_uncertainty(const QuantumState& psi, const SpinRep& rep) {
    return variance(psi, rep.jx) + variance(psi, rep.jy) + variance(psi, rep.jz);
}

/// (1/j^2) sum_k <J_k>^2.
inline double generalized_purity(const QuantumState& psi, const SpinRep& rep) {
    if (rep.two_j == 0) throw std::invalid_argument("generalized_purity: undefined for j = 0");
    const double j = rep.j();
    return spin_expectations(psi, rep).squaredNorm() / (j * j);
}

inline double generalized_purity_fast(const CVector& psi, const SpinRep& rep) {
    if (rep.two_j == 0) throw std::invalid_argument("generalized_purity: undefined for j = 0");
    const double j = rep.j();
    return spin_expectations_fast(psi, rep).squaredNorm() / (j * j);
}

/// Eigenbasis of a Hermitian matrix in the reproducible convention used by
/// the quasi-distance: ascending eigenvalues, each vector phased so its
/// largest-modulus entry is real positive, and vectors inside a degenerate
/// cluster ordered by the index of that entry.
struct Eigenbasis {
    RVector values;
    CMatrix vectors;  // columns
};

inline Eigenbasis canonical_eigenbasis(const CMatrix& h, double degeneracy_tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("canonical_eigenbasis: eigendecomposition failed");
    const int n = static_cast<int>(h.rows());
    CMatrix vecs = es.eigenvectors();
    std::vector<int> lead(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        Eigen::Index r = 0;
        vecs.col(c).cwiseAbs().maxCoeff(&r);
        lead[static_cast<std::size_t>(c)] = static_cast<int>(r);
        const Complex p = vecs(r, c);
        vecs.col(c) *= std::conj(p) / std::abs(p);
    }
    const RVector& w = es.eigenvalues();
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // cluster ids from the ascending solver output
    std::vector<int> cluster(static_cast<std::size_t>(n), 0);
    for (int c = 1; c < n; ++c) {
        cluster[static_cast<std::size_t>(c)] =
            cluster[static_cast<std::size_t>(c - 1)] + (w[c] - w[c - 1] > degeneracy_tol * scale ? 1 : 0);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (cluster[static_cast<std::size_t>(a)] != cluster[static_cast<std::size_t>(b)]) {
            return cluster[static_cast<std::size_t>(a)] < cluster[static_cast<std::size_t>(b)];
        }
        return lead[static_cast<std::size_t>(a)] < lead[static_cast<std::size_t>(b)];
    });
    Eigenbasis out{RVector(n), CMatrix(n, n)};
    for (int c = 0; c < n; ++c) {
        out.values[c] = w[order[static_cast<std::size_t>(c)]];
        out.vectors.col(c) = vecs.col(order[static_cast<std::size_t>(c)]);
    }
    return out;
}

struct QuasiDistanceResult {
    RVector delta_r;
    double norm = 0.0;
    RVector r_i, r_f;
    Eigenbasis basis;
};

/// Amplitude moduli of both states in the H0 eigenbasis and their difference.
inline QuasiDistanceResult quasi_distance(const QuantumState& psi_i, const QuantumState& psi_f, const CMatrix& h0) {
    if (psi_i.dim() != psi_f.dim() || psi_i.dim() != h0.rows()) {
        throw std::invalid_argument("quasi_distance: dimension mismatch");
    }
    QuasiDistanceResult q;
    q.basis = canonical_eigenbasis(h0);
    q.r_i = (q.basis.vectors.adjoint() * psi_i.amplitudes).cwiseAbs();
    q.r_f = (q.basis.vectors.adjoint() * psi_f.amplitudes).cwiseAbs();
    q.delta_r = q.r_f - q.r_i;
    q.norm = q.delta_r.norm();
    return q;
}

/// A = sum_n sign(delta r_n) |n><n| with sign(0) = +1.
inline CMatrix build_A_operator(const QuasiDistanceResult& qd, const CMatrix& h0) {
    if (qd.basis.vectors.rows() != h0.rows() || qd.delta_r.size() != h0.rows()) {
        throw std::invalid_argument("build_A_operator: quasi-distance was computed for a different H0");
    }
    RVector s(qd.delta_r.size());
    for (Eigen::Index n = 0; n < s.size(); ++n) s[n] = qd.delta_r[n] >= 0.0 ? 1.0 : -1.0;
    const CMatrix& v = qd.basis.vectors;
    return v * s.cast<Complex>().asDiagonal() * v.adjoint();
}

/// (1/2) || a - b ||_1.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("trace_distance: dimension mismatch");
    const CMatrix d = a.matrix - b.matrix;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qcnoise
