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

// Single-step kernels for psi <- exp(-i H dt) psi with a piecewise-constant
// Hamiltonian H = H0 + a X, where H0 is real tridiagonal and X is diagonal.
//
// Two kernels are provided. The Chebyshev kernel expands the exponential in
// Chebyshev polynomials of the shifted and scaled Hamiltonian with Bessel
// coefficients and costs O(dim) per term. The eigen kernel diagonalizes the
// dense matrix every step and is kept as the reference path.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qcnoise/core.hpp"

namespace qcnoise {

enum class StepKernel { chebyshev, eigen };

/// J_0(x) .. J_kmax(x) for x >= 0 by Miller's backward recurrence,
/// normalized with J_0 + 2 sum_k J_2k = 1.
inline std::vector<double> bessel_j_sequence(double x, int kmax) {
    if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("bessel_j_sequence: x must be finite and >= 0");
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    int start = kmax + 20 + static_cast<int>(std::sqrt(40.0 * (kmax + 1)));
    start = std::max(start, static_cast<int>(x) + 40);
    if (start % 2) ++start;

    double next = 0.0;   // J_{k+1}
    double cur = 1e-300; // J_k, arbitrary seed
    double norm = 0.0;
    for (int k = start; k > 0; --k) {
        const double prev = (2.0 * k / x) * cur - next;  // J_{k-1}
        next = cur;
        cur = prev;
        if (k - 1 <= kmax) out[static_cast<std::size_t>(k - 1)] = cur;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
        if (std::abs(cur) > 1e250) {
            // rescale everything accumulated so far
            const double s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for (int i = k - 1; i <= kmax && i < static_cast<int>(out.size()); ++i) {
                if (i >= 0) out[static_cast<std::size_t>(i)] *= s;
            }
        }
    }
    norm += cur;  // J_0
    for (double& v : out) v /= norm;
    return out;
}

/// Reusable single-step propagator for H0 (tridiagonal) + a * diag(x).
class StepPropagator {
public:
    StepPropagator(Tridiagonal drift, RVector control_diag, StepKernel kernel = StepKernel::chebyshev,
                   double tolerance = 1e-16)
        : drift_(std::move(drift)), x_(std::move(control_diag)), kernel_(kernel), tol_(tolerance) {
        if (x_.size() != drift_.diag.size()) throw std::invalid_argument("StepPropagator: dimension mismatch");
        const int n = drift_.dim();
        t0_.resize(n);
        t1_.resize(n);
        t2_.resize(n);
        acc_.resize(n);
    }

    int dim() const { return drift_.dim(); }
    const Tridiagonal& drift() const { return drift_; }
    const RVector& control_diag() const { return x_; }
    StepKernel kernel() const { return kernel_; }

    Tridiagonal hamiltonian(double amplitude) const {
        Tridiagonal h = drift_;
        h.diag += amplitude * x_;
        return h;
    }

    /// psi <- exp(-i (H0 + amplitude X) dt) psi.
    void step(CVector& psi, double amplitude, double dt) {
        if (!std::isfinite(amplitude)) throw PropagationError("step: non-finite control amplitude");
        if (kernel_ == StepKernel::eigen) {
            step_eigen(psi, amplitude, dt);
        } else {
            step_chebyshev(psi, amplitude, dt);
        }
    }

private:
    void step_eigen(CVector& psi, double amplitude, double dt) {
        const CMatrix h = hamiltonian(amplitude).dense();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        if (es.info() != Eigen::Success) throw PropagationError("step: eigendecomposition failed");
        CVector c = es.eigenvectors().adjoint() * psi;
        for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(-kI * (es.eigenvalues()[k] * dt));
        psi = es.eigenvectors() * c;
    }

    void step_chebyshev(CVector& psi, double amplitude, double dt) {
        const Tridiagonal h = hamiltonian(amplitude);
        auto [lo, hi] = h.spectral_bounds();
        const double center = 0.5 * (hi + lo);
        const double half = 0.5 * (hi - lo) + 1e-12 * (std::abs(hi) + std::abs(lo)) + 1e-300;
        const double a = half * dt;

        const int kmax = static_cast<int>(a + 10.0 * std::cbrt(a) + 30.0);
        const std::vector<double> bess = bessel_j_sequence(a, kmax);

        // H~ = (H - center) / half, spectrum inside [-1, 1].
        auto apply_scaled = [&](const CVector& in, CVector& out) {
            h.apply(in, out);
            out -= center * in;
            out /= half;
        };

        t0_ = psi;
        apply_scaled(t0_, t1_);
        acc_ = bess[0] * t0_ + 2.0 * bess[1] * (-kI) * t1_;
        Complex ik = -kI;  // (-i)^k
        int small = 0;
        for (int k = 2; k <= kmax; ++k) {
            apply_scaled(t1_, t2_);
            t2_ = 2.0 * t2_ - t0_;
            ik *= -kI;
            acc_ += (2.0 * bess[static_cast<std::size_t>(k)]) * ik * t2_;
            std::swap(t0_, t1_);
            std::swap(t1_, t2_);
            if (k > a && std::abs(bess[static_cast<std::size_t>(k)]) < tol_) {
                if (++small >= 2) break;
            } else {
                small = 0;
            }
        }
        psi = std::exp(-kI * (center * dt)) * acc_;
        if (!psi.allFinite()) throw PropagationError("step: non-finite state after Chebyshev step");
    }

    Tridiagonal drift_;
    RVector x_;
    StepKernel kernel_;
    double tol_;
    CVector t0_, t1_, t2_, acc_;
};

}  // namespace qcnoise
