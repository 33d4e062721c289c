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
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace qcnoise {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr const char* kVersion = "qcnoise 0.1.0";

/// Largest supported Hilbert-space dimension (dense storage).
inline constexpr int kMaxDim = 2001;

/// Raised when a time step cannot be carried out (non-finite entries,
/// integrator blow-up, trace drift).
class PropagationError : public std::runtime_error {
public:
    explicit PropagationError(const std::string& what) : std::runtime_error(what) {}
};

/// Real symmetric tridiagonal operator. off[i] couples rows i and i+1.
struct Tridiagonal {
    RVector diag;
    RVector off;

    int dim() const { return static_cast<int>(diag.size()); }

    CMatrix dense() const {
        const int n = dim();
        CMatrix m = CMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = diag[i];
        for (int i = 0; i + 1 < n; ++i) {
            m(i, i + 1) = off[i];
            m(i + 1, i) = off[i];
        }
        return m;
    }

    /// out = this * in, for a vector or the columns of a matrix.
    template <typename In, typename Out>
    void apply(const In& in, Out& out) const {
        const int n = dim();
        out = diag.asDiagonal() * in;
        if (n > 1) {
            out.topRows(n - 1) += off.asDiagonal() * in.bottomRows(n - 1);
            out.bottomRows(n - 1) += off.asDiagonal() * in.topRows(n - 1);
        }
    }

    /// Gershgorin enclosure of the spectrum.
    std::pair<double, double> spectral_bounds() const {
        const int n = dim();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = 0; i < n; ++i) {
            double r = 0.0;
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < n) r += std::abs(off[i]);
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        return {lo, hi};
    }
};

/// Largest entrywise modulus of a - b.
inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    }
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace qcnoise
