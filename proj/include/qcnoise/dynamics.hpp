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

// Time evolution under H(t) = H0 + 2 [u(t) + xi(t)] J_z.
//
// The control operator is X = 2 J_z everywhere: in the Hamiltonian, in the
// dephasing term of the master equation and in all variance formulas.
// Fields are piecewise constant: step k covers [t_k, t_k + dt) and uses u(t_k).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qcnoise/algebra.hpp"
#include "qcnoise/core.hpp"
#include "qcnoise/propagator.hpp"

namespace qcnoise {

/// Real control amplitude on the uniform grid t_k = k T / n_steps, k = 0..n_steps.
struct ControlField {
    double t_final = 10.0;
    int n_steps = 10000;
    std::vector<double> samples;

    double dt() const { return t_final / n_steps; }
    double time(int k) const { return t_final * static_cast<double>(k) / n_steps; }

    static ControlField zeros(double t_final, int n_steps) {
        ControlField f{t_final, n_steps, std::vector<double>(static_cast<std::size_t>(n_steps) + 1, 0.0)};
        f.validate();
        return f;
    }

    static ControlField constant(double t_final, int n_steps, double value) {
        ControlField f{t_final, n_steps, std::vector<double>(static_cast<std::size_t>(n_steps) + 1, value)};
        f.validate();
        return f;
    }

    void validate() const {
        if (!(t_final > 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("ControlField: t_final must be > 0");
        if (n_steps < 1) throw std::invalid_argument("ControlField: n_steps must be >= 1");
        if (samples.size() != static_cast<std::size_t>(n_steps) + 1) {
            throw std::invalid_argument("ControlField: expected " + std::to_string(n_steps + 1) + " samples, got " +
                                        std::to_string(samples.size()));
        }
        for (double v : samples) {
            if (!std::isfinite(v)) throw std::invalid_argument("ControlField: non-finite sample");
        }
    }
};

/// Dephasing Gamma(t) = gamma_static + c_rel u(t)^2 on the single J_z channel.
struct NoiseSpec {
    double gamma_static = 0.0;
    double c_rel = 0.0;

    double rate(double u) const { return gamma_static + c_rel * u * u; }
    bool is_zero() const { return gamma_static == 0.0 && c_rel == 0.0; }

    void validate() const {
        if (!(gamma_static >= 0.0) || !(c_rel >= 0.0) || !std::isfinite(gamma_static) || !std::isfinite(c_rel)) {
            throw std::invalid_argument("NoiseSpec: gamma_static and c_rel must be finite and >= 0");
        }
    }
};

struct DensityMatrix {
    CMatrix matrix;

    int dim() const { return static_cast<int>(matrix.rows()); }

    static DensityMatrix pure(const QuantumState& psi) {
        return DensityMatrix{psi.amplitudes * psi.amplitudes.adjoint()};
    }

    static DensityMatrix maximally_mixed(int dim) {
        return DensityMatrix{CMatrix::Identity(dim, dim) / static_cast<double>(dim)};
    }

    /// Empty string when the invariants hold, otherwise a description of the violation.
    std::string check(double herm_tol = 1e-10, double trace_tol = 1e-10, double eig_tol = 1e-8) const {
        if (matrix.rows() != matrix.cols()) return "not square";
        const double herm = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
        if (herm > herm_tol) return "not Hermitian (deviation " + std::to_string(herm) + ")";
        const Complex tr = matrix.trace();
        if (std::abs(tr - 1.0) > trace_tol) return "trace " + std::to_string(tr.real()) + " != 1";
        const CMatrix sym = 0.5 * (matrix + matrix.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(sym, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -eig_tol) return "negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff());
        return {};
    }
};

template <typename Snapshot>
struct Trajectory {
    std::vector<double> times;
    std::vector<Snapshot> states;

    std::size_t size() const { return times.size(); }
    const Snapshot& back() const { return states.back(); }
};

using StateTrajectory = Trajectory<QuantumState>;
using DensityTrajectory = Trajectory<DensityMatrix>;

struct PropagationOptions {
    int stride = 100;  // snapshot every `stride` steps; the final step is always recorded
    StepKernel kernel = StepKernel::chebyshev;
};

/// Grid indices recorded for a run of n_steps with the given stride.
inline std::vector<int> snapshot_steps(int n_steps, int stride) {
    if (stride < 1) throw std::invalid_argument("snapshot stride must be >= 1");
    std::vector<int> out;
    for (int k = 0; k <= n_steps; k += stride) out.push_back(k);
    if (out.back() != n_steps) out.push_back(n_steps);
    return out;
}

/// Diagonal of the control operator X = 2 J_z.
inline RVector control_diagonal(const SpinRep& rep) {
    RVector x(rep.dim);
    for (int i = 0; i < rep.dim; ++i) x[i] = 2.0 * rep.m(i);
    return x;
}

/// Dense X = 2 J_z.
inline CMatrix control_operator(const SpinRep& rep) { return 2.0 * rep.jz; }

/// H0 + 2 u J_z.
inline CMatrix hamiltonian_at(const SpinRep& rep, const ModelParams& params, double u) {
    if (!std::isfinite(u)) throw std::invalid_argument("hamiltonian_at: u must be finite");
    return build_drift(params, rep) + (2.0 * u) * rep.jz;
}

inline StepPropagator make_step_propagator(const SpinRep& rep, const ModelParams& params,
                                           StepKernel kernel = StepKernel::chebyshev) {
    return StepPropagator(drift_tridiagonal(params, rep), control_diagonal(rep), kernel);
}

/// Called at every grid point k = 0..n_steps with the state at t_k.
using GridObserver = std::function<void(int step, const CVector& psi)>;

namespace detail {

inline void check_state(const QuantumState& psi, const SpinRep& rep) {
    if (psi.dim() != rep.dim) {
        throw std::invalid_argument("state dimension " + std::to_string(psi.dim()) + " != rep dimension " +
                                    std::to_string(rep.dim));
    }
    if (std::abs(psi.amplitudes.norm() - 1.0) > 1e-10) throw std::invalid_argument("initial state is not normalized");
}

/// Shared driver: amplitude(k) gives the total amplitude on step k.
template <typename Amplitude>
StateTrajectory propagate_with(const QuantumState& psi0, const ControlField& field, StepPropagator& prop,
                               Amplitude&& amplitude, const PropagationOptions& opt, const GridObserver& observer) {
    field.validate();
    const double dt = field.dt();
    const std::vector<int> snaps = snapshot_steps(field.n_steps, opt.stride);
    StateTrajectory traj;
    traj.times.reserve(snaps.size());
    traj.states.reserve(snaps.size());

    CVector psi = psi0.amplitudes;
    std::size_t next = 0;
    for (int k = 0;; ++k) {
        if (observer) observer(k, psi);
        if (next < snaps.size() && snaps[next] == k) {
            traj.times.push_back(field.time(k));
            traj.states.push_back(QuantumState{psi});
            ++next;
        }
        if (k == field.n_steps) break;
        prop.step(psi, amplitude(k), dt);
    }
    return traj;
}

}  // namespace detail

/// Noiseless evolution: per step psi <- exp(-i H(t_k) dt) psi.
inline StateTrajectory propagate_deterministic(const QuantumState& psi0, const ControlField& field, const SpinRep& rep,
                                               const ModelParams& params, const PropagationOptions& opt = {},
                                               const GridObserver& observer = {}) {
    detail::check_state(psi0, rep);
    StepPropagator prop = make_step_propagator(rep, params, opt.kernel);
    // H = H0 + 2u J_z = H0 + u X
    return detail::propagate_with(
        psi0, field, prop, [&](int k) { return field.samples[static_cast<std::size_t>(k)]; }, opt, observer);
}

/// xi_k ~ N(0, 2 Gamma(t_k) / dt), one per step, Gamma evaluated on the noiseless u(t_k).
/// A standard normal is drawn for every step even where Gamma = 0, so the same
/// seed yields common random numbers across noise strengths.
inline std::vector<double> sample_noise_increments(const ControlField& field, const NoiseSpec& noise,
                                                   std::uint64_t seed) {
    field.validate();
    noise.validate();
    const double dt = field.dt();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> xi(static_cast<std::size_t>(field.n_steps));
    for (int k = 0; k < field.n_steps; ++k) {
        const double z = normal(rng);
        const double g = noise.rate(field.samples[static_cast<std::size_t>(k)]);
        xi[static_cast<std::size_t>(k)] = g > 0.0 ? std::sqrt(2.0 * g / dt) * z : 0.0;
    }
    return xi;
}

/// One noise realization: step k uses amplitude u(t_k) + xi_k inside an exact unitary step.
inline StateTrajectory propagate_realization(const QuantumState& psi0, const ControlField& field,
                                             const NoiseSpec& noise, const SpinRep& rep, const ModelParams& params,
                                             std::uint64_t seed, const PropagationOptions& opt = {},
                                             const GridObserver& observer = {}) {
    detail::check_state(psi0, rep);
    const std::vector<double> xi = sample_noise_increments(field, noise, seed);
    StepPropagator prop = make_step_propagator(rep, params, opt.kernel);
    return detail::propagate_with(
        psi0, field, prop,
        [&](int k) { return field.samples[static_cast<std::size_t>(k)] + xi[static_cast<std::size_t>(k)]; }, opt,
        observer);
}

struct LindbladOptions {
    int stride = 100;
    /// Upper bound on (spectral extent of the generator) x (RK4 substep).
    double max_phase_per_substep = 0.01;
    double trace_drift_limit = 1e-6;
};

namespace detail {

/// d rho/dt = -i[H, rho] - Gamma (x_a - x_b)^2 rho_ab for diagonal X.
inline void lindblad_rhs(const Tridiagonal& h, const RVector& x, double gamma, const CMatrix& rho, CMatrix& out,
                         CMatrix& scratch) {
    h.apply(rho, scratch);  // H rho
    out = -kI * (scratch - scratch.adjoint());  // rho Hermitian => rho H = (H rho)^+
    if (gamma != 0.0) {
        const int n = static_cast<int>(x.size());
        for (int b = 0; b < n; ++b) {
            for (int a = 0; a < n; ++a) {
                const double d = x[a] - x[b];
                out(a, b) -= gamma * d * d * rho(a, b);
            }
        }
    }
}

}  // namespace detail

/// Classical RK4 integration of the dephasing master equation. Each grid
/// interval is split into equal substeps sized from the spectral extent of
/// the generator; the field and Gamma stay constant across the interval.
/// The trace is never renormalized: drift beyond the limit aborts.
inline DensityTrajectory propagate_lindblad(const DensityMatrix& rho0, const ControlField& field,
                                            const NoiseSpec& noise, const SpinRep& rep, const ModelParams& params,
                                            const LindbladOptions& opt = {}) {
    field.validate();
    noise.validate();
    if (rho0.dim() != rep.dim) throw std::invalid_argument("propagate_lindblad: dimension mismatch");
    if (const std::string why = rho0.check(); !why.empty()) {
        throw std::invalid_argument("propagate_lindblad: invalid initial density matrix: " + why);
    }
    const Tridiagonal drift = drift_tridiagonal(params, rep);
    const RVector x = control_diagonal(rep);
    const double x_span = x.maxCoeff() - x.minCoeff();
    const double dt = field.dt();
    const std::vector<int> snaps = snapshot_steps(field.n_steps, opt.stride);

    DensityTrajectory traj;
    CMatrix rho = rho0.matrix;
    const int n = rep.dim;
    CMatrix k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n), scratch(n, n);
    std::size_t next = 0;
    for (int k = 0;; ++k) {
        if (next < snaps.size() && snaps[next] == k) {
            traj.times.push_back(field.time(k));
            traj.states.push_back(DensityMatrix{rho});
            ++next;
        }
        if (k == field.n_steps) break;

        const double u = field.samples[static_cast<std::size_t>(k)];
        Tridiagonal h = drift;
        h.diag += u * x;
        const double gamma = noise.rate(u);
        auto [lo, hi] = h.spectral_bounds();
        const double extent = (hi - lo) + gamma * x_span * x_span;
        const int sub = std::max(1, static_cast<int>(std::ceil(extent * dt / opt.max_phase_per_substep)));
        const double hs = dt / sub;
        for (int s = 0; s < sub; ++s) {
            detail::lindblad_rhs(h, x, gamma, rho, k1, scratch);
            tmp = rho + (0.5 * hs) * k1;
            detail::lindblad_rhs(h, x, gamma, tmp, k2, scratch);
            tmp = rho + (0.5 * hs) * k2;
            detail::lindblad_rhs(h, x, gamma, tmp, k3, scratch);
            tmp = rho + hs * k3;
            detail::lindblad_rhs(h, x, gamma, tmp, k4, scratch);
            rho += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            rho = 0.5 * (rho + rho.adjoint()).eval();
        }
        if (!rho.allFinite()) {
            throw PropagationError("propagate_lindblad: non-finite density matrix at t = " + std::to_string(field.time(k + 1)));
        }
        const double drift_tr = std::abs(rho.trace() - Complex(1.0));
        if (drift_tr > opt.trace_drift_limit) {
            throw PropagationError("propagate_lindblad: trace drift " + std::to_string(drift_tr) + " at t = " +
                                   std::to_string(field.time(k + 1)) + "; reduce max_phase_per_substep");
        }
    }
    return traj;
}

/// Snapshot-wise mean of |psi><psi| over realizations, summed in input order.
inline DensityTrajectory ensemble_average(const std::vector<StateTrajectory>& trajectories) {
    if (trajectories.empty()) throw std::invalid_argument("ensemble_average: no trajectories");
    const StateTrajectory& first = trajectories.front();
    for (const auto& t : trajectories) {
        if (t.times != first.times) throw std::invalid_argument("ensemble_average: trajectories have mismatched grids");
        for (const auto& s : t.states) {
            if (s.dim() != first.states.front().dim()) throw std::invalid_argument("ensemble_average: mismatched dimensions");
        }
    }
    const double inv = 1.0 / static_cast<double>(trajectories.size());
    DensityTrajectory out;
    out.times = first.times;
    for (std::size_t s = 0; s < first.size(); ++s) {
        const int n = first.states[s].dim();
        CMatrix acc = CMatrix::Zero(n, n);
        for (const auto& t : trajectories) {
            const CVector& v = t.states[s].amplitudes;
            acc.noalias() += v * v.adjoint();
        }
        acc *= inv;
        out.states.push_back(DensityMatrix{std::move(acc)});
    }
    return out;
}

}  // namespace qcnoise
