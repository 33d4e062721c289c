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

// Analytic inequalities relating transformation time, control amplitude,
// dephasing and purity loss. All evaluators are pure functions; the control
// operator spectra (Lambda_k) are supplied by the caller.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcnoise/dynamics.hpp"
#include "qcnoise/metrics.hpp"

namespace qcnoise {

namespace detail {

template <typename F>
double trapezoid_mean(const ControlField& field, F&& f) {
    field.validate();
    double s = 0.0;
    for (int k = 0; k < field.n_steps; ++k) {
        s += 0.5 * (f(field.samples[static_cast<std::size_t>(k)]) + f(field.samples[static_cast<std::size_t>(k + 1)]));
    }
    return s / field.n_steps;  // (1/T) * dt * sum
}

inline void check_channels(std::size_t a, std::size_t b, const char* what) {
    if (a != b || a == 0) throw std::invalid_argument(std::string(what) + ": per-channel lists must be nonempty and equal length");
}

}  // namespace detail

/// (1/T) int |u| dt, trapezoid rule on the field grid.
inline double average_amplitude(const ControlField& field) {
    return detail::trapezoid_mean(field, [](double u) { return std::abs(u); });
}

/// (1/T) int Gamma(t) dt = Gamma + c (1/T) int u^2 dt.
inline double average_dephasing(const ControlField& field, const NoiseSpec& noise) {
    noise.validate();
    return noise.gamma_static + noise.c_rel * detail::trapezoid_mean(field, [](double u) { return u * u; });
}

/// Gamma(t_k) >= 2 |u(t_k)| sqrt(Gamma c) at every grid point.
inline bool dephasing_amplitude_inequality_holds(const ControlField& field, const NoiseSpec& noise,
                                                 double rel_tol = 1e-12) {
    const double g = std::sqrt(noise.gamma_static * noise.c_rel);
    for (double u : field.samples) {
        const double lhs = noise.rate(u);
        const double rhs = 2.0 * std::abs(u) * g;
        if (lhs < rhs - rel_tol * std::max(1.0, rhs)) return false;
    }
    return true;
}

/// T >= ||dr||^2 / (2 sum_k ubar_k |Lambda_k|). Infinite if every ubar_k Lambda_k vanishes
/// while ||dr|| > 0.
inline double min_time_bound(const QuasiDistanceResult& qd, std::span<const double> u_bars,
                             std::span<const double> lambdas) {
    detail::check_channels(u_bars.size(), lambdas.size(), "min_time_bound");
    double denom = 0.0;
    for (std::size_t k = 0; k < u_bars.size(); ++k) denom += u_bars[k] * std::abs(lambdas[k]);
    const double num = qd.norm * qd.norm;
    if (num == 0.0) return 0.0;
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return num / (2.0 * denom);
}

/// Delta P >= 2 ||dr||^2 sum_k Gammabar_k min_t Var_{X_k} / sum_k ubar_k |Lambda_k|.
inline double purity_loss_lower_bound(const QuasiDistanceResult& qd, std::span<const double> u_bars,
                                      std::span<const double> gamma_bars, std::span<const double> min_variances,
                                      std::span<const double> lambdas) {
    detail::check_channels(u_bars.size(), lambdas.size(), "purity_loss_lower_bound");
    detail::check_channels(u_bars.size(), gamma_bars.size(), "purity_loss_lower_bound");
    detail::check_channels(u_bars.size(), min_variances.size(), "purity_loss_lower_bound");
    double denom = 0.0;
    double num = 0.0;
    for (std::size_t k = 0; k < u_bars.size(); ++k) {
        denom += u_bars[k] * std::abs(lambdas[k]);
        num += gamma_bars[k] * std::max(min_variances[k], 0.0);
    }
    if (denom == 0.0) throw std::domain_error("purity_loss_lower_bound: zero control amplitude");
    return 2.0 * qd.norm * qd.norm * num / denom;
}

/// Right-hand side Delta P / (2 c ||dr||^2 N) of the tolerable-noise condition.
inline double noise_ratio_threshold(double delta_p, double delta_r_norm, double n_size, double c_order) {
    const double denom = 2.0 * c_order * delta_r_norm * delta_r_norm * n_size;
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return delta_p / denom;
}

/// True when the small-loss premises (Delta P << 1, ||dr|| << 1) hold; the
/// evaluators below still answer outside that regime but callers should warn.
inline bool small_loss_regime(double delta_p, double delta_r_norm) { return delta_p < 0.1 && delta_r_norm < 0.3; }

/// sum Gammabar / sum ubar <= Delta P / (2 c ||dr||^2 N).
inline bool noise_condition(double delta_p, double delta_r_norm, double n_size, double c_order, double noise_ratio) {
    return noise_ratio <= noise_ratio_threshold(delta_p, delta_r_norm, n_size, c_order);
}

/// sqrt(Gamma c) <= Delta P / (2 c ||dr||^2 N) for the single J_z channel.
inline bool controllability_condition(const NoiseSpec& noise, double delta_p, double delta_r_norm, double n_size,
                                      double c_order) {
    noise.validate();
    return std::sqrt(noise.gamma_static * noise.c_rel) <= noise_ratio_threshold(delta_p, delta_r_norm, n_size, c_order);
}

struct BoundReport {
    double t_final = 0.0;
    double delta_r_norm = 0.0;
    double u_bar = 0.0;
    double gamma_bar = 0.0;
    double lambda = 0.0;
    double min_variance = 0.0;
    double t_min = 0.0;
    double purity_loss_lb = 0.0;
    double delta_p = 0.0;
    double noise_ratio = 0.0;
    double noise_ratio_ub = 0.0;
    bool time_bound_ok = false;
    bool purity_bound_ok = false;     // measured Delta P >= slack * bound
    bool pointwise_noise_ok = false;  // Gamma(t) >= 2|u| sqrt(Gamma c) on the grid
    bool noise_condition_ok = false;
    bool generic_premise = false;     // min variance ~ N^2; the generic bound is only meaningful then
    bool small_loss = false;
};

/// Audit of a single-channel (X = 2 J_z) run against the bounds.
inline BoundReport make_bound_report(const QuasiDistanceResult& qd, const ControlField& field, const NoiseSpec& noise,
                                     double lambda, double min_variance, double delta_p, double c_order = 1.0,
                                     double purity_slack = 0.9) {
    BoundReport r;
    r.t_final = field.t_final;
    r.delta_r_norm = qd.norm;
    r.u_bar = average_amplitude(field);
    r.gamma_bar = average_dephasing(field, noise);
    r.lambda = std::abs(lambda);
    r.min_variance = min_variance;
    const double ub[] = {r.u_bar};
    const double lb[] = {r.lambda};
    const double gb[] = {r.gamma_bar};
    const double mv[] = {min_variance};
    r.t_min = min_time_bound(qd, ub, lb);
    r.purity_loss_lb = r.u_bar * r.lambda > 0.0 ? purity_loss_lower_bound(qd, ub, gb, mv, lb) : 0.0;
    r.delta_p = delta_p;
    r.noise_ratio = r.gamma_bar == 0.0 ? 0.0
                    : r.u_bar > 0.0 ? r.gamma_bar / r.u_bar
                                    : std::numeric_limits<double>::infinity();
    const double n_size = r.lambda;  // N = 2j = max |eigenvalue of 2 J_z|
    r.noise_ratio_ub = noise_ratio_threshold(delta_p, qd.norm, n_size, c_order);
    r.time_bound_ok = field.t_final >= r.t_min;
    r.purity_bound_ok = delta_p >= purity_slack * r.purity_loss_lb;
    r.pointwise_noise_ok = dephasing_amplitude_inequality_holds(field, noise);
    r.noise_condition_ok = r.noise_ratio <= r.noise_ratio_ub;
    r.generic_premise = n_size > 0.0 && min_variance >= 0.1 * n_size * n_size;
    r.small_loss = small_loss_regime(delta_p, qd.norm);
    return r;
}

}  // namespace qcnoise
