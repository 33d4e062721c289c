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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qcnoise/algebra.hpp"
#include "qcnoise/dynamics.hpp"
#include "qcnoise/metrics.hpp"

namespace qcnoise {

/// u(t) = exp(-(5t/T)^2) sum_k a_k sin(k pi t / T), k = 1..coeffs.size().
inline ControlField random_field_from_coefficients(double t_final, const std::vector<double>& coeffs, int n_steps) {
    if (coeffs.empty()) throw std::invalid_argument("random_field: need at least one mode");
    ControlField f{t_final, n_steps, std::vector<double>(static_cast<std::size_t>(n_steps) + 1, 0.0)};
    if (!(t_final > 0.0) || n_steps < 1) f.validate();
    const double tau = t_final;
    for (int i = 0; i <= n_steps; ++i) {
        const double t = f.time(i);
        const double x = std::numbers::pi * t / tau;
        double sum = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) sum += coeffs[k] * std::sin(static_cast<double>(k + 1) * x);
        const double env = std::exp(-std::pow(5.0 * t / t_final, 2));
        f.samples[static_cast<std::size_t>(i)] = env * sum;
    }
    f.validate();
    return f;
}

/// Mode coefficients a_k ~ Uniform[0, 1), i.i.d. from `seed`.
inline std::vector<double> random_field_coefficients(int n_modes, std::uint64_t seed) {
    if (n_modes < 1) throw std::invalid_argument("random_field: n_modes must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(n_modes));
    for (double& v : a) v = unit(rng);
    return a;
}

inline ControlField random_field(double t_final, int n_modes, int n_steps, std::uint64_t seed) {
    return random_field_from_coefficients(t_final, random_field_coefficients(n_modes, seed), n_steps);
}

/// Final state of the noiseless evolution of psi_i under `field`.
inline QuantumState make_target(const QuantumState& psi_i, const ControlField& field, const SpinRep& rep,
                                const ModelParams& params, StepKernel kernel = StepKernel::chebyshev) {
    PropagationOptions opt;
    opt.stride = field.n_steps;
    opt.kernel = kernel;
    return propagate_deterministic(psi_i, field, rep, params, opt).back();
}

struct LocalControlOptions {
    int n_candidates = 41;
    /// Look-ahead length in grid steps. 1 together with apply_steps = 1 is the
    /// plain one-step greedy rule.
    int horizon_steps = 300;
    /// Steps a chosen amplitude is held before the next decision.
    int apply_steps = 20;
    double purity_floor = 0.9;
    StepKernel kernel = StepKernel::chebyshev;
    /// Horizon propagators for all candidates are cached as dense matrices
    /// when they fit in this many bytes; otherwise each look-ahead is one
    /// long Chebyshev step.
    std::size_t cache_bytes = std::size_t{256} << 20;
};

struct LocalControlResult {
    ControlField field;
    double min_generalized_purity = 1.0;
    bool purity_floor_met = true;
};

/// Uniform candidate amplitudes in [-u_max, u_max], sorted by |u| (then by sign)
/// so that the first minimum found is the one with the smallest magnitude.
inline std::vector<double> local_control_candidates(int n_candidates, double u_max) {
    std::vector<double> cands(static_cast<std::size_t>(n_candidates));
    for (int c = 0; c < n_candidates; ++c) {
        cands[static_cast<std::size_t>(c)] = n_candidates == 1 ? 0.0 : -u_max + 2.0 * u_max * c / (n_candidates - 1);
    }
    std::stable_sort(cands.begin(), cands.end(), [](double a, double b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
    });
    return cands;
}

/// Receding-horizon uncertainty-suppressing control.
///
/// Every `apply_steps` grid steps, each candidate amplitude is held constant
/// over a look-ahead window of `horizon_steps` and the one giving the smallest
/// total uncertainty at the end of the window wins (near-ties, relative 1e-12,
/// go to the smaller |u|). The winner is then applied for `apply_steps` steps.
/// The final grid sample repeats the last applied amplitude.
///
/// The purity floor is a soft target: when the trajectory dips below it the
/// field is still returned and `purity_floor_met` is false.
inline LocalControlResult local_scs_control(const QuantumState& psi_i, const SpinRep& rep, const ModelParams& params,
                                            double t_final, int n_steps, double u_max,
                                            const LocalControlOptions& opt = {}) {
    if (!(u_max > 0.0) || !std::isfinite(u_max)) throw std::invalid_argument("local_scs_control: u_max must be > 0");
    if (opt.n_candidates < 1) throw std::invalid_argument("local_scs_control: need at least one candidate");
    if (opt.horizon_steps < 1 || opt.apply_steps < 1) {
        throw std::invalid_argument("local_scs_control: horizon_steps and apply_steps must be >= 1");
    }
    if (rep.two_j == 0) throw std::invalid_argument("local_scs_control: j must be > 0");
    detail::check_state(psi_i, rep);

    const std::vector<double> cands = local_control_candidates(opt.n_candidates, u_max);
    ControlField field = ControlField::zeros(t_final, n_steps);
    StepPropagator prop = make_step_propagator(rep, params, opt.kernel);
    const double dt = field.dt();
    const double horizon = dt * opt.horizon_steps;
    const double casimir = rep.casimir();
    const double tie = 1e-12 * casimir;

    // exp(-i H(u) horizon) per candidate; H(u) is constant over the window
    std::vector<CMatrix> lookahead;
    const std::size_t bytes = cands.size() * static_cast<std::size_t>(rep.dim) * rep.dim * sizeof(Complex);
    if (bytes <= opt.cache_bytes) {
        for (double u : cands) lookahead.push_back(hermitian_exp(prop.hamiltonian(u).dense(), horizon));
    }

    LocalControlResult res;
    CVector psi = psi_i.amplitudes;
    CVector trial(psi.size());
    res.min_generalized_purity = generalized_purity_fast(psi, rep);
    double u_now = 0.0;
    for (int k = 0; k < n_steps; ++k) {
        if (k % opt.apply_steps == 0) {
            double best_unc = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < cands.size(); ++c) {
                const double u = cands[c];
                if (lookahead.empty()) {
                    trial = psi;
                    prop.step(trial, u, horizon);
                } else {
                    trial.noalias() = lookahead[c] * psi;
                }
                const double unc = casimir - spin_expectations_fast(trial, rep).squaredNorm();
                if (unc < best_unc - tie) {
                    best_unc = unc;
                    u_now = u;
                }
            }
        }
        field.samples[static_cast<std::size_t>(k)] = u_now;
        prop.step(psi, u_now, dt);
        res.min_generalized_purity = std::min(res.min_generalized_purity, generalized_purity_fast(psi, rep));
    }
    field.samples.back() = u_now;
    res.field = std::move(field);
    res.purity_floor_met = res.min_generalized_purity >= opt.purity_floor;
    return res;
}

// ---------------------------------------------------------------------------
// Field files: '#'-prefixed "key: value" header lines, then "time amplitude"
// rows with 17 significant digits.

struct FieldHeader {
    std::string generator;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> params;
};

inline void write_field(std::ostream& os, const ControlField& field, const FieldHeader& header) {
    field.validate();
    char buf[64];
    os << "# qcnoise control field\n";
    std::snprintf(buf, sizeof buf, "%.17g", field.t_final);
    os << "# t_final: " << buf << "\n";
    os << "# n_steps: " << field.n_steps << "\n";
    os << "# seed: " << header.seed << "\n";
    os << "# generator: " << header.generator << "\n";
    for (const auto& [k, v] : header.params) os << "# param." << k << ": " << v << "\n";
    for (int i = 0; i <= field.n_steps; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", field.time(i), field.samples[static_cast<std::size_t>(i)]);
        os << buf;
    }
}

inline void write_field(const std::string& path, const ControlField& field, const FieldHeader& header) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open field file for writing: " + path);
    write_field(os, field, header);
}

inline ControlField read_field(std::istream& is, FieldHeader* header_out = nullptr) {
    FieldHeader header;
    double t_final = 0.0;
    int n_steps = -1;
    std::vector<double> times, values;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(1, colon - 1);
            std::string val = line.substr(colon + 1);
            auto trim = [](std::string& s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
            };
            trim(key);
            trim(val);
            if (key == "t_final") t_final = std::stod(val);
            else if (key == "n_steps") n_steps = std::stoi(val);
            else if (key == "seed") header.seed = std::stoull(val);
            else if (key == "generator") header.generator = val;
            else if (key.rfind("param.", 0) == 0) header.params[key.substr(6)] = val;
            continue;
        }
        std::istringstream ls(line);
        double t = 0.0, u = 0.0;
        if (!(ls >> t >> u)) throw std::runtime_error("field file: malformed row at line " + std::to_string(lineno));
        times.push_back(t);
        values.push_back(u);
    }
    if (n_steps < 0) n_steps = static_cast<int>(values.size()) - 1;
    if (t_final == 0.0 && !times.empty()) t_final = times.back();
    ControlField f{t_final, n_steps, std::move(values)};
    f.validate();
    for (int i = 0; i <= n_steps; ++i) {
        if (std::abs(times[static_cast<std::size_t>(i)] - f.time(i)) > 1e-9 * std::max(1.0, t_final)) {
            throw std::runtime_error("field file: non-uniform grid at row " + std::to_string(i));
        }
    }
    if (header_out) *header_out = std::move(header);
    return f;
}

inline ControlField read_field(const std::string& path, FieldHeader* header_out = nullptr) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open field file: " + path);
    return read_field(is, header_out);
}

}  // namespace qcnoise
