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

// Seeded Monte-Carlo experiments: ensembles of noisy realizations, scaling
// sweeps over j, noise-strength grids and noiseless purity traces.
//
// Realization l of every run uses seed derive_seed(master, l), whatever the
// task, j or noise strength. Runs that differ only in noise strength therefore
// share their standard normals (common random numbers), which is what makes
// the grid monotonicity test sharp.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qcnoise/algebra.hpp"
#include "qcnoise/bounds.hpp"
#include "qcnoise/control.hpp"
#include "qcnoise/dynamics.hpp"
#include "qcnoise/metrics.hpp"

namespace qcnoise {

enum class TaskKind { scs_to_scs, scs_to_non_scs };

inline const char* task_name(TaskKind t) { return t == TaskKind::scs_to_scs ? "scs_to_scs" : "scs_to_non_scs"; }

inline std::optional<TaskKind> parse_task(const std::string& s) {
    if (s == "scs_to_scs" || s == "easy") return TaskKind::scs_to_scs;
    if (s == "scs_to_non_scs" || s == "hard") return TaskKind::scs_to_non_scs;
    return std::nullopt;
}

/// How the control field of one task is obtained.
struct FieldSpec {
    std::string generator = "random";  // random | local | constant | file
    std::uint64_t seed = 1;
    int n_modes = 200;
    double u_max = 60.0;
    int n_candidates = 41;
    int horizon_steps = 300;
    int apply_steps = 20;
    double design_j = 0.0;  // local: spin used for the design; 0 designs at every j separately
    double value = 0.0;     // constant
    std::string path;       // file
};

inline FieldSpec local_field_defaults() {
    FieldSpec f;
    f.generator = "local";
    return f;
}

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& msg)
        : std::runtime_error(key.empty() ? msg : key + ": " + msg), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment = "ensemble";  // ensemble | sweep | contour | trace | bounds-audit
    std::vector<TaskKind> tasks{TaskKind::scs_to_non_scs};
    double delta = 15.0;
    std::optional<double> u_int;  // unset: U = 2 delta / j
    std::vector<int> two_j{40};
    double t_final = 10.0;
    int n_steps = 10000;
    int stride = 100;
    int realizations = 100;
    std::uint64_t seed = 1;
    std::vector<double> gamma_z{0.0};
    std::vector<double> c_z{0.0};
    double target_delta_p = 0.0;  // > 0: c_z is calibrated instead of taken from the list
    FieldSpec hard_field{};
    FieldSpec easy_field = local_field_defaults();
    std::string output = "out";
    double c_order = 1.0;
    double purity_floor = 0.9;
    double noise_floor = 1e-10;
    double contour_level = 0.01;
    int threads = 0;  // 0: all hardware threads

    void validate() const {
        static const char* kinds[] = {"ensemble", "sweep", "contour", "trace", "bounds-audit"};
        if (std::find(std::begin(kinds), std::end(kinds), experiment) == std::end(kinds)) {
            throw ConfigError("experiment", "unknown experiment '" + experiment +
                                                "' (expected ensemble, sweep, contour, trace or bounds-audit)");
        }
        if (tasks.empty()) throw ConfigError("task", "at least one task is required");
        if (!std::isfinite(delta)) throw ConfigError("delta", "must be finite");
        if (u_int && !std::isfinite(*u_int)) throw ConfigError("u_int", "must be finite");
        if (two_j.empty()) throw ConfigError("j", "list must be nonempty");
        for (int tj : two_j) {
            if (tj < 1) throw ConfigError("j", "every j must be > 0");
            if (tj + 1 > kMaxDim) throw ConfigError("j", "dimension exceeds " + std::to_string(kMaxDim));
            if (!u_int && tj == 0) throw ConfigError("u_int", "scaled interaction needs j > 0");
        }
        if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final", "must be > 0");
        if (n_steps < 1) throw ConfigError("n_steps", "must be >= 1");
        if (stride < 1) throw ConfigError("stride", "must be >= 1");
        if (realizations < 1) throw ConfigError("L", "must be >= 1");
        if (gamma_z.empty()) throw ConfigError("noise.gamma_z", "list must be nonempty");
        if (c_z.empty()) throw ConfigError("noise.c_z", "list must be nonempty");
        for (double g : gamma_z) {
            if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("noise.gamma_z", "rates must be finite and >= 0");
        }
        for (double c : c_z) {
            if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("noise.c_z", "coefficients must be finite and >= 0");
        }
        if (!(target_delta_p >= 0.0) || target_delta_p >= 1.0) {
            throw ConfigError("noise.target_delta_p", "must be in [0, 1)");
        }
        if (target_delta_p > 0.0 && experiment == "contour") {
            throw ConfigError("noise.target_delta_p", "calibration is not available for contour grids");
        }
        if (!(c_order > 0.0)) throw ConfigError("c_order", "must be > 0");
        if (!(noise_floor >= 0.0)) throw ConfigError("noise_floor", "must be >= 0");
        if (!(contour_level > 0.0)) throw ConfigError("contour_level", "must be > 0");
        if (threads < 0) throw ConfigError("threads", "must be >= 0");
        if (experiment == "sweep" && two_j.size() < 2) throw ConfigError("j", "a sweep needs at least two values");
        check_field("hard_field", hard_field);
        check_field("easy_field", easy_field);
    }

    ModelParams params_for(int tj) const {
        return ModelParams{delta, u_int ? *u_int : 2.0 * delta / (0.5 * tj), tj};
    }

    const FieldSpec& field_for(TaskKind t) const { return t == TaskKind::scs_to_scs ? easy_field : hard_field; }

private:
    static void check_field(const std::string& key, const FieldSpec& f) {
        if (f.generator == "random") {
            if (f.n_modes < 1) throw ConfigError(key + ".n_modes", "must be >= 1");
        } else if (f.generator == "local") {
            if (!(f.u_max > 0.0)) throw ConfigError(key + ".u_max", "must be > 0");
            if (f.n_candidates < 1) throw ConfigError(key + ".n_candidates", "must be >= 1");
            if (f.horizon_steps < 1) throw ConfigError(key + ".horizon_steps", "must be >= 1");
            if (f.apply_steps < 1) throw ConfigError(key + ".apply_steps", "must be >= 1");
            if (!(f.design_j >= 0.0) || std::abs(2.0 * f.design_j - std::round(2.0 * f.design_j)) > 1e-12) {
                throw ConfigError(key + ".design_j", "must be a nonnegative multiple of 1/2");
            }
        } else if (f.generator == "constant") {
            if (!std::isfinite(f.value)) throw ConfigError(key + ".value", "must be finite");
        } else if (f.generator == "file") {
            if (f.path.empty()) throw ConfigError(key + ".path", "required for generator 'file'");
        } else {
            throw ConfigError(key + ".generator",
                              "unknown generator '" + f.generator + "' (expected random, local, constant or file)");
        }
    }
};

/// splitmix64 finalizer applied to master + golden * (index + 1).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first
/// exception (lowest index among those thrown) is rethrown after all workers stop.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    int err_index = std::numeric_limits<int>::max();
    std::exception_ptr err;
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (int i = next++; i < n && !failed; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(mu);
                        if (i < err_index) {
                            err_index = i;
                            err = std::current_exception();
                        }
                        failed = true;
                    }
                }
            });
        }
    }
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Fields and noiseless references

struct FieldResult {
    ControlField field;
    std::string generator;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> params;
    std::optional<double> min_generalized_purity;  // local control only
    bool purity_floor_met = true;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Field for `spec` on the (t_final, n_steps) grid; `two_j` is the run's spin,
/// used by local control unless spec.design_j pins the design spin.
inline FieldResult build_field(const FieldSpec& spec, const ExperimentConfig& cfg, int two_j,
                               const std::string& key = "field") {
    FieldResult r;
    r.generator = spec.generator;
    if (spec.generator == "random") {
        r.field = random_field(cfg.t_final, spec.n_modes, cfg.n_steps, spec.seed);
        r.seed = spec.seed;
        r.params["n_modes"] = std::to_string(spec.n_modes);
    } else if (spec.generator == "constant") {
        r.field = ControlField::constant(cfg.t_final, cfg.n_steps, spec.value);
        r.params["value"] = detail::fmt17(spec.value);
    } else if (spec.generator == "file") {
        FieldHeader h;
        try {
            r.field = read_field(spec.path, &h);
        } catch (const std::exception& e) {
            throw ConfigError(key + ".path", e.what());
        }
        if (r.field.n_steps != cfg.n_steps || std::abs(r.field.t_final - cfg.t_final) > 1e-12 * cfg.t_final) {
            throw ConfigError(key + ".path", "grid of '" + spec.path + "' (T=" + detail::fmt17(r.field.t_final) +
                                                ", n_steps=" + std::to_string(r.field.n_steps) +
                                                ") does not match the configured grid");
        }
        r.seed = h.seed;
        r.params = h.params;
        r.params["source"] = spec.path;
    } else if (spec.generator == "local") {
        const int design = spec.design_j > 0.0 ? static_cast<int>(std::lround(2.0 * spec.design_j)) : two_j;
        const SpinRep rep = build_spin_rep(design);
        LocalControlOptions opt;
        opt.n_candidates = spec.n_candidates;
        opt.horizon_steps = spec.horizon_steps;
        opt.apply_steps = spec.apply_steps;
        opt.purity_floor = cfg.purity_floor;
        LocalControlResult lc = local_scs_control(scs_state(rep, 0.0, 0.0), rep, cfg.params_for(design), cfg.t_final,
                                                  cfg.n_steps, spec.u_max, opt);
        r.field = std::move(lc.field);
        r.min_generalized_purity = lc.min_generalized_purity;
        r.purity_floor_met = lc.purity_floor_met;
        r.params["u_max"] = detail::fmt17(spec.u_max);
        r.params["n_candidates"] = std::to_string(spec.n_candidates);
        r.params["horizon_steps"] = std::to_string(spec.horizon_steps);
        r.params["apply_steps"] = std::to_string(spec.apply_steps);
        r.params["design_j"] = detail::fmt17(0.5 * design);
    } else {
        throw ConfigError(key + ".generator", "unknown generator '" + spec.generator + "'");
    }
    return r;
}

/// Noiseless trajectory of one (task, j) pair and everything derived from it.
struct Reference {
    TaskKind task = TaskKind::scs_to_non_scs;
    int two_j = 0;
    SpinRep rep;
    ModelParams params;
    std::shared_ptr<const FieldResult> field;
    QuantumState psi_i;
    StateTrajectory trajectory;        // snapshots
    std::vector<double> grid_var_x;    // Var_X at every grid point
    std::vector<double> snap_var_x;
    std::vector<double> snap_gp;
    std::vector<double> snap_uncertainty;
    double time_avg_gp = 0.0;          // trapezoid over the full grid
    double min_gp = 1.0;
    QuasiDistanceResult qd;

    const QuantumState& target() const { return trajectory.back(); }
    double lambda() const { return static_cast<double>(two_j); }  // max |eig| of 2 J_z
    double min_var_x() const { return *std::min_element(snap_var_x.begin(), snap_var_x.end()); }
};

inline Reference make_reference(TaskKind task, int two_j, const ExperimentConfig& cfg,
                                std::shared_ptr<const FieldResult> field) {
    Reference ref;
    ref.task = task;
    ref.two_j = two_j;
    ref.rep = build_spin_rep(two_j);
    ref.params = cfg.params_for(two_j);
    ref.field = std::move(field);
    ref.psi_i = scs_state(ref.rep, 0.0, 0.0);
    const ControlField& f = ref.field->field;
    const RVector x = control_diagonal(ref.rep);
    ref.grid_var_x.assign(static_cast<std::size_t>(f.n_steps) + 1, 0.0);
    double gp_prev = 0.0, gp_sum = 0.0;
    PropagationOptions opt;
    opt.stride = cfg.stride;
    ref.trajectory = propagate_deterministic(ref.psi_i, f, ref.rep, ref.params, opt, [&](int k, const CVector& psi) {
        ref.grid_var_x[static_cast<std::size_t>(k)] = variance_diagonal(psi, x);
        const double gp = generalized_purity_fast(psi, ref.rep);
        if (k > 0) gp_sum += 0.5 * (gp + gp_prev);
        gp_prev = gp;
        ref.min_gp = std::min(ref.min_gp, gp);
    });
    ref.time_avg_gp = gp_sum / f.n_steps;
    const double casimir = ref.rep.casimir();
    for (const auto& s : ref.trajectory.states) {
        ref.snap_var_x.push_back(variance_diagonal(s.amplitudes, x));
        const double sq = spin_expectations_fast(s.amplitudes, ref.rep).squaredNorm();
        ref.snap_gp.push_back(sq / (ref.rep.j() * ref.rep.j()));
        ref.snap_uncertainty.push_back(casimir - sq);
    }
    ref.qd = quasi_distance(ref.psi_i, ref.target(), build_drift(ref.params, ref.rep));
    return ref;
}

/// int_0^t 4 Gamma(s) Var_X[psi_ref(s)] ds (trapezoid on the grid), sampled at the snapshot steps.
inline std::vector<double> predicted_loss(const Reference& ref, const NoiseSpec& noise, int stride) {
    const ControlField& f = ref.field->field;
    const std::vector<int> snaps = snapshot_steps(f.n_steps, stride);
    std::vector<double> out;
    out.reserve(snaps.size());
    double acc = 0.0, prev = 0.0;
    std::size_t next = 0;
    for (int k = 0; k <= f.n_steps; ++k) {
        const double v = 4.0 * noise.rate(f.samples[static_cast<std::size_t>(k)]) * ref.grid_var_x[static_cast<std::size_t>(k)];
        if (k > 0) acc += 0.5 * (v + prev) * f.dt();
        prev = v;
        if (next < snaps.size() && snaps[next] == k) {
            out.push_back(acc);
            ++next;
        }
    }
    return out;
}

/// Relative coefficient c for which the first-order purity loss at T equals
/// `target` given the static rate gamma_z.
inline double calibrate_relative_noise(const Reference& ref, double gamma_z, double target, int stride) {
    const double from_static = predicted_loss(ref, NoiseSpec{gamma_z, 0.0}, stride).back();
    const double per_c = predicted_loss(ref, NoiseSpec{0.0, 1.0}, stride).back();
    if (per_c <= 0.0) throw ExperimentError("calibration impossible: field never couples to a state with Var_X > 0");
    if (from_static >= target) {
        throw ExperimentError("calibration impossible: static dephasing alone already exceeds target_delta_p");
    }
    return (target - from_static) / per_c;
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleResult {
    TaskKind task = TaskKind::scs_to_non_scs;
    int two_j = 0;
    NoiseSpec noise;
    std::string id;

    std::vector<double> t, purity, fidelity, var_x, gp_su2, se_purity, se_fidelity, predicted, gap, se_gap;

    double infidelity = 0.0;     // 1 - F at T, against the designated target
    double se_infidelity = 0.0;
    double delta_p = 0.0;        // 1 - Tr rho^2 at T
    double se_delta_p = 0.0;
    double predicted_delta_p = 0.0;
    double time_avg_gp = 0.0;    // of the noiseless reference
    std::vector<double> final_infidelities;  // per realization, index order
    std::vector<std::uint64_t> seeds;
    BoundReport bounds;

    std::vector<StateTrajectory> realizations;  // only with keep_realizations
};

struct EnsembleOptions {
    int threads = 0;
    bool keep_realizations = false;
};

namespace detail {

/// Jackknife standard error from leave-one-out estimates.
inline double jackknife_se(const std::vector<double>& loo) {
    const std::size_t n = loo.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace detail

/// L noisy realizations against a noiseless reference.
///
/// Purity is estimated as the mean of |<psi_l|psi_m>|^2 over distinct pairs,
/// which is unbiased for Tr rho^2 of the L -> infinity mixture. The plug-in
/// Tr rho_L^2 would add the self-overlaps and overstate purity by (1 - P) / L.
/// Standard errors of purity and of 2 (1 - F) - (1 - P) are jackknife
/// estimates (L >= 3); fidelity errors are the usual std / sqrt(L).
inline EnsembleResult run_ensemble(const Reference& ref, const NoiseSpec& noise, int n_real, std::uint64_t master_seed,
                                   int stride, const EnsembleOptions& opt = {}) {
    noise.validate();
    if (n_real < 1) throw std::invalid_argument("run_ensemble: need at least one realization");
    EnsembleResult res;
    res.task = ref.task;
    res.two_j = ref.two_j;
    res.noise = noise;
    res.seeds.resize(static_cast<std::size_t>(n_real));
    for (int l = 0; l < n_real; ++l) res.seeds[static_cast<std::size_t>(l)] = derive_seed(master_seed, static_cast<std::uint64_t>(l));

    std::vector<StateTrajectory> trajs(static_cast<std::size_t>(n_real));
    PropagationOptions popt;
    popt.stride = stride;
    parallel_for(n_real, resolve_threads(opt.threads), [&](int l) {
        const std::uint64_t seed = res.seeds[static_cast<std::size_t>(l)];
        try {
            trajs[static_cast<std::size_t>(l)] =
                propagate_realization(ref.psi_i, ref.field->field, noise, ref.rep, ref.params, seed, popt);
        } catch (const std::exception& e) {
            throw ExperimentError(std::string("realization ") + std::to_string(l) + " (seed " + std::to_string(seed) +
                                  ", j=" + detail::fmt17(0.5 * ref.two_j) + ", task " + task_name(ref.task) +
                                  ") failed: " + e.what());
        }
    });
    if (trajs.front().times != ref.trajectory.times) {
        throw ExperimentError("run_ensemble: reference was recorded with a different stride");
    }

    const std::size_t n_snap = ref.trajectory.size();
    const int dim = ref.rep.dim;
    const double inv_l = 1.0 / n_real;
    res.predicted = predicted_loss(ref, noise, stride);
    CMatrix psi(dim, n_real);
    std::vector<double> loo_p(static_cast<std::size_t>(n_real)), loo_gap(static_cast<std::size_t>(n_real));
    std::vector<double> fl(static_cast<std::size_t>(n_real));
    for (std::size_t s = 0; s < n_snap; ++s) {
        for (int l = 0; l < n_real; ++l) psi.col(l) = trajs[static_cast<std::size_t>(l)].states[s].amplitudes;
        const Eigen::MatrixXd gram = (psi.adjoint() * psi).cwiseAbs2();
        const Eigen::VectorXd rows = gram.rowwise().sum();
        const double diag = gram.diagonal().sum();
        const double off = rows.sum() - diag;  // sum over l != m of |<psi_l|psi_m>|^2
        const CVector ovl = psi.adjoint() * ref.trajectory.states[s].amplitudes;
        double fsum = 0.0;
        for (int l = 0; l < n_real; ++l) {
            fl[static_cast<std::size_t>(l)] = std::norm(ovl[l]);
            fsum += fl[static_cast<std::size_t>(l)];
        }
        const double p = n_real > 1 ? off / (static_cast<double>(n_real) * (n_real - 1)) : diag;
        const double f = fsum * inv_l;
        double fvar = 0.0;
        for (double v : fl) fvar += (v - f) * (v - f);
        const double se_f = n_real > 1 ? std::sqrt(fvar / (n_real - 1) / n_real) : 0.0;
        const bool jack = n_real > 2;
        if (jack) {
            const double m = n_real - 1.0;
            for (int l = 0; l < n_real; ++l) {
                const double p_l = (off - 2.0 * (rows[l] - gram(l, l))) / (m * (m - 1.0));
                const double f_l = (fsum - fl[static_cast<std::size_t>(l)]) / m;
                loo_p[static_cast<std::size_t>(l)] = p_l;
                loo_gap[static_cast<std::size_t>(l)] = 1.0 - 2.0 * f_l + p_l;
            }
        }
        res.t.push_back(ref.trajectory.times[s]);
        res.purity.push_back(p);
        res.fidelity.push_back(f);
        res.var_x.push_back(ref.snap_var_x[s]);
        res.gp_su2.push_back(ref.snap_gp[s]);
        res.se_purity.push_back(jack ? detail::jackknife_se(loo_p) : 0.0);
        res.se_fidelity.push_back(se_f);
        res.gap.push_back(1.0 - 2.0 * f + p);  // 2 (1 - F) - (1 - P)
        res.se_gap.push_back(jack ? detail::jackknife_se(loo_gap) : 0.0);
        if (s + 1 == n_snap) {
            res.final_infidelities.resize(fl.size());
            for (std::size_t l = 0; l < fl.size(); ++l) res.final_infidelities[l] = 1.0 - fl[l];
        }
    }
    res.infidelity = 1.0 - res.fidelity.back();
    res.se_infidelity = res.se_fidelity.back();
    res.delta_p = 1.0 - res.purity.back();
    res.se_delta_p = res.se_purity.back();
    res.predicted_delta_p = res.predicted.back();
    res.time_avg_gp = ref.time_avg_gp;
    res.bounds = make_bound_report(ref.qd, ref.field->field, noise, ref.lambda(), ref.min_var_x(),
                                   std::max(res.delta_p, 0.0));
    if (opt.keep_realizations) res.realizations = std::move(trajs);
    return res;
}

/// rho(t) averaged over the kept realizations.
inline DensityTrajectory ensemble_density(const EnsembleResult& r) {
    if (r.realizations.empty()) throw std::invalid_argument("ensemble_density: realizations were not kept");
    return ensemble_average(r.realizations);
}

// ---------------------------------------------------------------------------
// Scaling fits

struct ScalingFit {
    TaskKind task = TaskKind::scs_to_non_scs;
    NoiseSpec noise;
    std::vector<double> n_size, infidelity, se;
    std::vector<bool> used;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double se_slope = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    int n_used = 0;
    bool ok = false;
    std::string status;
};

/// Least-squares slope of log(1 - F) against log N, N = 2j. Points at or below
/// `noise_floor` are excluded; the 95% interval propagates the Monte-Carlo
/// errors through the fit (delta method on the logs).
inline ScalingFit fit_scaling(std::vector<double> n_size, std::vector<double> infid, std::vector<double> se,
                              double noise_floor) {
    if (n_size.size() != infid.size() || n_size.size() != se.size()) {
        throw std::invalid_argument("fit_scaling: length mismatch");
    }
    ScalingFit fit;
    std::vector<double> x, y, sy;
    for (std::size_t i = 0; i < n_size.size(); ++i) {
        const bool use = infid[i] > noise_floor && n_size[i] > 0.0;
        fit.used.push_back(use);
        if (!use) continue;
        x.push_back(std::log(n_size[i]));
        y.push_back(std::log(infid[i]));
        sy.push_back(se[i] / infid[i]);
    }
    fit.n_size = std::move(n_size);
    fit.infidelity = std::move(infid);
    fit.se = std::move(se);
    fit.n_used = static_cast<int>(x.size());
    if (fit.n_used < 2) {
        fit.status = "fit refused: " + std::to_string(fit.n_used) + " point(s) above the noise floor";
        return fit;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        fit.status = "fit refused: all N identical";
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = (x[i] - mx) / sxx;
        var += w * w * sy[i] * sy[i];
    }
    fit.se_slope = std::sqrt(var);
    fit.ci_low = fit.slope - 1.96 * fit.se_slope;
    fit.ci_high = fit.slope + 1.96 * fit.se_slope;
    fit.ok = true;
    fit.status = "ok";
    return fit;
}

// ---------------------------------------------------------------------------
// Noise grids

struct ContourResult {
    TaskKind task = TaskKind::scs_to_non_scs;
    int two_j = 0;
    std::vector<double> gamma_z, c_z;
    std::vector<std::vector<double>> infidelity, se;  // [gamma index][c index]
    double level = 0.01;
    std::vector<std::pair<double, double>> level_points;  // (gamma_z, c_z) crossings
    bool monotone = false;
    std::vector<std::string> monotonicity_violations;
    bool single_curve = false;
    std::string curve_status;
};

namespace detail {

inline int count_component(const std::vector<std::vector<bool>>& mask, int r0, int c0) {
    const int nr = static_cast<int>(mask.size()), nc = static_cast<int>(mask[0].size());
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(nr), std::vector<bool>(static_cast<std::size_t>(nc)));
    std::queue<std::pair<int, int>> q;
    q.push({r0, c0});
    seen[static_cast<std::size_t>(r0)][static_cast<std::size_t>(c0)] = true;
    int n = 0;
    while (!q.empty()) {
        auto [r, c] = q.front();
        q.pop();
        ++n;
        const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int rr = r + dr[d], cc = c + dc[d];
            if (rr < 0 || cc < 0 || rr >= nr || cc >= nc) continue;
            if (seen[static_cast<std::size_t>(rr)][static_cast<std::size_t>(cc)]) continue;
            if (!mask[static_cast<std::size_t>(rr)][static_cast<std::size_t>(cc)]) continue;
            seen[static_cast<std::size_t>(rr)][static_cast<std::size_t>(cc)] = true;
            q.push({rr, cc});
        }
    }
    return n;
}

}  // namespace detail

/// Monotonicity and level-set analysis of a (gamma_z x c_z) grid of runs.
/// `cells[g][c]` must share realization seeds so paired differences apply.
inline ContourResult analyze_contour(const std::vector<double>& gammas, const std::vector<double>& cs,
                                     const std::vector<std::vector<const EnsembleResult*>>& cells, double level) {
    ContourResult out;
    out.gamma_z = gammas;
    out.c_z = cs;
    out.level = level;
    const std::size_t ng = gammas.size(), nc = cs.size();
    out.infidelity.assign(ng, std::vector<double>(nc));
    out.se.assign(ng, std::vector<double>(nc));
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t c = 0; c < nc; ++c) {
            out.infidelity[g][c] = cells[g][c]->infidelity;
            out.se[g][c] = cells[g][c]->se_infidelity;
        }
    }
    if (!cells.empty() && !cells[0].empty()) {
        out.task = cells[0][0]->task;
        out.two_j = cells[0][0]->two_j;
    }

    // paired standard error of a difference between two cells
    auto diff_se = [](const EnsembleResult& a, const EnsembleResult& b) {
        const auto& x = a.final_infidelities;
        const auto& y = b.final_infidelities;
        const std::size_t n = std::min(x.size(), y.size());
        if (n < 2) return 0.0;
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += y[i] - x[i];
        m /= n;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (y[i] - x[i] - m) * (y[i] - x[i] - m);
        return std::sqrt(ss / (n - 1) / n);
    };
    auto check = [&](std::size_t g0, std::size_t c0, std::size_t g1, std::size_t c1) {
        const double d = out.infidelity[g1][c1] - out.infidelity[g0][c0];
        const double tol = 3.0 * diff_se(*cells[g0][c0], *cells[g1][c1]);
        if (d < -tol) {
            out.monotonicity_violations.push_back("(" + std::to_string(g0) + "," + std::to_string(c0) + ")->(" +
                                                  std::to_string(g1) + "," + std::to_string(c1) + ") drops by " +
                                                  detail::fmt17(-d) + " > 3 SE " + detail::fmt17(tol));
        }
    };
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t c = 0; c + 1 < nc; ++c) check(g, c, g, c + 1);
    }
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t g = 0; g + 1 < ng; ++g) check(g, c, g + 1, c);
    }
    out.monotone = out.monotonicity_violations.empty();

    // crossings along grid edges
    auto interp = [&](double a, double b, double fa, double fb) { return a + (level - fa) / (fb - fa) * (b - a); };
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t c = 0; c < nc; ++c) {
            const double f = out.infidelity[g][c];
            if (c + 1 < nc) {
                const double f2 = out.infidelity[g][c + 1];
                if ((f < level) != (f2 < level)) out.level_points.push_back({gammas[g], interp(cs[c], cs[c + 1], f, f2)});
            }
            if (g + 1 < ng) {
                const double f2 = out.infidelity[g + 1][c];
                if ((f < level) != (f2 < level)) out.level_points.push_back({interp(gammas[g], gammas[g + 1], f, f2), cs[c]});
            }
        }
    }
    // order along the arc: by angle in grid-normalized coordinates
    const double gs = std::max(gammas.back() - gammas.front(), 1e-300);
    const double css = std::max(cs.back() - cs.front(), 1e-300);
    std::stable_sort(out.level_points.begin(), out.level_points.end(), [&](const auto& a, const auto& b) {
        return std::atan2(a.second / css, a.first / gs) < std::atan2(b.second / css, b.first / gs);
    });

    // The level set is one curve when the sublevel region holds the origin
    // corner and both it and its complement are connected.
    std::vector<std::vector<bool>> below(ng, std::vector<bool>(nc)), above(ng, std::vector<bool>(nc));
    int n_below = 0, n_above = 0;
    int ar = -1, ac = -1;
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t c = 0; c < nc; ++c) {
            below[g][c] = out.infidelity[g][c] < level;
            above[g][c] = !below[g][c];
            if (below[g][c]) {
                ++n_below;
            } else {
                ++n_above;
                if (ar < 0) {
                    ar = static_cast<int>(g);
                    ac = static_cast<int>(c);
                }
            }
        }
    }
    if (ng < 2 || nc < 2) {
        out.curve_status = "grid must be at least 2 x 2";
    } else if (n_below == 0) {
        out.curve_status = "level exceeded everywhere; no curve inside the grid";
    } else if (n_above == 0) {
        out.curve_status = "level not reached on the grid";
    } else if (!below[0][0]) {
        out.curve_status = "origin cell is above the level";
    } else if (detail::count_component(below, 0, 0) != n_below) {
        out.curve_status = "sublevel region is disconnected";
    } else if (detail::count_component(above, ar, ac) != n_above) {
        out.curve_status = "superlevel region is disconnected";
    } else {
        out.single_curve = true;
        out.curve_status = "single curve";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Experiment driver

struct ExperimentOutput {
    ExperimentConfig config;  // effective, after calibration
    std::vector<std::shared_ptr<const FieldResult>> fields;
    std::vector<std::string> field_ids;
    std::vector<Reference> references;
    std::vector<EnsembleResult> runs;
    std::vector<ScalingFit> fits;
    std::vector<ContourResult> contours;
    std::vector<std::string> warnings;
    std::optional<double> calibrated_c_z;
};

inline std::string spin_label(int two_j) {
    return two_j % 2 == 0 ? std::to_string(two_j / 2) : std::to_string(two_j) + "_2";
}

/// Builds fields and noiseless references for every (task, j).
inline void prepare_references(const ExperimentConfig& cfg, ExperimentOutput& out) {
    for (TaskKind task : cfg.tasks) {
        const FieldSpec& spec = cfg.field_for(task);
        const std::string key = task == TaskKind::scs_to_scs ? "easy_field" : "hard_field";
        const bool per_j = spec.generator == "local" && spec.design_j == 0.0;
        std::shared_ptr<const FieldResult> shared;
        for (int tj : cfg.two_j) {
            std::shared_ptr<const FieldResult> f;
            if (per_j) {
                f = std::make_shared<FieldResult>(build_field(spec, cfg, tj, key));
                out.fields.push_back(f);
                out.field_ids.push_back(std::string(task_name(task)) + "_j" + spin_label(tj));
            } else {
                if (!shared) {
                    shared = std::make_shared<FieldResult>(build_field(spec, cfg, tj, key));
                    out.fields.push_back(shared);
                    out.field_ids.push_back(task_name(task));
                }
                f = shared;
            }
            if (f->min_generalized_purity && !f->purity_floor_met) {
                out.warnings.push_back(std::string("local control for ") + task_name(task) + " missed the purity floor " +
                                       detail::fmt17(cfg.purity_floor) + " (min " +
                                       detail::fmt17(*f->min_generalized_purity) + ")");
            }
            out.references.push_back(make_reference(task, tj, cfg, f));
        }
    }
}

inline std::string run_id(const EnsembleResult& r, std::size_t gi, std::size_t ci) {
    return std::string(task_name(r.task)) + "_j" + spin_label(r.two_j) + "_g" + std::to_string(gi) + "_c" +
           std::to_string(ci);
}

/// Executes the configured experiment. Pure computation; see io.hpp for files.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg_in, const EnsembleOptions& eopt = {}) {
    cfg_in.validate();
    ExperimentOutput out;
    out.config = cfg_in;
    ExperimentConfig& cfg = out.config;
    prepare_references(cfg, out);

    if (cfg.experiment == "trace") {
        for (const Reference& ref : out.references) {
            if (ref.task == TaskKind::scs_to_non_scs) continue;
            if (ref.min_gp < cfg.purity_floor) {
                out.warnings.push_back("scs_to_scs trace at j=" + detail::fmt17(0.5 * ref.two_j) +
                                       " dips below the purity floor (min " + detail::fmt17(ref.min_gp) + ")");
            }
        }
        return out;
    }

    if (cfg.target_delta_p > 0.0) {
        const double c = calibrate_relative_noise(out.references.front(), cfg.gamma_z.front(), cfg.target_delta_p,
                                                  cfg.stride);
        cfg.c_z = {c};
        out.calibrated_c_z = c;
    }

    EnsembleOptions opt = eopt;
    if (opt.threads == 0) opt.threads = cfg.threads;
    for (const Reference& ref : out.references) {
        for (std::size_t g = 0; g < cfg.gamma_z.size(); ++g) {
            for (std::size_t c = 0; c < cfg.c_z.size(); ++c) {
                EnsembleResult r =
                    run_ensemble(ref, NoiseSpec{cfg.gamma_z[g], cfg.c_z[c]}, cfg.realizations, cfg.seed, cfg.stride, opt);
                r.id = run_id(r, g, c);
                out.runs.push_back(std::move(r));
            }
        }
    }

    auto find_run = [&](TaskKind task, int tj, std::size_t g, std::size_t c) -> const EnsembleResult& {
        const std::size_t per_ref = cfg.gamma_z.size() * cfg.c_z.size();
        for (std::size_t r = 0; r < out.references.size(); ++r) {
            if (out.references[r].task == task && out.references[r].two_j == tj) {
                return out.runs[r * per_ref + g * cfg.c_z.size() + c];
            }
        }
        throw std::logic_error("run not found");
    };

    if (cfg.experiment == "sweep") {
        for (TaskKind task : cfg.tasks) {
            for (std::size_t g = 0; g < cfg.gamma_z.size(); ++g) {
                for (std::size_t c = 0; c < cfg.c_z.size(); ++c) {
                    std::vector<double> n, y, se;
                    for (int tj : cfg.two_j) {
                        const EnsembleResult& r = find_run(task, tj, g, c);
                        n.push_back(tj);
                        y.push_back(r.infidelity);
                        se.push_back(r.se_infidelity);
                    }
                    ScalingFit fit = fit_scaling(n, y, se, cfg.noise_floor);
                    fit.task = task;
                    fit.noise = NoiseSpec{cfg.gamma_z[g], cfg.c_z[c]};
                    if (!fit.ok) out.warnings.push_back(std::string(task_name(task)) + ": " + fit.status);
                    out.fits.push_back(std::move(fit));
                }
            }
        }
    } else if (cfg.experiment == "contour") {
        for (TaskKind task : cfg.tasks) {
            for (int tj : cfg.two_j) {
                std::vector<std::vector<const EnsembleResult*>> cells(cfg.gamma_z.size());
                for (std::size_t g = 0; g < cfg.gamma_z.size(); ++g) {
                    for (std::size_t c = 0; c < cfg.c_z.size(); ++c) cells[g].push_back(&find_run(task, tj, g, c));
                }
                ContourResult cr = analyze_contour(cfg.gamma_z, cfg.c_z, cells, cfg.contour_level);
                if (!cr.monotone) out.warnings.push_back("noise grid is not monotone within 3 SE");
                if (!cr.single_curve) out.warnings.push_back("level set: " + cr.curve_status);
                out.contours.push_back(std::move(cr));
            }
        }
    } else if (cfg.experiment == "bounds-audit") {
        for (const EnsembleResult& r : out.runs) {
            const BoundReport& b = r.bounds;
            if (!b.time_bound_ok) out.warnings.push_back(r.id + ": T below the minimum-time bound");
            if (!b.purity_bound_ok) out.warnings.push_back(r.id + ": purity loss below 0.9 x lower bound");
            if (!b.pointwise_noise_ok) out.warnings.push_back(r.id + ": pointwise dephasing inequality violated");
        }
    }
    return out;
}

}  // namespace qcnoise
