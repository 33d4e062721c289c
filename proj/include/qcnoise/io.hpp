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

// Output directory layout for one experiment:
//
//   meta.json                  effective config, seeds, version, warnings
//   summary.csv                one row per run (or per trace)
//   bounds.csv                 one BoundReport per run
//   ensemble.csv               single-run experiments
//   runs/<id>/ensemble.csv     multi-run experiments
//   fit.csv                    sweep
//   contour.csv, level_set.csv contour
//   trace.csv                  trace
//   fields/<id>.txt            control fields
//
// Files depend only on the config and seeds, never on timing or thread count.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "qcnoise/config.hpp"
#include "qcnoise/experiments.hpp"

namespace qcnoise {

/// Comma-separated writer with 17-significant-digit floats.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : os_(path, std::ios::binary) {
        if (!os_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }

    void header(std::initializer_list<const char*> cols) {
        bool first = true;
        for (const char* c : cols) {
            if (!first) os_ << ',';
            os_ << c;
            first = false;
        }
        os_ << '\n';
    }

    CsvWriter& field(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return raw(buf);
    }
    CsvWriter& field(int v) { return raw(std::to_string(v)); }
    CsvWriter& field(bool v) { return raw(v ? "1" : "0"); }
    CsvWriter& field(const std::string& v) { return raw(v); }
    CsvWriter& field(const char* v) { return raw(v); }

    void end_row() {
        os_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(const std::string& s) {
        if (!first_) os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }

    std::ofstream os_;
    bool first_ = true;
};

inline void write_ensemble_csv(const std::filesystem::path& path, const EnsembleResult& r) {
    CsvWriter w(path);
    w.header({"t", "purity", "fidelity", "var_X", "gp_su2", "se_purity", "se_fidelity", "predicted_loss"});
    for (std::size_t s = 0; s < r.t.size(); ++s) {
        w.field(r.t[s]).field(r.purity[s]).field(r.fidelity[s]).field(r.var_x[s]).field(r.gp_su2[s]);
        w.field(r.se_purity[s]).field(r.se_fidelity[s]).field(r.predicted[s]);
        w.end_row();
    }
}

namespace detail {

inline void bounds_header(CsvWriter& w) {
    w.header({"id", "t_final", "delta_r_norm", "u_bar", "gamma_bar", "lambda", "min_variance", "t_min",
              "purity_loss_lb", "delta_p", "noise_ratio", "noise_ratio_ub", "time_bound_ok", "purity_bound_ok",
              "pointwise_noise_ok", "noise_condition_ok", "generic_premise", "small_loss"});
}

inline void bounds_row(CsvWriter& w, const std::string& id, const BoundReport& b) {
    w.field(id).field(b.t_final).field(b.delta_r_norm).field(b.u_bar).field(b.gamma_bar).field(b.lambda);
    w.field(b.min_variance).field(b.t_min).field(b.purity_loss_lb).field(b.delta_p).field(b.noise_ratio);
    w.field(b.noise_ratio_ub).field(b.time_bound_ok).field(b.purity_bound_ok).field(b.pointwise_noise_ok);
    w.field(b.noise_condition_ok).field(b.generic_premise).field(b.small_loss);
    w.end_row();
}

}  // namespace detail

/// Writes every output file of `out` into `dir` (created if needed).
inline void write_experiment(const std::filesystem::path& dir, const ExperimentOutput& out,
                             const std::vector<std::string>& overrides = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const ExperimentConfig& cfg = out.config;

    fs::create_directories(dir / "fields");
    for (std::size_t i = 0; i < out.fields.size(); ++i) {
        const FieldResult& f = *out.fields[i];
        FieldHeader h{f.generator, f.seed, f.params};
        write_field((dir / "fields" / (out.field_ids[i] + ".txt")).string(), f.field, h);
    }

    if (cfg.experiment == "trace") {
        CsvWriter tr(dir / "trace.csv");
        tr.header({"task", "j", "t", "gp_su2", "total_uncertainty", "var_X"});
        CsvWriter sm(dir / "summary.csv");
        sm.header({"task", "j", "N", "time_avg_gp", "min_gp", "delta_r_norm"});
        CsvWriter bd(dir / "bounds.csv");
        detail::bounds_header(bd);
        for (const Reference& ref : out.references) {
            const double j = 0.5 * ref.two_j;
            for (std::size_t s = 0; s < ref.trajectory.size(); ++s) {
                tr.field(task_name(ref.task)).field(j).field(ref.trajectory.times[s]).field(ref.snap_gp[s]);
                tr.field(ref.snap_uncertainty[s]).field(ref.snap_var_x[s]);
                tr.end_row();
            }
            sm.field(task_name(ref.task)).field(j).field(ref.two_j).field(ref.time_avg_gp).field(ref.min_gp);
            sm.field(ref.qd.norm);
            sm.end_row();
            const BoundReport b =
                make_bound_report(ref.qd, ref.field->field, NoiseSpec{}, ref.lambda(), ref.min_var_x(), 0.0);
            detail::bounds_row(bd, std::string(task_name(ref.task)) + "_j" + spin_label(ref.two_j), b);
        }
    } else {
        const bool single = out.runs.size() == 1;
        for (const EnsembleResult& r : out.runs) {
            fs::path p = dir;
            if (!single) {
                p = dir / "runs" / r.id;
                fs::create_directories(p);
            }
            write_ensemble_csv(p / "ensemble.csv", r);
        }
        CsvWriter sm(dir / "summary.csv");
        sm.header({"id", "task", "j", "N", "gamma_z", "c_z", "L", "infidelity", "se_infidelity", "delta_p", "se_delta_p",
                   "predicted_delta_p", "time_avg_gp"});
        CsvWriter bd(dir / "bounds.csv");
        detail::bounds_header(bd);
        for (const EnsembleResult& r : out.runs) {
            sm.field(r.id).field(task_name(r.task)).field(0.5 * r.two_j).field(r.two_j).field(r.noise.gamma_static);
            sm.field(r.noise.c_rel).field(static_cast<int>(r.seeds.size())).field(r.infidelity).field(r.se_infidelity);
            sm.field(r.delta_p).field(r.se_delta_p).field(r.predicted_delta_p).field(r.time_avg_gp);
            sm.end_row();
            detail::bounds_row(bd, r.id, r.bounds);
        }
    }

    if (!out.fits.empty()) {
        CsvWriter w(dir / "fit.csv");
        w.header({"task", "gamma_z", "c_z", "slope", "intercept", "se_slope", "ci_low", "ci_high", "n_used", "status"});
        for (const ScalingFit& f : out.fits) {
            w.field(task_name(f.task)).field(f.noise.gamma_static).field(f.noise.c_rel).field(f.slope).field(f.intercept);
            w.field(f.se_slope).field(f.ci_low).field(f.ci_high).field(f.n_used).field(f.status);
            w.end_row();
        }
    }

    if (!out.contours.empty()) {
        CsvWriter w(dir / "contour.csv");
        w.header({"task", "j", "gamma_index", "c_index", "gamma_z", "c_z", "infidelity", "se_infidelity"});
        CsvWriter ls(dir / "level_set.csv");
        ls.header({"task", "j", "level", "gamma_z", "c_z"});
        for (const ContourResult& c : out.contours) {
            for (std::size_t g = 0; g < c.gamma_z.size(); ++g) {
                for (std::size_t k = 0; k < c.c_z.size(); ++k) {
                    w.field(task_name(c.task)).field(0.5 * c.two_j).field(static_cast<int>(g)).field(static_cast<int>(k));
                    w.field(c.gamma_z[g]).field(c.c_z[k]).field(c.infidelity[g][k]).field(c.se[g][k]);
                    w.end_row();
                }
            }
            for (const auto& [g, cz] : c.level_points) {
                ls.field(task_name(c.task)).field(0.5 * c.two_j).field(c.level).field(g).field(cz);
                ls.end_row();
            }
        }
    }

    Json meta;
    meta["version"] = kVersion;
    meta["config"] = config_to_json(cfg);
    meta["overrides"] = overrides;
    meta["seed_derivation"] = "realization l uses splitmix64(master + 0x9E3779B97F4A7C15 * (l + 1))";
    std::vector<std::uint64_t> seeds;
    for (int l = 0; l < cfg.realizations; ++l) seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(l)));
    meta["seeds"] = {{"master", cfg.seed}, {"realizations", seeds}};
    if (out.calibrated_c_z) meta["calibrated_c_z"] = *out.calibrated_c_z;
    Json fields = Json::object();
    for (std::size_t i = 0; i < out.fields.size(); ++i) {
        const FieldResult& f = *out.fields[i];
        Json fj{{"generator", f.generator}, {"seed", f.seed}, {"params", f.params}};
        if (f.min_generalized_purity) {
            fj["min_generalized_purity"] = *f.min_generalized_purity;
            fj["purity_floor_met"] = f.purity_floor_met;
        }
        fields[out.field_ids[i]] = fj;
    }
    meta["fields"] = fields;
    if (!out.contours.empty()) {
        Json cs = Json::array();
        for (const ContourResult& c : out.contours) {
            cs.push_back({{"task", task_name(c.task)},
                          {"j", 0.5 * c.two_j},
                          {"monotone", c.monotone},
                          {"monotonicity_violations", c.monotonicity_violations},
                          {"single_curve", c.single_curve},
                          {"curve_status", c.curve_status}});
        }
        meta["contours"] = cs;
    }
    meta["warnings"] = out.warnings;
    std::ofstream os(dir / "meta.json", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write meta.json in '" + dir.string() + "'");
    os << meta.dump(2) << '\n';
}

}  // namespace qcnoise
