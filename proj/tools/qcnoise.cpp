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

// qcnoise command-line driver.
//
//   qcnoise run --config configs/fig2.json
//   qcnoise sweep --config configs/fig3.json --set L=25 --threads 4
//   qcnoise field --config configs/fig1.json --out fields/
//
// Exit codes: 0 success (soft-target misses only warn), 2 invalid or
// missing config, 3 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcnoise/config.hpp"
#include "qcnoise/experiments.hpp"
#include "qcnoise/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config, "Experiment config (JSON)")->required();
    cmd->add_option("--set", a.overrides, "Override a config key, KEY=VALUE (repeatable)")->take_all();
    cmd->add_option("--seed", a.seed, "Master seed for noise realizations");
    cmd->add_option("--threads", a.threads, "Worker threads (default: all available)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", a.out, "Output directory (overrides config 'output')");
    cmd->add_flag("--dry-run", a.dry_run, "Validate the config and print it without computing");
}

std::filesystem::path resolve_output(const CommonArgs& a, const qcnoise::ExperimentConfig& cfg) {
    if (!a.out.empty()) return a.out;
    std::filesystem::path p = cfg.output;
    if (p.is_relative()) {
        if (const char* root = std::getenv("QCNOISE_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / p;
    }
    return p;
}

qcnoise::ExperimentConfig load(const CommonArgs& a, const std::string& forced_experiment, qcnoise::Json& echo) {
    qcnoise::Json doc = qcnoise::load_config_json(a.config);
    for (const auto& o : a.overrides) qcnoise::apply_override(doc, o);
    if (!forced_experiment.empty()) doc["experiment"] = forced_experiment;
    if (a.seed) doc["seed"] = *a.seed;
    if (a.threads) doc["threads"] = *a.threads;
    qcnoise::ExperimentConfig cfg = qcnoise::config_from_json(doc);
    echo = qcnoise::config_to_json(cfg);
    return cfg;
}

void print_summary(const qcnoise::ExperimentOutput& out) {
    using qcnoise::task_name;
    for (const auto& r : out.runs) {
        std::printf("%-40s 1-F = %.6e (se %.2e)  dP = %.6e (se %.2e)  predicted dP = %.6e\n", r.id.c_str(),
                    r.infidelity, r.se_infidelity, r.delta_p, r.se_delta_p, r.predicted_delta_p);
    }
    if (out.config.experiment == "trace") {
        for (const auto& ref : out.references) {
            std::printf("%-16s j=%-6g time-averaged P_su2 = %.6f  min = %.6f\n", task_name(ref.task), 0.5 * ref.two_j,
                        ref.time_avg_gp, ref.min_gp);
        }
    }
    for (const auto& f : out.fits) {
        std::printf("fit %-16s slope = %.4f  95%% CI [%.4f, %.4f]  (%d points, %s)\n", task_name(f.task), f.slope,
                    f.ci_low, f.ci_high, f.n_used, f.status.c_str());
    }
    for (const auto& c : out.contours) {
        std::printf("contour %-12s j=%g  monotone=%s  level %.3g: %s\n", task_name(c.task), 0.5 * c.two_j,
                    c.monotone ? "yes" : "no", c.level, c.curve_status.c_str());
    }
    if (out.calibrated_c_z) std::printf("calibrated c_z = %.17g\n", *out.calibrated_c_z);
}

int execute(const CommonArgs& a, const std::string& forced) {
    qcnoise::ExperimentConfig cfg;
    qcnoise::Json echo;
    try {
        cfg = load(a, forced, echo);
    } catch (const qcnoise::ConfigError& e) {
        std::cerr << "error: invalid config '" << a.config << "': " << e.what() << "\n";
        return kExitConfig;
    } catch (const qcnoise::Json::exception& e) {
        std::cerr << "error: invalid config '" << a.config << "': " << e.what() << "\n";
        return kExitConfig;
    }
    if (a.dry_run) {
        std::cout << echo.dump(2) << "\n";
        std::cout << "config ok; output would go to " << resolve_output(a, cfg).string() << "\n";
        return 0;
    }
    try {
        const qcnoise::ExperimentOutput out = qcnoise::run_experiment(cfg);
        const auto dir = resolve_output(a, cfg);
        qcnoise::write_experiment(dir, out, a.overrides);
        print_summary(out);
        for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
        std::printf("wrote %s\n", dir.string().c_str());
        return 0;
    } catch (const qcnoise::ConfigError& e) {
        std::cerr << "error: invalid config '" << a.config << "': " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << " (master seed " << cfg.seed << ")\n";
        return kExitRuntime;
    }
}

int write_fields(const CommonArgs& a) {
    qcnoise::ExperimentConfig cfg;
    qcnoise::Json echo;
    try {
        cfg = load(a, "", echo);
    } catch (const std::exception& e) {
        std::cerr << "error: invalid config '" << a.config << "': " << e.what() << "\n";
        return kExitConfig;
    }
    if (a.dry_run) {
        std::cout << echo.dump(2) << "\n";
        return 0;
    }
    try {
        const auto dir = resolve_output(a, cfg);
        std::filesystem::create_directories(dir);
        for (qcnoise::TaskKind task : cfg.tasks) {
            const qcnoise::FieldSpec& spec = cfg.field_for(task);
            const bool per_j = spec.generator == "local" && spec.design_j == 0.0;
            const std::vector<int> js = per_j ? cfg.two_j : std::vector<int>{cfg.two_j.front()};
            for (int tj : js) {
                const qcnoise::FieldResult f = qcnoise::build_field(spec, cfg, tj);
                std::string name = qcnoise::task_name(task);
                if (per_j) name += "_j" + qcnoise::spin_label(tj);
                const auto path = dir / (name + ".txt");
                qcnoise::write_field(path.string(), f.field, qcnoise::FieldHeader{f.generator, f.seed, f.params});
                std::printf("wrote %s", path.string().c_str());
                if (f.min_generalized_purity) std::printf("  (min P_su2 %.6f)", *f.min_generalized_purity);
                std::printf("\n");
                if (!f.purity_floor_met) std::cerr << "warning: " << name << " misses the purity floor\n";
            }
        }
        return 0;
    } catch (const qcnoise::ConfigError& e) {
        std::cerr << "error: invalid config '" << a.config << "': " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy state-to-state control experiments for the su(2) Bose-Hubbard dimer"};
    app.set_version_flag("--version", std::string(qcnoise::kVersion));
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        std::string forced;
    };
    const std::vector<Sub> subs = {
        {"run", "Run the experiment named in the config", ""},
        {"ensemble", "Noisy ensembles against the noiseless reference", "ensemble"},
        {"sweep", "Final infidelity versus system size with a log-log fit", "sweep"},
        {"contour", "Final infidelity on a (gamma_z, c_z) grid", "contour"},
        {"trace", "Noiseless generalized-purity traces", "trace"},
        {"bounds-audit", "Ensembles audited against the analytic bounds", "bounds-audit"},
    };
    std::vector<CommonArgs> args(subs.size() + 1);
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* c = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(c, args[i]);
        cmds.push_back(c);
    }
    CLI::App* field_cmd = app.add_subcommand("field", "Generate control-field files for the configured tasks");
    add_common(field_cmd, args.back());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (field_cmd->parsed()) return write_fields(args.back());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (cmds[i]->parsed()) return execute(args[i], subs[i].forced);
    }
    return kExitConfig;
}
