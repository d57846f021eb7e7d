#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simwave/config.hpp"
#include "simwave/metrics.hpp"
#include "simwave/sweep.hpp"
#include "simwave/validate.hpp"

namespace {

using namespace simwave;

constexpr int exit_ok = 0;
constexpr int exit_config_error = 1;
constexpr int exit_numerical_error = 2;
constexpr int exit_validation_failure = 3;

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<double> values;
    int num_seeds = 0;
    std::string mode;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "TOML config file");
    cmd->add_option("--out", o.out_path, "output CSV path (default stdout)");
    cmd->add_option("--seed", o.seed, "master seed override")
        ->each([&o](const std::string&) { o.seed_set = true; });
    cmd->add_option("--values", o.values, "sweep value override");
    cmd->add_option("--num-seeds", o.num_seeds, "Monte Carlo runs per value");
    cmd->add_option("--mode", o.mode,
                    "optimizer mode: full, last-layer-only, uniform-power, "
                    "random-phase");
}

std::vector<double> default_values(cfg::SweepKind kind, const cfg::AppConfig& a) {
    switch (kind) {
        case cfg::SweepKind::subbands: return {1, 5, 15};
        case cfg::SweepKind::users: return {2, 4, 6, 8};
        case cfg::SweepKind::snr: return {1e-5, 1e-6, 1e-7, 1e-8};
        case cfg::SweepKind::bandwidth: return {5e9, 10e9, 15e9};
        case cfg::SweepKind::goodput_elements: return {16, 36, 64, 100};
        case cfg::SweepKind::convergence: return {0};
        case cfg::SweepKind::freq_response: {
            const double fc = a.scenario.grid.center_frequency_fc;
            const double b = a.scenario.grid.total_bandwidth_B;
            std::vector<double> probes;
            const int n = 21;
            for (int i = 0; i < n; ++i) {
                probes.push_back(fc - b / 2.0 + i * b / (n - 1));
            }
            return probes;
        }
    }
    return {};
}

cfg::AppConfig load_with_overrides(const CommonOpts& o, const cfg::SweepKind* kind) {
    cfg::AppConfig a = o.config_path.empty() ? cfg::default_config()
                                             : cfg::load_config_file(o.config_path);
    if (kind != nullptr) a.sweep.kind = *kind;
    if (o.seed_set) a.sweep.master_seed = o.seed;
    if (!o.values.empty()) a.sweep.values = o.values;
    if (o.num_seeds > 0) a.sweep.num_seeds = o.num_seeds;
    if (!o.mode.empty()) {
        a.hyper.mode = cfg::mode_from_string(o.mode);
        a.sweep.optimizer_mode = a.hyper.mode;
    }
    if (a.sweep.values.empty()) a.sweep.values = default_values(a.sweep.kind, a);
    return a;
}

void emit_csv(const CommonOpts& o, const sweep::SweepResult& result) {
    if (o.out_path.empty()) {
        sweep::write_csv(std::cout, result);
        return;
    }
    std::ofstream out(o.out_path);
    if (!out) throw config_error("cannot open output file: " + o.out_path);
    sweep::write_csv(out, result);
}

int run_sweep_command(const CommonOpts& o, const cfg::SweepKind* kind) {
    const cfg::AppConfig a = load_with_overrides(o, kind);
    if (a.sweep.kind == cfg::SweepKind::snr) {
        for (double s2 : a.sweep.values) {
            std::cerr << "sigma2 = " << s2
                      << " W -> SNR = " << a.scenario.total_power_P / s2 << "\n";
        }
    }
    const sweep::SweepResult result = sweep::run_sweep(a);
    emit_csv(o, result);
    for (const auto& row : result.rows) {
        if (row.status != "ok") return exit_numerical_error;
    }
    return exit_ok;
}

int run_validate(bool full) {
    const auto level = full ? validate::Level::full : validate::Level::fast;
    const validate::Report rep = validate::run(level);
    validate::print_report(std::cout, rep);
    return rep.all_passed() ? exit_ok : exit_validation_failure;
}

int run_complexity(const CommonOpts& o, double ip1, double ip2, bool partial) {
    const cfg::AppConfig a = load_with_overrides(o, nullptr);
    const metrics::ComplexityCounts c = metrics::complexity_estimate(
        a.scenario.stack.num_layers_L, a.scenario.stack.elements_per_layer(),
        a.scenario.num_tx_Nt, a.scenario.num_users_K,
        a.scenario.grid.num_subbands_Nf, ip1, ip2, partial);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!o.out_path.empty()) {
        file.open(o.out_path);
        if (!file) throw config_error("cannot open output file: " + o.out_path);
        out = &file;
    }
    *out << "term,operations\n";
    for (int i = 1; i <= 13; ++i) {
        *out << 'B' << i << ',' << sweep::format_number(c.b[i]) << "\n";
    }
    *out << "total," << sweep::format_number(c.total) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wideband multi-user MIMO downlink simulator for stacked and "
                 "single-layer reconfigurable metasurfaces"};
    app.require_subcommand(1);

    struct SweepCmd {
        const char* name;
        const char* help;
        bool force_kind;
        cfg::SweepKind kind;
    };
    const std::vector<SweepCmd> sweep_cmds = {
        {"run", "run the sweep configured in the config file", false,
         cfg::SweepKind::subbands},
        {"sweep-subbands", "sweep the number of subbands", true,
         cfg::SweepKind::subbands},
        {"sweep-users", "sweep the number of users", true, cfg::SweepKind::users},
        {"sweep-snr", "sweep the noise power", true, cfg::SweepKind::snr},
        {"sweep-bandwidth", "sweep the total bandwidth", true,
         cfg::SweepKind::bandwidth},
        {"freq-response", "probe spectral efficiency across frequency", true,
         cfg::SweepKind::freq_response},
        {"sweep-goodput", "sweep the element count with goodput accounting", true,
         cfg::SweepKind::goodput_elements},
        {"convergence", "emit the per-round objective trace", true,
         cfg::SweepKind::convergence},
    };

    std::vector<CommonOpts> opts(sweep_cmds.size());
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < sweep_cmds.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(sweep_cmds[i].name, sweep_cmds[i].help);
        add_common(cmd, opts[i]);
        cmds.push_back(cmd);
    }

    bool full = false;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "run the cross-module invariant suite");
    validate_cmd->add_flag("--full", full, "extended checks");

    CommonOpts complexity_opts;
    double ip1 = 1.0, ip2 = 1.0;
    bool partial = false;
    CLI::App* complexity_cmd =
        app.add_subcommand("complexity", "per-step operation-count estimate");
    add_common(complexity_cmd, complexity_opts);
    complexity_cmd->add_option("--ip1", ip1, "power-allocation iteration count");
    complexity_cmd->add_option("--ip2", ip2, "phase-gradient iteration count");
    complexity_cmd->add_flag("--partial", partial, "last-layer-only accounting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config_error;
    }

    try {
        for (std::size_t i = 0; i < sweep_cmds.size(); ++i) {
            if (cmds[i]->parsed()) {
                const cfg::SweepKind kind = sweep_cmds[i].kind;
                return run_sweep_command(opts[i],
                                         sweep_cmds[i].force_kind ? &kind : nullptr);
            }
        }
        if (validate_cmd->parsed()) return run_validate(full);
        if (complexity_cmd->parsed()) {
            return run_complexity(complexity_opts, ip1, ip2, partial);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical_error;
    }
    return exit_config_error;
}
