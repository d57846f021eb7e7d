#ifndef SIMWAVE_SWEEP_HPP
#define SIMWAVE_SWEEP_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "simwave/config.hpp"
#include "simwave/rng.hpp"

// Seeded Monte Carlo sweeps over one scenario dimension, with CSV output.

namespace simwave::sweep {

inline constexpr const char* csv_header =
    "sweep_kind,sweep_value,seed,layers_L,elems_per_layer_M,num_users_K,"
    "num_subbands_Nf,mode,spectral_efficiency_bpshz,goodput_bpshz,outer_iters,"
    "wall_ms,status";

struct ResultRow {
    std::string sweep_kind;
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    int layers = 0;
    int elems_per_layer = 0;
    int num_users = 0;
    int num_subbands = 0;
    std::string mode;
    double spectral_efficiency = 0.0;
    double goodput = 0.0;
    int outer_iters = 0;
    long long wall_ms = 0;
    std::string status = "ok";
};

struct SweepResult {
    std::vector<ResultRow> rows;
};

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const SweepResult& result) {
    out << csv_header << "\n";
    for (const ResultRow& r : result.rows) {
        out << r.sweep_kind << ',' << format_number(r.sweep_value) << ',' << r.seed
            << ',' << r.layers << ',' << r.elems_per_layer << ',' << r.num_users
            << ',' << r.num_subbands << ',' << r.mode << ','
            << format_number(r.spectral_efficiency) << ','
            << format_number(r.goodput) << ',' << r.outer_iters << ',' << r.wall_ms
            << ',' << r.status << "\n";
    }
}

namespace detail {

inline std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

// Square-grid surface for an element-count sweep value.
inline void apply_total_elements(cfg::AppConfig& a, int m_total) {
    const int side = static_cast<int>(std::lround(std::sqrt(double(m_total))));
    if (side * side != m_total) {
        throw config_error("element-count sweep values must be perfect squares");
    }
    a.surface.elements_x = side;
    a.surface.elements_y_total = side;
}

inline cfg::AppConfig apply_sweep_value(const cfg::AppConfig& base,
                                        cfg::SweepKind kind, double value) {
    cfg::AppConfig a = base;
    switch (kind) {
        case cfg::SweepKind::subbands:
            a.scenario.grid = chan::build_subband_grid(
                base.scenario.grid.center_frequency_fc,
                base.scenario.grid.total_bandwidth_B, static_cast<int>(value));
            break;
        case cfg::SweepKind::users:
            a.scenario.num_users_K = static_cast<int>(value);
            a.scenario.num_tx_Nt = static_cast<int>(value);
            break;
        case cfg::SweepKind::snr:
            a.scenario.noise_power_sigma2 = value;
            break;
        case cfg::SweepKind::bandwidth:
            a.scenario.grid = chan::build_subband_grid(
                base.scenario.grid.center_frequency_fc, value,
                base.scenario.grid.num_subbands_Nf);
            break;
        case cfg::SweepKind::goodput_elements:
            apply_total_elements(a, static_cast<int>(value));
            break;
        case cfg::SweepKind::freq_response:
        case cfg::SweepKind::convergence:
            break;  // value is not a scenario dimension for these kinds
    }
    a.scenario.stack = cfg::build_stack(a.surface, a.scenario.grid.center_frequency_fc);
    return a;
}

}  // namespace detail

struct CellOutcome {
    opt::OptimizerState state;
    chan::ChannelWorkspace workspace;
};

// One optimization for one (scenario, seed) cell.
inline CellOutcome run_cell(const cfg::AppConfig& a, std::uint64_t seed) {
    std::mt19937_64 rng = rng::make_engine(seed);
    const std::vector<chan::UserGeometry> users = chan::sample_users(a.scenario, rng);
    chan::ChannelWorkspace ws(a.scenario, users);
    opt::Hyper hy = a.hyper;
    hy.mode = a.sweep.optimizer_mode;
    opt::OptimizerState st = opt::alternating_optimize(ws, hy, rng);
    return CellOutcome{std::move(st), std::move(ws)};
}

inline int updated_elements(const cfg::AppConfig& a) {
    const int m = a.scenario.stack.elements_per_layer();
    return a.sweep.optimizer_mode == opt::Mode::last_layer_only
               ? m
               : a.scenario.stack.num_layers_L * m;
}

// Per-frequency spectral efficiency for a frozen configuration; each probe
// reuses the trained powers of the nearest training subband.
inline std::vector<std::pair<double, double>> freq_response(
    const cfg::AppConfig& a, const std::vector<chan::UserGeometry>& users,
    const net::PhaseVector& phases, const opt::PowerGrid& trained_p,
    const std::vector<double>& probe_frequencies) {
    std::vector<std::pair<double, double>> curve;
    const std::vector<double>& centers = a.scenario.grid.subband_centers;
    for (double f : probe_frequencies) {
        chan::ScenarioConfig probe_sc = a.scenario;
        probe_sc.grid = chan::build_subband_grid(f, 0.0, 1);
        chan::ChannelWorkspace ws(probe_sc, users);
        const chan::ChannelSet cs = ws.rebuild(phases);
        int nearest = 0;
        for (std::size_t i = 1; i < centers.size(); ++i) {
            if (std::abs(centers[i] - f) < std::abs(centers[nearest] - f)) {
                nearest = static_cast<int>(i);
            }
        }
        opt::PowerGrid p(1, trained_p.cols());
        p.row(0) = trained_p.row(nearest);
        const opt::SubbandEval ev =
            opt::eval_subband(cs.subbands[0], p.row(0), probe_sc.noise_power_sigma2);
        double se = 0.0;
        for (double s : ev.s) se += std::log2(1.0 + s);
        curve.emplace_back(f, se);
    }
    return curve;
}

// Full sweep: one row per (value, seed); failures become error rows.
inline SweepResult run_sweep(const cfg::AppConfig& base, bool record_timing = true) {
    const cfg::SweepSpec& spec = base.sweep;
    if (spec.values.empty()) throw config_error("sweep values must be non-empty");
    SweepResult result;

    for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
        for (int si = 0; si < spec.num_seeds; ++si) {
            // Probe frequencies share one realization per seed, so the value
            // index must not perturb the child seed for freq_response.
            const std::uint64_t seed =
                spec.kind == cfg::SweepKind::freq_response
                    ? rng::child_seed(spec.master_seed, 0, si)
                    : rng::child_seed(spec.master_seed, vi, si);
            ResultRow row;
            row.sweep_kind = cfg::to_string(spec.kind);
            row.sweep_value = spec.values[vi];
            row.seed = seed;
            row.mode = cfg::to_string(spec.optimizer_mode);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const cfg::AppConfig a =
                    detail::apply_sweep_value(base, spec.kind, spec.values[vi]);
                row.layers = a.scenario.stack.num_layers_L;
                row.elems_per_layer = a.scenario.stack.elements_per_layer();
                row.num_users = a.scenario.num_users_K;
                row.num_subbands = a.scenario.grid.num_subbands_Nf;

                if (spec.kind == cfg::SweepKind::convergence) {
                    const CellOutcome cell = run_cell(a, seed);
                    for (const auto& [round, j] : cell.state.objective_trace) {
                        ResultRow tr = row;
                        tr.sweep_value = round;
                        tr.spectral_efficiency = j;
                        tr.goodput =
                            metrics::goodput(j, updated_elements(a), a.goodput).goodput;
                        tr.outer_iters = cell.state.outer_iters;
                        if (record_timing) {
                            tr.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                             std::chrono::steady_clock::now() - t0)
                                             .count();
                        }
                        result.rows.push_back(tr);
                    }
                    continue;
                }
                if (spec.kind == cfg::SweepKind::freq_response) {
                    // value = probe frequency; one optimization per seed, shared
                    // across all probes of that seed, so probe cells re-run it.
                    std::mt19937_64 rng = rng::make_engine(seed);
                    const auto users = chan::sample_users(a.scenario, rng);
                    chan::ChannelWorkspace ws(a.scenario, users);
                    opt::Hyper hy = a.hyper;
                    hy.mode = spec.optimizer_mode;
                    const opt::OptimizerState st = opt::alternating_optimize(ws, hy, rng);
                    const auto curve = freq_response(a, users, st.phases, st.beams.p,
                                                     {spec.values[vi]});
                    row.spectral_efficiency = curve.front().second;
                    row.goodput = metrics::goodput(row.spectral_efficiency,
                                                   updated_elements(a), a.goodput)
                                      .goodput;
                    row.outer_iters = st.outer_iters;
                } else {
                    const CellOutcome cell = run_cell(a, seed);
                    row.spectral_efficiency = cell.state.objective;
                    row.goodput = metrics::goodput(row.spectral_efficiency,
                                                   updated_elements(a), a.goodput)
                                      .goodput;
                    row.outer_iters = cell.state.outer_iters;
                }
            } catch (const std::exception& e) {
                row.status = "error(" + detail::sanitize(e.what()) + ")";
            }
            if (record_timing) {
                row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            }
            result.rows.push_back(row);
        }
    }
    return result;
}

}  // namespace simwave::sweep

#endif  // SIMWAVE_SWEEP_HPP
