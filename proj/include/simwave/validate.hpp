#ifndef SIMWAVE_VALIDATE_HPP
#define SIMWAVE_VALIDATE_HPP

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "simwave/channel.hpp"
#include "simwave/config.hpp"
#include "simwave/optimizer.hpp"
#include "simwave/rng.hpp"

// Cross-module invariant suite behind the `validate` subcommand. The same
// checks back the acceptance tests; here they run against freshly drawn
// random instances.

namespace simwave::validate {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst error or margin observed
    std::string detail;
};

struct Report {
    std::vector<CheckResult> checks;
    bool all_passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return true;
    }
};

namespace detail {

inline net::SimStack small_stack(int layers, int mx, int my) {
    net::SimStack stack;
    stack.num_layers_L = layers;
    stack.layer_geometry.nx = mx;
    stack.layer_geometry.ny = my;
    stack.layer_geometry.dx = 5.56e-3;
    stack.layer_geometry.dy = 5.56e-3;
    stack.layer_spacing = 5.56e-3;
    return stack;
}

inline double rel_err(const Matrix& got, const Matrix& want) {
    const double denom = want.norm();
    if (denom == 0.0) return got.norm();
    return (got - want).norm() / denom;
}

}  // namespace detail

// Block solver vs dense inversion on small instances.
inline CheckResult check_block_solver(std::mt19937_64& rng) {
    CheckResult r{.name = "block solver vs dense inverse"};
    double worst = 0.0;
    std::uniform_real_distribution<double> freq(20e9, 34e9);
    for (int layers : {1, 2, 3}) {
        for (int m : {1, 2, 4}) {
            net::SimStack stack = detail::small_stack(layers, m, 1);
            for (int trial = 0; trial < 3; ++trial) {
                const double f = freq(rng);
                net::PhaseVector pv = opt::random_phases(stack.total_elements(), rng);
                const net::SimBlocks blocks = net::assemble_sim_blocks(stack, pv, f);
                const net::GBlocks fast = net::compute_g_blocks(blocks);
                const net::GBlocks dense = net::dense_g_blocks(blocks);
                for (int b = 0; b < 2 * layers; ++b) {
                    worst = std::max(worst, detail::rel_err(fast.first_column[b],
                                                            dense.first_column[b]));
                    worst = std::max(worst, detail::rel_err(fast.last_row[b],
                                                            dense.last_row[b]));
                }
            }
        }
    }
    r.measured = worst;
    r.passed = worst < 1e-10;
    return r;
}

// Idealized decoupled matched blocks reduce to the product form.
inline CheckResult check_conventional_reduction(std::mt19937_64& rng) {
    CheckResult r{.name = "conventional-model reduction"};
    double worst = 0.0;
    for (int layers : {1, 2, 3}) {
        net::SimStack stack = detail::small_stack(layers, 2, 2);
        for (int trial = 0; trial < 10; ++trial) {
            net::PhaseVector pv = opt::random_phases(stack.total_elements(), rng);
            const double f = 27e9;
            const net::SimBlocks ideal = net::idealized_blocks(stack, pv, f);
            const net::GBlocks g = net::compute_g_blocks(ideal);
            const Matrix product = net::conventional_reduction_oracle(stack, pv, f);
            worst = std::max(worst, detail::rel_err(g.transmissive_block(), product));
        }
    }
    r.measured = worst;
    r.passed = worst < 1e-10;
    return r;
}

// Analytical objective gradient vs central finite differences.
inline CheckResult check_gradient(std::mt19937_64& rng, int num_coords) {
    CheckResult r{.name = "objective gradient vs finite differences"};
    cfg::AppConfig a = cfg::default_config();
    a.surface.num_layers = 2;
    a.surface.elements_x = 2;
    a.surface.elements_y_total = 4;
    a.scenario.num_users_K = 2;
    a.scenario.num_tx_Nt = 2;
    a.scenario.grid = chan::build_subband_grid(27e9, 15e9, 2);
    a.scenario.stack = cfg::build_stack(a.surface, 27e9);
    const auto users = chan::sample_users(a.scenario, rng);
    chan::ChannelWorkspace ws(a.scenario, users);
    net::PhaseVector pv = opt::random_phases(a.scenario.stack.total_elements(), rng);
    const int nf = a.scenario.grid.num_subbands_Nf;
    opt::PowerGrid p = opt::PowerGrid::Constant(
        nf, a.scenario.num_users_K,
        a.scenario.total_power_P / (nf * a.scenario.num_users_K));
    const double sigma2 = a.scenario.noise_power_sigma2;

    const chan::ChannelSet cs = ws.rebuild(pv);
    const RealVector grad = opt::objective_gradient(cs, p, sigma2, pv,
                                                    a.scenario.stack);
    const double step = 1e-6;
    double worst = 0.0;
    std::uniform_int_distribution<int> pick(0, pv.size() - 1);
    int checked = 0;
    for (int t = 0; t < num_coords * 4 && checked < num_coords; ++t) {
        const int idx = pick(rng);
        if (std::abs(grad[idx]) < 1e-8) continue;
        net::PhaseVector plus = pv, minus = pv;
        plus.phases[idx] += step;
        minus.phases[idx] -= step;
        const double jp = opt::objective_value(ws.rebuild(plus), p, sigma2);
        const double jm = opt::objective_value(ws.rebuild(minus), p, sigma2);
        const double fd = (jp - jm) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - grad[idx]) / std::abs(grad[idx]));
        ++checked;
    }
    r.measured = worst;
    r.detail = std::to_string(checked) + " coordinates";
    r.passed = checked > 0 && worst < 1e-4;
    return r;
}

// Water-filling KKT conditions on random gain vectors.
inline CheckResult check_waterfill(std::mt19937_64& rng, int trials) {
    CheckResult r{.name = "water-filling KKT"};
    std::uniform_real_distribution<double> gain(0.0, 4.0);
    std::uniform_int_distribution<int> len(1, 24);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int n = len(rng);
        RealVector g(n);
        for (int i = 0; i < n; ++i) {
            g[i] = (gain(rng) < 0.4) ? 0.0 : gain(rng);
        }
        const double p_total = 1.0 + gain(rng);
        const opt::WaterFillResult wf = opt::water_fill(g, p_total);
        if (wf.all_zero_gains) continue;
        worst = std::max(worst, std::abs(wf.p.sum() - p_total) / p_total);
        for (int i = 0; i < n; ++i) {
            if (wf.p[i] > 0.0) {
                const double level = wf.p[i] + 1.0 / g[i];
                worst = std::max(worst,
                                 std::abs(level - wf.water_level) / wf.water_level);
            } else if (g[i] > 0.0) {
                // inactive entries must sit at or below the water level
                worst = std::max(worst, (wf.water_level - 1.0 / g[i]) / wf.water_level);
            }
        }
    }
    r.measured = worst;
    r.passed = worst < 1e-9;
    return r;
}

// Determinant-form and whitened-form rates agree.
inline CheckResult check_rate_identity(std::mt19937_64& rng, int trials) {
    CheckResult r{.name = "rate identity (determinant vs whitened)"};
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 4);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int k = dim(rng), nt = dim(rng), nf = dim(rng);
        chan::ChannelSet cs;
        cs.subbands.resize(nf);
        opt::PowerGrid p(nf, k);
        for (int i = 0; i < nf; ++i) {
            cs.subbands[i].h.resize(k, nt);
            for (int a = 0; a < k; ++a) {
                for (int b = 0; b < nt; ++b) {
                    cs.subbands[i].h(a, b) = Complex(gauss(rng), gauss(rng));
                }
                p(i, a) = std::abs(gauss(rng));
            }
        }
        const double sigma2 = 0.5;
        const double whitened = opt::objective_value(cs, p, sigma2);
        const double det_form = opt::sum_rate_det_bps_hz(cs, p, sigma2);
        worst = std::max(worst, std::abs(whitened - det_form) /
                                    std::max(std::abs(det_form), 1e-12));
    }
    r.measured = worst;
    r.passed = worst < 1e-9;
    return r;
}

// Passivity, reciprocity and far-field scaling laws.
inline CheckResult check_physics(std::mt19937_64& rng) {
    CheckResult r{.name = "physics invariants"};
    em::AntennaParams ant;
    std::uniform_real_distribution<double> freq(1e9, 60e9);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double f = freq(rng);
        if (em::self_impedance(f, ant).real() <= 0.0) {
            r.detail = "passivity violated";
            return r;
        }
    }
    em::ArrayGeometry geom;
    geom.nx = 3;
    geom.ny = 2;
    const Matrix z = em::assemble_coupling(27e9, geom, geom, ant).entries;
    worst = std::max(worst, (z - z.transpose()).cwiseAbs().maxCoeff());

    // H2 row-norm scaling: distance d^{-alpha/2} and gain sqrt(GS*GR)
    cfg::AppConfig a = cfg::default_config();
    a.surface.elements_x = 2;
    a.surface.elements_y_total = 2;
    a.scenario.stack = cfg::build_stack(a.surface, 27e9);
    a.scenario.num_users_K = 1;
    a.scenario.num_tx_Nt = 1;
    std::mt19937_64 r2 = rng;
    auto users = chan::sample_users(a.scenario, r2);
    const Vector z11 =
        net::layer_coupling(a.scenario.stack, 27e9).intra.diagonal();
    const double n1 =
        chan::far_field_transimpedance(a.scenario, users, 27e9, z11).row(0).norm();
    users[0].distance_dRS *= 2.0;
    const double n2 =
        chan::far_field_transimpedance(a.scenario, users, 27e9, z11).row(0).norm();
    worst = std::max(worst, std::abs(n1 / n2 - std::pow(2.0, a.scenario.path_loss_alpha / 2.0)));
    users[0].gain_GS = 4.0;
    users[0].gain_GR = 9.0;
    const double n3 =
        chan::far_field_transimpedance(a.scenario, users, 27e9, z11).row(0).norm();
    worst = std::max(worst, std::abs(n3 / n2 - 6.0) / 6.0);

    r.measured = worst;
    r.passed = worst < 1e-9;
    return r;
}

// Singularity guard on the phase-shifter load block.
inline CheckResult check_singularity_guard() {
    CheckResult r{.name = "phase singularity guard"};
    try {
        net::phase_to_load_block(1e-9, 50.0);
        r.detail = "guard missing";
        return r;
    } catch (const numerical_error&) {
    }
    try {
        net::local_impedance_gradient(constants::pi + 1e-9, 50.0);
        r.detail = "guard missing";
        return r;
    } catch (const numerical_error&) {
    }
    r.passed = true;
    return r;
}

enum class Level { fast, full };

inline Report run(Level level, std::uint64_t seed = 20260824ULL) {
    std::mt19937_64 rng = rng::make_engine(seed);
    Report rep;
    rep.checks.push_back(check_block_solver(rng));
    rep.checks.push_back(check_conventional_reduction(rng));
    rep.checks.push_back(check_waterfill(rng, level == Level::full ? 1000 : 200));
    rep.checks.push_back(check_rate_identity(rng, level == Level::full ? 100 : 30));
    rep.checks.push_back(check_physics(rng));
    rep.checks.push_back(check_singularity_guard());
    rep.checks.push_back(check_gradient(rng, level == Level::full ? 100 : 12));
    return rep;
}

inline void print_report(std::ostream& out, const Report& rep) {
    for (const auto& c : rep.checks) {
        out << (c.passed ? "PASS" : "FAIL") << "  " << c.name
            << "  (measured " << c.measured;
        if (!c.detail.empty()) out << ", " << c.detail;
        out << ")\n";
    }
    out << (rep.all_passed() ? "all checks passed" : "CHECKS FAILED") << "\n";
}

}  // namespace simwave::validate

#endif  // SIMWAVE_VALIDATE_HPP
