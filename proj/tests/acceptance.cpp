// Acceptance suite: one line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "simwave/config.hpp"
#include "simwave/metrics.hpp"
#include "simwave/optimizer.hpp"
#include "simwave/rng.hpp"
#include "simwave/validate.hpp"

using namespace simwave;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

double rel_err(const Matrix& got, const Matrix& want) {
    return (got - want).norm() / want.norm();
}

net::SimStack make_stack(int layers, int mx, int my) {
    net::SimStack stack;
    stack.num_layers_L = layers;
    stack.layer_geometry.nx = mx;
    stack.layer_geometry.ny = my;
    stack.layer_spacing = 5.56e-3;
    return stack;
}

chan::ScenarioConfig make_scenario(int layers, int mx, int my, int users, int nf) {
    chan::ScenarioConfig sc;
    sc.stack = make_stack(layers, mx, my);
    sc.stack.layer_spacing = 0.5 * constants::speed_of_light / 27e9;
    sc.grid = chan::build_subband_grid(27e9, 15e9, nf);
    sc.num_users_K = users;
    sc.num_tx_Nt = users;
    return sc;
}

// 1. Block solver vs dense inversion, (L, M) grid, 1e-10 relative.
Outcome criterion_block_solver() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> freq(20e9, 34e9);
    double worst = 0.0;
    for (int layers : {1, 2, 3}) {
        for (int m : {1, 2, 4}) {
            const net::SimStack stack = make_stack(layers, m, 1);
            for (int trial = 0; trial < 3; ++trial) {
                const net::PhaseVector pv =
                    opt::random_phases(stack.total_elements(), rng);
                const net::SimBlocks blocks =
                    net::assemble_sim_blocks(stack, pv, freq(rng));
                const net::GBlocks fast = net::compute_g_blocks(blocks);
                const net::GBlocks dense = net::dense_g_blocks(blocks);
                for (int b = 0; b < 2 * layers; ++b) {
                    worst = std::max(worst,
                                     rel_err(fast.first_column[b], dense.first_column[b]));
                    worst = std::max(worst, rel_err(fast.last_row[b], dense.last_row[b]));
                }
            }
        }
    }
    return {worst < 1e-10, "worst relative error " + std::to_string(worst)};
}

// 2. Idealized reduction to the cascade product, L in {1,2,3}, M = 4.
Outcome criterion_reduction() {
    std::mt19937_64 rng(102);
    double worst = 0.0;
    for (int layers : {1, 2, 3}) {
        const net::SimStack stack = make_stack(layers, 2, 2);
        for (int trial = 0; trial < 10; ++trial) {
            const net::PhaseVector pv = opt::random_phases(stack.total_elements(), rng);
            const net::GBlocks g =
                net::compute_g_blocks(net::idealized_blocks(stack, pv, 27e9));
            worst = std::max(worst,
                             rel_err(g.transmissive_block(),
                                     net::conventional_reduction_oracle(stack, pv, 27e9)));
        }
    }
    return {worst < 1e-10, "worst relative error " + std::to_string(worst)};
}

// 3. Analytical gradient vs central finite differences, >= 100 coordinates.
Outcome criterion_gradient() {
    chan::ScenarioConfig sc = make_scenario(2, 4, 2, 2, 3);  // M = 8 per layer
    std::mt19937_64 rng(103);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);
    const opt::PowerGrid p = opt::PowerGrid::Constant(
        3, 2, sc.total_power_P / 6.0);
    const double sigma2 = sc.noise_power_sigma2;
    const double step = 1e-6;
    double worst = 0.0;
    int checked = 0;
    for (int draw = 0; draw < 10 && checked < 100; ++draw) {
        const net::PhaseVector pv =
            opt::random_phases(sc.stack.total_elements(), rng);
        const RealVector grad =
            opt::objective_gradient(ws.rebuild(pv), p, sigma2, pv, sc.stack);
        for (int idx = 0; idx < pv.size() && checked < 100; ++idx) {
            if (std::abs(grad[idx]) < 1e-8) continue;
            net::PhaseVector plus = pv, minus = pv;
            plus.phases[idx] += step;
            minus.phases[idx] -= step;
            const double fd = (opt::objective_value(ws.rebuild(plus), p, sigma2) -
                               opt::objective_value(ws.rebuild(minus), p, sigma2)) /
                              (2.0 * step);
            worst = std::max(worst, std::abs(fd - grad[idx]) / std::abs(grad[idx]));
            ++checked;
        }
    }
    return {checked >= 100 && worst <= 1e-4,
            std::to_string(checked) + " coordinates, worst relative error " +
                std::to_string(worst)};
}

// 4. Water-filling KKT audit on 1000 random gain vectors.
Outcome criterion_waterfill() {
    RealVector two(2);
    two << 1.0, 0.5;
    const opt::WaterFillResult pinned = opt::water_fill(two, 1.0);
    if (std::abs(pinned.p[0] - 1.0) > 1e-12 || pinned.p[1] != 0.0) {
        return {false, "pinned two-gain case failed"};
    }
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> gain(0.0, 4.0);
    std::uniform_int_distribution<int> len(1, 30);
    double worst_budget = 0.0, worst_level = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len(rng);
        RealVector g(n);
        for (int i = 0; i < n; ++i) g[i] = gain(rng) < 0.4 ? 0.0 : gain(rng);
        const double p_total = 0.5 + gain(rng);
        const opt::WaterFillResult wf = opt::water_fill(g, p_total);
        if (wf.all_zero_gains) continue;
        worst_budget = std::max(worst_budget,
                                std::abs(wf.p.sum() - p_total) / p_total);
        for (int i = 0; i < n; ++i) {
            if (wf.p[i] > 0.0) {
                worst_level = std::max(
                    worst_level,
                    std::abs(wf.p[i] + 1.0 / g[i] - wf.water_level) / wf.water_level);
            } else if (g[i] > 0.0 && 1.0 / g[i] < wf.water_level) {
                worst_level = std::max(
                    worst_level, (wf.water_level - 1.0 / g[i]) / wf.water_level);
            }
        }
    }
    return {worst_budget < 1e-12 && worst_level < 1e-9,
            "budget defect " + std::to_string(worst_budget) + ", level defect " +
                std::to_string(worst_level)};
}

// 5. Determinant vs whitened rate on 100 random instances.
Outcome criterion_rate_identity() {
    std::mt19937_64 rng(105);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> pw(0.0, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
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
                p(i, a) = pw(rng);
            }
        }
        const double a = opt::objective_value(cs, p, 0.5);
        const double b = opt::sum_rate_det_bps_hz(cs, p, 0.5);
        worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-12));
    }
    return {worst < 1e-9, "worst relative error " + std::to_string(worst)};
}

// 6. AO monotone trace and stopping rule on a K=2, M_total=16, L=2, Nf=3 run.
Outcome criterion_ao() {
    chan::ScenarioConfig sc = make_scenario(2, 4, 2, 2, 3);
    std::mt19937_64 rng(106);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);
    opt::Hyper hy;  // default caps and epsilon = 1e-7
    const opt::OptimizerState st = opt::alternating_optimize(ws, hy, rng);
    bool monotone = true;
    for (std::size_t i = 1; i < st.objective_trace.size(); ++i) {
        if (st.objective_trace[i].second <
            st.objective_trace[i - 1].second - 1e-9) {
            monotone = false;
        }
    }
    return {monotone && st.converged,
            std::string(monotone ? "monotone trace" : "NON-MONOTONE trace") +
                ", converged=" + (st.converged ? "yes" : "no") + " after " +
                std::to_string(st.outer_iters) + " rounds, J=" +
                std::to_string(st.objective)};
}

struct TrainResult {
    net::PhaseVector phases;
    double objective = 0.0;
};

TrainResult train(const chan::ScenarioConfig& sc,
                  const std::vector<chan::UserGeometry>& users, opt::Mode mode,
                  std::uint64_t seed, const opt::Hyper& caps) {
    const chan::ChannelWorkspace ws(sc, users);
    opt::Hyper hy = caps;
    hy.mode = mode;
    std::mt19937_64 engine = rng::make_engine(seed);
    const opt::OptimizerState st = opt::alternating_optimize(ws, hy, engine);
    return {st.phases, st.objective};
}

// 7. Rate vs training subband count, evaluated on a fixed fine grid.
Outcome criterion_subband_trend() {
    const int nf_eval = 30;
    const std::vector<int> nf_train = {1, 5, 15, 20};
    opt::Hyper caps;
    caps.outer_max_iters = 2;
    caps.p2_max_iters = 120;
    caps.epsilon = 1e-5;

    std::vector<double> mean(nf_train.size(), 0.0);
    for (int si = 0; si < 10; ++si) {
        const std::uint64_t seed = rng::child_seed(7001, 0, si);
        chan::ScenarioConfig base = make_scenario(1, 6, 6, 3, 1);  // M_total = 36
        std::mt19937_64 urng = rng::make_engine(seed);
        const auto users = chan::sample_users(base, urng);

        chan::ScenarioConfig eval_sc = base;
        eval_sc.grid = chan::build_subband_grid(27e9, 15e9, nf_eval);
        const chan::ChannelWorkspace eval_ws(eval_sc, users);
        const opt::PowerGrid p_eval = opt::PowerGrid::Constant(
            nf_eval, base.num_users_K,
            base.total_power_P / (nf_eval * base.num_users_K));

        for (std::size_t vi = 0; vi < nf_train.size(); ++vi) {
            chan::ScenarioConfig sc = base;
            sc.grid = chan::build_subband_grid(27e9, 15e9, nf_train[vi]);
            const TrainResult tr =
                train(sc, users, opt::Mode::uniform_power, seed, caps);
            mean[vi] += opt::objective_value(eval_ws.rebuild(tr.phases), p_eval,
                                             base.noise_power_sigma2) / 10.0;
        }
    }
    const bool rising = mean[0] <= mean[1] + 1e-9 && mean[1] <= mean[2] + 1e-9;
    const bool saturated = mean[3] / mean[2] - 1.0 < 0.05;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "mean rate %.3f -> %.3f -> %.3f -> %.3f bps/Hz over Nf 1/5/15/20",
                  mean[0], mean[1], mean[2], mean[3]);
    return {rising && saturated, buf};
}

// 8. Stacked (L = 2) vs single layer (L = 1) at K = 8 and K = 2, M_total = 36.
Outcome criterion_layer_tradeoff() {
    opt::Hyper caps;
    caps.outer_max_iters = 2;
    caps.p2_max_iters = 120;
    caps.epsilon = 1e-5;

    auto run_pair = [&](int users_k, int si, double& ris, double& sim) {
        const std::uint64_t seed = rng::child_seed(7002, users_k, si);
        chan::ScenarioConfig sc1 = make_scenario(1, 6, 6, users_k, 15);
        std::mt19937_64 urng = rng::make_engine(seed);
        const auto users = chan::sample_users(sc1, urng);
        ris = train(sc1, users, opt::Mode::uniform_power, seed, caps).objective;
        chan::ScenarioConfig sc2 = make_scenario(2, 6, 3, users_k, 15);
        sim = train(sc2, users, opt::Mode::uniform_power, seed, caps).objective;
    };

    int sim_wins_k8 = 0;
    double mean_ris2 = 0.0, mean_sim2 = 0.0;
    for (int si = 0; si < 10; ++si) {
        double ris = 0.0, sim = 0.0;
        run_pair(8, si, ris, sim);
        if (sim > ris) ++sim_wins_k8;
        double ris2 = 0.0, sim2 = 0.0;
        run_pair(2, si, ris2, sim2);
        mean_ris2 += ris2 / 10.0;
        mean_sim2 += sim2 / 10.0;
    }
    const bool k8_ok = sim_wins_k8 >= 7;
    const bool k2_ok = mean_ris2 >= mean_sim2 * (1.0 - 5e-3);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "K=8 stacked wins %d/10; K=2 mean single %.3f vs stacked %.3f bps/Hz",
                  sim_wins_k8, mean_ris2, mean_sim2);
    return {k8_ok && k2_ok, buf};
}

// 9. Goodput arithmetic plus the partial-reconfiguration goodput advantage.
Outcome criterion_goodput() {
    metrics::GoodputParams gp;
    if (std::abs(metrics::goodput(10.0, 100, gp).goodput - 60.0 / 7.0) > 1e-12 ||
        metrics::goodput(10.0, 700, gp).goodput != 0.0 ||
        !metrics::goodput(10.0, 701, gp).clamped) {
        return {false, "arithmetic spot checks failed"};
    }
    // last-layer-only halves the penalty term at L = 2
    const double full_pen = 1.0 - metrics::goodput(1.0, 100, gp).goodput;
    const double part_pen = 1.0 - metrics::goodput(1.0, 50, gp).goodput;
    if (std::abs(full_pen - 2.0 * part_pen) > 1e-12) {
        return {false, "partial penalty is not halved"};
    }

    opt::Hyper caps;
    caps.outer_max_iters = 2;
    caps.p2_max_iters = 40;
    caps.epsilon = 1e-5;
    int partial_wins = 0;
    double mean_full = 0.0, mean_part = 0.0;
    const int m_total = 196;  // 14 x 14 split across two layers
    for (int si = 0; si < 10; ++si) {
        const std::uint64_t seed = rng::child_seed(7003, 0, si);
        chan::ScenarioConfig sc = make_scenario(2, 14, 7, 2, 1);
        sc.noise_power_sigma2 = 1e-9;  // high SNR
        std::mt19937_64 urng = rng::make_engine(seed);
        const auto users = chan::sample_users(sc, urng);
        const double r_full =
            train(sc, users, opt::Mode::full, seed, caps).objective;
        const double r_part =
            train(sc, users, opt::Mode::last_layer_only, seed, caps).objective;
        const double g_full = metrics::goodput(r_full, m_total, gp).goodput;
        const double g_part = metrics::goodput(r_part, m_total / 2, gp).goodput;
        mean_full += g_full / 10.0;
        mean_part += g_part / 10.0;
        if (g_part >= g_full) ++partial_wins;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "partial wins %d/10; mean goodput full %.3f vs partial %.3f bps/Hz",
                  partial_wins, mean_full, mean_part);
    return {partial_wins >= 7, buf};
}

// 10. Full invariant suite (passivity, reciprocity, scaling laws, oracles).
Outcome criterion_invariants() {
    const validate::Report rep = validate::run(validate::Level::full);
    int failed = 0;
    for (const auto& c : rep.checks) {
        if (!c.passed) ++failed;
    }
    return {rep.all_passed(),
            std::to_string(rep.checks.size() - failed) + "/" +
                std::to_string(rep.checks.size()) + " checks passed"};
}

// 11. Complexity estimator vs hand evaluation on 5 parameter sets.
Outcome criterion_complexity() {
    struct Params { int l, m, nt, k, nf; };
    const Params sets[] = {{1, 4, 2, 2, 1}, {2, 9, 3, 3, 5}, {3, 16, 4, 4, 15},
                           {2, 25, 2, 2, 3}, {4, 8, 5, 5, 7}};
    for (const Params& s : sets) {
        const double l = s.l, m = s.m, nt = s.nt, k = s.k, nf = s.nf;
        const metrics::ComplexityCounts c =
            metrics::complexity_estimate(s.l, s.m, s.nt, s.k, s.nf, 11.0, 3.0);
        const double hand[14] = {
            0.0,
            (18 * l - 6) * nf * m * m * m + (2 * nf - 1) * nt * k,
            2 * nt * (m * m + k * m) * nf,
            (3 * m * m + 6 * m) * l * m * nf,
            2 * nt * (m * m + k * m) * l * m * nf,
            (((2 * nt - 1) + (2 * nt * nt + 1)) * (k - 1) + nt * nt) * k * nf,
            nt * nt * nt * nt * k * nf,
            k * (2 * nt * nt + nt) * nf,
            2 * k * nt * nf,
            3 * nf * k - 1,
            2 * k * nt * nf,
            nf * k * (2 * nt + (k - 1) * (2 * nt * nt + 2 * nt)),
            2 * l * m * k * nf,
            2 * l * m};
        double phase_side = 0.0;
        for (int i : {1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13}) phase_side += hand[i];
        for (int i = 1; i <= 13; ++i) {
            if (c.b[i] != hand[i]) return {false, "row mismatch"};
        }
        if (c.total != phase_side * 3.0 + (hand[9] + hand[10]) * 11.0) {
            return {false, "total mismatch"};
        }
        const metrics::ComplexityCounts pc = metrics::complexity_estimate(
            s.l, s.m, s.nt, s.k, s.nf, 11.0, 3.0, true);
        if (std::abs(pc.b[3] - hand[3] / l) > 1e-9 ||
            std::abs(pc.b[4] - hand[4] / l) > 1e-9 ||
            std::abs(pc.b[12] - hand[12] / l) > 1e-9 ||
            std::abs(pc.b[13] - hand[13] / l) > 1e-9) {
            return {false, "partial reduction mismatch"};
        }
    }
    return {true, "5 parameter sets exact, including partial mode"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"block solver vs dense inversion", criterion_block_solver},
        {"idealized cascade reduction", criterion_reduction},
        {"analytical gradient fidelity", criterion_gradient},
        {"water-filling KKT audit", criterion_waterfill},
        {"rate identity (determinant vs whitened)", criterion_rate_identity},
        {"alternating optimization behavior", criterion_ao},
        {"rate trend over training subbands", criterion_subband_trend},
        {"stacked vs single-layer tradeoff", criterion_layer_tradeoff},
        {"goodput accounting and partial-update advantage", criterion_goodput},
        {"physics and cross-module invariants", criterion_invariants},
        {"complexity estimator", criterion_complexity},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("%s  criterion %zu: %s  [%s, %.1f s]\n",
                    out.passed ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.passed) ++failures;
    }
    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
