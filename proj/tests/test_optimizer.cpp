#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "simwave/channel.hpp"
#include "simwave/optimizer.hpp"

using namespace simwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

chan::ScenarioConfig tiny_scenario(int layers, int mx, int my, int users, int nf) {
    chan::ScenarioConfig sc;
    sc.stack.num_layers_L = layers;
    sc.stack.layer_geometry.nx = mx;
    sc.stack.layer_geometry.ny = my;
    sc.stack.layer_spacing = 5.56e-3;
    sc.grid = chan::build_subband_grid(27e9, 15e9, nf);
    sc.num_users_K = users;
    sc.num_tx_Nt = users;
    return sc;
}

chan::ChannelSet random_channels(int nf, int users, int nt, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    chan::ChannelSet cs;
    cs.subbands.resize(nf);
    for (auto& sub : cs.subbands) {
        sub.h.resize(users, nt);
        for (int k = 0; k < users; ++k) {
            for (int t = 0; t < nt; ++t) {
                sub.h(k, t) = Complex(gauss(rng), gauss(rng));
            }
        }
    }
    return cs;
}

}  // namespace

TEST_CASE("water filling on two gains") {
    RealVector g(2);
    g << 1.0, 0.5;
    const opt::WaterFillResult wf = opt::water_fill(g, 1.0);
    CHECK_THAT(wf.p[0], WithinRel(1.0, 1e-12));
    CHECK_THAT(wf.p[1], WithinAbs(0.0, 1e-15));
}

TEST_CASE("water filling budget and KKT on random gains") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> gain(0.0, 4.0);
    std::uniform_int_distribution<int> len(1, 30);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = len(rng);
        RealVector g(n);
        for (int i = 0; i < n; ++i) g[i] = gain(rng) < 0.5 ? 0.0 : gain(rng);
        const double p_total = 0.5 + gain(rng);
        const opt::WaterFillResult wf = opt::water_fill(g, p_total);
        if (wf.all_zero_gains) {
            CHECK(wf.p.cwiseAbs().maxCoeff() == 0.0);
            continue;
        }
        CHECK_THAT(wf.p.sum(), WithinRel(p_total, 1e-12));
        for (int i = 0; i < n; ++i) {
            CHECK(wf.p[i] >= 0.0);
            if (g[i] == 0.0) CHECK(wf.p[i] == 0.0);
            if (wf.p[i] > 0.0) {
                CHECK_THAT(wf.p[i] + 1.0 / g[i], WithinRel(wf.water_level, 1e-9));
            } else if (g[i] > 0.0) {
                CHECK(1.0 / g[i] >= wf.water_level * (1.0 - 1e-9));
            }
        }
    }
}

TEST_CASE("water filling rejects a nonpositive budget") {
    RealVector g(1);
    g << 1.0;
    CHECK_THROWS_AS(opt::water_fill(g, 0.0), domain_error);
}

TEST_CASE("matched beamformer carries the allocated power") {
    RowVector ht(2);
    ht << Complex(1, 0), Complex(0, 0);
    const RowVector w = opt::matched_beamformer(ht, 4.0);
    CHECK_THAT(w.squaredNorm(), WithinRel(4.0, 1e-12));
    CHECK_THAT(std::abs(w[0] - Complex(2, 0)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(w[1]), WithinAbs(0.0, 1e-15));

    CHECK(opt::matched_beamformer(ht, 0.0).squaredNorm() == 0.0);
    CHECK_THROWS_AS(opt::matched_beamformer(RowVector::Zero(2), 1.0),
                    numerical_error);
}

TEST_CASE("beamformer update squares norms to the power grid") {
    std::mt19937_64 rng(7);
    const chan::ChannelSet cs = random_channels(2, 3, 3, rng);
    opt::PowerGrid p(2, 3);
    p << 1.0, 2.0, 0.0, 0.5, 0.25, 3.0;
    const opt::BeamformerSet bs = opt::update_beamformers(cs, p, 0.1);
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 3; ++k) {
            CHECK_THAT(bs.w[i][k].squaredNorm(), WithinAbs(p(i, k), 1e-10));
        }
    }
}

TEST_CASE("single-user objective is the closed-form rate") {
    std::mt19937_64 rng(13);
    const chan::ChannelSet cs = random_channels(1, 1, 3, rng);
    opt::PowerGrid p(1, 1);
    p << 2.5;
    const double sigma2 = 0.3;
    const double want =
        std::log2(1.0 + 2.5 * cs.subbands[0].h.row(0).squaredNorm() / sigma2);
    CHECK_THAT(opt::objective_value(cs, p, sigma2), WithinRel(want, 1e-12));
}

TEST_CASE("determinant and whitened rate forms agree") {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> pw(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = dim(rng), nt = dim(rng), nf = dim(rng);
        const chan::ChannelSet cs = random_channels(nf, k, nt, rng);
        opt::PowerGrid p(nf, k);
        for (int i = 0; i < nf; ++i) {
            for (int u = 0; u < k; ++u) p(i, u) = pw(rng);
        }
        const double a = opt::objective_value(cs, p, 0.5);
        const double b = opt::sum_rate_det_bps_hz(cs, p, 0.5);
        CHECK_THAT(a, WithinRel(b, 1e-9));
    }
}

TEST_CASE("sum rate scales with the bandwidth") {
    std::mt19937_64 rng(23);
    const chan::ChannelSet cs = random_channels(2, 2, 2, rng);
    const opt::PowerGrid p = opt::PowerGrid::Constant(2, 2, 1.0);
    const opt::SumRate sr = opt::sum_rate(cs, p, 0.5, 15e9);
    CHECK_THAT(sr.bits_per_s, WithinRel(sr.bps_per_hz * 15e9, 1e-12));
}

TEST_CASE("iterative power allocation never loses objective") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const chan::ChannelSet cs = random_channels(3, 3, 3, rng);
        const opt::PowerGrid p0 = opt::PowerGrid::Constant(3, 3, 10.0 / 9.0);
        opt::Hyper hy;
        const opt::P1Result res = opt::iterative_p1(cs, p0, 0.2, 10.0, hy);
        CHECK(res.objective >= opt::objective_value(cs, p0, 0.2) - 1e-12);
        CHECK_THAT(res.p.sum(), WithinRel(10.0, 1e-9));
        CHECK(res.converged);
    }
}

TEST_CASE("objective gradient matches finite differences") {
    chan::ScenarioConfig sc = tiny_scenario(2, 2, 2, 2, 2);
    std::mt19937_64 rng(31);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);
    const net::PhaseVector pv = opt::random_phases(sc.stack.total_elements(), rng);
    const opt::PowerGrid p = opt::PowerGrid::Constant(
        2, 2, sc.total_power_P / 4.0);
    const double sigma2 = sc.noise_power_sigma2;
    const RealVector grad =
        opt::objective_gradient(ws.rebuild(pv), p, sigma2, pv, sc.stack);
    const double h = 1e-6;
    for (int idx = 0; idx < pv.size(); ++idx) {
        net::PhaseVector plus = pv, minus = pv;
        plus.phases[idx] += h;
        minus.phases[idx] -= h;
        const double fd = (opt::objective_value(ws.rebuild(plus), p, sigma2) -
                           opt::objective_value(ws.rebuild(minus), p, sigma2)) /
                          (2.0 * h);
        if (std::abs(grad[idx]) < 1e-8) continue;
        CHECK_THAT(fd, WithinRel(grad[idx], 1e-4));
    }
}

TEST_CASE("gradient respects frozen entries") {
    chan::ScenarioConfig sc = tiny_scenario(2, 2, 1, 2, 1);
    std::mt19937_64 rng(37);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);
    net::PhaseVector pv = opt::random_phases(sc.stack.total_elements(), rng);
    pv.frozen = opt::partial_mode(2, 2, opt::Mode::last_layer_only);
    const opt::PowerGrid p = opt::PowerGrid::Constant(1, 2, 1.0);
    const RealVector grad = opt::objective_gradient(ws.rebuild(pv), p,
                                                    sc.noise_power_sigma2, pv,
                                                    sc.stack);
    CHECK(grad[0] == 0.0);
    CHECK(grad[1] == 0.0);
    CHECK(grad.tail(2).cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("partial reconfiguration mask") {
    const std::vector<bool> mask = opt::partial_mode(3, 2, opt::Mode::last_layer_only);
    REQUIRE(mask.size() == 6);
    for (int i = 0; i < 4; ++i) CHECK(mask[i]);
    CHECK_FALSE(mask[4]);
    CHECK_FALSE(mask[5]);
    CHECK(opt::partial_mode(2, 3, opt::Mode::full) ==
          std::vector<bool>(6, false));
    CHECK_THROWS_AS(opt::partial_mode(1, 4, opt::Mode::last_layer_only),
                    config_error);
}

TEST_CASE("random phases stay clear of the singularities") {
    std::mt19937_64 rng(41);
    const net::PhaseVector pv = opt::random_phases(2000, rng);
    const double m = constants::phase_singularity_margin;
    for (int i = 0; i < pv.size(); ++i) {
        const double phi = pv.phases[i];
        CHECK(phi >= m);
        CHECK(phi <= 2.0 * constants::pi - m);
        CHECK(std::abs(phi - constants::pi) >= m * (1.0 - 1e-12));
    }
}

TEST_CASE("phase ascent increases the objective and keeps frozen entries") {
    chan::ScenarioConfig sc = tiny_scenario(2, 2, 1, 2, 2);
    std::mt19937_64 rng(43);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);
    net::PhaseVector pv = opt::random_phases(sc.stack.total_elements(), rng);
    pv.frozen = opt::partial_mode(2, 2, opt::Mode::last_layer_only);
    const opt::PowerGrid p = opt::PowerGrid::Constant(2, 2, sc.total_power_P / 4.0);
    opt::Hyper hy;
    hy.p2_max_iters = 30;
    const double j0 = opt::objective_value(ws.rebuild(pv), p,
                                           sc.noise_power_sigma2);
    const opt::P2Result res = opt::gradient_ascent_p2(ws, pv, p, hy);
    CHECK(res.objective >= j0 - 1e-12);
    CHECK(res.phases.phases[0] == pv.phases[0]);
    CHECK(res.phases.phases[1] == pv.phases[1]);
}

TEST_CASE("alternating optimization trace is monotone and converges") {
    chan::ScenarioConfig sc = tiny_scenario(2, 2, 2, 2, 2);
    std::mt19937_64 rng(47);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);
    opt::Hyper hy;
    hy.outer_max_iters = 12;
    hy.p2_max_iters = 40;
    const opt::OptimizerState st = opt::alternating_optimize(ws, hy, rng);
    REQUIRE(st.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < st.objective_trace.size(); ++i) {
        CHECK(st.objective_trace[i].second >=
              st.objective_trace[i - 1].second - 1e-9);
    }
    CHECK(st.objective > 0.0);
    // beamformer norms realize the final power allocation
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
            CHECK_THAT(st.beams.w[i][k].squaredNorm(),
                       WithinAbs(st.beams.p(i, k), 1e-9));
        }
    }
}

TEST_CASE("baseline modes skip the corresponding stage") {
    chan::ScenarioConfig sc = tiny_scenario(1, 2, 1, 2, 1);
    std::mt19937_64 rng(53);
    const auto users = chan::sample_users(sc, rng);
    const chan::ChannelWorkspace ws(sc, users);

    opt::Hyper hy;
    hy.outer_max_iters = 3;
    hy.mode = opt::Mode::uniform_power;
    std::mt19937_64 r1 = rng;
    const opt::OptimizerState uni = opt::alternating_optimize(ws, hy, r1);
    const double per_stream = sc.total_power_P / 2.0;
    CHECK((uni.beams.p.array() == per_stream).all());

    hy.mode = opt::Mode::random_phase;
    std::mt19937_64 r2 = rng;
    const opt::OptimizerState rph = opt::alternating_optimize(ws, hy, r2);
    std::mt19937_64 r3 = rng;
    const net::PhaseVector init = opt::random_phases(sc.stack.total_elements(), r3);
    CHECK((rph.phases.phases - init.phases).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rph.total_p2_steps == 0);
}
