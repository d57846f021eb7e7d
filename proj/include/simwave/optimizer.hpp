#ifndef SIMWAVE_OPTIMIZER_HPP
#define SIMWAVE_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "simwave/channel.hpp"
#include "simwave/common.hpp"
#include "simwave/network.hpp"

// Alternating optimization of (powers, beamformers) and SIM phases:
// iterative water-filling with interference whitening, and analytical
// gradient ascent on the phases with backtracking line search.
//
// With row-vector beamformers the product w w^H is the scalar power, so the
// transmit-domain covariance reduces to sigma^2 I + sum_j p_j h_j^H h_j and
// every rate expression is driven by (p, h); the stored beamformers are the
// matched directions w = sqrt(p) conj(h_tilde) / ||h_tilde||.

namespace simwave::opt {

using PowerGrid = Eigen::MatrixXd;  // (subband, user)

struct BeamformerSet {
    std::vector<std::vector<RowVector>> w;  // [subband][user], 1 x Nt
    PowerGrid p;                            // W
};

enum class Mode { full, last_layer_only, uniform_power, random_phase };

struct Hyper {
    double eta0 = 0.1;
    double backtrack_factor = 0.5;
    int max_halvings = 20;
    int p1_max_iters = 200;
    int p2_max_iters = 500;
    int outer_max_iters = 50;
    double epsilon = 1e-7;
    double p1_power_tol = 1e-9;   // relative to P_tot
    Mode mode = Mode::full;
};

struct OptimizerState {
    net::PhaseVector phases;
    BeamformerSet beams;
    std::vector<std::pair<int, double>> objective_trace;  // (outer round, J)
    bool converged = false;
    int outer_iters = 0;
    int total_p2_steps = 0;
    double objective = 0.0;       // bps/Hz
};

inline Matrix interference_covariance(const chan::ChannelSet& channels,
                                      const PowerGrid& p, double sigma2,
                                      int i, int k) {
    const Matrix& h = channels.subbands[i].h;
    const int nt = static_cast<int>(h.cols());
    Matrix c = sigma2 * Matrix::Identity(nt, nt);
    for (int j = 0; j < h.rows(); ++j) {
        if (j == k) continue;
        c.noalias() += p(i, j) * (h.row(j).adjoint() * h.row(j));
    }
    return c;
}

// Whitened channel via eigendecomposition of C; lambda = ||h_tilde||^2.
inline std::pair<RowVector, double> whiten(const chan::ChannelSet& channels,
                                           const Matrix& c, int i, int k) {
    const RowVector h = channels.subbands[i].h.row(k);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw numerical_error("interference covariance not positive definite");
    }
    const RowVector ht = h * es.eigenvectors() *
                         es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    return {ht, ht.squaredNorm()};
}

// Per-subband working quantities for rates and gradients.
struct SubbandEval {
    std::vector<Vector> v;        // C^{-1} h_k^H
    std::vector<double> lambda;   // h C^{-1} h^H
    std::vector<double> s;        // p * lambda
    Matrix hv;                    // hv(k', k) = h_{k'} v_k
};

inline SubbandEval eval_subband(const chan::SubbandChannel& sub,
                                const Eigen::RowVectorXd& p_row, double sigma2) {
    const Matrix& h = sub.h;
    const int k_users = static_cast<int>(h.rows());
    const int nt = static_cast<int>(h.cols());
    Matrix t = sigma2 * Matrix::Identity(nt, nt);
    for (int j = 0; j < k_users; ++j) {
        t.noalias() += p_row[j] * (h.row(j).adjoint() * h.row(j));
    }
    SubbandEval ev;
    ev.v.resize(k_users);
    ev.lambda.resize(k_users);
    ev.s.resize(k_users);
    ev.hv.resize(k_users, k_users);
    for (int k = 0; k < k_users; ++k) {
        Matrix c = t - p_row[k] * (h.row(k).adjoint() * h.row(k));
        Eigen::LDLT<Matrix> ldlt(c);
        if (ldlt.info() != Eigen::Success) {
            throw numerical_error("covariance factorization failed");
        }
        ev.v[k] = ldlt.solve(h.row(k).adjoint());
        ev.lambda[k] = std::max(0.0, (h.row(k) * ev.v[k]).value().real());
        ev.s[k] = p_row[k] * ev.lambda[k];
    }
    for (int k = 0; k < k_users; ++k) {
        for (int kp = 0; kp < k_users; ++kp) {
            ev.hv(kp, k) = (h.row(kp) * ev.v[k]).value();
        }
    }
    return ev;
}

// Objective in bps/Hz: sum_i (1/Nf) sum_k log2(1 + s_{k,i}). The subband
// weights B_i are all equal, so the bits/s objective is this times B.
inline double objective_value(const chan::ChannelSet& channels, const PowerGrid& p,
                              double sigma2) {
    const int nf = static_cast<int>(channels.subbands.size());
    double j = 0.0;
    for (int i = 0; i < nf; ++i) {
        const SubbandEval ev = eval_subband(channels.subbands[i], p.row(i), sigma2);
        for (double s : ev.s) j += std::log2(1.0 + s);
    }
    return j / nf;
}

struct SumRate {
    double bits_per_s = 0.0;
    double bps_per_hz = 0.0;
};

// Whitened (determinant-lemma) form of the sum rate.
inline SumRate sum_rate(const chan::ChannelSet& channels, const PowerGrid& p,
                        double sigma2, double total_bandwidth) {
    SumRate r;
    r.bps_per_hz = objective_value(channels, p, sigma2);
    r.bits_per_s = r.bps_per_hz * total_bandwidth;
    return r;
}

// Determinant form, Eq-for-eq independent of the whitened route.
inline double sum_rate_det_bps_hz(const chan::ChannelSet& channels,
                                  const PowerGrid& p, double sigma2) {
    const int nf = static_cast<int>(channels.subbands.size());
    double total = 0.0;
    for (int i = 0; i < nf; ++i) {
        const Matrix& h = channels.subbands[i].h;
        for (int k = 0; k < h.rows(); ++k) {
            const Matrix c = interference_covariance(channels, p, sigma2, i, k);
            const Matrix cs = c + p(i, k) * (h.row(k).adjoint() * h.row(k));
            const double num = cs.partialPivLu().matrixLU().diagonal().array().log().real().sum();
            const double den = c.partialPivLu().matrixLU().diagonal().array().log().real().sum();
            total += (num - den) / std::log(2.0);
        }
    }
    return total / nf;
}

struct WaterFillResult {
    RealVector p;
    double water_level = 0.0;
    bool all_zero_gains = false;
};

// Exact water level by sorting the inverse gains and scanning active sets.
inline WaterFillResult water_fill(const RealVector& gains, double p_total) {
    check_positive(p_total, "power budget");
    const int n = static_cast<int>(gains.size());
    WaterFillResult r;
    r.p = RealVector::Zero(n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return gains[a] > gains[b]; });
    int npos = 0;
    while (npos < n && gains[order[npos]] > 0.0) ++npos;
    if (npos == 0) {
        r.all_zero_gains = true;
        return r;
    }
    double inv_sum = 0.0;
    for (int m = 1; m <= npos; ++m) {
        inv_sum += 1.0 / gains[order[m - 1]];
        const double mu = (p_total + inv_sum) / m;
        const bool last_active = mu > 1.0 / gains[order[m - 1]];
        const bool next_inactive =
            (m == npos) || (mu <= 1.0 / gains[order[m]]);
        if (last_active && next_inactive) {
            r.water_level = mu;
            for (int t = 0; t < m; ++t) {
                r.p[order[t]] = mu - 1.0 / gains[order[t]];
            }
            return r;
        }
    }
    throw numerical_error("water-filling active-set scan failed");
}

inline RowVector matched_beamformer(const RowVector& h_tilde, double power) {
    const double norm = h_tilde.norm();
    if (power > 0.0 && norm == 0.0) {
        throw numerical_error("degenerate channel with positive power");
    }
    if (power == 0.0) return RowVector::Zero(h_tilde.cols());
    return std::sqrt(power) / norm * h_tilde.conjugate();
}

inline BeamformerSet update_beamformers(const chan::ChannelSet& channels,
                                        const PowerGrid& p, double sigma2) {
    const int nf = static_cast<int>(channels.subbands.size());
    BeamformerSet bs;
    bs.p = p;
    bs.w.resize(nf);
    for (int i = 0; i < nf; ++i) {
        const int k_users = static_cast<int>(channels.subbands[i].h.rows());
        bs.w[i].resize(k_users);
        for (int k = 0; k < k_users; ++k) {
            const Matrix c = interference_covariance(channels, p, sigma2, i, k);
            const auto [ht, lambda] = whiten(channels, c, i, k);
            (void)lambda;
            bs.w[i][k] = matched_beamformer(ht, p(i, k));
        }
    }
    return bs;
}

struct P1Result {
    PowerGrid p;
    BeamformerSet beams;
    bool converged = false;
    int iters = 0;
    double objective = 0.0;
};

// Iterative water-filling: rebuild the interference state from the current
// powers, water-fill the whitened gains, repeat. Returns the best iterate
// by objective value (the incoming powers included).
inline P1Result iterative_p1(const chan::ChannelSet& channels, const PowerGrid& p0,
                             double sigma2, double p_total, const Hyper& hy) {
    const int nf = static_cast<int>(channels.subbands.size());
    const int k_users = static_cast<int>(p0.cols());
    P1Result res;
    PowerGrid p = p0;
    res.p = p0;
    res.objective = objective_value(channels, p0, sigma2);

    for (int it = 0; it < hy.p1_max_iters; ++it) {
        RealVector gains(nf * k_users);
        for (int i = 0; i < nf; ++i) {
            const SubbandEval ev = eval_subband(channels.subbands[i], p.row(i), sigma2);
            for (int k = 0; k < k_users; ++k) gains[i * k_users + k] = ev.lambda[k];
        }
        const WaterFillResult wf = water_fill(gains, p_total);
        PowerGrid p_new(nf, k_users);
        for (int i = 0; i < nf; ++i) {
            for (int k = 0; k < k_users; ++k) p_new(i, k) = wf.p[i * k_users + k];
        }
        const double delta = (p_new - p).cwiseAbs().maxCoeff();
        p = p_new;
        const double j = objective_value(channels, p, sigma2);
        res.iters = it + 1;
        if (j > res.objective) {
            res.objective = j;
            res.p = p;
        }
        if (wf.all_zero_gains || delta < hy.p1_power_tol * p_total) {
            res.converged = true;
            break;
        }
    }
    res.beams = update_beamformers(channels, res.p, sigma2);
    return res;
}

// d s_{k,i} / d phi_{l,m} for one prepared subband. delta_rows are the
// derivative rows of the effective channel for every user at this (l, m).
inline double sinr_phase_derivative(const SubbandEval& ev,
                                    const std::vector<RowVector>& delta_rows,
                                    const Eigen::RowVectorXd& p_row, int k) {
    const int k_users = static_cast<int>(delta_rows.size());
    const Complex dv_kk = (delta_rows[k] * ev.v[k]).value();
    double out = 2.0 * p_row[k] * dv_kk.real();
    double interf = 0.0;
    for (int kp = 0; kp < k_users; ++kp) {
        if (kp == k) continue;
        const Complex dv = (delta_rows[kp] * ev.v[k]).value();
        interf += p_row[kp] * (std::conj(ev.hv(kp, k)) * dv).real();
    }
    out -= 2.0 * p_row[k] * interf;
    return out;
}

// Derivative rows Delta_{i,k'} = -(H2 row k') F_{l,m} H1 via the rank-2
// structure of F; F itself is never materialized.
inline std::vector<RowVector> channel_derivative_rows(
    const chan::SubbandChannel& sub, const net::PhaseSensitivity& sens) {
    const RowVector r1h1 = sens.r1 * sub.h1;
    const RowVector r2h1 = sens.r2 * sub.h1;
    const Vector u1 = sens.d(0, 0) * sens.c1 + sens.d(1, 0) * sens.c2;
    const Vector u2 = sens.d(0, 1) * sens.c1 + sens.d(1, 1) * sens.c2;
    const int k_users = static_cast<int>(sub.h2.rows());
    std::vector<RowVector> rows(k_users);
    for (int k = 0; k < k_users; ++k) {
        const Complex a = (sub.h2.row(k) * u1).value();
        const Complex b = (sub.h2.row(k) * u2).value();
        rows[k] = -(a * r1h1 + b * r2h1);
    }
    return rows;
}

// Full gradient of the (bps/Hz) objective with frozen entries zeroed.
inline RealVector objective_gradient(const chan::ChannelSet& channels,
                                     const PowerGrid& p, double sigma2,
                                     const net::PhaseVector& phases,
                                     const net::SimStack& stack) {
    const int nf = static_cast<int>(channels.subbands.size());
    const int m = stack.elements_per_layer();
    const int big_l = stack.num_layers_L;
    RealVector grad = RealVector::Zero(big_l * m);
    const double weight = 1.0 / (nf * std::log(2.0));
    for (int i = 0; i < nf; ++i) {
        const chan::SubbandChannel& sub = channels.subbands[i];
        const SubbandEval ev = eval_subband(sub, p.row(i), sigma2);
        for (int l = 1; l <= big_l; ++l) {
            for (int e = 1; e <= m; ++e) {
                const int idx = (l - 1) * m + (e - 1);
                if (!phases.frozen.empty() && phases.frozen[idx]) continue;
                const Matrix2c d2 = net::local_impedance_gradient(
                    phases.phases[idx], stack.reference_z0);
                const net::PhaseSensitivity sens =
                    net::g_phase_sensitivity(sub.g, d2, l, e);
                const std::vector<RowVector> delta =
                    channel_derivative_rows(sub, sens);
                const int k_users = static_cast<int>(sub.h.rows());
                for (int k = 0; k < k_users; ++k) {
                    grad[idx] += weight / (1.0 + ev.s[k]) *
                                 sinr_phase_derivative(ev, delta, p.row(i), k);
                }
            }
        }
    }
    return grad;
}

struct P2Result {
    net::PhaseVector phases;
    bool stalled = false;
    int steps = 0;
    double objective = 0.0;
};

// Gradient ascent on the phases with backtracking; phases are projected
// away from the load-block singularities after every accepted step.
inline P2Result gradient_ascent_p2(const chan::ChannelWorkspace& ws,
                                   const net::PhaseVector& phases0,
                                   const PowerGrid& p, const Hyper& hy) {
    const double sigma2 = ws.scenario().noise_power_sigma2;
    P2Result res;
    res.phases = phases0;
    chan::ChannelSet channels = ws.rebuild(res.phases);
    double j = objective_value(channels, p, sigma2);
    res.objective = j;

    for (int step = 0; step < hy.p2_max_iters; ++step) {
        const RealVector grad = objective_gradient(channels, p, sigma2, res.phases,
                                                   ws.scenario().stack);
        if (grad.cwiseAbs().maxCoeff() == 0.0) break;

        double eta = hy.eta0;
        bool accepted = false;
        net::PhaseVector trial = res.phases;
        chan::ChannelSet trial_channels;
        double j_trial = 0.0;
        for (int h = 0; h <= hy.max_halvings; ++h) {
            trial.phases = res.phases.phases + eta * grad;
            for (int idx = 0; idx < trial.size(); ++idx) {
                if (!trial.frozen.empty() && trial.frozen[idx]) {
                    trial.phases[idx] = res.phases.phases[idx];
                }
            }
            net::project_phases(trial);
            trial_channels = ws.rebuild(trial);
            j_trial = objective_value(trial_channels, p, sigma2);
            if (j_trial > j) {
                accepted = true;
                break;
            }
            eta *= hy.backtrack_factor;
        }
        if (!accepted) {
            res.stalled = true;
            break;
        }
        res.phases = trial;
        channels = std::move(trial_channels);
        res.steps = step + 1;
        const double rel = std::abs(j_trial - j) / std::max(std::abs(j), 1e-300);
        j = j_trial;
        res.objective = j;
        if (rel < hy.epsilon) break;
    }
    return res;
}

// Frozen-entry mask for full / last-layer-only reconfiguration.
inline std::vector<bool> partial_mode(int num_layers, int elems_per_layer,
                                      Mode mode) {
    std::vector<bool> mask(num_layers * elems_per_layer, false);
    if (mode == Mode::last_layer_only) {
        if (num_layers < 2) {
            throw config_error("last-layer-only requires L >= 2");
        }
        for (int i = 0; i < (num_layers - 1) * elems_per_layer; ++i) mask[i] = true;
    }
    return mask;
}

inline net::PhaseVector random_phases(int count, std::mt19937_64& rng) {
    net::PhaseVector pv;
    pv.phases.resize(count);
    pv.frozen.assign(count, false);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double margin = constants::phase_singularity_margin;
    const double span = constants::pi - 2.0 * margin;
    for (int i = 0; i < count; ++i) {
        const double u = unif(rng);
        pv.phases[i] = (u < 0.5) ? margin + 2.0 * u * span
                                 : constants::pi + margin + (2.0 * u - 1.0) * span;
    }
    return pv;
}

inline OptimizerState alternating_optimize(const chan::ChannelWorkspace& ws,
                                           const Hyper& hy, std::mt19937_64& rng) {
    const chan::ScenarioConfig& sc = ws.scenario();
    const int nf = sc.grid.num_subbands_Nf;
    const int k_users = sc.num_users_K;
    const double sigma2 = sc.noise_power_sigma2;

    OptimizerState st;
    st.phases = random_phases(sc.stack.total_elements(), rng);
    PowerGrid p = PowerGrid::Constant(nf, k_users,
                                      sc.total_power_P / (nf * k_users));

    chan::ChannelSet channels = ws.rebuild(st.phases);
    double j = objective_value(channels, p, sigma2);
    st.objective_trace.emplace_back(0, j);

    const bool do_p1 = hy.mode != Mode::uniform_power;
    const bool do_p2 = hy.mode != Mode::random_phase;

    for (int round = 1; round <= hy.outer_max_iters; ++round) {
        if (do_p1) {
            const P1Result p1 = iterative_p1(channels, p, sigma2,
                                             sc.total_power_P, hy);
            p = p1.p;
            j = p1.objective;
        }
        if (do_p2) {
            const P2Result p2 = gradient_ascent_p2(ws, st.phases, p, hy);
            st.phases = p2.phases;
            st.total_p2_steps += p2.steps;
            j = p2.objective;
            channels = ws.rebuild(st.phases);
        }
        st.outer_iters = round;
        const double j_prev = st.objective_trace.back().second;
        st.objective_trace.emplace_back(round, j);
        if (hy.mode == Mode::last_layer_only && round == 1) {
            st.phases.frozen = partial_mode(sc.stack.num_layers_L,
                                            sc.stack.elements_per_layer(), hy.mode);
            continue;  // give the restricted problem at least one round
        }
        if (std::abs(j - j_prev) < hy.epsilon * std::max(std::abs(j_prev), 1e-300)) {
            st.converged = true;
            break;
        }
        if (!do_p1 && !do_p2) {
            st.converged = true;
            break;
        }
    }
    st.beams = update_beamformers(channels, p, sigma2);
    st.objective = j;
    return st;
}

}  // namespace simwave::opt

#endif  // SIMWAVE_OPTIMIZER_HPP
