#ifndef SIMWAVE_CHANNEL_HPP
#define SIMWAVE_CHANNEL_HPP

#include <cmath>
#include <random>
#include <vector>

#include "simwave/common.hpp"
#include "simwave/em.hpp"
#include "simwave/network.hpp"

// Per-subband end-to-end channels: near-field BS-to-SIM coupling H1, the
// SIM transmissive response G_{2L,1}, and the far-field SIM-to-user
// transimpedance H2.

namespace simwave::chan {

struct SubbandGrid {
    double center_frequency_fc = 27e9;   // Hz
    double total_bandwidth_B = 15e9;     // Hz
    int num_subbands_Nf = 1;
    std::vector<double> subband_centers; // Hz
    double subband_weight_Bi = 0.0;      // Hz
};

inline SubbandGrid build_subband_grid(double fc, double b, int nf) {
    if (nf < 1) throw domain_error("subband count must be >= 1");
    if (b < 0.0) throw domain_error("bandwidth must be nonnegative");
    if (!(fc > b / 2.0)) throw domain_error("grid extends to nonpositive frequencies");
    SubbandGrid g;
    g.center_frequency_fc = fc;
    g.total_bandwidth_B = b;
    g.num_subbands_Nf = nf;
    g.subband_weight_Bi = b / nf;
    g.subband_centers.reserve(nf);
    for (int i = 1; i <= nf; ++i) {
        g.subband_centers.push_back(fc - b / 2.0 + (i - 0.5) * b / nf);
    }
    return g;
}

struct UserGeometry {
    double distance_dRS = 15.0;          // m, from last SIM layer
    std::vector<double> path_elevation;  // rad, per path
    std::vector<double> path_azimuth;    // rad, per path
    double gain_GS = 1.0;
    double gain_GR = 1.0;
    em::AntennaParams receiver_antenna;

    int path_count() const { return static_cast<int>(path_elevation.size()); }
};

struct UserSampling {
    double distance_min = 10.0;          // m
    double distance_max = 20.0;
    double azimuth_half_range = 60.0 * constants::pi / 180.0;
    double elevation_half_range = 30.0 * constants::pi / 180.0;
    int path_count_E = 1;
};

struct ScenarioConfig {
    net::SimStack stack;
    SubbandGrid grid;
    int num_users_K = 2;
    int num_tx_Nt = 2;
    double total_power_P = 50.0;         // W
    double noise_power_sigma2 = 1e-7;    // W per subband
    double path_loss_alpha = 2.0;
    double bs_to_first_layer = 0.0;      // m; 0 -> default 5 lambda_c
    double bs_spacing = 0.0;             // m; 0 -> default lambda_c / 2
    UserSampling sampling;
    std::uint64_t rng_seed = 1;

    double bs_distance() const {
        if (bs_to_first_layer > 0.0) return bs_to_first_layer;
        return 5.0 * constants::speed_of_light / grid.center_frequency_fc;
    }

    em::ArrayGeometry bs_geometry() const {
        em::ArrayGeometry g;
        g.nx = num_tx_Nt;
        g.ny = 1;
        g.dx = bs_spacing > 0.0
                   ? bs_spacing
                   : 0.5 * constants::speed_of_light / grid.center_frequency_fc;
        g.dy = g.dx;
        g.plane_offset_z = 0.0;
        return g;
    }

    void check() const {
        stack.check();
        if (num_users_K < 1 || num_tx_Nt < 1) throw domain_error("K, Nt must be >= 1");
        check_positive(total_power_P, "total power");
        check_positive(noise_power_sigma2, "noise power");
    }
};

inline std::vector<UserGeometry> sample_users(const ScenarioConfig& sc,
                                              std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist_d(sc.sampling.distance_min,
                                                  sc.sampling.distance_max);
    std::uniform_real_distribution<double> dist_az(-sc.sampling.azimuth_half_range,
                                                   sc.sampling.azimuth_half_range);
    std::uniform_real_distribution<double> dist_el(-sc.sampling.elevation_half_range,
                                                   sc.sampling.elevation_half_range);
    std::vector<UserGeometry> users(sc.num_users_K);
    for (auto& u : users) {
        u.distance_dRS = dist_d(rng);
        u.receiver_antenna = sc.stack.antenna;
        const int e = std::max(1, sc.sampling.path_count_E);
        u.path_elevation.resize(e);
        u.path_azimuth.resize(e);
        for (int p = 0; p < e; ++p) {
            u.path_elevation[p] = dist_el(rng);
            u.path_azimuth[p] = dist_az(rng);
        }
    }
    return users;
}

// Kronecker-form planar steering vector: x-axis ramp (sin(phi) sin(psi))
// slow, y-axis ramp (sin(phi) cos(psi)) fast.
inline Vector steering_vector_planar(int mx, int my, double d_s, double lambda,
                                     double phi, double psi) {
    const double kx = 2.0 * constants::pi * d_s / lambda * std::sin(phi) * std::sin(psi);
    const double ky = 2.0 * constants::pi * d_s / lambda * std::sin(phi) * std::cos(psi);
    Vector a(mx * my);
    for (int ix = 0; ix < mx; ++ix) {
        for (int iy = 0; iy < my; ++iy) {
            a[ix * my + iy] = std::exp(Complex(0.0, ix * kx + iy * ky));
        }
    }
    return a;
}

inline Matrix bs_to_sim_coupling(const ScenarioConfig& sc, double f) {
    em::ArrayGeometry sim_plane = sc.stack.layer_geometry;
    sim_plane.plane_offset_z += sc.bs_distance();
    return em::assemble_coupling(f, sim_plane, sc.bs_geometry(), sc.stack.antenna)
        .entries;
}

inline Matrix far_field_transimpedance(const ScenarioConfig& sc,
                                       const std::vector<UserGeometry>& users,
                                       double f, const Vector& z11_last_diag) {
    const int m = sc.stack.elements_per_layer();
    const double lambda = constants::speed_of_light / f;
    const int mx = sc.stack.layer_geometry.nx;
    const int my = sc.stack.layer_geometry.ny;
    const double d_s = sc.stack.layer_geometry.dx;

    Vector sqrt_z11(m);
    for (int i = 0; i < m; ++i) {
        const double re = z11_last_diag[i].real();
        if (!(re > 0.0)) throw numerical_error("nonpositive Re{Z11} diagonal");
        sqrt_z11[i] = std::sqrt(re);
    }

    Matrix h2(users.size(), m);
    for (std::size_t k = 0; k < users.size(); ++k) {
        const UserGeometry& u = users[k];
        if (!(u.distance_dRS > 0.0)) throw domain_error("user distance must be positive");
        const double phi0 =
            constants::pi -
            std::atan(2.0 * constants::pi * f * sc.stack.antenna.radius_a /
                      constants::speed_of_light) -
            std::atan(2.0 * constants::pi * f * u.receiver_antenna.radius_a /
                      constants::speed_of_light);
        const double zrr = em::self_impedance(f, u.receiver_antenna).real();
        const double pref = constants::speed_of_light *
                            std::sqrt(u.gain_GS * u.gain_GR) /
                            (2.0 * constants::pi * f *
                             std::pow(u.distance_dRS, sc.path_loss_alpha / 2.0));
        Vector path_sum = Vector::Zero(m);
        for (int p = 0; p < u.path_count(); ++p) {
            path_sum += steering_vector_planar(mx, my, d_s, lambda,
                                               u.path_elevation[p], u.path_azimuth[p]);
        }
        const Complex rot = std::exp(Complex(0.0, -phi0));
        h2.row(k) = pref * std::sqrt(zrr) * rot *
                    (path_sum.transpose().cwiseProduct(sqrt_z11.transpose()));
    }
    return h2;
}

struct SubbandChannel {
    double frequency = 0.0;
    Matrix h1;            // M x Nt
    Matrix h2;            // K x M
    net::GBlocks g;       // full first column / last row
    Matrix h;             // K x Nt effective channel
};

struct ChannelSet {
    std::vector<SubbandChannel> subbands;
};

// Frequency-dependent quantities cached once per scenario; only the SIM
// load blocks change when the phases move.
class ChannelWorkspace {
  public:
    ChannelWorkspace(const ScenarioConfig& sc, std::vector<UserGeometry> users)
        : sc_(sc), users_(std::move(users)) {
        sc_.check();
        for (double f : sc_.grid.subband_centers) {
            coupling_.push_back(net::layer_coupling(sc_.stack, f));
            h1_.push_back(bs_to_sim_coupling(sc_, f));
            h2_.push_back(far_field_transimpedance(
                sc_, users_, f, coupling_.back().intra.diagonal()));
        }
    }

    const ScenarioConfig& scenario() const { return sc_; }
    const std::vector<UserGeometry>& users() const { return users_; }

    ChannelSet rebuild(const net::PhaseVector& phases) const {
        ChannelSet cs;
        cs.subbands.resize(sc_.grid.num_subbands_Nf);
        for (int i = 0; i < sc_.grid.num_subbands_Nf; ++i) {
            SubbandChannel& sub = cs.subbands[i];
            sub.frequency = sc_.grid.subband_centers[i];
            sub.h1 = h1_[i];
            sub.h2 = h2_[i];
            try {
                const net::SimBlocks blocks = net::assemble_sim_blocks(
                    sc_.stack, phases, sub.frequency, &coupling_[i]);
                sub.g = net::compute_g_blocks(blocks);
            } catch (const numerical_error& e) {
                throw numerical_error("subband " + std::to_string(i + 1) + ": " +
                                      e.what());
            }
            sub.h = sub.h2 * sub.g.transmissive_block() * sub.h1;
        }
        return cs;
    }

  private:
    ScenarioConfig sc_;
    std::vector<UserGeometry> users_;
    std::vector<net::LayerCoupling> coupling_;
    std::vector<Matrix> h1_;
    std::vector<Matrix> h2_;
};

inline ChannelSet effective_channels(const ScenarioConfig& sc,
                                     const std::vector<UserGeometry>& users,
                                     const net::PhaseVector& phases) {
    return ChannelWorkspace(sc, users).rebuild(phases);
}

}  // namespace simwave::chan

#endif  // SIMWAVE_CHANNEL_HPP
