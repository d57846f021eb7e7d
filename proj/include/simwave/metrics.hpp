#ifndef SIMWAVE_METRICS_HPP
#define SIMWAVE_METRICS_HPP

#include <algorithm>
#include <cmath>

#include "simwave/common.hpp"

// Goodput and operation-count accounting.

namespace simwave::metrics {

struct GoodputParams {
    int bits_per_element_b = 2;
    double control_spectral_efficiency_eta = 2.0;
    int symbols_per_slot_Ns = 700;

    void check() const {
        if (bits_per_element_b < 1 || symbols_per_slot_Ns < 1) {
            throw domain_error("b and Ns must be >= 1");
        }
        check_positive(control_spectral_efficiency_eta, "control spectral efficiency");
    }
};

struct GoodputResult {
    double goodput = 0.0;
    bool clamped = false;   // signaling overhead exceeded the slot
};

// G = (1 - b M_updated / (eta N_s)) R, clamped at zero.
inline GoodputResult goodput(double rate, int m_updated, const GoodputParams& gp) {
    gp.check();
    if (m_updated < 0) throw domain_error("updated element count must be >= 0");
    GoodputResult r;
    const double factor = 1.0 - static_cast<double>(gp.bits_per_element_b) * m_updated /
                                    (gp.control_spectral_efficiency_eta *
                                     gp.symbols_per_slot_Ns);
    if (factor < 0.0) {
        r.goodput = 0.0;
        r.clamped = true;
    } else {
        r.goodput = factor * rate;
    }
    return r;
}

struct ComplexityCounts {
    double b[14] = {};  // b[1]..b[13]
    double total = 0.0;
};

// Operation counts per optimization step; partial reconfiguration divides
// the phase-side terms (B3, B4, B12, B13) by L.
inline ComplexityCounts complexity_estimate(int num_layers, int elems_per_layer,
                                            int num_tx, int num_users,
                                            int num_subbands, double i_p1,
                                            double i_p2, bool partial = false) {
    const double l = num_layers;
    const double m = elems_per_layer;
    const double nt = num_tx;
    const double k = num_users;
    const double nf = num_subbands;
    ComplexityCounts c;
    c.b[1] = (18.0 * l - 6.0) * nf * m * m * m + (2.0 * nf - 1.0) * nt * k;
    c.b[2] = 2.0 * nt * (m * m + k * m) * nf;
    c.b[3] = (3.0 * m * m + 6.0 * m) * l * m * nf;
    c.b[4] = 2.0 * nt * (m * m + k * m) * l * m * nf;
    c.b[5] = (((2.0 * nt - 1.0) + (2.0 * nt * nt + 1.0)) * (k - 1.0) + nt * nt) * k * nf;
    c.b[6] = nt * nt * nt * nt * k * nf;
    c.b[7] = k * (2.0 * nt * nt + nt) * nf;
    c.b[8] = 2.0 * k * nt * nf;
    c.b[9] = 3.0 * nf * k - 1.0;
    c.b[10] = 2.0 * k * nt * nf;
    c.b[11] = nf * k * (2.0 * nt + (k - 1.0) * (2.0 * nt * nt + 2.0 * nt));
    c.b[12] = 2.0 * l * m * k * nf;
    c.b[13] = 2.0 * l * m;
    if (partial) {
        c.b[3] /= l;
        c.b[4] /= l;
        c.b[12] /= l;
        c.b[13] /= l;
    }
    double phase_side = 0.0;
    for (int idx : {1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13}) phase_side += c.b[idx];
    c.total = phase_side * i_p2 + (c.b[9] + c.b[10]) * i_p1;
    return c;
}

}  // namespace simwave::metrics

#endif  // SIMWAVE_METRICS_HPP
