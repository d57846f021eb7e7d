#ifndef SIMWAVE_EM_HPP
#define SIMWAVE_EM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "simwave/common.hpp"

// Closed-form electromagnetics for canonical minimum-scattering antennas
// operating in the lowest TM mode: self-impedance, pairwise mutual
// impedance, and coupling-matrix assembly for rectangular planar arrays.

namespace simwave::em {

struct AntennaParams {
    double radius_a = 0.0027;                          // m
    double radiation_resistance_R = 50.0;              // ohm
    double speed_of_light_c = constants::speed_of_light;
    double intrinsic_impedance_eta = constants::free_space_eta;

    void check() const {
        check_positive(radius_a, "antenna radius");
        check_positive(radiation_resistance_R, "radiation resistance");
    }
};

// Rectangular N_x x N_y grid centered on `origin`, lying in a plane
// parallel to the xy-plane at z = origin.z + plane_offset_z.
struct ArrayGeometry {
    int nx = 1;
    int ny = 1;
    double dx = 5.56e-3;   // m
    double dy = 5.56e-3;   // m
    double plane_offset_z = 0.0;
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();

    int num_elements() const { return nx * ny; }

    void check() const {
        if (nx < 1 || ny < 1) throw domain_error("array dimensions must be >= 1");
        check_positive(dx, "dx");
        check_positive(dy, "dy");
    }

    // Linear index convention: m = ix * ny + iy (x slow, y fast), matching
    // the Kronecker ordering of the planar steering vector.
    Eigen::Vector3d position(int linear_index) const {
        const int ix = linear_index / ny;
        const int iy = linear_index % ny;
        Eigen::Vector3d r = origin;
        r.x() += (ix + 1 - 0.5 * (nx + 1)) * dx;
        r.y() += (iy + 1 - 0.5 * (ny + 1)) * dy;
        r.z() += plane_offset_z;
        return r;
    }
};

enum class CouplingKind { intra_array, inter_array };

struct CouplingMatrix {
    double frequency = 0.0;  // Hz
    Matrix entries;          // ohm, (#elements A) x (#elements B)
    CouplingKind kind = CouplingKind::intra_array;
};

// Self-impedance of the TM1 equivalent RLC circuit.
inline Complex self_impedance(double f, const AntennaParams& ant) {
    if (!(f > 0.0)) throw domain_error("frequency must be positive");
    ant.check();
    const double w = 2.0 * constants::pi * f;
    const double c = ant.speed_of_light_c;
    const double a = ant.radius_a;
    const Complex num(c * c - (w * a) * (w * a), w * c * a);
    const Complex den(-(w * a) * (w * a), w * c * a);
    return num / den * ant.radiation_resistance_R;
}

// Mutual impedance between two TM1 antennas separated by distance d and
// oriented at angles alpha, beta along the joining line.
inline Complex mutual_impedance(double f, const AntennaParams& ant_n,
                                const AntennaParams& ant_m, double d,
                                double alpha, double beta) {
    if (!(d > 0.0)) throw domain_error("separation distance must be positive");
    const double re_n = self_impedance(f, ant_n).real();
    const double re_m = self_impedance(f, ant_m).real();
    const double k0 = 2.0 * constants::pi * f / ant_n.speed_of_light_c;
    const Complex jkd(0.0, k0 * d);
    const Complex inv1 = 1.0 / jkd;
    const Complex inv2 = inv1 * inv1;
    const Complex inv3 = inv2 * inv1;
    const Complex bracket =
        0.5 * std::sin(alpha) * std::sin(beta) * (inv1 + inv2 + inv3) +
        std::cos(alpha) * std::cos(beta) * (inv2 + inv3);
    return -3.0 * std::sqrt(re_n * re_m) * bracket *
           std::exp(Complex(0.0, -k0 * d));
}

struct PairGeometry {
    double d = 0.0;      // m
    double alpha = 0.0;  // rad
    double beta = 0.0;   // rad
    bool self_pair = false;
};

// Relative geometry of two grid elements. The angle convention uses only
// the x-displacement of the separation vector, with beta = pi - alpha,
// even for out-of-plane pairs.
inline PairGeometry pairwise_geometry(const ArrayGeometry& geom_a, int idx_a,
                                      const ArrayGeometry& geom_b, int idx_b) {
    if (idx_a < 0 || idx_a >= geom_a.num_elements() ||
        idx_b < 0 || idx_b >= geom_b.num_elements()) {
        throw domain_error("element index out of range");
    }
    const Eigen::Vector3d delta = geom_b.position(idx_b) - geom_a.position(idx_a);
    PairGeometry pg;
    pg.d = delta.norm();
    if (pg.d == 0.0) {
        pg.self_pair = true;
        return pg;
    }
    const double ca = std::clamp(delta.x() / pg.d, -1.0, 1.0);
    pg.alpha = std::acos(ca);
    pg.beta = constants::pi - pg.alpha;
    return pg;
}

// Coupling matrix between the elements of two arrays (or one array with
// itself). Intra-array: self-impedance on the diagonal, mutual impedance
// elsewhere, complex symmetric by construction.
inline CouplingMatrix assemble_coupling(double f, const ArrayGeometry& geom_a,
                                        const ArrayGeometry& geom_b,
                                        const AntennaParams& ant) {
    geom_a.check();
    geom_b.check();
    const int na = geom_a.num_elements();
    const int nb = geom_b.num_elements();
    CouplingMatrix cm;
    cm.frequency = f;
    cm.entries.resize(na, nb);

    const bool same = (geom_a.nx == geom_b.nx && geom_a.ny == geom_b.ny &&
                       geom_a.dx == geom_b.dx && geom_a.dy == geom_b.dy &&
                       geom_a.plane_offset_z == geom_b.plane_offset_z &&
                       geom_a.origin == geom_b.origin);
    cm.kind = same ? CouplingKind::intra_array : CouplingKind::inter_array;

    if (same) {
        const Complex zs = self_impedance(f, ant);
        for (int i = 0; i < na; ++i) {
            cm.entries(i, i) = zs;
            for (int j = i + 1; j < na; ++j) {
                const PairGeometry pg = pairwise_geometry(geom_a, i, geom_a, j);
                const Complex z = mutual_impedance(f, ant, ant, pg.d, pg.alpha, pg.beta);
                cm.entries(i, j) = z;
                cm.entries(j, i) = z;
            }
        }
    } else {
        for (int i = 0; i < na; ++i) {
            for (int j = 0; j < nb; ++j) {
                const PairGeometry pg = pairwise_geometry(geom_a, i, geom_b, j);
                if (pg.self_pair) {
                    throw domain_error("overlapping elements across distinct arrays");
                }
                cm.entries(i, j) = mutual_impedance(f, ant, ant, pg.d, pg.alpha, pg.beta);
            }
        }
    }
    return cm;
}

}  // namespace simwave::em

#endif  // SIMWAVE_EM_HPP
