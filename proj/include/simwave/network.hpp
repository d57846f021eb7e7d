#ifndef SIMWAVE_NETWORK_HPP
#define SIMWAVE_NETWORK_HPP

#include <cmath>
#include <vector>

#include "simwave/common.hpp"
#include "simwave/em.hpp"

// Multiport model of the stacked metasurface: impedance-block assembly,
// phase-shifter load blocks, and a block-tridiagonal solver for the first
// block column and last block row of (Z_SS + Z_S)^{-1} together with their
// phase sensitivities.

namespace simwave::net {

struct SimStack {
    int num_layers_L = 1;
    em::ArrayGeometry layer_geometry;   // one facing of one layer
    double layer_spacing = 0.0;         // m, between adjacent layers
    em::AntennaParams antenna;
    double reference_z0 = constants::reference_z0;

    int elements_per_layer() const { return layer_geometry.num_elements(); }
    int total_elements() const { return num_layers_L * elements_per_layer(); }
    int total_ports() const { return 2 * total_elements(); }

    void check() const {
        if (num_layers_L < 1) throw domain_error("layer count must be >= 1");
        layer_geometry.check();
        antenna.check();
        if (num_layers_L > 1 && !(layer_spacing > 0.0)) {
            throw domain_error("layer spacing must be positive for L > 1");
        }
    }
};

// Phases indexed (layer, element) with layer slow: idx = (l-1)*M + (m-1).
struct PhaseVector {
    RealVector phases;                     // rad, length L*M
    std::vector<bool> frozen;              // length L*M

    int size() const { return static_cast<int>(phases.size()); }

    double at(int layer, int element, int elems_per_layer) const {
        return phases[(layer - 1) * elems_per_layer + (element - 1)];
    }
};

// Wrap into [0, 2pi) and push away from the sin(phi) = 0 singularities.
inline double project_phase(double phi,
                            double margin = constants::phase_singularity_margin) {
    const double two_pi = 2.0 * constants::pi;
    phi = std::fmod(phi, two_pi);
    if (phi < 0.0) phi += two_pi;
    if (phi < margin) phi = margin;
    if (phi > two_pi - margin) phi = two_pi - margin;
    if (std::abs(phi - constants::pi) < margin) {
        phi = (phi < constants::pi) ? constants::pi - margin : constants::pi + margin;
    }
    return phi;
}

inline void project_phases(PhaseVector& pv,
                           double margin = constants::phase_singularity_margin) {
    for (int i = 0; i < pv.size(); ++i) {
        if (!pv.frozen.empty() && pv.frozen[i]) continue;
        pv.phases[i] = project_phase(pv.phases[i], margin);
    }
}

namespace detail {

// Strictly inside the projection keep-out: a phase clamped to the margin
// has sin(phi) slightly below the margin itself and must still pass.
inline bool near_singularity(double s) {
    return std::abs(s) < std::sin(0.5 * constants::phase_singularity_margin);
}

}  // namespace detail

// Two-port Z-parameter block of a lossless transmissive phase shifter.
inline Matrix2c phase_to_load_block(double phi, double z0) {
    const double s = std::sin(phi);
    if (detail::near_singularity(s)) {
        throw numerical_error("phase shifter singular: sin(phi) ~ 0");
    }
    const double c = std::cos(phi);
    Matrix2c z;
    const Complex j(0.0, 1.0);
    z << j * z0 * c / s, j * z0 / s,
         j * z0 / s,     j * z0 * c / s;
    return z;
}

// d/dphi of phase_to_load_block.
inline Matrix2c local_impedance_gradient(double phi, double z0) {
    const double s = std::sin(phi);
    if (detail::near_singularity(s)) {
        throw numerical_error("phase shifter singular: sin(phi) ~ 0");
    }
    const double c = std::cos(phi);
    const double cot = c / s;
    Matrix2c g;
    const Complex j(0.0, 1.0);
    g << -j * z0 * (1.0 + cot * cot), -j * z0 * c / (s * s),
         -j * z0 * c / (s * s),       -j * z0 * (1.0 + cot * cot);
    return g;
}

// Impedance blocks of (Z_SS + Z_S) in block-tridiagonal form over the 2L
// port sets. Junction l (l = 1..L-1) couples port set 2l with 2l+1:
//   z11[l-1], z22[l-1] : intra-facing blocks on either side,
//   z12[l-1], z21[l-1] : cross blocks (z21 = z12^T physically).
// The boundary blocks cover port sets 1 and 2L. Load blocks come from the
// per-element phase shifters.
struct SimBlocks {
    double frequency = 0.0;
    int num_layers = 1;
    int elems_per_layer = 1;
    double z0 = constants::reference_z0;
    Matrix boundary_first;               // Z^{(0)}_{2,2}
    Matrix boundary_last;                // Z^{(L)}_{1,1}
    std::vector<Matrix> z11, z12, z21, z22;  // per junction, L-1 each
    std::vector<Matrix2c> load_blocks;   // per element, L*M, layer slow

    int num_block_rows() const { return 2 * num_layers; }

    // Diagonal block of A = Z_SS + Z_S for port set p (1-based).
    Matrix diag_block(int p) const {
        const int layer = (p + 1) / 2;           // 1-based layer
        const bool facing1 = (p % 2 == 1);
        Matrix d;
        if (p == 1) {
            d = boundary_first;
        } else if (p == num_block_rows()) {
            d = boundary_last;
        } else if (facing1) {
            d = z22[layer - 2];                  // junction layer-1, far side
        } else {
            d = z11[layer - 1];                  // junction layer, near side
        }
        const int m = elems_per_layer;
        for (int e = 0; e < m; ++e) {
            const Matrix2c& x = load_blocks[(layer - 1) * m + e];
            d(e, e) += facing1 ? x(0, 0) : x(1, 1);
        }
        return d;
    }

    // Block (p, p+1) of A.
    Matrix upper_block(int p) const {
        const int m = elems_per_layer;
        if (p % 2 == 1) {                        // within-layer: X_{1,2}
            const int layer = (p + 1) / 2;
            Matrix u = Matrix::Zero(m, m);
            for (int e = 0; e < m; ++e) {
                u(e, e) = load_blocks[(layer - 1) * m + e](0, 1);
            }
            return u;
        }
        return z12[p / 2 - 1];                   // across layers
    }

    // Block (p+1, p) of A.
    Matrix lower_block(int p) const {
        const int m = elems_per_layer;
        if (p % 2 == 1) {
            const int layer = (p + 1) / 2;
            Matrix l = Matrix::Zero(m, m);
            for (int e = 0; e < m; ++e) {
                l(e, e) = load_blocks[(layer - 1) * m + e](1, 0);
            }
            return l;
        }
        return z21[p / 2 - 1];
    }

    Matrix dense() const {
        const int m = elems_per_layer;
        const int n = num_block_rows() * m;
        Matrix a = Matrix::Zero(n, n);
        for (int p = 1; p <= num_block_rows(); ++p) {
            a.block((p - 1) * m, (p - 1) * m, m, m) = diag_block(p);
            if (p < num_block_rows()) {
                a.block((p - 1) * m, p * m, m, m) = upper_block(p);
                a.block(p * m, (p - 1) * m, m, m) = lower_block(p);
            }
        }
        return a;
    }
};

// Frequency-dependent coupling blocks, independent of the phases. Reused
// across phase updates within one subband.
struct LayerCoupling {
    Matrix intra;   // facing with itself
    Matrix cross;   // adjacent facings across one layer gap
};

inline LayerCoupling layer_coupling(const SimStack& stack, double f) {
    LayerCoupling lc;
    lc.intra = em::assemble_coupling(f, stack.layer_geometry, stack.layer_geometry,
                                     stack.antenna).entries;
    if (stack.num_layers_L > 1) {
        em::ArrayGeometry shifted = stack.layer_geometry;
        shifted.plane_offset_z += stack.layer_spacing;
        lc.cross = em::assemble_coupling(f, stack.layer_geometry, shifted,
                                         stack.antenna).entries;
    }
    return lc;
}

inline SimBlocks assemble_sim_blocks(const SimStack& stack, const PhaseVector& phases,
                                     double f, const LayerCoupling* cached = nullptr) {
    stack.check();
    if (phases.size() != stack.total_elements()) {
        throw domain_error("phase vector length mismatch");
    }
    LayerCoupling local;
    if (cached == nullptr) {
        local = layer_coupling(stack, f);
        cached = &local;
    }
    SimBlocks b;
    b.frequency = f;
    b.num_layers = stack.num_layers_L;
    b.elems_per_layer = stack.elements_per_layer();
    b.z0 = stack.reference_z0;
    b.boundary_first = cached->intra;
    b.boundary_last = cached->intra;
    for (int l = 0; l + 1 < stack.num_layers_L; ++l) {
        b.z11.push_back(cached->intra);
        b.z22.push_back(cached->intra);
        b.z12.push_back(cached->cross);
        b.z21.push_back(cached->cross.transpose());
    }
    b.load_blocks.reserve(phases.size());
    for (int i = 0; i < phases.size(); ++i) {
        b.load_blocks.push_back(phase_to_load_block(phases.phases[i], b.z0));
    }
    return b;
}

// First block column and last block row of (Z_SS + Z_S)^{-1}.
struct GBlocks {
    double frequency = 0.0;
    int num_layers = 1;
    int elems_per_layer = 1;
    std::vector<Matrix> first_column;   // G_{r,1}, r = 1..2L
    std::vector<Matrix> last_row;       // G_{2L,c}, c = 1..2L

    const Matrix& transmissive_block() const { return first_column.back(); }
};

namespace detail {

// Block Thomas elimination. Solves A X = E_b where E_b is the b-th block
// column of the identity (b is 0-based). Returns all 2L block rows of X.
inline std::vector<Matrix> block_tridiag_solve(
    const std::vector<Matrix>& diag, const std::vector<Matrix>& upper,
    const std::vector<Matrix>& lower, int rhs_block) {
    const int n = static_cast<int>(diag.size());
    const int m = static_cast<int>(diag[0].rows());

    std::vector<Eigen::PartialPivLU<Matrix>> pivots;
    pivots.reserve(n);
    std::vector<Matrix> s_inv_u(n > 1 ? n - 1 : 0);

    Matrix s = diag[0];
    for (int p = 0; p < n; ++p) {
        if (p > 0) {
            s = diag[p] - lower[p - 1] * s_inv_u[p - 1];
        }
        pivots.emplace_back(s);
        if (pivots.back().rcond() < 1e-12) {
            throw numerical_error("ill-conditioned pivot at block row " +
                                  std::to_string(p + 1));
        }
        if (p < n - 1) {
            s_inv_u[p] = pivots.back().solve(upper[p]);
        }
    }

    std::vector<Matrix> y(n);
    for (int p = 0; p < n; ++p) {
        Matrix rhs = Matrix::Zero(m, m);
        if (p == rhs_block) rhs.setIdentity();
        if (p > 0) {
            rhs -= lower[p - 1] * y[p - 1];
        }
        y[p] = pivots[p].solve(rhs);
    }
    std::vector<Matrix> x(n);
    x[n - 1] = y[n - 1];
    for (int p = n - 2; p >= 0; --p) {
        x[p] = y[p] - s_inv_u[p] * x[p + 1];
    }
    return x;
}

}  // namespace detail

inline GBlocks compute_g_blocks(const SimBlocks& blocks) {
    const int n = blocks.num_block_rows();
    std::vector<Matrix> diag(n), upper(n > 1 ? n - 1 : 0), lower(n > 1 ? n - 1 : 0);
    for (int p = 1; p <= n; ++p) {
        diag[p - 1] = blocks.diag_block(p);
        if (p < n) {
            upper[p - 1] = blocks.upper_block(p);
            lower[p - 1] = blocks.lower_block(p);
        }
    }

    GBlocks g;
    g.frequency = blocks.frequency;
    g.num_layers = blocks.num_layers;
    g.elems_per_layer = blocks.elems_per_layer;
    g.first_column = detail::block_tridiag_solve(diag, upper, lower, 0);

    // Last block row via the transposed system: A^T Y = E_{2L} gives
    // G_{2L,c} = Y_c^T.
    std::vector<Matrix> diag_t(n), upper_t(n > 1 ? n - 1 : 0), lower_t(n > 1 ? n - 1 : 0);
    for (int p = 0; p < n; ++p) diag_t[p] = diag[p].transpose();
    for (int p = 0; p + 1 < n; ++p) {
        upper_t[p] = lower[p].transpose();
        lower_t[p] = upper[p].transpose();
    }
    const std::vector<Matrix> y =
        detail::block_tridiag_solve(diag_t, upper_t, lower_t, n - 1);
    g.last_row.resize(n);
    for (int c = 0; c < n; ++c) g.last_row[c] = y[c].transpose();
    return g;
}

// Dense-inversion oracle for cross-checking the block solver.
inline GBlocks dense_g_blocks(const SimBlocks& blocks) {
    const Matrix a = blocks.dense();
    const Matrix g_full = a.partialPivLu().solve(
        Matrix::Identity(a.rows(), a.cols()));
    const int n = blocks.num_block_rows();
    const int m = blocks.elems_per_layer;
    GBlocks g;
    g.frequency = blocks.frequency;
    g.num_layers = blocks.num_layers;
    g.elems_per_layer = m;
    for (int r = 0; r < n; ++r) {
        g.first_column.push_back(g_full.block(r * m, 0, m, m));
    }
    for (int c = 0; c < n; ++c) {
        g.last_row.push_back(g_full.block((n - 1) * m, c * m, m, m));
    }
    return g;
}

// Idealized decoupled matched construction: inter-layer reflections off
// (Z12 = 0), intra blocks matched to Z0*I, forward coupling kept.
inline SimBlocks idealized_blocks(const SimStack& stack, const PhaseVector& phases,
                                  double f) {
    SimBlocks b = assemble_sim_blocks(stack, phases, f);
    const int m = b.elems_per_layer;
    const Matrix matched = b.z0 * Matrix::Identity(m, m);
    b.boundary_first = matched;
    b.boundary_last = matched;
    for (int l = 0; l + 1 < b.num_layers; ++l) {
        b.z11[l] = matched;
        b.z22[l] = matched;
        b.z12[l] = Matrix::Zero(m, m);
        // z21 keeps the physical forward inter-layer coupling
    }
    return b;
}

// Product form of the transmissive response under the idealized
// construction: -(1/(2 Z0))^L e^{j phi_L} prod_{l=L-1..1} Z^{(l)}_{2,1} e^{j phi_l}.
// Each appended layer contributes -D Z21 with D = -e^{j phi}/(2 Z0), so the
// prefactor is a single global minus times (1/(2 Z0))^L.
inline Matrix conventional_reduction_oracle(const SimStack& stack,
                                            const PhaseVector& phases, double f) {
    stack.check();
    const int m = stack.elements_per_layer();
    const int big_l = stack.num_layers_L;
    const LayerCoupling lc = layer_coupling(stack, f);
    const Matrix cross_t = big_l > 1 ? Matrix(lc.cross.transpose()) : Matrix();

    auto phase_diag = [&](int layer) {
        Vector d(m);
        for (int e = 0; e < m; ++e) {
            d[e] = std::exp(Complex(0.0, phases.at(layer, e + 1, m)));
        }
        return d;
    };

    Matrix out = phase_diag(big_l).asDiagonal();
    for (int l = big_l - 1; l >= 1; --l) {
        out = out * cross_t * Matrix(phase_diag(l).asDiagonal());
    }
    return -std::pow(1.0 / (2.0 * stack.reference_z0), big_l) * out;
}

// Rank-2 phase sensitivity of G_{2L,1}:
//   dG_{2L,1}/dphi_{l,m} = -[(d11 c1 + d21 c2) r1^T + (d12 c1 + d22 c2) r2^T].
struct PhaseSensitivity {
    Vector c1, c2;        // columns of the last block row
    RowVector r1, r2;     // rows of the first block column
    Matrix2c d;           // local impedance gradient entries
};

inline PhaseSensitivity g_phase_sensitivity(const GBlocks& g, const Matrix2c& grad2x2,
                                            int layer, int element) {
    const int m = g.elems_per_layer;
    if (layer < 1 || layer > g.num_layers || element < 1 || element > m) {
        throw domain_error("layer/element out of range");
    }
    PhaseSensitivity s;
    s.d = grad2x2;
    s.c1 = g.last_row[2 * layer - 2].col(element - 1);
    s.c2 = g.last_row[2 * layer - 1].col(element - 1);
    s.r1 = g.first_column[2 * layer - 2].row(element - 1);
    s.r2 = g.first_column[2 * layer - 1].row(element - 1);
    return s;
}

// Materialize the rank-2 factor (test and oracle use only).
inline Matrix materialize_sensitivity(const PhaseSensitivity& s) {
    return (s.d(0, 0) * s.c1 + s.d(1, 0) * s.c2) * s.r1 +
           (s.d(0, 1) * s.c1 + s.d(1, 1) * s.c2) * s.r2;
}

}  // namespace simwave::net

#endif  // SIMWAVE_NETWORK_HPP
