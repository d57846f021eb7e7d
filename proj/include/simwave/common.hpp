#ifndef SIMWAVE_COMMON_HPP
#define SIMWAVE_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace simwave {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RowVector = Eigen::RowVectorXcd;
using Matrix2c = Eigen::Matrix2cd;
using RealVector = Eigen::VectorXd;

namespace constants {
inline constexpr double speed_of_light = 299792458.0;      // m/s
inline constexpr double free_space_eta = 376.730;          // ohm
inline constexpr double reference_z0 = 50.0;               // ohm
inline constexpr double pi = 3.141592653589793238462643383279502884;
// Keep-out distance of phases from {0, pi, 2pi}; the phase-shifter
// impedance block diverges at sin(phi) = 0.
inline constexpr double phase_singularity_margin = 1e-3;   // rad
}  // namespace constants

struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void check_positive(double v, const char* name) {
    if (!(v > 0.0)) {
        throw domain_error(std::string(name) + " must be positive");
    }
}

}  // namespace simwave

#endif  // SIMWAVE_COMMON_HPP
