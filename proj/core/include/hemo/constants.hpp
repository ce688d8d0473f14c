#pragma once

#include "hemo/vec.hpp"

namespace hemo {

// Physical constants and solver switches. Defaults are blood-literature
// values; every field is config-overridable.
struct FluidConstants {
    double rho0 = 1060.0;       // rest density, kg/m^3
    double cs = 20.0;           // sound speed, m/s (>= 10x expected max speed)
    double gamma = 7.0;         // Tait exponent
    double mu = 3.3e-6;         // kinematic viscosity, m^2/s
    double tau_y = 0.005;       // Casson yield stress, Pa
    double casson_n = 7.0;      // Casson regularizer exponent
    double av_eps = 0.01;       // artificial-viscosity denominator epsilon
    Vec3 g{0.0, 0.0, -9.81};    // gravity, m/s^2
    double dt = 0.005;          // time step, s

    // Stability switches; defaults favor stability, the literal variants
    // exist for fidelity experiments.
    bool clamp_negative_pressure = true;
    bool mu_from_pressure = false;  // true: mu_i = nu*h*cs/p_i instead of /rho_i

    bool valid() const {
        return rho0 > 0.0 && cs > 0.0 && dt > 0.0 && gamma >= 1.0 && mu >= 0.0 && tau_y >= 0.0;
    }
};

// Particle mass at the initialization lattice spacing d = h/2.
inline double default_particle_mass(double rho0, double h) {
    const double d = 0.5 * h;
    return rho0 * d * d * d;
}

}  // namespace hemo
