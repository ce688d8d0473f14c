#pragma once

#include <vector>

#include "hemo/vec.hpp"

namespace hemo {

struct FluidParticle {
    Vec3 r;          // position, m
    Vec3 v;          // velocity, m/s
    Vec3 a;          // acceleration, m/s^2
    double m = 0.0;  // mass, kg
    double rho = 0.0;
    double p = 0.0;
    Mat3 tau;        // stress, Pa (symmetric)
    double nu = 0.0; // effective Casson viscosity used for tau
};

// Wall sample. Static by construction: proxy velocity is identically zero.
struct ProxyParticle {
    Vec3 r;
    double volume = 0.0;  // m^3
    double weight = 0.0;  // rho0 * volume, kg
};

struct FluidState {
    std::vector<FluidParticle> particles;
    int frame = 0;
    double time = 0.0;

    std::vector<Vec3> positions() const {
        std::vector<Vec3> out(particles.size());
        for (std::size_t i = 0; i < particles.size(); ++i) out[i] = particles[i].r;
        return out;
    }
};

inline std::vector<Vec3> proxy_positions(const std::vector<ProxyParticle>& proxies) {
    std::vector<Vec3> out(proxies.size());
    for (std::size_t i = 0; i < proxies.size(); ++i) out[i] = proxies[i].r;
    return out;
}

}  // namespace hemo
