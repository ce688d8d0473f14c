#include "hemo/physics.hpp"

#include <cmath>

#include "hemo/parallel.hpp"

namespace hemo {

namespace {

// Below this strain magnitude the Casson closed form is evaluated as its
// analytic limit eta; avoids 0/0 at rest.
constexpr double kStrainFloor = 1e-12;

}  // namespace

double compute_density(const FluidState& state, int i, std::span<const int> fluid_nb,
                       std::span<const int> proxy_nb, const std::vector<ProxyParticle>& proxies,
                       const KernelParams& kp) {
    const FluidParticle& pi = state.particles[i];
    double fluid_sum = kernel_w_origin(kp.h, kp.value_family);
    for (int j : fluid_nb) {
        fluid_sum += kernel_w(pi.r - state.particles[j].r, kp.h, kp.value_family);
    }
    double rho = pi.m * fluid_sum;
    for (int k : proxy_nb) {
        rho += proxies[k].weight * kernel_w(pi.r - proxies[k].r, kp.h, kp.value_family);
    }
    return rho;
}

double compute_pressure(double rho, const FluidConstants& c) {
    const double p = c.rho0 * c.cs * c.cs / c.gamma * (std::pow(rho / c.rho0, c.gamma) - 1.0);
    if (c.clamp_negative_pressure && p < 0.0) return 0.0;
    return p;
}

Mat3 velocity_gradient(const FluidState& state, int i, std::span<const int> fluid_nb,
                       const KernelParams& kp) {
    const FluidParticle& pi = state.particles[i];
    Mat3 grad;
    for (int j : fluid_nb) {
        const FluidParticle& pj = state.particles[j];
        const Vec3 gw = kernel_grad(pi.r - pj.r, kp.h, kp.grad_family);
        grad += outer(gw, pj.v - pi.v) * (pj.m / pj.rho);
    }
    return grad;
}

double casson_viscosity(double d_ii, const FluidConstants& c) {
    const double eta = c.rho0 * c.mu;
    const double x = std::sqrt(2.0 * d_ii);
    if (x <= kStrainFloor) return eta;
    const double s = std::sqrt(eta * x) + std::sqrt(c.tau_y) * (1.0 - std::exp(-c.casson_n * x));
    return s * s / x;
}

double strain_invariant(const Mat3& grad_v) {
    double sum = 0.0;
    for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) {
            const double g = 0.5 * (grad_v(r, col) + grad_v(col, r));
            sum += g * g;
        }
    }
    return 0.5 * sum;
}

StressResult stress_tensor(const Mat3& grad_v, double nu) {
    StressResult out;
    Mat3 gdot;
    for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) {
            gdot(r, col) = 0.5 * (grad_v(r, col) + grad_v(col, r));
        }
    }
    double sum = 0.0;
    for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) {
            sum += gdot(r, col) * gdot(r, col);
            out.tau(r, col) = nu * gdot(r, col);
        }
    }
    out.d_ii = 0.5 * sum;
    return out;
}

Vec3 fluid_force(const FluidState& state, int i, std::span<const int> fluid_nb,
                 const KernelParams& kp) {
    const FluidParticle& pi = state.particles[i];
    const double pi_term = pi.p / (pi.rho * pi.rho);
    Vec3 f;
    for (int j : fluid_nb) {
        const FluidParticle& pj = state.particles[j];
        const Vec3 gw = kernel_grad(pi.r - pj.r, kp.h, kp.grad_family);
        f += (pi.tau + pj.tau) * gw * (pj.m / (pi.rho * pj.rho));
        f -= gw * (pj.m * (pi_term + pj.p / (pj.rho * pj.rho)));
    }
    return f;
}

Vec3 coupling_force(const FluidState& state, int i, std::span<const int> proxy_nb,
                    const std::vector<ProxyParticle>& proxies, const FluidConstants& c,
                    const KernelParams& kp) {
    const FluidParticle& pi = state.particles[i];
    const double denom = c.mu_from_pressure ? pi.p : pi.rho;
    const double mu_i = pi.nu * kp.h * c.cs / denom;
    // Proxy-side p, rho, mu mirror particle i.
    const double p_k = pi.p, rho_k = pi.rho, mu_k = mu_i;
    const double pressure_term = pi.p / (pi.rho * pi.rho) + p_k / (rho_k * rho_k);
    Vec3 f;
    for (int k : proxy_nb) {
        const Vec3 r_ik = pi.r - proxies[k].r;
        const Vec3 v_ik = pi.v;  // proxies are static
        double pi_tilde = 0.0;
        const double approach = dot(v_ik, r_ik);
        if (approach < 0.0) {
            pi_tilde = -16.0 * mu_i * mu_k / (pi.rho * rho_k * (mu_i + mu_k)) * approach /
                       (r_ik.squared_norm() + c.av_eps * kp.h * kp.h);
        }
        const Vec3 gw = kernel_grad(r_ik, kp.h, kp.grad_family);
        f -= gw * (pi.m * proxies[k].weight * (pressure_term + pi_tilde));
    }
    return f;
}

std::pair<Vec3, Vec3> integrate(const Vec3& v, const Vec3& x, const Vec3& a, double dt) {
    const Vec3 v1 = v + a * dt;
    const Vec3 x1 = x + (v + v1) * (0.5 * dt);
    return {v1, x1};
}

FluidState physics_step(const FluidState& state, const std::vector<ProxyParticle>& proxies,
                        const NeighborGrid& grid, const FluidConstants& c, const KernelParams& kp,
                        int threads) {
    const int n = static_cast<int>(state.particles.size());
    FluidState next = state;
    next.frame = state.frame + 1;
    next.time = state.time + c.dt;

    // Neighbor lists are queried once and reused by every pass. Workers own
    // disjoint index ranges and the passes below never throw; all validation
    // runs on this thread.
    NeighborTable nb;
    grid.query_all(nb, threads);

    parallel_for(n, threads, [&](int i) {
        const double rho = compute_density(state, i, nb.fluid(i), nb.proxy(i), proxies, kp);
        next.particles[i].rho = rho;
        next.particles[i].p = compute_pressure(rho, c);
    });

    // Stress needs neighbor densities, so it reads the frame written above.
    parallel_for(n, threads, [&](int i) {
        const Mat3 grad_v = velocity_gradient(next, i, nb.fluid(i), kp);
        const double nu = casson_viscosity(strain_invariant(grad_v), c);
        next.particles[i].nu = nu;
        next.particles[i].tau = stress_tensor(grad_v, nu).tau;
    });

    std::vector<Vec3> accel(n);
    parallel_for(n, threads, [&](int i) {
        const Vec3 f = fluid_force(next, i, nb.fluid(i), kp);
        const Vec3 fc = coupling_force(next, i, nb.proxy(i), proxies, c, kp);
        accel[i] = f + fc * (1.0 / next.particles[i].m) + c.g;
    });

    parallel_for(n, threads, [&](int i) {
        FluidParticle& p = next.particles[i];
        p.a = accel[i];
        auto [v1, x1] = integrate(state.particles[i].v, state.particles[i].r, p.a, c.dt);
        p.v = v1;
        p.r = x1;
    });

    for (int i = 0; i < n; ++i) {
        const FluidParticle& p = next.particles[i];
        if (!is_finite(p.r) || !is_finite(p.v) || !is_finite(p.a)) {
            throw InstabilityError(i, next.frame);
        }
    }
    return next;
}

}  // namespace hemo
