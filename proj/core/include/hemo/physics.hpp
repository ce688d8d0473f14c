#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hemo/constants.hpp"
#include "hemo/kernels.hpp"
#include "hemo/neighbor_grid.hpp"
#include "hemo/particles.hpp"

namespace hemo {

// Raised when a step produces a non-finite particle state. The driver
// truncates the run at the previous frame instead of propagating NaNs.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(int particle, int frame)
        : std::runtime_error("non-finite state for particle " + std::to_string(particle) +
                             " at frame " + std::to_string(frame)),
          particle_(particle),
          frame_(frame) {}
    int particle() const { return particle_; }
    int frame() const { return frame_; }

private:
    int particle_;
    int frame_;
};

// rho_i = m_i (W(0) + sum_j W(r_ij)) + sum_k w_k W(r_ik). Self-term included.
double compute_density(const FluidState& state, int i, std::span<const int> fluid_nb,
                       std::span<const int> proxy_nb, const std::vector<ProxyParticle>& proxies,
                       const KernelParams& kp);

// Tait equation, clamped at zero from below when the clamp switch is on.
double compute_pressure(double rho, const FluidConstants& c);

// grad v_i = sum_j (m_j/rho_j) outer(gradW(r_ij), v_j - v_i); row a column b
// holds gradW_a * v_ji_b. Only the symmetrized tensor feeds the stress, so
// the orientation is a bookkeeping convention; it is fixed here once.
Mat3 velocity_gradient(const FluidState& state, int i, std::span<const int> fluid_nb,
                       const KernelParams& kp);

// Casson effective viscosity as a function of the strain invariant
// D_II = (1/2) gdot:gdot. Returns eta = rho0*mu in the D_II -> 0 limit.
double casson_viscosity(double d_ii, const FluidConstants& c);

struct StressResult {
    Mat3 tau;
    double d_ii = 0.0;  // strain invariant the viscosity was evaluated at
};

// gdot = (grad_v + grad_v^T)/2, tau = nu * gdot. d_ii is computed from gdot
// so callers can evaluate casson_viscosity and re-apply it.
StressResult stress_tensor(const Mat3& grad_v, double nu);
double strain_invariant(const Mat3& grad_v);

// Viscous + pressure force per unit mass (an acceleration).
Vec3 fluid_force(const FluidState& state, int i, std::span<const int> fluid_nb,
                 const KernelParams& kp);

// Wall coupling force in Newtons (carries the m_i factor). Proxy pressure,
// density and viscosity coefficient mirror particle i.
Vec3 coupling_force(const FluidState& state, int i, std::span<const int> proxy_nb,
                    const std::vector<ProxyParticle>& proxies, const FluidConstants& c,
                    const KernelParams& kp);

// v' = v + a dt; x' = x + (v + v') dt/2. Exact for constant acceleration.
std::pair<Vec3, Vec3> integrate(const Vec3& v, const Vec3& x, const Vec3& a, double dt);

// One frame of the physics pipeline: density/pressure pass, stress pass,
// force pass, integration. Reads only `state`, returns the next frame.
// The grid must have been built from state's positions and the proxies.
FluidState physics_step(const FluidState& state, const std::vector<ProxyParticle>& proxies,
                        const NeighborGrid& grid, const FluidConstants& c, const KernelParams& kp,
                        int threads = 1);

}  // namespace hemo
