#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hemo/kernels.hpp"
#include "hemo/particles.hpp"
#include "hemo/vec.hpp"

namespace hemo {

struct TubeSpec {
    std::vector<Vec3> axis;  // polyline, >= 2 distinct points
    double radius = 0.0;
    bool cap_start = false;  // close the tube with sampled end disks
    bool cap_end = false;
};

// Ring sampling of the tube surface at the given spacing: rings every
// `spacing` along the axis, ceil(2*pi*R/spacing) points per ring, each ring
// rotated by half a step against its predecessor. Deterministic.
std::vector<Vec3> sample_tube(const TubeSpec& tube, double spacing);

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};

// ASCII OBJ subset: v and f lines, polygons fan-triangulated, texture and
// normal references stripped.
TriangleMesh load_obj(const std::string& path);

// Area-stratified surface sampling at ~1/spacing^2 points per unit area.
// Sample positions are drawn with the seeded generator; triangle sample
// counts come from a deterministic remainder accumulator.
std::vector<Vec3> sample_mesh(const TriangleMesh& mesh, double spacing, std::uint64_t seed);

// V_s = 1 / sum_k W(r_ik, h) over proxy neighbors including self;
// weight = rho0 * V_s.
std::vector<ProxyParticle> proxy_volumes(const std::vector<Vec3>& positions, double rho0,
                                         const KernelParams& kp);

// Proxy file: magic "BFPX", version, count, then per proxy 3xf32 position
// and f32 weight.
void write_proxies(const std::string& path, const std::vector<ProxyParticle>& proxies);
std::vector<ProxyParticle> read_proxies(const std::string& path, double rho0);

}  // namespace hemo
