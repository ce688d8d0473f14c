#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "hemo/neighbor_grid.hpp"
#include "hemo/particles.hpp"
#include "hemo/vec.hpp"

namespace hemo {

constexpr int kFeatureDim = 23;
using FeatureVector = std::array<double, kFeatureDim>;

// Component layout. Fluid statistics carry both position and velocity
// moments; proxy statistics are position-only (walls are static).
namespace feat {
constexpr int kAx = 0, kAy = 1, kAz = 2;
constexpr int kN = 3;
constexpr int kDisAvgB = 4;   // x,y,z at 4,5,6
constexpr int kRvAvgB = 7;    // x,y,z at 7,8,9
constexpr int kDDisB = 10, kDRvB = 11;
constexpr int kAlphaDisB = 12, kAlphaRvB = 13;
constexpr int kBetaDisB = 14, kBetaRvB = 15;
constexpr int kM = 16;
constexpr int kDisAvgP = 17;  // x,y,z at 17,18,19
constexpr int kDDisP = 20, kAlphaDisP = 21, kBetaDisP = 22;
}  // namespace feat

struct BinningSpec {
    int bins = 6;
    double dist_range = 0.0;  // distances live in [0, dist_range]
    double vel_range = 0.0;   // relative speeds live in [0, vel_range]

    bool valid() const { return bins >= 2 && dist_range > 0.0 && vel_range > 0.0; }
};

// Relative neighbor values, one entry per neighbor in ascending index
// order (neighbor minus self). dv is left empty for proxy sets.
struct NeighborSamples {
    std::vector<Vec3> dr;
    std::vector<Vec3> dv;
};

void fluid_samples(const FluidState& state, int i, std::span<const int> fluid_nb,
                   NeighborSamples& out);
void proxy_samples(const FluidState& state, int i, std::span<const int> proxy_nb,
                   const std::vector<ProxyParticle>& proxies, NeighborSamples& out);

// Component-wise mean; empty input -> zero vector.
Vec3 central_tendency(const std::vector<Vec3>& rel);

// Population variance of the magnitudes; empty or singleton input -> 0.
double dispersion(const std::vector<Vec3>& rel);

// Skewness and kurtosis of the magnitudes after binning into `bins` equal
// partitions of [0, range] with representatives i*range/bins (upper bin
// edges). Values beyond the range clamp into the last bin. All mass in one
// bin (sigma = 0) -> (0, 0).
std::pair<double, double> shape_coefficients(const std::vector<Vec3>& rel, double range, int bins);

// The 23 components: current acceleration, fluid neighbor statistics with
// count N, proxy neighbor statistics with count M.
FeatureVector extract_feature_vector(const FluidState& state, int i,
                                     std::span<const int> fluid_nb,
                                     std::span<const int> proxy_nb,
                                     const std::vector<ProxyParticle>& proxies,
                                     const BinningSpec& spec);
FeatureVector extract_feature_vector(const FluidState& state, int i, const NeighborGrid& grid,
                                     const std::vector<ProxyParticle>& proxies,
                                     const BinningSpec& spec);

}  // namespace hemo
