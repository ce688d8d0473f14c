#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hemo/config.hpp"
#include "hemo/network.hpp"
#include "hemo/particles.hpp"
#include "hemo/trainer.hpp"

namespace hemo {

struct Scene {
    std::vector<ProxyParticle> proxies;
    FluidState initial;
    FluidConstants constants;
    KernelParams kernel;
    BinningSpec binning;
};

// Hard caps used by benchmarks to hit exact particle counts. Fluid trims
// from the top of the column, proxies from the far end of the tube, so the
// trimmed scene stays physically coherent.
struct SceneLimits {
    int max_fluid = 0;   // 0 = unlimited
    int max_proxies = 0;
};

// Wall sample positions for the configured vessel (tube rings or mesh
// surface scatter), before volume assignment.
std::vector<Vec3> sample_vessel(const Config& cfg);

// Lattice-initialized fluid column inside the sampled vessel. Rejects
// columns that poke outside the wetted volume or sit closer than half a
// lattice spacing to any proxy.
Scene build_scene(const Config& cfg, const SceneLimits& limits = {});

// The five initial column heights used to diversify training captures,
// spanning 0.5x-1.5x the vessel radius.
std::vector<double> training_height_schedule(double vessel_radius);

enum class RunMode { Physics, Pcnet };

struct RunMetrics {
    std::vector<double> frame_seconds;     // timed pipeline: rebuild + step
    std::vector<double> mean_density_dev;  // mean |rho/rho0 - 1| of the stepped-from frame
    std::vector<double> max_density_dev;
    std::vector<double> max_speed;
    std::vector<double> kinetic_energy;
    int completed_frames = 0;
    bool truncated = false;
    int instability_particle = -1;
    int instability_frame = -1;

    double mean_frame_seconds() const;
};

struct RunOptions {
    int threads = 1;
    // Density diagnostics cost an extra untimed pass in pcnet mode (the
    // data-driven pipeline has no density step of its own).
    bool density_metrics = true;
    std::function<void(const FluidState&)> on_frame;  // every state, initial included
};

struct RunResult {
    FluidState final_state;
    RunMetrics metrics;
};

// The frame loop shared by both modes: rebuild grid, produce accelerations
// (physics passes or feature+network), integrate. frames = number of steps;
// 0 runs nothing and returns the initial state. Instability truncates.
RunResult run(const Scene& scene, RunMode mode, int frames, const Network* model,
              const RunOptions& opts = {});

struct CompareMetrics {
    std::vector<double> mean_error;  // per frame, index-matched particles
    std::vector<double> max_error;
};

CompareMetrics compare_frames(const std::vector<std::vector<Vec3>>& reference,
                              const std::vector<std::vector<Vec3>>& test);

// Frame file: magic "BFSF", version, frame index, count, then contiguous
// position/velocity/acceleration arrays (3 x f32 each).
void write_frame_file(const std::string& path, std::uint32_t index, const FluidState& state);

struct FrameFile {
    std::uint32_t index = 0;
    std::vector<Vec3> r, v, a;
};
FrameFile read_frame_file(const std::string& path);

std::string frame_file_name(int index);

}  // namespace hemo
