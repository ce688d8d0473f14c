#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hemo/driver.hpp"
#include "hemo/features.hpp"
#include "hemo/kernels.hpp"
#include "hemo/network.hpp"
#include "hemo/physics.hpp"
#include "hemo/trainer.hpp"

using namespace hemo;

namespace {

constexpr double kH = 0.035;

std::vector<Vec3> random_cloud(int n, double extent, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-extent, extent);
    std::vector<Vec3> out(n);
    for (Vec3& p : out) p = {uni(rng), uni(rng), uni(rng)};
    return out;
}

// Settled-lattice blob used by the per-step benchmarks.
FluidState make_blob(int side, const FluidConstants& c) {
    FluidState s;
    const double d = 0.5 * kH;
    const double mass = c.rho0 * d * d * d;
    for (int x = 0; x < side; ++x) {
        for (int y = 0; y < side; ++y) {
            for (int z = 0; z < side; ++z) {
                FluidParticle p;
                p.r = {x * d, y * d, z * d};
                p.m = mass;
                p.rho = c.rho0;
                s.particles.push_back(p);
            }
        }
    }
    return s;
}

}  // namespace

static void BM_KernelValue(benchmark::State& state) {
    const auto pts = random_cloud(1024, kH, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel_w(pts[i++ & 1023], kH, KernelFamily::Poly6));
    }
}
BENCHMARK(BM_KernelValue);

static void BM_KernelGradient(benchmark::State& state) {
    const auto pts = random_cloud(1024, kH, 2);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel_grad(pts[i++ & 1023], kH, KernelFamily::Spiky));
    }
}
BENCHMARK(BM_KernelGradient);

static void BM_GridBuild(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto fluid = random_cloud(n, 0.2, 3);
    for (auto _ : state) {
        NeighborGrid grid(fluid, {}, kH);
        benchmark::DoNotOptimize(grid);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GridBuild)->Arg(4000)->Arg(16000);

static void BM_GridQuery(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto fluid = random_cloud(n, 0.2, 4);
    NeighborGrid grid(fluid, {}, kH);
    std::vector<int> fl, pr;
    int i = 0;
    for (auto _ : state) {
        grid.query(i, fl, pr);
        benchmark::DoNotOptimize(fl.size());
        i = (i + 1) % n;
    }
}
BENCHMARK(BM_GridQuery)->Arg(16000);

static void BM_PhysicsStep(benchmark::State& state) {
    FluidConstants c;
    c.dt = 1e-4;
    const FluidState blob = make_blob(16, c);  // 4096 particles
    KernelParams kp;
    kp.h = kH;
    const int threads = static_cast<int>(state.range(0));
    NeighborGrid grid(blob.positions(), {}, kp.h);
    for (auto _ : state) {
        benchmark::DoNotOptimize(physics_step(blob, {}, grid, c, kp, threads));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int>(blob.particles.size()));
}
BENCHMARK(BM_PhysicsStep)->Arg(1)->Arg(4)->UseRealTime();

static void BM_FeatureExtraction(benchmark::State& state) {
    FluidConstants c;
    const FluidState blob = make_blob(16, c);
    NeighborGrid grid(blob.positions(), {}, kH);
    BinningSpec spec;
    spec.dist_range = kH;
    spec.vel_range = c.cs / 10.0;
    int i = 0;
    const int n = static_cast<int>(blob.particles.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_feature_vector(blob, i, grid, {}, spec));
        i = (i + 1) % n;
    }
}
BENCHMARK(BM_FeatureExtraction);

static void BM_NetworkForward(benchmark::State& state) {
    Network net = Network::init(7);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    FeatureVector f;
    for (double& x : f) x = uni(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(f));
    }
}
BENCHMARK(BM_NetworkForward);

static void BM_PcnetStep(benchmark::State& state) {
    FluidConstants c;
    c.dt = 1e-4;
    const FluidState blob = make_blob(16, c);
    KernelParams kp;
    kp.h = kH;
    BinningSpec spec;
    spec.dist_range = kH;
    spec.vel_range = c.cs / 10.0;
    Network net = Network::init(7);
    net.set_output_normalization({0, 0, 0}, {1e-3, 1e-3, 1e-3});
    const int threads = static_cast<int>(state.range(0));
    NeighborGrid grid(blob.positions(), {}, kp.h);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcnet_step(blob, {}, grid, net, spec, c.dt, threads));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int>(blob.particles.size()));
}
BENCHMARK(BM_PcnetStep)->Arg(1)->Arg(4)->UseRealTime();

BENCHMARK_MAIN();
