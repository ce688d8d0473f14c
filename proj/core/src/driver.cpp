#include "hemo/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "hemo/binary_io.hpp"
#include "hemo/boundary.hpp"
#include "hemo/neighbor_grid.hpp"
#include "hemo/parallel.hpp"
#include "hemo/physics.hpp"

namespace hemo {

namespace {

Vec3 perpendicular(const Vec3& t) {
    Vec3 ref = std::abs(t.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 n = cross(t, ref);
    return n * (1.0 / n.norm());
}

// Keep the max_keep proxies nearest to `center`, preserving sampling order
// among the survivors so repeated builds trim identically.
std::vector<Vec3> trim_proxies(std::vector<Vec3> positions, int max_keep, const Vec3& center) {
    if (max_keep <= 0 || positions.size() <= static_cast<std::size_t>(max_keep)) return positions;
    std::vector<int> idx(positions.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return (positions[a] - center).squared_norm() < (positions[b] - center).squared_norm();
    });
    idx.resize(static_cast<std::size_t>(max_keep));
    std::sort(idx.begin(), idx.end());
    std::vector<Vec3> kept(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) kept[k] = positions[idx[k]];
    return kept;
}

}  // namespace

std::vector<Vec3> sample_vessel(const Config& cfg) {
    if (cfg.vessel.type == VesselConfig::Type::Tube) {
        TubeSpec tube;
        tube.axis = {cfg.vessel.axis_start, cfg.vessel.axis_end};
        tube.radius = cfg.vessel.radius;
        tube.cap_start = cfg.vessel.cap_start;
        tube.cap_end = cfg.vessel.cap_end;
        return sample_tube(tube, cfg.vessel.spacing);
    }
    if (cfg.vessel.mesh_path.empty()) throw ConfigError("mesh vessel needs [vessel] mesh");
    return sample_mesh(load_obj(cfg.vessel.mesh_path), cfg.vessel.spacing, cfg.vessel.seed);
}

Scene build_scene(const Config& cfg, const SceneLimits& limits) {
    const auto& col = cfg.column;
    if (!(col.radius > 0.0) || !(col.height > 0.0)) {
        throw ConfigError("scene needs a fluid column: set [column] radius and height");
    }
    const Vec3 axis = cfg.vessel.axis_end - cfg.vessel.axis_start;
    const double axis_len = axis.norm();
    if (axis_len < 1e-12) throw ConfigError("vessel axis is degenerate");
    const Vec3 u = axis * (1.0 / axis_len);
    const Vec3 n1 = perpendicular(u);
    const Vec3 n2 = cross(u, n1);

    std::vector<Vec3> wall = sample_vessel(cfg);
    const Vec3 column_center = cfg.vessel.axis_start + u * (col.base + 0.5 * col.height);
    wall = trim_proxies(std::move(wall), limits.max_proxies, column_center);

    Scene scene;
    scene.constants = cfg.fluid;
    scene.kernel = cfg.kernel;
    scene.binning = cfg.binning;
    scene.proxies = proxy_volumes(wall, cfg.fluid.rho0, cfg.kernel);

    // Bottom-up slab order so a fluid cap trims the top of the column.
    const double d = col.spacing;
    const int nz = static_cast<int>(std::floor(col.height / d + 1e-9));
    if (nz < 1) throw ConfigError("column height is below one lattice spacing");
    const int nr = static_cast<int>(std::floor(col.radius / d + 1e-9));
    const double mass = cfg.fluid.rho0 * d * d * d;
    const double nu0 = casson_viscosity(0.0, cfg.fluid);
    auto& ps = scene.initial.particles;
    for (int iz = 0; iz < nz; ++iz) {
        const double along = col.base + (iz + 0.5) * d;
        for (int ix = -nr; ix <= nr; ++ix) {
            for (int iy = -nr; iy <= nr; ++iy) {
                const double rad2 = (ix * ix + iy * iy) * d * d;
                if (rad2 > col.radius * col.radius) continue;
                FluidParticle p;
                p.r = cfg.vessel.axis_start + u * along + n1 * (ix * d) + n2 * (iy * d);
                p.m = mass;
                p.rho = cfg.fluid.rho0;
                p.nu = nu0;
                ps.push_back(p);
            }
        }
        if (limits.max_fluid > 0 && ps.size() >= static_cast<std::size_t>(limits.max_fluid)) {
            break;
        }
    }
    if (limits.max_fluid > 0 && ps.size() > static_cast<std::size_t>(limits.max_fluid)) {
        ps.resize(static_cast<std::size_t>(limits.max_fluid));
    }

    if (cfg.vessel.type == VesselConfig::Type::Tube) {
        const double max_radial = cfg.vessel.radius - 0.5 * cfg.vessel.spacing;
        for (const auto& p : ps) {
            const Vec3 w = p.r - cfg.vessel.axis_start;
            const double t = dot(w, u);
            const double radial = (w - u * t).norm();
            if (t < 0.0 || t > axis_len || radial > max_radial) {
                throw ConfigError("fluid column leaves the vessel wetted volume");
            }
        }
    }
    // Wall standoff. Beyond one smoothing length there is no interaction, so
    // the check radius never needs to exceed h.
    NeighborGrid wall_grid({}, wall, cfg.kernel.h);
    const double standoff2 = std::pow(std::min(0.5 * d, cfg.kernel.h), 2);
    std::vector<int> fl, pr;
    for (const auto& p : ps) {
        wall_grid.query_point(p.r, fl, pr);
        for (int k : pr) {
            if ((p.r - wall[static_cast<std::size_t>(k)]).squared_norm() < standoff2) {
                throw ConfigError("fluid column overlaps the vessel wall");
            }
        }
    }
    return scene;
}

std::vector<double> training_height_schedule(double vessel_radius) {
    return {0.5 * vessel_radius, 0.75 * vessel_radius, vessel_radius, 1.25 * vessel_radius,
            1.5 * vessel_radius};
}

double RunMetrics::mean_frame_seconds() const {
    if (frame_seconds.empty()) return 0.0;
    return std::accumulate(frame_seconds.begin(), frame_seconds.end(), 0.0) /
           static_cast<double>(frame_seconds.size());
}

RunResult run(const Scene& scene, RunMode mode, int frames, const Network* model,
              const RunOptions& opts) {
    if (frames < 0) throw std::invalid_argument("negative frame count");
    if (mode == RunMode::Pcnet) {
        if (model == nullptr) throw ConfigError("data-driven mode needs a model");
        const auto& m = model->meta;
        if (m.h != scene.kernel.h || m.dt != scene.constants.dt ||
            m.v_cap != scene.binning.vel_range || m.bins != scene.binning.bins) {
            throw ConfigError(
                "model was trained with different h/dt/v_cap/bins than this scene; refusing to "
                "mix them");
        }
    }

    RunResult res;
    res.final_state = scene.initial;
    auto& state = res.final_state;
    auto& met = res.metrics;
    if (opts.on_frame) opts.on_frame(state);
    if (frames == 0) return res;

    NeighborGrid grid(state.positions(), proxy_positions(scene.proxies), scene.kernel.h);
    std::vector<int> fl, pr;
    using clock = std::chrono::steady_clock;
    for (int f = 1; f <= frames; ++f) {
        FluidState next;
        const auto t0 = clock::now();
        try {
            if (f > 1) grid.rebuild_fluid(state.positions());
            next = mode == RunMode::Physics
                       ? physics_step(state, scene.proxies, grid, scene.constants, scene.kernel,
                                      opts.threads)
                       : pcnet_step(state, scene.proxies, grid, *model, scene.binning,
                                    scene.constants.dt, opts.threads);
        } catch (const InstabilityError& e) {
            met.truncated = true;
            met.instability_particle = e.particle();
            met.instability_frame = f;
            break;
        } catch (const std::invalid_argument&) {
            // A runaway but still-finite particle left the grid's addressable
            // domain during rebuild.
            met.truncated = true;
            met.instability_frame = f;
            break;
        }
        const auto t1 = clock::now();
        met.frame_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

        if (opts.density_metrics) {
            // Density of the stepped-from configuration, matching what the
            // physics pipeline evaluates internally. The data-driven pipeline
            // has no density pass, so this runs outside the timed region.
            double sum = 0.0, mx = 0.0;
            for (std::size_t i = 0; i < state.particles.size(); ++i) {
                double rho;
                if (mode == RunMode::Physics) {
                    rho = next.particles[i].rho;
                } else {
                    grid.query(static_cast<int>(i), fl, pr);
                    rho = compute_density(state, static_cast<int>(i), fl, pr, scene.proxies,
                                          scene.kernel);
                }
                const double dev = std::abs(rho / scene.constants.rho0 - 1.0);
                sum += dev;
                mx = std::max(mx, dev);
            }
            met.mean_density_dev.push_back(sum / static_cast<double>(state.particles.size()));
            met.max_density_dev.push_back(mx);
        }
        double ke = 0.0, vmax = 0.0;
        for (const auto& p : next.particles) {
            const double v2 = p.v.squared_norm();
            ke += 0.5 * p.m * v2;
            vmax = std::max(vmax, v2);
        }
        met.kinetic_energy.push_back(ke);
        met.max_speed.push_back(std::sqrt(vmax));

        state = std::move(next);
        ++met.completed_frames;
        if (opts.on_frame) opts.on_frame(state);
    }
    return res;
}

CompareMetrics compare_frames(const std::vector<std::vector<Vec3>>& reference,
                              const std::vector<std::vector<Vec3>>& test) {
    if (reference.size() != test.size()) {
        throw std::invalid_argument("frame count mismatch between runs");
    }
    CompareMetrics out;
    out.mean_error.reserve(reference.size());
    out.max_error.reserve(reference.size());
    for (std::size_t f = 0; f < reference.size(); ++f) {
        if (reference[f].size() != test[f].size()) {
            throw std::invalid_argument("particle count mismatch at frame " + std::to_string(f));
        }
        double sum = 0.0, mx = 0.0;
        for (std::size_t i = 0; i < reference[f].size(); ++i) {
            const double e = (reference[f][i] - test[f][i]).norm();
            sum += e;
            mx = std::max(mx, e);
        }
        const double n = reference[f].empty() ? 1.0 : static_cast<double>(reference[f].size());
        out.mean_error.push_back(sum / n);
        out.max_error.push_back(mx);
    }
    return out;
}

void write_frame_file(const std::string& path, std::uint32_t index, const FluidState& state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write frame file " + path);
    io::write_magic(os, "BFSF");
    io::write_u32(os, 1);
    io::write_u32(os, index);
    io::write_u32(os, static_cast<std::uint32_t>(state.particles.size()));
    for (const auto& p : state.particles) io::write_vec3_f32(os, p.r);
    for (const auto& p : state.particles) io::write_vec3_f32(os, p.v);
    for (const auto& p : state.particles) io::write_vec3_f32(os, p.a);
    if (!os) throw std::runtime_error("short write to frame file " + path);
}

FrameFile read_frame_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open frame file " + path);
    io::expect_magic(is, "BFSF", path);
    const std::uint32_t version = io::read_u32(is);
    if (version != 1) throw std::runtime_error(path + ": unsupported frame file version");
    FrameFile out;
    out.index = io::read_u32(is);
    const std::uint32_t count = io::read_u32(is);
    out.r.resize(count);
    out.v.resize(count);
    out.a.resize(count);
    for (auto& r : out.r) r = io::read_vec3_f32(is);
    for (auto& v : out.v) v = io::read_vec3_f32(is);
    for (auto& a : out.a) a = io::read_vec3_f32(is);
    return out;
}

std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.bfsf", index);
    return buf;
}

}  // namespace hemo
