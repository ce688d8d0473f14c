#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "hemo/constants.hpp"
#include "hemo/features.hpp"
#include "hemo/kernels.hpp"
#include "hemo/trainer.hpp"
#include "hemo/vec.hpp"

namespace hemo {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VesselConfig {
    enum class Type { Tube, Mesh };
    Type type = Type::Tube;
    Vec3 axis_start{0, 0, 0};
    Vec3 axis_end{0, 0, 0.2};
    double radius = 0.05;
    bool cap_start = true;
    bool cap_end = false;
    double spacing = 0.0;  // 0 resolves to h/2
    std::string mesh_path;
    std::uint64_t seed = 0;  // mesh sampling
};

// Initial fluid column, centered on the vessel axis, starting `base`
// meters along the axis from its start.
struct ColumnConfig {
    double radius = 0.0;
    double height = 0.0;
    double base = 0.0;
    double spacing = 0.0;  // 0 resolves to h/2
};

struct Config {
    FluidConstants fluid;
    KernelParams kernel;
    BinningSpec binning;  // zero ranges resolve to h and cs/10
    VesselConfig vessel;
    ColumnConfig column;
    TrainConfig train;
    std::uint64_t hash = 0;  // FNV-1a over the raw config bytes
};

std::uint64_t fnv1a64(const void* data, std::size_t n);

// INI-style sections; unknown sections and keys are rejected.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

}  // namespace hemo
