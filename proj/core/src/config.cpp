#include "hemo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hemo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) fail(line, "trailing characters in number '" + v + "'");
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        fail(line, "expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& v, int line) {
    const double d = parse_double(v, line);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) fail(line, "expected an integer, got '" + v + "'");
    return i;
}

std::uint64_t parse_u64(const std::string& v, int line) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        fail(line, "expected an unsigned integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    fail(line, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

Vec3 parse_vec3(const std::string& v, int line) {
    const auto parts = split_csv(v);
    if (parts.size() != 3) fail(line, "expected 'x,y,z', got '" + v + "'");
    return {parse_double(parts[0], line), parse_double(parts[1], line),
            parse_double(parts[2], line)};
}

KernelFamily parse_family(const std::string& v, int line) {
    if (v == "poly6") return KernelFamily::Poly6;
    if (v == "spiky") return KernelFamily::Spiky;
    fail(line, "expected 'poly6' or 'spiky', got '" + v + "'");
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

Config parse_config(const std::string& text) {
    Config cfg;
    cfg.hash = fnv1a64(text.data(), text.size());

    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash_pos = raw.find_first_of("#;");
        if (hash_pos != std::string::npos) raw.erase(hash_pos);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "fluid" && section != "kernel" && section != "binning" &&
                section != "vessel" && section != "column" && section != "train") {
                fail(line, "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty()) fail(line, "empty key or value");
        if (section.empty()) fail(line, "key '" + key + "' outside any section");

        if (section == "fluid") {
            if (key == "rho0") cfg.fluid.rho0 = parse_double(val, line);
            else if (key == "cs") cfg.fluid.cs = parse_double(val, line);
            else if (key == "gamma") cfg.fluid.gamma = parse_double(val, line);
            else if (key == "mu") cfg.fluid.mu = parse_double(val, line);
            else if (key == "tau_y") cfg.fluid.tau_y = parse_double(val, line);
            else if (key == "casson_n") cfg.fluid.casson_n = parse_double(val, line);
            else if (key == "av_eps") cfg.fluid.av_eps = parse_double(val, line);
            else if (key == "g") cfg.fluid.g = parse_vec3(val, line);
            else if (key == "dt") cfg.fluid.dt = parse_double(val, line);
            else if (key == "clamp_negative_pressure")
                cfg.fluid.clamp_negative_pressure = parse_bool(val, line);
            else if (key == "mu_from_pressure") cfg.fluid.mu_from_pressure = parse_bool(val, line);
            else fail(line, "unknown key '" + key + "' in [fluid]");
        } else if (section == "kernel") {
            if (key == "h") cfg.kernel.h = parse_double(val, line);
            else if (key == "value") cfg.kernel.value_family = parse_family(val, line);
            else if (key == "grad") cfg.kernel.grad_family = parse_family(val, line);
            else fail(line, "unknown key '" + key + "' in [kernel]");
        } else if (section == "binning") {
            if (key == "bins") cfg.binning.bins = parse_int(val, line);
            else if (key == "dist_range") cfg.binning.dist_range = parse_double(val, line);
            else if (key == "v_cap") cfg.binning.vel_range = parse_double(val, line);
            else fail(line, "unknown key '" + key + "' in [binning]");
        } else if (section == "vessel") {
            if (key == "type") {
                if (val == "tube") cfg.vessel.type = VesselConfig::Type::Tube;
                else if (val == "mesh") cfg.vessel.type = VesselConfig::Type::Mesh;
                else fail(line, "vessel type must be 'tube' or 'mesh'");
            } else if (key == "axis_start") cfg.vessel.axis_start = parse_vec3(val, line);
            else if (key == "axis_end") cfg.vessel.axis_end = parse_vec3(val, line);
            else if (key == "radius") cfg.vessel.radius = parse_double(val, line);
            else if (key == "caps") {
                if (val == "none") cfg.vessel.cap_start = cfg.vessel.cap_end = false;
                else if (val == "start") { cfg.vessel.cap_start = true; cfg.vessel.cap_end = false; }
                else if (val == "end") { cfg.vessel.cap_start = false; cfg.vessel.cap_end = true; }
                else if (val == "both") cfg.vessel.cap_start = cfg.vessel.cap_end = true;
                else fail(line, "caps must be none|start|end|both");
            } else if (key == "spacing") cfg.vessel.spacing = parse_double(val, line);
            else if (key == "mesh") cfg.vessel.mesh_path = val;
            else if (key == "seed") cfg.vessel.seed = parse_u64(val, line);
            else fail(line, "unknown key '" + key + "' in [vessel]");
        } else if (section == "column") {
            if (key == "radius") cfg.column.radius = parse_double(val, line);
            else if (key == "height") cfg.column.height = parse_double(val, line);
            else if (key == "base") cfg.column.base = parse_double(val, line);
            else if (key == "spacing") cfg.column.spacing = parse_double(val, line);
            else fail(line, "unknown key '" + key + "' in [column]");
        } else if (section == "train") {
            if (key == "period") cfg.train.period = parse_int(val, line);
            else if (key == "epochs") cfg.train.epochs = parse_int(val, line);
            else if (key == "lr") cfg.train.lr = parse_double(val, line);
            else if (key == "seed") cfg.train.seed = parse_u64(val, line);
            else if (key == "reset") {
                if (val == "sequence_start")
                    cfg.train.reset = TrainConfig::ResetPolicy::SequenceStart;
                else if (val == "period_start")
                    cfg.train.reset = TrainConfig::ResetPolicy::PeriodStart;
                else fail(line, "reset must be sequence_start|period_start");
            } else if (key == "layers") {
                std::vector<int> layers;
                for (const auto& part : split_csv(val)) layers.push_back(parse_int(part, line));
                cfg.train.layers = std::move(layers);
            } else fail(line, "unknown key '" + key + "' in [train]");
        }
    }

    // Derived defaults.
    if (cfg.vessel.spacing == 0.0) cfg.vessel.spacing = 0.5 * cfg.kernel.h;
    if (cfg.column.spacing == 0.0) cfg.column.spacing = 0.5 * cfg.kernel.h;
    if (cfg.binning.dist_range == 0.0) cfg.binning.dist_range = cfg.kernel.h;
    if (cfg.binning.vel_range == 0.0) cfg.binning.vel_range = cfg.fluid.cs / 10.0;

    if (!cfg.fluid.valid()) throw ConfigError("invalid [fluid] constants");
    if (!cfg.kernel.valid()) throw ConfigError("invalid [kernel] parameters");
    if (!cfg.binning.valid()) throw ConfigError("invalid [binning] parameters");
    if (!cfg.train.valid()) throw ConfigError("invalid [train] parameters");
    if (cfg.vessel.spacing <= 0.0 || cfg.vessel.spacing > cfg.kernel.h) {
        throw ConfigError("vessel spacing must lie in (0, h]");
    }
    if (cfg.column.radius < 0.0 || cfg.column.height < 0.0 || cfg.column.spacing <= 0.0) {
        throw ConfigError("invalid [column] geometry");
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace hemo
