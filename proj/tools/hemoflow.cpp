// Command-line front end: boundary sampling, simulation, dataset capture,
// training, physics-vs-network evaluation, and timing benchmarks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hemo/boundary.hpp"
#include "hemo/config.hpp"
#include "hemo/dataset.hpp"
#include "hemo/driver.hpp"
#include "hemo/network.hpp"
#include "hemo/physics.hpp"
#include "hemo/trainer.hpp"

namespace fs = std::filesystem;
using namespace hemo;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInstability = 3;

int resolve_threads(int t) {
    if (t > 0) return t;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Proxy paths in dataset metadata may be relative to the dataset file.
std::string resolve_proxy_path(const std::string& given, const std::string& dataset_path) {
    if (fs::exists(given)) return given;
    const fs::path sibling = fs::path(dataset_path).parent_path() / given;
    if (fs::exists(sibling)) return sibling.string();
    throw std::runtime_error("proxy file '" + given + "' not found (also tried " +
                             sibling.string() + ")");
}

struct SimulateArgs {
    std::string config, mode = "physics", model, out;
    int frames = 100;
    int threads = 0;
    bool no_density = false;
};

int run_simulate(const SimulateArgs& a) {
    const Config cfg = load_config(a.config);
    const Scene scene = build_scene(cfg);
    Network net;
    const bool pcnet = a.mode == "pcnet";
    if (pcnet) net = Network::load(a.model);

    fs::create_directories(a.out);
    RunOptions opts;
    opts.threads = resolve_threads(a.threads);
    opts.density_metrics = !a.no_density;
    opts.on_frame = [&](const FluidState& s) {
        write_frame_file((fs::path(a.out) / frame_file_name(s.frame)).string(),
                         static_cast<std::uint32_t>(s.frame), s);
    };
    const RunResult res =
        run(scene, pcnet ? RunMode::Pcnet : RunMode::Physics, a.frames, pcnet ? &net : nullptr,
            opts);
    const RunMetrics& m = res.metrics;

    {
        std::ofstream man(fs::path(a.out) / "run.txt");
        man << "config_hash=" << hex64(cfg.hash) << "\n"
            << "seed=" << cfg.vessel.seed << "\n"
            << "mode=" << a.mode << "\n"
            << "model_hash=" << (pcnet ? hex64(file_hash(a.model)) : std::string("none")) << "\n"
            << "frames_requested=" << a.frames << "\n"
            << "frames_completed=" << m.completed_frames << "\n"
            << "truncated=" << (m.truncated ? 1 : 0) << "\n";
    }
    {
        std::ofstream csv(fs::path(a.out) / "metrics.csv");
        csv << "frame,seconds,mean_density_dev,max_density_dev,max_speed,kinetic_energy\n";
        for (std::size_t f = 0; f < m.frame_seconds.size(); ++f) {
            csv << (f + 1) << ',' << m.frame_seconds[f] << ',';
            if (f < m.mean_density_dev.size()) {
                csv << m.mean_density_dev[f] << ',' << m.max_density_dev[f];
            } else {
                csv << ',';
            }
            csv << ',' << m.max_speed[f] << ',' << m.kinetic_energy[f] << "\n";
        }
    }
    std::cout << "simulated " << m.completed_frames << "/" << a.frames << " frames ("
              << scene.initial.particles.size() << " fluid, " << scene.proxies.size()
              << " proxy), mean " << m.mean_frame_seconds() * 1e3 << " ms/frame\n";
    if (m.truncated) {
        std::cerr << "instability at frame " << m.instability_frame;
        if (m.instability_particle >= 0) std::cerr << ", particle " << m.instability_particle;
        std::cerr << "\n";
        return kExitInstability;
    }
    return 0;
}

struct CaptureArgs {
    std::string config, out;
    int states = 300;
    int sequences = 5;
    int threads = 0;
    bool fixed_height = false;
};

int run_capture(const CaptureArgs& a) {
    const Config cfg = load_config(a.config);
    const int threads = resolve_threads(a.threads);
    const auto heights = training_height_schedule(cfg.vessel.radius);

    auto scene_for = [&](int s) {
        Config c = cfg;
        if (!a.fixed_height) c.column.height = heights[static_cast<std::size_t>(s) % heights.size()];
        return build_scene(c);
    };

    const Scene first = scene_for(0);
    const std::string proxy_path = a.out + ".proxies.bfpx";
    write_proxies(proxy_path, first.proxies);

    DatasetMeta meta;
    meta.constants = cfg.fluid;
    meta.kernel = cfg.kernel;
    meta.binning = cfg.binning;
    meta.proxy_file = fs::path(proxy_path).filename().string();
    meta.proxy_count = static_cast<std::uint32_t>(first.proxies.size());
    meta.seed = cfg.vessel.seed;

    DatasetWriter writer(a.out, meta, a.sequences);
    std::uint64_t records = 0;
    bool any_truncated = false;
    for (int s = 0; s < a.sequences; ++s) {
        const Scene scene = s == 0 ? first : scene_for(s);
        const CaptureResult r = capture_sequence(scene.initial, scene.proxies, cfg.fluid,
                                                 cfg.kernel, cfg.binning, a.states, writer,
                                                 threads);
        records += static_cast<std::uint64_t>(r.sample_frames) * scene.initial.particles.size();
        any_truncated = any_truncated || r.truncated;
        std::cout << "sequence " << s << ": " << scene.initial.particles.size() << " particles, "
                  << r.sample_frames << " sample frames" << (r.truncated ? " (truncated)" : "")
                  << "\n";
    }
    writer.finish();
    std::cout << "wrote " << records << " records to " << a.out << " (proxies: " << proxy_path
              << ")\n";
    return any_truncated ? kExitInstability : 0;
}

struct TrainArgs {
    std::string data, out, config, reset;
    int period = 0, epochs = 0, threads = 0;
    double lr = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool baseline = false;
};

int run_train(const TrainArgs& a) {
    DatasetReader ds(a.data);
    const auto proxies = read_proxies(resolve_proxy_path(ds.meta().proxy_file, a.data),
                                      ds.meta().constants.rho0);

    TrainConfig tc;
    if (!a.config.empty()) tc = load_config(a.config).train;
    if (a.period > 0) tc.period = a.period;
    if (a.epochs > 0) tc.epochs = a.epochs;
    if (a.lr >= 0.0) tc.lr = a.lr;
    if (a.seed_set) tc.seed = a.seed;
    if (a.reset == "sequence_start") tc.reset = TrainConfig::ResetPolicy::SequenceStart;
    else if (a.reset == "period_start") tc.reset = TrainConfig::ResetPolicy::PeriodStart;
    else if (!a.reset.empty()) throw ConfigError("reset must be sequence_start|period_start");
    tc.threads = resolve_threads(a.threads);

    const TrainResult r = a.baseline ? train_baseline_bp(ds, proxies, tc)
                                     : train_pcnet(ds, proxies, tc);
    r.net.save(a.out);
    std::cout << (a.baseline ? "baseline" : "periodic-corrected") << " training: "
              << ds.total_records() << " records x " << tc.epochs << " epochs, loss "
              << r.first_epoch_loss << " -> " << r.last_epoch_loss;
    if (!a.baseline) {
        std::cout << ", corrections " << r.corrections_fired << " fired / "
                  << r.corrections_skipped << " skipped";
    }
    std::cout << "\nsaved " << a.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string config, model, out;
    int frames = 50;
    int threads = 0;
};

int run_eval(const EvalArgs& a) {
    const Config cfg = load_config(a.config);
    const Scene scene = build_scene(cfg);
    const Network net = Network::load(a.model);
    RunOptions opts;
    opts.threads = resolve_threads(a.threads);
    opts.density_metrics = false;

    std::vector<std::vector<Vec3>> ref, test;
    opts.on_frame = [&](const FluidState& s) { ref.push_back(s.positions()); };
    const RunResult pr = run(scene, RunMode::Physics, a.frames, nullptr, opts);
    opts.on_frame = [&](const FluidState& s) { test.push_back(s.positions()); };
    const RunResult nr = run(scene, RunMode::Pcnet, a.frames, &net, opts);

    const std::size_t frames = std::min(ref.size(), test.size());
    ref.resize(frames);
    test.resize(frames);
    const CompareMetrics cm = compare_frames(ref, test);

    if (!a.out.empty()) {
        std::ofstream csv(a.out);
        csv << "frame,mean_error,max_error\n";
        for (std::size_t f = 0; f < cm.mean_error.size(); ++f) {
            csv << f << ',' << cm.mean_error[f] << ',' << cm.max_error[f] << "\n";
        }
    }
    std::cout << "compared " << (frames == 0 ? 0 : frames - 1) << " predicted frames\n";
    if (!cm.mean_error.empty()) {
        std::cout << "final mean position error " << cm.mean_error.back() << " m, max "
                  << cm.max_error.back() << " m\n";
    }
    if (pr.metrics.truncated) std::cout << "physics run truncated\n";
    if (nr.metrics.truncated) std::cout << "network run truncated\n";
    return 0;
}

struct BenchArgs {
    std::string config, model, out;
    int frames = 50, warmup = 5;
    int fluid = 0, proxies = 0;
    int threads = 0;
};

double mean_after_warmup(const std::vector<double>& xs, int warmup) {
    if (static_cast<int>(xs.size()) <= warmup) return 0.0;
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(warmup); i < xs.size(); ++i) s += xs[i];
    return s / static_cast<double>(xs.size() - static_cast<std::size_t>(warmup));
}

int run_bench(const BenchArgs& a) {
    const Config cfg = load_config(a.config);
    const Scene scene = build_scene(cfg, SceneLimits{a.fluid, a.proxies});
    if (a.fluid > 0 && static_cast<int>(scene.initial.particles.size()) != a.fluid) {
        throw ConfigError("config yields only " + std::to_string(scene.initial.particles.size()) +
                          " fluid particles, need " + std::to_string(a.fluid) +
                          "; enlarge [column]");
    }
    if (a.proxies > 0 && static_cast<int>(scene.proxies.size()) != a.proxies) {
        throw ConfigError("config yields only " + std::to_string(scene.proxies.size()) +
                          " proxy particles, need " + std::to_string(a.proxies) +
                          "; enlarge [vessel]");
    }

    RunOptions opts;
    opts.threads = resolve_threads(a.threads);
    opts.density_metrics = false;
    const int total = a.frames + a.warmup;

    const RunResult pr = run(scene, RunMode::Physics, total, nullptr, opts);
    const double phys_ms = mean_after_warmup(pr.metrics.frame_seconds, a.warmup) * 1e3;
    if (pr.metrics.truncated) {
        std::cerr << "physics run went unstable at frame " << pr.metrics.instability_frame
                  << "\n";
        return kExitInstability;
    }

    double net_ms = 0.0;
    bool have_net = !a.model.empty();
    if (have_net) {
        const Network net = Network::load(a.model);
        const RunResult nr = run(scene, RunMode::Pcnet, total, &net, opts);
        if (nr.metrics.truncated) {
            std::cerr << "network run went unstable at frame " << nr.metrics.instability_frame
                      << "\n";
            return kExitInstability;
        }
        net_ms = mean_after_warmup(nr.metrics.frame_seconds, a.warmup) * 1e3;
    }

    std::ostringstream row;
    row << "fluid,proxies,frames,threads,physics_ms_per_frame,pcnet_ms_per_frame,speedup\n"
        << scene.initial.particles.size() << ',' << scene.proxies.size() << ',' << a.frames << ','
        << opts.threads << ',' << phys_ms << ',';
    if (have_net) {
        row << net_ms << ',' << (net_ms > 0.0 ? phys_ms / net_ms : 0.0);
    } else {
        row << ',';
    }
    row << "\n";
    if (!a.out.empty()) {
        std::ofstream csv(a.out);
        csv << row.str();
    }
    std::cout << row.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle blood-flow engine: physics solver and data-driven surrogate"};
    app.require_subcommand(1);

    std::string sb_config, sb_out;
    auto* sb = app.add_subcommand("sample-boundary", "Sample vessel walls into a proxy file");
    sb->add_option("--config", sb_config, "scene config (INI)")->required();
    sb->add_option("--out", sb_out, "output proxy file (.bfpx)")->required();

    SimulateArgs sim;
    auto* sc = app.add_subcommand("simulate", "Run the solver and export frames");
    sc->add_option("--config", sim.config)->required();
    sc->add_option("--mode", sim.mode)->check(CLI::IsMember({"physics", "pcnet"}));
    sc->add_option("--model", sim.model, "trained model (.pcn), required for pcnet");
    sc->add_option("--frames", sim.frames)->check(CLI::PositiveNumber);
    sc->add_option("--out", sim.out, "output directory")->required();
    sc->add_option("--threads", sim.threads, "0 = all cores");
    sc->add_flag("--no-density", sim.no_density, "skip density diagnostics");

    CaptureArgs cap;
    auto* cc = app.add_subcommand("capture", "Record physics sequences as training data");
    cc->add_option("--config", cap.config)->required();
    cc->add_option("--out", cap.out, "output dataset (.bfds)")->required();
    cc->add_option("--states", cap.states, "physics states per sequence")
        ->check(CLI::Range(2, 1 << 24));
    cc->add_option("--sequences", cap.sequences)->check(CLI::PositiveNumber);
    cc->add_option("--threads", cap.threads);
    cc->add_flag("--fixed-height", cap.fixed_height,
                 "use the configured column height for every sequence instead of the 0.5-1.5x "
                 "vessel-radius schedule");

    TrainArgs tr;
    auto* tc = app.add_subcommand("train", "Fit the acceleration network");
    tc->add_option("--data", tr.data, "dataset (.bfds)")->required();
    tc->add_option("--out", tr.out, "output model (.pcn)")->required();
    tc->add_option("--config", tr.config, "optional config supplying [train] defaults");
    tc->add_option("--period", tr.period, "correction period (default 5)");
    tc->add_option("--epochs", tr.epochs);
    tc->add_option("--lr", tr.lr);
    auto* seed_opt = tc->add_option("--seed", tr.seed);
    tc->add_option("--reset", tr.reset)->check(CLI::IsMember({"sequence_start", "period_start"}));
    tc->add_option("--threads", tr.threads);
    tc->add_flag("--baseline", tr.baseline, "plain backprop, no rollout corrections");

    EvalArgs ev;
    auto* ec = app.add_subcommand("eval", "Compare network rollout against physics");
    ec->add_option("--config", ev.config)->required();
    ec->add_option("--model", ev.model)->required();
    ec->add_option("--frames", ev.frames)->check(CLI::PositiveNumber);
    ec->add_option("--out", ev.out, "per-frame error CSV");
    ec->add_option("--threads", ev.threads);

    BenchArgs be;
    auto* bc = app.add_subcommand("bench", "Per-frame timing of both pipelines");
    bc->add_option("--config", be.config)->required();
    bc->add_option("--model", be.model, "optional model for the data-driven row");
    bc->add_option("--frames", be.frames)->check(CLI::PositiveNumber);
    bc->add_option("--warmup", be.warmup)->check(CLI::NonNegativeNumber);
    bc->add_option("--fluid", be.fluid, "require exactly this many fluid particles");
    bc->add_option("--proxies", be.proxies, "require exactly this many proxy particles");
    bc->add_option("--threads", be.threads);
    bc->add_option("--out", be.out, "CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (sb->parsed()) {
            const Config cfg = load_config(sb_config);
            const auto wall = sample_vessel(cfg);
            const auto proxies = proxy_volumes(wall, cfg.fluid.rho0, cfg.kernel);
            write_proxies(sb_out, proxies);
            std::cout << "wrote " << proxies.size() << " proxies to " << sb_out << "\n";
            return 0;
        }
        if (sc->parsed()) {
            if (sim.mode == "pcnet" && sim.model.empty()) {
                std::cerr << "pcnet mode needs --model\n";
                return kExitUsage;
            }
            return run_simulate(sim);
        }
        if (cc->parsed()) return run_capture(cap);
        if (tc->parsed()) {
            tr.seed_set = seed_opt->count() > 0;
            return run_train(tr);
        }
        if (ec->parsed()) return run_eval(ev);
        if (bc->parsed()) return run_bench(be);
    } catch (const InstabilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInstability;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
