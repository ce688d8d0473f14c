#include "hemo/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hemo/dataset.hpp"
#include "hemo/physics.hpp"

using namespace hemo;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

DatasetMeta toy_meta() {
    DatasetMeta m;
    m.constants.dt = 0.002;
    m.kernel.h = 0.1;
    m.binning.bins = 6;
    m.binning.dist_range = 0.1;
    m.binning.vel_range = 2.0;
    m.proxy_count = 0;
    return m;
}

// Synthetic sequence: slowly drifting cluster with bounded accelerations.
// Record features are random; the rollout re-extracts its own.
void write_toy_dataset(const std::string& path, int frames, int particles,
                       std::uint64_t seed, double target_scale = 0.5) {
    DatasetWriter w(path, toy_meta(), 1);
    w.begin_sequence(static_cast<std::uint32_t>(particles));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> jit(-0.01f, 0.01f), vel(-0.2f, 0.2f), acc(-0.5f, 0.5f),
        fea(-1.0f, 1.0f);
    std::vector<SampleRecord> recs(particles);
    for (int f = 0; f < frames; ++f) {
        for (int i = 0; i < particles; ++i) {
            SampleRecord& r = recs[i];
            r.r[0] = 0.04f * static_cast<float>(i % 2) + jit(rng);
            r.r[1] = 0.04f * static_cast<float>((i / 2) % 3) + jit(rng);
            r.r[2] = 0.04f * static_cast<float>(i / 6) + jit(rng);
            for (float& x : r.v) x = vel(rng);
            for (float& x : r.a) x = acc(rng);
            for (float& x : r.feature) x = fea(rng);
            for (float& x : r.target) x = static_cast<float>(target_scale) * acc(rng);
        }
        w.write_frame(recs);
    }
    w.end_sequence();
    w.finish();
}

FeatureVector record_feature(const SampleRecord& r) {
    FeatureVector f;
    for (int c = 0; c < kFeatureDim; ++c) f[c] = r.feature[c];
    return f;
}

Vec3 record_target(const SampleRecord& r) { return {r.target[0], r.target[1], r.target[2]}; }

struct RefEvent {
    int sequence = 0;
    int frame = 0;
    std::vector<FeatureVector> features;
    std::vector<Vec3> targets;
};

// Straight-line coding of the periodic correction strategy from public
// primitives only: supervised steps frame by frame; after every period-th
// sample frame, a closed-loop replay from the sequence start with the
// current net, whose final-state features pair with that frame's physics
// targets for one extra pass.
std::vector<RefEvent> reference_train(DatasetReader& ds, const TrainConfig& cfg, Network& out) {
    const DatasetMeta& meta = ds.meta();
    Network net = Network::init(cfg.layers, cfg.seed);

    std::vector<double> fsum(kFeatureDim, 0.0), fsq(kFeatureDim, 0.0);
    std::vector<double> tsum(3, 0.0), tsq(3, 0.0);
    std::uint64_t n = 0;
    std::vector<SampleRecord> recs;
    for (int s = 0; s < ds.sequence_count(); ++s) {
        for (std::uint32_t f = 0; f < ds.sequence(s).frames; ++f) {
            ds.read_frame(s, static_cast<int>(f), recs);
            for (const SampleRecord& r : recs) {
                for (int c = 0; c < kFeatureDim; ++c) {
                    fsum[c] += r.feature[c];
                    fsq[c] += double{r.feature[c]} * r.feature[c];
                }
                for (int c = 0; c < 3; ++c) {
                    tsum[c] += r.target[c];
                    tsq[c] += double{r.target[c]} * r.target[c];
                }
                ++n;
            }
        }
    }
    std::vector<double> fmean(kFeatureDim), fstd(kFeatureDim), tmean(3), tstd(3);
    for (int c = 0; c < kFeatureDim; ++c) {
        fmean[c] = fsum[c] / static_cast<double>(n);
        const double var = fsq[c] / static_cast<double>(n) - fmean[c] * fmean[c];
        fstd[c] = std::sqrt(var > 0.0 ? var : 0.0);
    }
    for (int c = 0; c < 3; ++c) {
        tmean[c] = tsum[c] / static_cast<double>(n);
        const double var = tsq[c] / static_cast<double>(n) - tmean[c] * tmean[c];
        tstd[c] = std::sqrt(var > 0.0 ? var : 0.0);
    }
    net.set_input_normalization(fmean, fstd);
    net.set_output_normalization(tmean, tstd);

    std::vector<RefEvent> events;
    std::vector<SampleRecord> start;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int seq = 0; seq < ds.sequence_count(); ++seq) {
            const int frames = static_cast<int>(ds.sequence(seq).frames);
            for (int f = 1; f <= frames; ++f) {
                ds.read_frame(seq, f - 1, recs);
                for (const SampleRecord& r : recs) {
                    net.train_step(record_feature(r), record_target(r), cfg.lr);
                }
                if (f % cfg.period != 0) continue;

                ds.read_frame(seq, 0, start);
                FluidState st;
                st.particles.resize(start.size());
                for (std::size_t i = 0; i < start.size(); ++i) {
                    st.particles[i].r = {start[i].r[0], start[i].r[1], start[i].r[2]};
                    st.particles[i].v = {start[i].v[0], start[i].v[1], start[i].v[2]};
                    st.particles[i].a = {start[i].a[0], start[i].a[1], start[i].a[2]};
                }
                const int np = static_cast<int>(st.particles.size());
                bool ok = true;
                for (int step = 0; step < f - 1 && ok; ++step) {
                    NeighborGrid grid(st.positions(), {}, meta.kernel.h);
                    FluidState nx = st;
                    for (int i = 0; i < np; ++i) {
                        const FeatureVector fv =
                            extract_feature_vector(st, i, grid, {}, meta.binning);
                        nx.particles[i].a = net.forward(fv);
                        auto [v1, x1] = integrate(st.particles[i].v, st.particles[i].r,
                                                  nx.particles[i].a, meta.constants.dt);
                        nx.particles[i].v = v1;
                        nx.particles[i].r = x1;
                        if (!is_finite(x1)) ok = false;
                    }
                    st = std::move(nx);
                }
                if (!ok) continue;
                NeighborGrid grid(st.positions(), {}, meta.kernel.h);
                RefEvent ev;
                ev.sequence = seq;
                ev.frame = f;
                ev.features.resize(np);
                for (int i = 0; i < np; ++i) {
                    ev.features[i] = extract_feature_vector(st, i, grid, {}, meta.binning);
                }
                for (const SampleRecord& r : recs) ev.targets.push_back(record_target(r));
                events.push_back(ev);
                for (int i = 0; i < np; ++i) {
                    net.train_step(ev.features[i], ev.targets[i], cfg.lr);
                }
            }
        }
    }
    out = net;
    return events;
}

}  // namespace

TEST(Trainer, CorrectionScheduleAndPairingsMatchReference) {
    const auto path = temp_path("trainer_toy.bfds");
    write_toy_dataset(path.string(), 20, 6, 11);

    TrainConfig cfg;
    cfg.period = 5;
    cfg.epochs = 1;
    cfg.lr = 1e-3;
    cfg.seed = 7;
    cfg.threads = 1;

    DatasetReader ds(path.string());
    std::vector<CorrectionEvent> seen;
    const TrainResult res =
        train_pcnet(ds, {}, cfg, [&](const CorrectionEvent& ev) { seen.push_back(ev); });

    EXPECT_EQ(res.corrections_fired, 4);
    EXPECT_EQ(res.corrections_skipped, 0);
    ASSERT_EQ(seen.size(), 4u);
    const int want_frames[] = {5, 10, 15, 20};
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(seen[k].sequence, 0);
        EXPECT_EQ(seen[k].frame, want_frames[k]);
    }

    DatasetReader ds2(path.string());
    Network ref_net;
    const std::vector<RefEvent> want = reference_train(ds2, cfg, ref_net);
    ASSERT_EQ(want.size(), seen.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
        EXPECT_EQ(seen[k].frame, want[k].frame);
        ASSERT_EQ(seen[k].features.size(), want[k].features.size());
        ASSERT_EQ(seen[k].targets.size(), want[k].targets.size());
        for (std::size_t i = 0; i < want[k].features.size(); ++i) {
            for (int c = 0; c < kFeatureDim; ++c) {
                EXPECT_EQ(seen[k].features[i][c], want[k].features[i][c])
                    << "event " << k << " particle " << i << " component " << c;
            }
            EXPECT_EQ(seen[k].targets[i].x, want[k].targets[i].x);
            EXPECT_EQ(seen[k].targets[i].y, want[k].targets[i].y);
            EXPECT_EQ(seen[k].targets[i].z, want[k].targets[i].z);
        }
    }
    EXPECT_TRUE(bitwise_equal(res.net, ref_net));

    std::filesystem::remove(path);
}

TEST(Trainer, PeriodBeyondSequenceEqualsBaselineBitwise) {
    const auto path = temp_path("trainer_long_period.bfds");
    write_toy_dataset(path.string(), 20, 6, 13);

    TrainConfig cfg;
    cfg.period = 25;  // never divides any sample frame index <= 20
    cfg.epochs = 2;
    cfg.lr = 2e-3;
    cfg.seed = 3;

    DatasetReader ds_a(path.string());
    const TrainResult corrected = train_pcnet(ds_a, {}, cfg);
    DatasetReader ds_b(path.string());
    const TrainResult baseline = train_baseline_bp(ds_b, {}, cfg);

    EXPECT_EQ(corrected.corrections_fired, 0);
    EXPECT_EQ(corrected.corrections_skipped, 0);
    EXPECT_TRUE(bitwise_equal(corrected.net, baseline.net));
    EXPECT_EQ(corrected.first_epoch_loss, baseline.first_epoch_loss);
    EXPECT_EQ(corrected.last_epoch_loss, baseline.last_epoch_loss);

    // The baseline never rolls out, whatever the period.
    DatasetReader ds_c(path.string());
    TrainConfig short_period = cfg;
    short_period.period = 5;
    const TrainResult baseline2 = train_baseline_bp(ds_c, {}, short_period);
    EXPECT_TRUE(bitwise_equal(baseline2.net, baseline.net));

    std::filesystem::remove(path);
}

TEST(Trainer, CorrectedLossCountsOnlySupervisedSamples) {
    // Same seed and data: the first-epoch loss is the running mean over the
    // supervised steps only, so it differs between pcnet and baseline only
    // through the parameter drift the corrections introduce.
    const auto path = temp_path("trainer_loss.bfds");
    write_toy_dataset(path.string(), 20, 6, 17);
    TrainConfig cfg;
    cfg.period = 5;
    cfg.epochs = 1;
    cfg.lr = 1e-3;
    cfg.seed = 5;
    DatasetReader ds(path.string());
    const TrainResult res = train_pcnet(ds, {}, cfg);
    EXPECT_TRUE(std::isfinite(res.first_epoch_loss));
    EXPECT_GT(res.first_epoch_loss, 0.0);
    EXPECT_EQ(res.first_epoch_loss, res.last_epoch_loss);  // single epoch
    std::filesystem::remove(path);
}

TEST(Trainer, DivergentRolloutIsSkippedNotFatal) {
    // Huge targets blow up the closed-loop replay within a few steps; the
    // supervised path keeps working and every correction is skipped.
    const auto path = temp_path("trainer_divergent.bfds");
    write_toy_dataset(path.string(), 20, 6, 19, /*target_scale=*/1e30);
    TrainConfig cfg;
    cfg.period = 5;
    cfg.epochs = 1;
    cfg.lr = 1e-6;
    cfg.seed = 2;
    DatasetReader ds(path.string());
    int hook_calls = 0;
    const TrainResult res = train_pcnet(ds, {}, cfg, [&](const CorrectionEvent&) { ++hook_calls; });
    EXPECT_EQ(res.corrections_fired, 0);
    EXPECT_EQ(res.corrections_skipped, 4);
    EXPECT_EQ(hook_calls, 0);
    EXPECT_TRUE(std::isfinite(res.first_epoch_loss));
    std::filesystem::remove(path);
}

TEST(Trainer, ValidatesConfigAndProxyCount) {
    const auto path = temp_path("trainer_validate.bfds");
    write_toy_dataset(path.string(), 6, 2, 23);
    DatasetReader ds(path.string());

    TrainConfig bad;
    bad.period = 1;
    EXPECT_THROW(train_pcnet(ds, {}, bad), std::invalid_argument);

    TrainConfig cfg;
    std::vector<ProxyParticle> phantom(3);
    EXPECT_THROW(train_pcnet(ds, phantom, cfg), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST(Trainer, PcnetStepIntegratesNetworkAcceleration) {
    // Zero-weight net with output normalization (m, s): every particle gets
    // the constant acceleration m, then the usual integration rule.
    Network net = Network::init(1);
    for (double* p : net.parameters()) *p = 0.0;
    net.set_output_normalization({0.5, -1.0, 2.0}, {1.0, 1.0, 1.0});

    FluidState s;
    s.particles.resize(2);
    s.particles[0].r = {0, 0, 0};
    s.particles[0].v = {0.1, 0.2, 0.3};
    s.particles[1].r = {0.03, 0, 0};
    s.particles[1].v = {-0.1, 0, 0};
    s.frame = 4;
    s.time = 0.8;

    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    NeighborGrid grid(s.positions(), {}, 0.1);
    const double dt = 0.01;
    const FluidState next = pcnet_step(s, {}, grid, net, spec, dt);

    EXPECT_EQ(next.frame, 5);
    EXPECT_DOUBLE_EQ(next.time, 0.81);
    const Vec3 a{0.5, -1.0, 2.0};
    for (int i = 0; i < 2; ++i) {
        EXPECT_DOUBLE_EQ(next.particles[i].a.x, a.x);
        EXPECT_DOUBLE_EQ(next.particles[i].a.y, a.y);
        EXPECT_DOUBLE_EQ(next.particles[i].a.z, a.z);
        const auto [v1, x1] = integrate(s.particles[i].v, s.particles[i].r, a, dt);
        EXPECT_EQ(next.particles[i].v.x, v1.x);
        EXPECT_EQ(next.particles[i].r.x, x1.x);
        EXPECT_EQ(next.particles[i].r.z, x1.z);
    }
}

TEST(Trainer, PcnetStepFlagsNonFiniteFeatures) {
    Network net = Network::init(1);
    FluidState s;
    s.particles.resize(2);
    s.particles[1].r = {0.05, 0, 0};
    s.particles[1].a = {std::numeric_limits<double>::quiet_NaN(), 0, 0};
    s.frame = 2;
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    NeighborGrid grid(s.positions(), {}, 0.1);
    try {
        pcnet_step(s, {}, grid, net, spec, 0.01);
        FAIL() << "expected InstabilityError";
    } catch (const InstabilityError& e) {
        EXPECT_EQ(e.particle(), 1);
        EXPECT_EQ(e.frame(), 3);
    }
}

TEST(Trainer, RolloutMatchesManualComposition) {
    Network net = Network::init(21);
    std::vector<double> om{0.05, -0.02, 0.01}, os{0.1, 0.1, 0.1};
    net.set_output_normalization(om, os);

    FluidState s;
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> pos(-0.05, 0.05), vel(-0.1, 0.1);
    s.particles.resize(8);
    for (auto& p : s.particles) {
        p.r = {pos(rng), pos(rng), pos(rng)};
        p.v = {vel(rng), vel(rng), vel(rng)};
    }
    BinningSpec spec;
    spec.dist_range = 0.1;
    spec.vel_range = 2.0;
    KernelParams kp;
    kp.h = 0.1;
    const double dt = 0.002;

    std::vector<FeatureVector> final_features;
    const RolloutResult roll = rollout(net, s, {}, 3, kp, spec, dt, 1, &final_features);
    ASSERT_FALSE(roll.diverged);
    ASSERT_EQ(roll.states.size(), 4u);

    // Manual: fresh grid each step, same step function.
    FluidState cur = s;
    for (int step = 0; step < 3; ++step) {
        NeighborGrid grid(cur.positions(), {}, kp.h);
        cur = pcnet_step(cur, {}, grid, net, spec, dt);
        const FluidState& got = roll.states[step + 1];
        for (std::size_t i = 0; i < cur.particles.size(); ++i) {
            EXPECT_EQ(got.particles[i].r.x, cur.particles[i].r.x);
            EXPECT_EQ(got.particles[i].r.y, cur.particles[i].r.y);
            EXPECT_EQ(got.particles[i].r.z, cur.particles[i].r.z);
            EXPECT_EQ(got.particles[i].v.x, cur.particles[i].v.x);
            EXPECT_EQ(got.particles[i].a.x, cur.particles[i].a.x);
        }
    }
    NeighborGrid grid(cur.positions(), {}, kp.h);
    ASSERT_EQ(final_features.size(), cur.particles.size());
    for (std::size_t i = 0; i < cur.particles.size(); ++i) {
        const FeatureVector want =
            extract_feature_vector(cur, static_cast<int>(i), grid, {}, spec);
        for (int c = 0; c < kFeatureDim; ++c) EXPECT_EQ(final_features[i][c], want[c]);
    }

    // Horizon 0 returns just the initial state.
    const RolloutResult zero = rollout(net, s, {}, 0, kp, spec, dt);
    EXPECT_FALSE(zero.diverged);
    ASSERT_EQ(zero.states.size(), 1u);
    EXPECT_THROW(rollout(net, s, {}, -1, kp, spec, dt), std::invalid_argument);
}

TEST(Trainer, CaptureTargetsAreNextFrameAccelerations) {
    // Real physics blob, then an independent re-run of the same chain with
    // the same float casts must reproduce every record.
    FluidConstants c;
    c.g = {0, 0, 0};
    c.dt = 1e-4;
    KernelParams kp;
    kp.h = 0.1;
    BinningSpec spec;
    spec.dist_range = kp.h;
    spec.vel_range = c.cs / 10.0;

    FluidState initial;
    const double d = 0.5 * kp.h;
    const double mass = c.rho0 * d * d * d;
    for (int x = 0; x < 3; ++x) {
        for (int y = 0; y < 3; ++y) {
            for (int z = 0; z < 3; ++z) {
                FluidParticle p;
                p.r = {x * d, y * d, z * d};
                p.m = mass;
                p.rho = c.rho0;
                initial.particles.push_back(p);
            }
        }
    }

    const auto path = temp_path("trainer_capture.bfds");
    const int total_states = 4;
    {
        DatasetMeta meta = toy_meta();
        meta.constants = c;
        meta.kernel = kp;
        meta.binning = spec;
        DatasetWriter w(path.string(), meta, 1);
        const CaptureResult cap = capture_sequence(initial, {}, c, kp, spec, total_states, w);
        EXPECT_EQ(cap.states, total_states);
        EXPECT_EQ(cap.sample_frames, total_states - 1);
        EXPECT_FALSE(cap.truncated);
        w.finish();
    }

    DatasetReader r(path.string());
    ASSERT_EQ(r.sequence_count(), 1);
    EXPECT_EQ(r.sequence(0).frames, 3u);
    EXPECT_EQ(r.sequence(0).particles, 27u);
    EXPECT_FALSE(r.sequence(0).truncated);

    FluidState state = initial;
    std::vector<SampleRecord> recs;
    for (int f = 0; f + 1 < total_states; ++f) {
        NeighborGrid grid(state.positions(), {}, kp.h);
        const FluidState next = physics_step(state, {}, grid, c, kp);
        r.read_frame(0, f, recs);
        ASSERT_EQ(recs.size(), 27u);
        for (int i = 0; i < 27; ++i) {
            const FluidParticle& p = state.particles[i];
            EXPECT_EQ(recs[i].r[0], static_cast<float>(p.r.x));
            EXPECT_EQ(recs[i].r[1], static_cast<float>(p.r.y));
            EXPECT_EQ(recs[i].r[2], static_cast<float>(p.r.z));
            EXPECT_EQ(recs[i].v[0], static_cast<float>(p.v.x));
            EXPECT_EQ(recs[i].a[2], static_cast<float>(p.a.z));
            const FeatureVector fv = extract_feature_vector(state, i, grid, {}, spec);
            for (int ci = 0; ci < kFeatureDim; ++ci) {
                EXPECT_EQ(recs[i].feature[ci], static_cast<float>(fv[ci]));
            }
            EXPECT_EQ(recs[i].target[0], static_cast<float>(next.particles[i].a.x));
            EXPECT_EQ(recs[i].target[1], static_cast<float>(next.particles[i].a.y));
            EXPECT_EQ(recs[i].target[2], static_cast<float>(next.particles[i].a.z));
        }
        state = next;
    }

    EXPECT_THROW(
        {
            DatasetMeta meta = toy_meta();
            DatasetWriter w2(temp_path("trainer_capture2.bfds").string(), meta, 1);
            capture_sequence(initial, {}, c, kp, spec, 1, w2);
        },
        std::invalid_argument);

    std::filesystem::remove(path);
    std::filesystem::remove(temp_path("trainer_capture2.bfds"));
}
