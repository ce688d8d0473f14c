#include "hemo/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include "hemo/parallel.hpp"

namespace hemo {

namespace {

FluidState state_from_records(const std::vector<SampleRecord>& recs) {
    FluidState s;
    s.particles.resize(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        FluidParticle& p = s.particles[i];
        p.r = {recs[i].r[0], recs[i].r[1], recs[i].r[2]};
        p.v = {recs[i].v[0], recs[i].v[1], recs[i].v[2]};
        p.a = {recs[i].a[0], recs[i].a[1], recs[i].a[2]};
    }
    return s;
}

FeatureVector record_feature(const SampleRecord& rec) {
    FeatureVector f;
    for (int c = 0; c < kFeatureDim; ++c) f[c] = rec.feature[c];
    return f;
}

Vec3 record_target(const SampleRecord& rec) {
    return {rec.target[0], rec.target[1], rec.target[2]};
}

bool feature_finite(const FeatureVector& f) {
    for (double x : f) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Population mean/std of every feature and target component, streamed over
// the whole dataset once. Frozen into the network before training.
void fit_normalization(DatasetReader& ds, Network& net) {
    std::vector<double> fsum(kFeatureDim, 0.0), fsq(kFeatureDim, 0.0);
    double tsum[3] = {0, 0, 0}, tsq[3] = {0, 0, 0};
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
    if (n == 0) throw std::invalid_argument("dataset has no records");
    std::vector<double> fmean(kFeatureDim), fstd(kFeatureDim);
    for (int c = 0; c < kFeatureDim; ++c) {
        fmean[c] = fsum[c] / static_cast<double>(n);
        const double var = fsq[c] / static_cast<double>(n) - fmean[c] * fmean[c];
        fstd[c] = std::sqrt(var > 0.0 ? var : 0.0);
    }
    std::vector<double> tmean(3), tstd(3);
    for (int c = 0; c < 3; ++c) {
        tmean[c] = tsum[c] / static_cast<double>(n);
        const double var = tsq[c] / static_cast<double>(n) - tmean[c] * tmean[c];
        tstd[c] = std::sqrt(var > 0.0 ? var : 0.0);
    }
    net.set_input_normalization(std::move(fmean), std::move(fstd));
    net.set_output_normalization(std::move(tmean), std::move(tstd));
}

TrainResult train_impl(DatasetReader& ds, const std::vector<ProxyParticle>& proxies,
                       const TrainConfig& cfg, const CorrectionHook& hook, bool corrections) {
    if (!cfg.valid()) throw std::invalid_argument("invalid training configuration");
    const DatasetMeta& meta = ds.meta();
    if (proxies.size() != meta.proxy_count) {
        throw std::invalid_argument("proxy set does not match the dataset metadata");
    }

    TrainResult result;
    result.net = Network::init(cfg.layers, cfg.seed);
    fit_normalization(ds, result.net);
    result.net.meta = {meta.kernel.h, meta.constants.dt, meta.binning.vel_range,
                       meta.binning.bins};

    std::vector<SampleRecord> recs, start_recs;
    std::vector<FeatureVector> corrected;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::uint64_t loss_count = 0;
        for (int seq = 0; seq < ds.sequence_count(); ++seq) {
            const int frames = static_cast<int>(ds.sequence(seq).frames);
            for (int f = 1; f <= frames; ++f) {
                ds.read_frame(seq, f - 1, recs);
                for (const SampleRecord& r : recs) {
                    loss_sum += result.net.train_step(record_feature(r), record_target(r), cfg.lr);
                    ++loss_count;
                }
                if (!corrections || f % cfg.period != 0) continue;

                // Closed-loop rollout with the current net up to this frame;
                // its predicted features pair with this frame's physics
                // targets to form the corrected samples.
                int start_frame = 0, steps = f - 1;
                if (cfg.reset == TrainConfig::ResetPolicy::PeriodStart) {
                    start_frame = f - cfg.period;
                    steps = cfg.period - 1;
                }
                ds.read_frame(seq, start_frame, start_recs);
                const RolloutResult roll =
                    rollout(result.net, state_from_records(start_recs), proxies, steps,
                            meta.kernel, meta.binning, meta.constants.dt, cfg.threads, &corrected);
                if (roll.diverged || static_cast<int>(roll.states.size()) != steps + 1) {
                    ++result.corrections_skipped;
                    continue;
                }
                ++result.corrections_fired;
                if (hook) {
                    CorrectionEvent ev;
                    ev.sequence = seq;
                    ev.frame = f;
                    ev.features = corrected;
                    ev.targets.reserve(recs.size());
                    for (const SampleRecord& r : recs) ev.targets.push_back(record_target(r));
                    hook(ev);
                }
                for (std::size_t i = 0; i < recs.size(); ++i) {
                    result.net.train_step(corrected[i], record_target(recs[i]), cfg.lr);
                }
            }
        }
        const double epoch_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        if (epoch == 0) result.first_epoch_loss = epoch_loss;
        result.last_epoch_loss = epoch_loss;
    }
    return result;
}

}  // namespace

TrainResult train_pcnet(DatasetReader& ds, const std::vector<ProxyParticle>& proxies,
                        const TrainConfig& cfg, const CorrectionHook& hook) {
    return train_impl(ds, proxies, cfg, hook, true);
}

TrainResult train_baseline_bp(DatasetReader& ds, const std::vector<ProxyParticle>& proxies,
                              const TrainConfig& cfg) {
    return train_impl(ds, proxies, cfg, nullptr, false);
}

FluidState pcnet_step(const FluidState& state, const std::vector<ProxyParticle>& proxies,
                      const NeighborGrid& grid, const Network& net, const BinningSpec& spec,
                      double dt, int threads) {
    const int n = static_cast<int>(state.particles.size());
    FluidState next = state;
    next.frame = state.frame + 1;
    next.time = state.time + dt;

    NeighborTable nb;
    grid.query_all(nb, threads);

    // Workers never throw: non-finite features are flagged and reported
    // from this thread after the barrier.
    std::vector<Vec3> accel(n);
    std::vector<unsigned char> bad(n, 0);
    parallel_for(n, threads, [&](int i) {
        const FeatureVector f =
            extract_feature_vector(state, i, nb.fluid(i), nb.proxy(i), proxies, spec);
        if (!feature_finite(f)) {
            bad[i] = 1;
            return;
        }
        accel[i] = net.forward(f);
    });
    for (int i = 0; i < n; ++i) {
        if (bad[i]) throw InstabilityError(i, next.frame);
    }

    parallel_for(n, threads, [&](int i) {
        FluidParticle& p = next.particles[i];
        p.a = accel[i];
        auto [v1, x1] = integrate(state.particles[i].v, state.particles[i].r, p.a, dt);
        p.v = v1;
        p.r = x1;
    });
    for (int i = 0; i < n; ++i) {
        const FluidParticle& p = next.particles[i];
        if (!is_finite(p.r) || !is_finite(p.v) || !is_finite(p.a)) {
            throw InstabilityError(i, next.frame);
        }
    }
    return next;
}

RolloutResult rollout(const Network& net, const FluidState& initial,
                      const std::vector<ProxyParticle>& proxies, int horizon,
                      const KernelParams& kp, const BinningSpec& spec, double dt, int threads,
                      std::vector<FeatureVector>* final_features) {
    if (horizon < 0) throw std::invalid_argument("rollout horizon must be nonnegative");
    RolloutResult out;
    out.states.reserve(static_cast<std::size_t>(horizon) + 1);
    out.states.push_back(initial);

    NeighborGrid grid;
    try {
        grid = NeighborGrid(initial.positions(), proxy_positions(proxies), kp.h);
    } catch (const std::invalid_argument&) {
        out.diverged = true;
        return out;
    }

    for (int step = 0; step < horizon; ++step) {
        const FluidState& cur = out.states.back();
        try {
            if (step > 0) grid.rebuild_fluid(cur.positions());
            out.states.push_back(pcnet_step(cur, proxies, grid, net, spec, dt, threads));
        } catch (const InstabilityError& e) {
            out.diverged = true;
            out.diverged_particle = e.particle();
            return out;
        } catch (const std::invalid_argument&) {
            // Runaway but finite particle left the grid's addressable domain.
            out.diverged = true;
            return out;
        }
    }

    if (final_features != nullptr) {
        const FluidState& last = out.states.back();
        try {
            if (horizon > 0) grid.rebuild_fluid(last.positions());
        } catch (const std::invalid_argument&) {
            out.diverged = true;
            return out;
        }
        final_features->resize(last.particles.size());
        const int n = static_cast<int>(last.particles.size());
        NeighborTable nb;
        grid.query_all(nb, threads);
        parallel_for(n, threads, [&](int i) {
            (*final_features)[i] =
                extract_feature_vector(last, i, nb.fluid(i), nb.proxy(i), proxies, spec);
        });
    }
    return out;
}

CaptureResult capture_sequence(const FluidState& initial,
                               const std::vector<ProxyParticle>& proxies,
                               const FluidConstants& c, const KernelParams& kp,
                               const BinningSpec& spec, int total_states, DatasetWriter& writer,
                               int threads) {
    if (total_states < 2) {
        throw std::invalid_argument("capture needs at least 2 states for one sample frame");
    }
    const int n = static_cast<int>(initial.particles.size());
    CaptureResult result;
    result.states = 1;
    writer.begin_sequence(static_cast<std::uint32_t>(n));

    FluidState state = initial;
    NeighborGrid grid(state.positions(), proxy_positions(proxies), kp.h);
    std::vector<FeatureVector> features(n);
    std::vector<SampleRecord> records(n);
    NeighborTable nb;
    for (int frame = 0; frame + 1 < total_states; ++frame) {
        FluidState next;
        try {
            if (frame > 0) grid.rebuild_fluid(state.positions());
            grid.query_all(nb, threads);
            parallel_for(n, threads, [&](int i) {
                features[i] =
                    extract_feature_vector(state, i, nb.fluid(i), nb.proxy(i), proxies, spec);
            });
            next = physics_step(state, proxies, grid, c, kp, threads);
        } catch (const InstabilityError&) {
            writer.end_sequence(true);
            result.truncated = true;
            return result;
        } catch (const std::invalid_argument&) {
            writer.end_sequence(true);
            result.truncated = true;
            return result;
        }
        for (int i = 0; i < n; ++i) {
            SampleRecord& rec = records[i];
            const FluidParticle& p = state.particles[i];
            rec.r[0] = static_cast<float>(p.r.x);
            rec.r[1] = static_cast<float>(p.r.y);
            rec.r[2] = static_cast<float>(p.r.z);
            rec.v[0] = static_cast<float>(p.v.x);
            rec.v[1] = static_cast<float>(p.v.y);
            rec.v[2] = static_cast<float>(p.v.z);
            rec.a[0] = static_cast<float>(p.a.x);
            rec.a[1] = static_cast<float>(p.a.y);
            rec.a[2] = static_cast<float>(p.a.z);
            for (int ci = 0; ci < kFeatureDim; ++ci) {
                rec.feature[ci] = static_cast<float>(features[i][ci]);
            }
            const Vec3& t = next.particles[i].a;
            rec.target[0] = static_cast<float>(t.x);
            rec.target[1] = static_cast<float>(t.y);
            rec.target[2] = static_cast<float>(t.z);
        }
        writer.write_frame(records);
        ++result.sample_frames;
        state = std::move(next);
        ++result.states;
    }
    writer.end_sequence(false);
    return result;
}

}  // namespace hemo
