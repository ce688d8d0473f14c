#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hemo/dataset.hpp"
#include "hemo/features.hpp"
#include "hemo/network.hpp"
#include "hemo/particles.hpp"
#include "hemo/physics.hpp"

namespace hemo {

struct TrainConfig {
    int period = 5;  // correction period a
    int epochs = 1;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    enum class ResetPolicy {
        SequenceStart,  // corrections roll out from the sequence's first frame
        PeriodStart,    // cheaper variant: from the period's first frame
    };
    ResetPolicy reset = ResetPolicy::SequenceStart;
    int threads = 1;                             // rollout inference only
    std::vector<int> layers = {23, 5, 5, 5, 3};  // must map 23 -> 3

    bool valid() const {
        return period >= 2 && epochs >= 1 && lr >= 0.0 && layers.size() >= 2 &&
               layers.front() == kFeatureDim && layers.back() == 3;
    }
};

// Emitted once per fired correction, carrying exactly the samples that were
// trained on (particle index order).
struct CorrectionEvent {
    int sequence = 0;
    int frame = 0;  // 1-based sample frame the correction fired after
    std::vector<FeatureVector> features;
    std::vector<Vec3> targets;
};
using CorrectionHook = std::function<void(const CorrectionEvent&)>;

struct TrainResult {
    Network net;
    int corrections_fired = 0;
    int corrections_skipped = 0;  // rollout diverged before reaching the frame
    double first_epoch_loss = 0.0;
    double last_epoch_loss = 0.0;
};

// Periodic-corrected training: frames in physical order, one SGD step per
// particle sample; after every `period`-th sample frame, a closed-loop
// rollout with the current net re-extracts features at that frame and the
// (predicted-feature, physics-target) pairs are trained once.
TrainResult train_pcnet(DatasetReader& ds, const std::vector<ProxyParticle>& proxies,
                        const TrainConfig& cfg, const CorrectionHook& hook = nullptr);

// Identical pipeline with corrections disabled.
TrainResult train_baseline_bp(DatasetReader& ds, const std::vector<ProxyParticle>& proxies,
                              const TrainConfig& cfg);

// One step of the data-driven loop: neighbor query, feature extraction,
// network forward as the acceleration source, then the usual integration.
FluidState pcnet_step(const FluidState& state, const std::vector<ProxyParticle>& proxies,
                      const NeighborGrid& grid, const Network& net, const BinningSpec& spec,
                      double dt, int threads = 1);

struct RolloutResult {
    std::vector<FluidState> states;  // states[0] is the initial state
    bool diverged = false;
    int diverged_particle = -1;
};

// Closed-loop prediction for `horizon` steps. Serves both training-time
// corrections and deployment simulation. A non-finite prediction truncates
// the sequence instead of propagating. When `final_features` is given and
// the rollout completes, it receives the feature vectors of the last state.
RolloutResult rollout(const Network& net, const FluidState& initial,
                      const std::vector<ProxyParticle>& proxies, int horizon,
                      const KernelParams& kp, const BinningSpec& spec, double dt, int threads = 1,
                      std::vector<FeatureVector>* final_features = nullptr);

struct CaptureResult {
    int states = 0;         // physics states produced, initial included
    int sample_frames = 0;  // record frames written (states - 1 when clean)
    bool truncated = false;
};

// Runs the physics solver for total_states frames and streams
// (state, features, next-frame acceleration) records into the writer as one
// sequence. Instability truncates the sequence at the last finite frame.
CaptureResult capture_sequence(const FluidState& initial,
                               const std::vector<ProxyParticle>& proxies,
                               const FluidConstants& c, const KernelParams& kp,
                               const BinningSpec& spec, int total_states, DatasetWriter& writer,
                               int threads = 1);

}  // namespace hemo
