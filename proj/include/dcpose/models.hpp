#pragma once

#include <cstdint>

#include "dcpose/net.hpp"
#include "dcpose/objective.hpp"
#include "dcpose/rng.hpp"
#include "dcpose/synth.hpp"

namespace dcpose::training {
struct TrainConfig;
struct LogRow;
}

namespace dcpose::models {

// Pose distribution given only the image; the network used at test time.
struct PredictionNet {
    net::Params params;
};

// Pose distribution given image and action: one output branch per action,
// sharing the trunk, each branch with its own noise stream.
struct ConditionalNet {
    net::Params params;
};

net::NetConfig default_config(int image_height, int image_width, int joints, int num_heads);

// K forward passes with K i.i.d. noise vectors from rng (drawn first, in
// order). The trunk is evaluated once and reused across the K passes, which
// is bit-identical to K full forward passes. action must be -1 for a
// prediction net and a valid action id for a conditional net.
objective::SampleSet sample_poses(const net::Params& params, const Image& image, int action,
                                  int k, Rng& rng);

// Stage 1: supervised training of the prediction network on the strong set;
// returns the early-stopped parameters. 0 epochs returns the seeded random
// initialization unchanged.
PredictionNet init_prediction(const synth::DiverseDataset& data,
                              const training::TrainConfig& cfg,
                              std::vector<training::LogRow>* log = nullptr);

// Stage 1 for the conditional network: trunk and every head start as copies
// of the prediction network, then each head is fine-tuned on the strong
// samples of its own action (the trunk sees the union). An action with no
// strong samples keeps the copied initialization and emits a warning.
ConditionalNet init_conditional(const PredictionNet& pred, const synth::DiverseDataset& data,
                                const training::TrainConfig& cfg,
                                std::vector<training::LogRow>* log = nullptr);

}  // namespace dcpose::models
