#pragma once

#include <cstdint>
#include <string>

#include "dcpose/training.hpp"

namespace dcpose::run {

// Everything a CLI invocation needs. All randomness flows from `seed` through
// named substreams (see rng.hpp); train.seed is overwritten with it.
struct RunConfig {
    std::string dataset;
    std::string out;         // output directory (gen-data: the archive path)
    std::string checkpoint;  // evaluate / predict / report-uncertainty
    std::string method = "prob_joint";  // fs | pw | prob_iterative | prob_joint
    double split = 0.5;                 // strong-annotation fraction of the train split
    std::uint64_t seed = 1;
    int k_eval = 100;
    double tau = 0.5;

    // gen-data
    int actions = 6;
    int per_action = 300;
    int image_size = 48;
    double jitter = 1.0;  // multiplier on the prototypes' angle jitter

    // artifacts
    bool write_svg = false;
    int svg_limit = 8;
    double frame_threshold = 3.0;  // expected-loss cut for green vs blue frames
    bool use_actions = false;
    std::string decoder_override;  // "", "meu", "zero_noise"

    training::TrainConfig train;
};

// Per-method training defaults; the CLI applies explicit flag overrides on top.
training::TrainConfig method_defaults(const std::string& method);

void cmd_gen_data(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
void cmd_report_uncertainty(const RunConfig& cfg);

}  // namespace dcpose::run
