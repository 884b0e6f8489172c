#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dcpose/lossmap.hpp"
#include "dcpose/net.hpp"
#include "dcpose/objective.hpp"
#include "dcpose/synth.hpp"

namespace dcpose::eval {

enum class Decoder { meu, zero_noise };

Decoder decoder_from_string(const std::string& s);
std::string decoder_to_string(Decoder d);

// The sample minimizing the total loss against all samples in the set; ties
// broken by lowest index.
std::pair<Pose, std::size_t> meu_predict(const objective::SampleSet& samples,
                                         const lossmap::RenderConfig& cfg);

// Same criterion under an arbitrary loss.
std::pair<Pose, std::size_t> meu_predict(
    const objective::SampleSet& samples,
    const std::function<double(const Pose&, const Pose&)>& delta);

struct MeuResult {
    Pose pose;
    std::size_t index = 0;
    double expected_loss = 0.0;  // mean loss of the chosen sample to the set
};

MeuResult meu_decode(const objective::SampleSet& samples, const lossmap::RenderConfig& cfg);

// One pointwise prediction per listed sample. Noise for sample index i comes
// from child stream i of `seed`; Decoder::zero_noise runs a single forward
// pass with an all-zero noise vector instead of MEU.
std::vector<MeuResult> decode_split(const net::Params& params, const synth::DiverseDataset& data,
                                    const std::vector<int>& indices, int k,
                                    const lossmap::RenderConfig& cfg, std::uint64_t seed,
                                    Decoder decoder, bool use_actions);

struct Evaluation {
    lossmap::PckhResult pckh;                 // per-joint, fractions in [0,1]
    std::vector<std::string> group_names;     // Head, Sho., ..., Total
    std::vector<double> group_percent;        // accuracies scaled to 100
    std::vector<MeuResult> decoded;
    std::vector<int> indices;
};

Evaluation evaluate(const net::Params& params, const synth::DiverseDataset& data,
                    const std::vector<int>& indices, int k, double tau,
                    const lossmap::RenderConfig& cfg, std::uint64_t seed, Decoder decoder,
                    bool use_actions);

// (threshold, accuracy) pairs for tau from 0 to max_tau inclusive.
std::vector<std::pair<double, double>> pckh_curve(const Evaluation& ev,
                                                  const synth::DiverseDataset& data,
                                                  double max_tau = 1.0, int steps = 50);

// Per-joint spread statistics of the sampled pose distribution, averaged over
// images: mean pairwise sample distance and the Gaussian differential-entropy
// proxy 0.5*ln((2*pi*e)^2 * det(S + 1e-8 I)) of the 2x2 sample covariance S.
struct UncertaintyReport {
    std::vector<double> mean_pairwise;
    std::vector<double> entropy;
    int k = 0;
};

UncertaintyReport uncertainty_report(const net::Params& params,
                                     const synth::DiverseDataset& data,
                                     const std::vector<int>& indices, int k, std::uint64_t seed);

}  // namespace dcpose::eval
