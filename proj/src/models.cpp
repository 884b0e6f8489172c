#include "dcpose/models.hpp"

#include <cstdio>

#include "dcpose/errors.hpp"
#include "dcpose/parallel.hpp"
#include "dcpose/training.hpp"

namespace dcpose::models {

net::NetConfig default_config(int image_height, int image_width, int joints, int num_heads) {
    net::NetConfig cfg;
    cfg.input_dim = image_height * image_width;
    cfg.hidden = {128, 64};
    cfg.noise_dim = 16;
    cfg.num_joints = joints;
    cfg.num_heads = num_heads;
    cfg.injection_layer = 1;
    return cfg;
}

objective::SampleSet sample_poses(const net::Params& params, const Image& image, int action,
                                  int k, Rng& rng) {
    if (k < 1) throw DataError("sample_poses: k must be >= 1");
    if (params.cfg.num_heads > 1 && action < 0)
        throw DataError("sample_poses: conditional network requires an action");
    if (params.cfg.num_heads == 1 && action >= 0)
        throw DataError("sample_poses: prediction network takes no action");

    // Draw all K noise vectors first so the stream consumption is fixed, then
    // evaluate the head passes in parallel over the shared trunk.
    std::vector<std::vector<double>> noise(k);
    for (int i = 0; i < k; ++i) noise[i] = rng.uniform_vector(params.cfg.noise_dim);

    const net::TrunkCache trunk = net::forward_trunk(params, image);
    objective::SampleSet set;
    set.source = params.cfg.num_heads > 1 ? objective::Source::conditional
                                          : objective::Source::prediction;
    set.poses.resize(k);
    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i)
        guard.run([&, i] { set.poses[i] = net::forward_head(params, trunk, noise[i], action).first; });
    guard.rethrow();
    return set;
}

PredictionNet init_prediction(const synth::DiverseDataset& data,
                              const training::TrainConfig& cfg,
                              std::vector<training::LogRow>* log) {
    if (data.strong.empty()) throw DataError("init_prediction: empty strong set");
    PredictionNet net;
    net.params = net::init_params(
        default_config(data.corpus.image_height, data.corpus.image_width,
                       data.corpus.skeleton.joints(), 1),
        substream_seed(cfg.seed, "init_w"));
    training::TrainingLog local;
    training::train_supervised(net.params, data, data.strong, cfg, cfg.epochs,
                               training::Decoder::meu, "init_w", log ? *log : local);
    return net;
}

ConditionalNet init_conditional(const PredictionNet& pred, const synth::DiverseDataset& data,
                                const training::TrainConfig& cfg,
                                std::vector<training::LogRow>* log) {
    const int actions = data.corpus.num_actions;
    ConditionalNet cond;
    cond.params = net::init_params(
        default_config(data.corpus.image_height, data.corpus.image_width,
                       data.corpus.skeleton.joints(), actions),
        substream_seed(cfg.seed, "init_theta"));

    // Copy the prediction net: trunk verbatim, every head a copy of the
    // prediction net's single post-injection block.
    const net::Params& src = pred.params;
    const std::size_t trunk = src.trunk_size();
    if (cond.params.trunk_size() != trunk || cond.params.head_size() != src.head_size())
        throw DataError("init_conditional: architecture mismatch with prediction net");
    for (std::size_t i = 0; i < trunk; ++i) cond.params.values[i] = src.values[i];
    const std::size_t head = src.head_size();
    for (int h = 0; h < actions; ++h)
        for (std::size_t i = 0; i < head; ++i)
            cond.params.values[trunk + h * head + i] = src.values[trunk + i];

    // Flag actions with no strong coverage; their heads keep the copy.
    std::vector<int> strong_per_action(actions, 0);
    for (int i : data.strong) ++strong_per_action[data.corpus.samples[i].action];
    for (int a = 0; a < actions; ++a)
        if (strong_per_action[a] == 0)
            std::fprintf(stderr, "warning: no strong samples for action %d; head keeps the prediction-net copy\n", a);

    training::TrainingLog local;
    training::train_supervised(cond.params, data, data.strong, cfg, cfg.head_epochs,
                               training::Decoder::meu, "init_theta", log ? *log : local);

    // An uncovered head sees no gradient but would still shrink under weight
    // decay; restore it to the copied initialization.
    for (int a = 0; a < actions; ++a) {
        if (strong_per_action[a] > 0) continue;
        for (std::size_t i = 0; i < head; ++i)
            cond.params.values[trunk + a * head + i] = src.values[trunk + i];
    }
    return cond;
}

}  // namespace dcpose::models
