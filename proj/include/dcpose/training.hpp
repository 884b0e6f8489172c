#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcpose/eval.hpp"
#include "dcpose/lossmap.hpp"
#include "dcpose/models.hpp"
#include "dcpose/synth.hpp"

namespace dcpose::training {

using Decoder = eval::Decoder;

enum class AugmentMode { none, per_epoch, pre_expanded };

struct TrainConfig {
    double eta = 0.025;
    double momentum = 0.9;
    double weight_decay = 0.01;  // C
    int batch_size = 8;
    int epochs = 50;     // budget for supervised stages (init / FS)
    int K = 20;          // samples per distribution per step
    double gamma = 0.5;
    double pw_threshold = 3.0;  // t, in delta units; applies to weak examples
    int patience = 15;
    std::uint64_t seed = 1;

    double strong_aux_weight = 1.0;  // supervised term on strong samples in stages 2-3
    int rounds = 5;                  // iterative rounds R
    int stage_epochs = 2;            // epochs per half-round
    int joint_epochs = 8;
    int head_epochs = 20;            // conditional fine-tune budget
    int eval_samples = 0;            // K for validation scoring; 0 -> K
    double clip_norm = 10.0;         // gradient clipping, global norm
    AugmentMode augment = AugmentMode::per_epoch;
    // Wider training sigma than the rendering default: gradient reach
    // matters more than sharpness while the two belief maps barely overlap.
    lossmap::RenderConfig render{32, 32, 3.0};

    int eval_k() const { return eval_samples > 0 ? eval_samples : K; }
    void validate() const;
};

// One row per completed epoch, plus an epoch-0 row recording the state a
// stage starts from. objective and the div columns are probe-set averages
// (nan while only one network exists); val_pckh is the validation PCKh@0.5
// of the network the stage optimizes.
struct LogRow {
    int epoch = 0;
    std::string stage;
    double objective = 0.0;
    double val_pckh = 0.0;
    double div_ww = 0.0;
    double div_tt = 0.0;
    double div_wt = 0.0;
};
using TrainingLog = std::vector<LogRow>;

void save_log_csv(const TrainingLog& log, const std::string& path);
TrainingLog load_log_csv(const std::string& path);

struct OptState {
    std::vector<double> velocity;
};

// velocity <- momentum*velocity - eta*(grads + weight_decay*params);
// params <- params + velocity. Throws NumericError on non-finite gradients.
void sgd_step(std::vector<double>& params, std::span<const double> grads, OptState& state,
              double eta, double momentum, double weight_decay);

// Index of the best entry of a validation curve under early stopping with the
// given patience; ties resolve to the earliest epoch. Training is considered
// halted once patience epochs pass without improvement.
std::size_t early_stop_best(std::span<const double> val_curve, int patience);

// Shared supervised trainer (stage 1 and the FS baseline): SGD on the
// supervised disco loss over `examples`, early-stopped on validation PCKh
// with best-epoch restore. Conditional networks route each sample through
// its action head.
void train_supervised(net::Params& params, const synth::DiverseDataset& data,
                      const std::vector<int>& examples, const TrainConfig& cfg, int epochs,
                      Decoder val_decoder, const std::string& tag, TrainingLog& log);

// Block-coordinate stages: optimize one network with the other frozen, over
// the whole train split (strong samples additionally pull toward their
// ground truth with weight strong_aux_weight). Runs cfg.stage_epochs epochs.
void train_theta_stage(const models::PredictionNet& pred, models::ConditionalNet& cond,
                       const synth::DiverseDataset& data, const TrainConfig& cfg,
                       const std::string& tag, TrainingLog& log);
void train_w_stage(models::PredictionNet& pred, const models::ConditionalNet& cond,
                   const synth::DiverseDataset& data, const TrainConfig& cfg,
                   const std::string& tag, TrainingLog& log);

// R rounds of theta-stage followed by w-stage, tagged iter<r>_theta/iter<r>_w.
void train_iterative(models::PredictionNet& pred, models::ConditionalNet& cond,
                     const synth::DiverseDataset& data, const TrainConfig& cfg, int rounds,
                     TrainingLog& log);

// Simultaneous update of both networks on the full objective, warm-started
// from whatever state the nets are in; early-stopped on the prediction net's
// validation PCKh with the entry state included in the best tracking.
void train_joint(models::PredictionNet& pred, models::ConditionalNet& cond,
                 const synth::DiverseDataset& data, const TrainConfig& cfg, TrainingLog& log);

// Fully supervised baseline: the strong subset only, pointwise inference
// with a zero noise vector.
models::PredictionNet train_fs_baseline(const synth::DiverseDataset& data, const TrainConfig& cfg,
                                        TrainingLog& log);

// Pointwise baseline: the iterative alternation with the self-diversity
// terms dropped (cross-diversity only); weak examples are skipped whenever
// their cross term exceeds pw_threshold. Prediction at test time is MEU.
void train_pw_baseline(models::PredictionNet& pred, models::ConditionalNet& cond,
                       const synth::DiverseDataset& data, const TrainConfig& cfg,
                       TrainingLog& log);

}  // namespace dcpose::training
