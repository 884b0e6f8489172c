#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "dcpose/errors.hpp"
#include "dcpose/run.hpp"

namespace {

using dcpose::run::RunConfig;

struct TrainOverrides {
    double eta = 0.0, momentum = 0.0, weight_decay = 0.0, gamma = 0.0, pw_threshold = 0.0;
    double strong_aux_weight = 0.0, clip_norm = 0.0;
    int batch_size = 0, epochs = 0, k = 0, patience = 0, rounds = 0, stage_epochs = 0;
    int joint_epochs = 0, head_epochs = 0, eval_samples = 0;
    std::string augment;

    CLI::Option *o_eta = nullptr, *o_momentum = nullptr, *o_decay = nullptr, *o_gamma = nullptr,
                *o_thresh = nullptr, *o_aux = nullptr, *o_clip = nullptr, *o_batch = nullptr,
                *o_epochs = nullptr, *o_k = nullptr, *o_patience = nullptr, *o_rounds = nullptr,
                *o_stage = nullptr, *o_joint = nullptr, *o_head = nullptr, *o_evalk = nullptr,
                *o_augment = nullptr;

    void attach(CLI::App* cmd) {
        o_eta = cmd->add_option("--eta", eta, "learning rate");
        o_momentum = cmd->add_option("--momentum", momentum, "SGD momentum");
        o_decay = cmd->add_option("--weight-decay", weight_decay, "weight decay C");
        o_gamma = cmd->add_option("--gamma", gamma, "dissimilarity gamma");
        o_thresh = cmd->add_option("--pw-threshold", pw_threshold, "PW skip threshold t");
        o_aux = cmd->add_option("--strong-aux-weight", strong_aux_weight,
                                "supervised weight on strong samples in stages 2-3");
        o_clip = cmd->add_option("--clip-norm", clip_norm, "gradient clipping norm");
        o_batch = cmd->add_option("--batch-size", batch_size, "mini-batch size b");
        o_epochs = cmd->add_option("--epochs", epochs, "supervised stage epochs T");
        o_k = cmd->add_option("--k", k, "training samples K per distribution");
        o_patience = cmd->add_option("--patience", patience, "early stopping patience");
        o_rounds = cmd->add_option("--rounds", rounds, "iterative rounds R");
        o_stage = cmd->add_option("--stage-epochs", stage_epochs, "epochs per half-round");
        o_joint = cmd->add_option("--joint-epochs", joint_epochs, "joint stage epochs");
        o_head = cmd->add_option("--head-epochs", head_epochs, "conditional fine-tune epochs");
        o_evalk = cmd->add_option("--eval-samples", eval_samples,
                                  "samples for validation scoring (0: use K)");
        o_augment = cmd->add_option("--augment", augment, "none | per_epoch | pre_expanded")
                        ->check(CLI::IsMember({"none", "per_epoch", "pre_expanded"}));
    }

    void apply(dcpose::training::TrainConfig& tc) const {
        if (*o_eta) tc.eta = eta;
        if (*o_momentum) tc.momentum = momentum;
        if (*o_decay) tc.weight_decay = weight_decay;
        if (*o_gamma) tc.gamma = gamma;
        if (*o_thresh) tc.pw_threshold = pw_threshold;
        if (*o_aux) tc.strong_aux_weight = strong_aux_weight;
        if (*o_clip) tc.clip_norm = clip_norm;
        if (*o_batch) tc.batch_size = batch_size;
        if (*o_epochs) tc.epochs = epochs;
        if (*o_k) tc.K = k;
        if (*o_patience) tc.patience = patience;
        if (*o_rounds) tc.rounds = rounds;
        if (*o_stage) tc.stage_epochs = stage_epochs;
        if (*o_joint) tc.joint_epochs = joint_epochs;
        if (*o_head) tc.head_epochs = head_epochs;
        if (*o_evalk) tc.eval_samples = eval_samples;
        if (*o_augment) {
            if (augment == "none") tc.augment = dcpose::training::AugmentMode::none;
            else if (augment == "per_epoch") tc.augment = dcpose::training::AugmentMode::per_epoch;
            else tc.augment = dcpose::training::AugmentMode::pre_expanded;
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic pose prediction from diverse supervision"};
    app.set_config("--config", "", "key = value config file; flags override file values");
    app.require_subcommand(1);

    RunConfig cfg;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset archive");
    gen->add_option("--out", cfg.out, "archive path")->required();
    gen->add_option("--seed", cfg.seed, "master seed");
    gen->add_option("--split", cfg.split, "strong-annotation fraction (0.25 | 0.5 | 0.75 | custom)");
    gen->add_option("--actions", cfg.actions, "number of action classes");
    gen->add_option("--per-action", cfg.per_action, "samples per action");
    gen->add_option("--image-size", cfg.image_size, "square image size in pixels");
    gen->add_option("--jitter", cfg.jitter, "multiplier on prototype angle jitter");

    auto* train = app.add_subcommand("train", "train a method on a dataset archive");
    train->add_option("--dataset", cfg.dataset, "dataset archive")->required();
    train->add_option("--out", cfg.out, "output directory")->required();
    train->add_option("--method", cfg.method, "fs | pw | prob_iterative | prob_joint")
        ->check(CLI::IsMember({"fs", "pw", "prob_iterative", "prob_joint"}));
    train->add_option("--seed", cfg.seed, "master seed");
    TrainOverrides overrides;
    overrides.attach(train);

    auto add_inference_options = [&](CLI::App* cmd) {
        cmd->add_option("--dataset", cfg.dataset, "dataset archive")->required();
        cmd->add_option("--checkpoint", cfg.checkpoint, "network checkpoint")->required();
        cmd->add_option("--out", cfg.out, "output directory")->required();
        cmd->add_option("--seed", cfg.seed, "master seed");
        cmd->add_option("--k", cfg.k_eval, "samples per image at inference");
        cmd->add_flag("--use-actions", cfg.use_actions,
                      "decode a conditional checkpoint with the dataset's action labels");
        cmd->add_option("--decoder", cfg.decoder_override, "override: meu | zero_noise")
            ->check(CLI::IsMember({"meu", "zero_noise"}));
        cmd->add_flag("--svg", cfg.write_svg, "also write SVG artifacts");
    };

    auto* evaluate = app.add_subcommand("evaluate", "PCKh table on the test split");
    add_inference_options(evaluate);
    evaluate->add_option("--tau", cfg.tau, "PCKh threshold");

    auto* predict = app.add_subcommand("predict", "pointwise predictions for the test split");
    add_inference_options(predict);
    predict->add_option("--frame-threshold", cfg.frame_threshold,
                        "expected-loss cut for green/blue SVG frames");
    predict->add_option("--svg-limit", cfg.svg_limit, "how many sample SVGs to write");

    auto* uncert = app.add_subcommand("report-uncertainty", "per-joint spread of the sampler");
    add_inference_options(uncert);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            cmd_gen_data(cfg);
        } else if (train->parsed()) {
            cfg.train = dcpose::run::method_defaults(cfg.method);
            overrides.apply(cfg.train);
            cmd_train(cfg);
        } else if (evaluate->parsed()) {
            cmd_evaluate(cfg);
        } else if (predict->parsed()) {
            cmd_predict(cfg);
        } else if (uncert->parsed()) {
            cmd_report_uncertainty(cfg);
        }
    } catch (const dcpose::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const dcpose::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const dcpose::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
