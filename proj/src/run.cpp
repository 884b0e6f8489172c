#include "dcpose/run.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dcpose/dataset_io.hpp"
#include "dcpose/errors.hpp"
#include "dcpose/eval.hpp"
#include "dcpose/models.hpp"
#include "dcpose/svg.hpp"

namespace fs = std::filesystem;

namespace dcpose::run {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* augment_name(training::AugmentMode m) {
    switch (m) {
        case training::AugmentMode::none: return "none";
        case training::AugmentMode::per_epoch: return "per_epoch";
        case training::AugmentMode::pre_expanded: return "pre_expanded";
    }
    return "per_epoch";
}

void echo_config(const RunConfig& cfg, const training::TrainConfig& tc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << "[run]\n";
    out << "method = " << cfg.method << "\n";
    out << "dataset = " << cfg.dataset << "\n";
    out << "out = " << cfg.out << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "split = " << fmt(cfg.split) << "\n";
    out << "k_eval = " << cfg.k_eval << "\n";
    out << "tau = " << fmt(cfg.tau) << "\n";
    out << "[train]\n";
    out << "eta = " << fmt(tc.eta) << "\n";
    out << "momentum = " << fmt(tc.momentum) << "\n";
    out << "weight_decay = " << fmt(tc.weight_decay) << "\n";
    out << "batch_size = " << tc.batch_size << "\n";
    out << "epochs = " << tc.epochs << "\n";
    out << "k = " << tc.K << "\n";
    out << "gamma = " << fmt(tc.gamma) << "\n";
    out << "pw_threshold = " << fmt(tc.pw_threshold) << "\n";
    out << "patience = " << tc.patience << "\n";
    out << "strong_aux_weight = " << fmt(tc.strong_aux_weight) << "\n";
    out << "rounds = " << tc.rounds << "\n";
    out << "stage_epochs = " << tc.stage_epochs << "\n";
    out << "joint_epochs = " << tc.joint_epochs << "\n";
    out << "head_epochs = " << tc.head_epochs << "\n";
    out << "eval_samples = " << tc.eval_samples << "\n";
    out << "clip_norm = " << fmt(tc.clip_norm) << "\n";
    out << "augment = " << augment_name(tc.augment) << "\n";
    out << "belief_rows = " << tc.render.rows << "\n";
    out << "belief_cols = " << tc.render.cols << "\n";
    out << "belief_sigma = " << fmt(tc.render.sigma) << "\n";
}

}  // namespace

training::TrainConfig method_defaults(const std::string& method) {
    training::TrainConfig tc;
    if (method == "fs") {
        tc.gamma = 0.0;
        tc.weight_decay = 0.001;
        tc.epochs = 100;
    } else if (method == "pw") {
        tc.gamma = 0.0;
        tc.weight_decay = 0.0001;
    } else if (method == "prob_iterative" || method == "prob_joint") {
        tc.gamma = 0.5;
        tc.weight_decay = 0.01;
    } else {
        throw UsageError("unknown method: " + method);
    }
    return tc;
}

void cmd_gen_data(const RunConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("gen-data requires --out <file>");
    auto corpus = synth::gen_dataset(cfg.actions, cfg.per_action, cfg.image_size, cfg.jitter,
                                     cfg.seed);
    const auto splits = synth::make_splits(corpus, {0.7, 0.15, 0.15}, cfg.seed);
    auto data = synth::make_diverse(std::move(corpus), splits, cfg.split, cfg.seed);
    if (const auto dir = fs::path(cfg.out).parent_path(); !dir.empty())
        fs::create_directories(dir);
    dataset_io::save_dataset(data, cfg.out);
    std::printf("dataset %s\n", cfg.out.c_str());
    std::printf("  actions %d, samples %zu (%d per action), image %dx%d\n",
                data.corpus.num_actions, data.corpus.samples.size(), cfg.per_action,
                data.corpus.image_height, data.corpus.image_width);
    std::printf("  train %zu (strong %zu, weak %zu), val %zu, test %zu\n",
                data.splits.train.size(), data.strong.size(), data.weak.size(),
                data.splits.val.size(), data.splits.test.size());
}

void cmd_train(const RunConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("train requires --out <dir>");
    training::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.validate();
    const auto data = dataset_io::load_dataset(cfg.dataset);
    fs::create_directories(cfg.out);
    echo_config(cfg, tc, cfg.out + "/config.ini");

    training::TrainingLog log;
    if (cfg.method == "fs") {
        auto net = training::train_fs_baseline(data, tc, log);
        net::save_checkpoint(net.params, "prediction", "zero_noise", tc.seed,
                             cfg.out + "/prediction_fs.ckpt");
    } else if (cfg.method == "pw") {
        auto pred = models::init_prediction(data, tc, &log);
        auto cond = models::init_conditional(pred, data, tc, &log);
        training::train_pw_baseline(pred, cond, data, tc, log);
        net::save_checkpoint(pred.params, "prediction", "meu", tc.seed,
                             cfg.out + "/prediction_pw.ckpt");
        net::save_checkpoint(cond.params, "conditional", "meu", tc.seed,
                             cfg.out + "/conditional_pw.ckpt");
    } else if (cfg.method == "prob_iterative" || cfg.method == "prob_joint") {
        auto pred = models::init_prediction(data, tc, &log);
        auto cond = models::init_conditional(pred, data, tc, &log);
        training::train_iterative(pred, cond, data, tc, tc.rounds, log);
        net::save_checkpoint(pred.params, "prediction", "meu", tc.seed,
                             cfg.out + "/prediction_iterative.ckpt");
        net::save_checkpoint(cond.params, "conditional", "meu", tc.seed,
                             cfg.out + "/conditional_iterative.ckpt");
        if (cfg.method == "prob_joint") {
            training::train_joint(pred, cond, data, tc, log);
            net::save_checkpoint(pred.params, "prediction", "meu", tc.seed,
                                 cfg.out + "/prediction_joint.ckpt");
            net::save_checkpoint(cond.params, "conditional", "meu", tc.seed,
                                 cfg.out + "/conditional_joint.ckpt");
        }
    } else {
        throw UsageError("unknown method: " + cfg.method);
    }
    training::save_log_csv(log, cfg.out + "/log.csv");
    std::printf("wrote %s/log.csv\n", cfg.out.c_str());
}

namespace {

struct Loaded {
    synth::DiverseDataset data;
    net::Checkpoint ck;
    eval::Decoder decoder;
    bool use_actions;
};

Loaded load_for_inference(const RunConfig& cfg) {
    Loaded l{dataset_io::load_dataset(cfg.dataset), net::load_checkpoint(cfg.checkpoint),
             eval::Decoder::meu, cfg.use_actions};
    if (l.ck.role == "conditional" && !l.use_actions)
        throw UsageError("a conditional checkpoint needs --use-actions for prediction-mode runs");
    l.decoder = cfg.decoder_override.empty() ? eval::decoder_from_string(l.ck.decoder)
                                             : eval::decoder_from_string(cfg.decoder_override);
    return l;
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("evaluate requires --out <dir>");
    auto l = load_for_inference(cfg);
    fs::create_directories(cfg.out);
    const auto ev = eval::evaluate(l.ck.params, l.data, l.data.splits.test, cfg.k_eval, cfg.tau,
                                   cfg.train.render, substream_seed(cfg.seed, "eval"), l.decoder,
                                   l.use_actions);
    {
        std::ofstream out(cfg.out + "/pckh.csv", std::ios::binary);
        if (!out) throw DataError("cannot write pckh.csv");
        out << "tau";
        for (const auto& name : ev.group_names) out << ',' << name;
        out << "\n" << fmt(cfg.tau);
        for (double v : ev.group_percent) out << ',' << fmt(v);
        out << "\n";
    }
    {
        std::ofstream out(cfg.out + "/per_joint.csv", std::ios::binary);
        out << "joint,name,accuracy\n";
        for (std::size_t j = 0; j < ev.pckh.per_joint.size(); ++j)
            out << j << ',' << l.data.corpus.skeleton.joint_names[j] << ','
                << fmt(100.0 * ev.pckh.per_joint[j]) << "\n";
    }
    {
        const auto curve = eval::pckh_curve(ev, l.data);
        std::ofstream out(cfg.out + "/pckh_curve.csv", std::ios::binary);
        out << "distance,accuracy\n";
        for (const auto& [d, a] : curve) out << fmt(d) << ',' << fmt(100.0 * a) << "\n";
    }
    if (cfg.write_svg) {
        std::vector<double> fracs(ev.group_percent.size());
        for (std::size_t i = 0; i < fracs.size(); ++i) fracs[i] = ev.group_percent[i] / 100.0;
        svg::write_file(cfg.out + "/pckh_bars.svg", svg::bar_chart(ev.group_names, fracs));
    }
    for (std::size_t i = 0; i < ev.group_names.size(); ++i)
        std::printf("%-6s %6.2f\n", ev.group_names[i].c_str(), ev.group_percent[i]);
}

void cmd_predict(const RunConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("predict requires --out <dir>");
    auto l = load_for_inference(cfg);
    fs::create_directories(cfg.out);
    const std::uint64_t eval_seed = substream_seed(cfg.seed, "eval");
    const auto decoded = eval::decode_split(l.ck.params, l.data, l.data.splits.test, cfg.k_eval,
                                            cfg.train.render, eval_seed, l.decoder, l.use_actions);
    {
        std::ofstream out(cfg.out + "/predictions.csv", std::ios::binary);
        if (!out) throw DataError("cannot write predictions.csv");
        out << "index,action,expected_loss";
        for (const auto& name : l.data.corpus.skeleton.joint_names)
            out << ',' << name << "_u," << name << "_v";
        out << "\n";
        for (std::size_t i = 0; i < decoded.size(); ++i) {
            const int idx = l.data.splits.test[i];
            out << idx << ',' << l.data.corpus.samples[idx].action << ','
                << fmt(decoded[i].expected_loss);
            for (double v : decoded[i].pose.xy) out << ',' << fmt(v);
            out << "\n";
        }
    }
    if (cfg.write_svg && l.decoder == eval::Decoder::meu) {
        const int limit = std::min<int>(cfg.svg_limit, static_cast<int>(decoded.size()));
        for (int i = 0; i < limit; ++i) {
            const int idx = l.data.splits.test[i];
            const synth::Sample& s = l.data.corpus.samples[idx];
            Rng rng(child_seed(eval_seed, static_cast<std::uint64_t>(idx)));
            const int action = l.ck.params.cfg.num_heads > 1 ? s.action : -1;
            const auto set = models::sample_poses(l.ck.params, s.image, action, cfg.k_eval, rng);
            svg::write_file(cfg.out + "/sample_" + std::to_string(idx) + ".svg",
                            svg::superimposed(l.data.corpus.skeleton, set.poses,
                                              decoded[i].expected_loss, cfg.frame_threshold));
        }
    }
    std::printf("wrote %s/predictions.csv (%zu rows)\n", cfg.out.c_str(), decoded.size());
}

void cmd_report_uncertainty(const RunConfig& cfg) {
    if (cfg.out.empty()) throw UsageError("report-uncertainty requires --out <dir>");
    auto l = load_for_inference(cfg);
    fs::create_directories(cfg.out);
    const auto rep = eval::uncertainty_report(l.ck.params, l.data, l.data.splits.test, cfg.k_eval,
                                              substream_seed(cfg.seed, "eval"));
    {
        std::ofstream out(cfg.out + "/uncertainty.csv", std::ios::binary);
        if (!out) throw DataError("cannot write uncertainty.csv");
        out << "joint,name,mean_pairwise_distance,entropy\n";
        for (std::size_t j = 0; j < rep.entropy.size(); ++j)
            out << j << ',' << l.data.corpus.skeleton.joint_names[j] << ','
                << fmt(rep.mean_pairwise[j]) << ',' << fmt(rep.entropy[j]) << "\n";
    }
    if (cfg.write_svg) {
        // Circle radius scales linearly with the entropy proxy between a
        // configured minimum and maximum; a flat profile stays at the minimum.
        const double r_min = 0.015, r_max = 0.09;
        double lo = rep.entropy[0], hi = rep.entropy[0];
        for (double e : rep.entropy) {
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        std::vector<double> radii(rep.entropy.size(), r_min);
        if (hi > lo) {
            for (std::size_t j = 0; j < radii.size(); ++j)
                radii[j] = r_min + (rep.entropy[j] - lo) / (hi - lo) * (r_max - r_min);
        }
        const int first_test = l.data.splits.test[0];
        const Pose& canvas = l.data.corpus.samples[first_test].pose;
        svg::write_file(cfg.out + "/uncertainty.svg",
                        svg::figure(l.data.corpus.skeleton, canvas, &radii));
    }
    std::printf("wrote %s/uncertainty.csv (%zu joints)\n", cfg.out.c_str(), rep.entropy.size());
}

}  // namespace dcpose::run
