#include "dcpose/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dcpose/errors.hpp"
#include "dcpose/parallel.hpp"
#include "dcpose/objective.hpp"

namespace dcpose::training {

void TrainConfig::validate() const {
    if (!(eta > 0.0)) throw DataError("train: eta must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("train: momentum must lie in [0,1)");
    if (!(weight_decay >= 0.0)) throw DataError("train: weight decay must be nonnegative");
    if (batch_size < 1) throw DataError("train: batch_size must be >= 1");
    if (K < 1) throw DataError("train: K must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DataError("train: gamma must lie in [0,1]");
    if (patience < 1) throw DataError("train: patience must be >= 1");
    if (epochs < 0 || stage_epochs < 0 || joint_epochs < 0 || head_epochs < 0)
        throw DataError("train: epoch counts must be nonnegative");
    if (rounds < 1) throw DataError("train: rounds must be >= 1");
    if (!(clip_norm > 0.0)) throw DataError("train: clip_norm must be positive");
    if (!(strong_aux_weight >= 0.0)) throw DataError("train: strong_aux_weight must be >= 0");
}

void sgd_step(std::vector<double>& params, std::span<const double> grads, OptState& state,
              double eta, double momentum, double weight_decay) {
    if (grads.size() != params.size()) throw DataError("sgd_step: shape mismatch");
    if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
    if (state.velocity.size() != params.size()) throw DataError("sgd_step: optimizer state mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw NumericError("non-finite gradient; aborting step");
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& v = state.velocity[i];
        v = momentum * v - eta * (grads[i] + weight_decay * params[i]);
        params[i] += v;
    }
}

std::size_t early_stop_best(std::span<const double> val_curve, int patience) {
    if (val_curve.empty()) throw DataError("early_stop: empty log");
    if (patience < 1) throw DataError("early_stop: patience must be >= 1");
    std::size_t best = 0;
    for (std::size_t e = 1; e < val_curve.size(); ++e) {
        if (val_curve[e] > val_curve[best]) best = e;
        else if (e - best >= static_cast<std::size_t>(patience)) break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Log CSV

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_tok(const std::string& tok) {
    if (tok == "nan") return std::nan("");
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc()) throw DataError("log: bad number '" + tok + "'");
    return v;
}

}  // namespace

void save_log_csv(const TrainingLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write log: " + path);
    out << "epoch,stage,objective,val_pckh,div_ww,div_tt,div_wt\n";
    for (const auto& r : log) {
        out << r.epoch << ',' << r.stage << ',' << fmt(r.objective) << ',' << fmt(r.val_pckh)
            << ',' << fmt(r.div_ww) << ',' << fmt(r.div_tt) << ',' << fmt(r.div_wt) << "\n";
    }
}

TrainingLog load_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read log: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty log: " + path);
    TrainingLog log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        LogRow r;
        std::getline(ss, tok, ',');
        r.epoch = std::stoi(tok);
        std::getline(ss, r.stage, ',');
        std::getline(ss, tok, ',');
        r.objective = parse_double_tok(tok);
        std::getline(ss, tok, ',');
        r.val_pckh = parse_double_tok(tok);
        std::getline(ss, tok, ',');
        r.div_ww = parse_double_tok(tok);
        std::getline(ss, tok, ',');
        r.div_tt = parse_double_tok(tok);
        std::getline(ss, tok, ',');
        r.div_wt = parse_double_tok(tok);
        log.push_back(r);
    }
    return log;
}

// ---------------------------------------------------------------------------
// Step engine

namespace {

enum class StepKind { supervised, theta, w, joint, pw_theta, pw_w };

bool trains_w(StepKind k) { return k == StepKind::w || k == StepKind::joint || k == StepKind::pw_w; }
bool trains_t(StepKind k) {
    return k == StepKind::theta || k == StepKind::joint || k == StepKind::pw_theta;
}
bool is_pw(StepKind k) { return k == StepKind::pw_theta || k == StepKind::pw_w; }

struct NetSamples {
    net::TrunkCache trunk;
    std::vector<net::HeadCache> heads;
    objective::SampleSet set;
};

// Mirrors models::sample_poses (all K noise vectors drawn first, trunk reused)
// but keeps the caches for the backward pass.
NetSamples draw_samples(const net::Params& params, const Image& image, int action, int k,
                        std::uint64_t noise_seed) {
    Rng rng(noise_seed);
    std::vector<std::vector<double>> zs(k);
    for (int i = 0; i < k; ++i) zs[i] = rng.uniform_vector(params.cfg.noise_dim);
    NetSamples ns;
    ns.trunk = net::forward_trunk(params, image);
    ns.heads.resize(k);
    ns.set.poses.resize(k);
    ns.set.source = params.cfg.num_heads > 1 ? objective::Source::conditional
                                             : objective::Source::prediction;
    for (int i = 0; i < k; ++i) {
        auto [pose, cache] = net::forward_head(params, ns.trunk, zs[i], action);
        ns.set.poses[i] = std::move(pose);
        ns.heads[i] = std::move(cache);
    }
    return ns;
}

void backprop_samples(const net::Params& params, const NetSamples& ns,
                      const std::vector<std::vector<double>>& pose_grads,
                      std::vector<double>& grad) {
    std::vector<double> dtrunk(ns.trunk.output.size(), 0.0);
    for (std::size_t i = 0; i < ns.heads.size(); ++i)
        net::backward_head_accum(params, ns.trunk, ns.heads[i], pose_grads[i], grad, dtrunk);
    net::backward_trunk_accum(params, ns.trunk, dtrunk, grad);
}

void add_scaled(std::vector<std::vector<double>>& into,
                const std::vector<std::vector<double>>& from, double scale) {
    for (std::size_t i = 0; i < into.size(); ++i)
        for (std::size_t j = 0; j < into[i].size(); ++j) into[i][j] += scale * from[i][j];
}

struct ExampleResult {
    std::vector<double> grad_w, grad_t;
    bool skipped = false;
};

void compute_example(StepKind kind, const net::Params* sup, const net::Params* wp,
                     const net::Params* tp, const synth::Sample& ex, const TrainConfig& cfg,
                     std::uint64_t noise_w_seed, std::uint64_t noise_t_seed, ExampleResult& out) {
    if (kind == StepKind::supervised) {
        const net::Params& p = *sup;
        const int action = p.cfg.num_heads > 1 ? ex.action : -1;
        const NetSamples ns = draw_samples(p, ex.image, action, cfg.K, noise_w_seed);
        auto grads = objective::supervised_pose_grads(ns.set, ex.pose, cfg.gamma, cfg.render);
        out.grad_w.assign(p.values.size(), 0.0);
        backprop_samples(p, ns, grads, out.grad_w);
        return;
    }

    const NetSamples nsw = draw_samples(*wp, ex.image, -1, cfg.K, noise_w_seed);
    const NetSamples nst = draw_samples(*tp, ex.image, ex.action, cfg.K, noise_t_seed);

    if (is_pw(kind) && !ex.has_pose) {
        // Self-paced rule: learn from a weak example only while the two
        // networks roughly agree on it.
        const double cross = objective::div_estimate(nsw.set, nst.set, cfg.render);
        if (cross > cfg.pw_threshold) {
            out.skipped = true;
            return;
        }
    }

    objective::Objective which;
    double disc_gamma = cfg.gamma;
    switch (kind) {
        case StepKind::theta: which = objective::Objective::theta; break;
        case StepKind::w: which = objective::Objective::w; break;
        case StepKind::joint: which = objective::Objective::joint; break;
        case StepKind::pw_theta:  // cross-diversity only
            which = objective::Objective::theta;
            disc_gamma = 1.0;
            break;
        case StepKind::pw_w:
            which = objective::Objective::w;
            disc_gamma = 0.0;
            break;
        default: throw DataError("unknown step kind");
    }
    auto grads = objective::objective_pose_grads(nsw.set, nst.set, disc_gamma, cfg.render, which);

    if (ex.has_pose && cfg.strong_aux_weight > 0.0) {
        if (trains_w(kind))
            add_scaled(grads.w, objective::supervised_pose_grads(nsw.set, ex.pose, cfg.gamma, cfg.render),
                       cfg.strong_aux_weight);
        if (trains_t(kind))
            add_scaled(grads.theta,
                       objective::supervised_pose_grads(nst.set, ex.pose, cfg.gamma, cfg.render),
                       cfg.strong_aux_weight);
    }

    if (trains_w(kind)) {
        out.grad_w.assign(wp->values.size(), 0.0);
        backprop_samples(*wp, nsw, grads.w, out.grad_w);
    }
    if (trains_t(kind)) {
        out.grad_t.assign(tp->values.size(), 0.0);
        backprop_samples(*tp, nst, grads.theta, out.grad_t);
    }
}

void clip_gradient(std::vector<double>& grad, double clip_norm) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > clip_norm) {
        const double scale = clip_norm / norm;
        for (double& g : grad) g *= scale;
    }
}

// One pass over the shuffled example pool. Examples are computed in parallel
// into per-example slots and merged in index order, so the result does not
// depend on the thread count. Seed derivation (documented contract):
//   stage_seed = substream_seed(cfg.seed, stage_tag)
//   epoch_seed = child_seed(stage_seed, epoch)          (epoch is 1-based)
//   shuffle    = Rng(child_seed(epoch_seed, 0))
//   example p  = ex = child_seed(epoch_seed, 16 + p)    (p = position in epoch)
//                augment Rng(child_seed(ex, 0)),
//                w noise child_seed(ex, 1), theta noise child_seed(ex, 2)
void run_epoch(StepKind kind, net::Params* sup, net::Params* wp, net::Params* tp,
               const std::vector<const synth::Sample*>& items, const synth::Skeleton& skel,
               const TrainConfig& cfg, std::uint64_t stage_seed, int epoch, OptState* opt_w,
               OptState* opt_t) {
    // grad_w targets the supervised net when there is one, the prediction net otherwise
    net::Params* gw_target = kind == StepKind::supervised ? sup : wp;
    const std::uint64_t epoch_seed = child_seed(stage_seed, static_cast<std::uint64_t>(epoch));
    std::vector<int> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    {
        Rng shuffle_rng(child_seed(epoch_seed, 0));
        shuffle_rng.shuffle(order);
    }

    const int n = static_cast<int>(order.size());
    for (int start = 0; start < n; start += cfg.batch_size) {
        const int b = std::min(cfg.batch_size, n - start);
        std::vector<ExampleResult> results(b);
        ExceptionCollector guard;
#pragma omp parallel for schedule(dynamic, 1)
        for (int i = 0; i < b; ++i) {
            guard.run([&, i] {
            const int pos = start + i;
            const std::uint64_t ex_seed = child_seed(epoch_seed, 16 + static_cast<std::uint64_t>(pos));
            const synth::Sample* ex = items[order[pos]];
            synth::Sample augmented;
            if (cfg.augment == AugmentMode::per_epoch) {
                Rng aug_rng(child_seed(ex_seed, 0));
                augmented = synth::augment(*ex, skel, aug_rng);
                ex = &augmented;
            }
            compute_example(kind, sup, wp, tp, *ex, cfg, child_seed(ex_seed, 1),
                            child_seed(ex_seed, 2), results[i]);
            });
        }
        guard.rethrow();

        int used = 0;
        std::vector<double> gw, gt;
        for (int i = 0; i < b; ++i) {
            if (results[i].skipped) continue;
            ++used;
            if (!results[i].grad_w.empty()) {
                if (gw.empty()) gw.assign(results[i].grad_w.size(), 0.0);
                for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += results[i].grad_w[j];
            }
            if (!results[i].grad_t.empty()) {
                if (gt.empty()) gt.assign(results[i].grad_t.size(), 0.0);
                for (std::size_t j = 0; j < gt.size(); ++j) gt[j] += results[i].grad_t[j];
            }
        }
        if (used == 0) continue;
        const double inv = 1.0 / used;
        if (!gw.empty()) {
            for (double& g : gw) g *= inv;
            clip_gradient(gw, cfg.clip_norm);
            sgd_step(gw_target->values, gw, *opt_w, cfg.eta, cfg.momentum, cfg.weight_decay);
        }
        if (!gt.empty()) {
            for (double& g : gt) g *= inv;
            clip_gradient(gt, cfg.clip_norm);
            sgd_step(tp->values, gt, *opt_t, cfg.eta, cfg.momentum, cfg.weight_decay);
        }
    }
}

// ---------------------------------------------------------------------------
// Logging helpers

struct Probe {
    double disc = std::nan("");
    double ww = std::nan("");
    double tt = std::nan("");
    double wt = std::nan("");
};

Probe probe_metrics(const net::Params* wp, const net::Params* tp,
                    const synth::DiverseDataset& data, const TrainConfig& cfg) {
    const std::size_t count = std::min<std::size_t>(48, data.splits.train.size());
    if (count == 0) return {};
    const std::uint64_t probe_seed = substream_seed(cfg.seed, "probe");
    const int n = static_cast<int>(count);
    std::vector<double> ww(n, 0.0), tt(n, 0.0), wt(n, 0.0);
    ExceptionCollector guard;
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
        const int idx = data.splits.train[i];
        const synth::Sample& s = data.corpus.samples[idx];
        objective::SampleSet wset, tset;
        if (wp) {
            Rng rng(child_seed(probe_seed, static_cast<std::uint64_t>(idx) * 2));
            wset = models::sample_poses(*wp, s.image, -1, cfg.K, rng);
            ww[i] = objective::div_estimate(wset, wset, cfg.render);
        }
        if (tp) {
            Rng rng(child_seed(probe_seed, static_cast<std::uint64_t>(idx) * 2 + 1));
            tset = models::sample_poses(*tp, s.image, s.action, cfg.K, rng);
            tt[i] = objective::div_estimate(tset, tset, cfg.render);
        }
        if (wp && tp) wt[i] = objective::div_estimate(wset, tset, cfg.render);
        });
    }
    guard.rethrow();
    auto mean = [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };
    Probe p;
    if (wp) p.ww = mean(ww);
    if (tp) p.tt = mean(tt);
    if (wp && tp) {
        p.wt = mean(wt);
        p.disc = cfg.gamma * (p.wt - p.ww) + (1.0 - cfg.gamma) * (p.wt - p.tt);
    }
    return p;
}

double val_score(const net::Params& params, const synth::DiverseDataset& data,
                 const TrainConfig& cfg, Decoder decoder) {
    if (data.splits.val.empty()) return std::nan("");
    const bool use_actions = params.cfg.num_heads > 1;
    const auto ev = eval::evaluate(params, data, data.splits.val, cfg.eval_k(), 0.5, cfg.render,
                                   substream_seed(cfg.seed, "eval"), decoder, use_actions);
    return 100.0 * ev.pckh.total;
}

enum class Scored { w, t };

struct StageDriver {
    StepKind kind;
    net::Params* sup = nullptr;  // the single net of a supervised stage
    net::Params* wp = nullptr;   // prediction-role net (probe logging)
    net::Params* tp = nullptr;   // conditional-role net
    const synth::DiverseDataset* data = nullptr;
    const TrainConfig* cfg = nullptr;
    std::string tag;
    Scored scored = Scored::w;
    Decoder val_decoder = Decoder::meu;
    bool early_stop = false;

    std::vector<net::Params*> trained() const {
        if (kind == StepKind::supervised) return {sup};
        std::vector<net::Params*> t;
        if (trains_w(kind)) t.push_back(wp);
        if (trains_t(kind)) t.push_back(tp);
        return t;
    }

    void run(const std::vector<int>& example_indices, int epochs, TrainingLog& log) {
        cfg->validate();
        const std::uint64_t stage_seed = substream_seed(cfg->seed, tag);
        const synth::Skeleton& skel = data->corpus.skeleton;

        // Fixed pre-expansion keeps the four augmented variants of every
        // example across all epochs; the default regenerates augmentation
        // per epoch inside run_epoch.
        std::vector<synth::Sample> expanded;
        std::vector<const synth::Sample*> items;
        if (cfg->augment == AugmentMode::pre_expanded) {
            const double turn = 3.14159265358979323846 / 6.0;
            for (int idx : example_indices) {
                const synth::Sample& base = data->corpus.samples[idx];
                expanded.push_back(base);
                expanded.push_back(synth::augment_with(base, skel, turn, false));
                expanded.push_back(synth::augment_with(base, skel, -turn, false));
                expanded.push_back(synth::augment_with(base, skel, 0.0, true));
            }
            for (const auto& s : expanded) items.push_back(&s);
        } else {
            for (int idx : example_indices) items.push_back(&data->corpus.samples[idx]);
        }
        if (items.empty()) throw DataError("training stage '" + tag + "' has no examples");

        OptState opt_w, opt_t;
        const net::Params* scored_params = scored == Scored::w ? (wp ? wp : sup) : (tp ? tp : sup);

        auto emit = [&](int epoch) {
            const Probe p = probe_metrics(wp, tp, *data, *cfg);
            LogRow row;
            row.epoch = epoch;
            row.stage = tag;
            row.objective = p.disc;
            row.val_pckh = val_score(*scored_params, *data, *cfg, val_decoder);
            row.div_ww = p.ww;
            row.div_tt = p.tt;
            row.div_wt = p.wt;
            log.push_back(row);
            return row.val_pckh;
        };

        double best_val = emit(0);
        const bool stopping = early_stop && !data->splits.val.empty();
        int best_epoch = 0;
        const auto nets = trained();
        std::vector<net::Params> snapshot;
        if (stopping)
            for (auto* n : nets) snapshot.push_back(*n);

        for (int e = 1; e <= epochs; ++e) {
            run_epoch(kind, sup, wp, tp, items, skel, *cfg, stage_seed, e, &opt_w, &opt_t);
            const double v = emit(e);
            if (!stopping) continue;
            if (v > best_val) {
                best_val = v;
                best_epoch = e;
                for (std::size_t i = 0; i < nets.size(); ++i) snapshot[i] = *nets[i];
            } else if (e - best_epoch >= cfg->patience) {
                break;
            }
        }
        if (stopping)
            for (std::size_t i = 0; i < nets.size(); ++i) *nets[i] = std::move(snapshot[i]);
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Public stages

void train_supervised(net::Params& params, const synth::DiverseDataset& data,
                      const std::vector<int>& examples, const TrainConfig& cfg, int epochs,
                      Decoder val_decoder, const std::string& tag, TrainingLog& log) {
    if (examples.empty()) throw DataError("supervised training: empty example set");
    for (int idx : examples)
        if (!data.corpus.samples[idx].has_pose)
            throw DataError("supervised training requires pose annotations");
    StageDriver d;
    d.kind = StepKind::supervised;
    d.sup = &params;
    if (params.cfg.num_heads > 1) {
        d.tp = &params;
        d.scored = Scored::t;
    } else {
        d.wp = &params;
        d.scored = Scored::w;
    }
    d.data = &data;
    d.cfg = &cfg;
    d.tag = tag;
    d.val_decoder = val_decoder;
    d.early_stop = true;
    d.run(examples, epochs, log);
}

void train_theta_stage(const models::PredictionNet& pred, models::ConditionalNet& cond,
                       const synth::DiverseDataset& data, const TrainConfig& cfg,
                       const std::string& tag, TrainingLog& log) {
    net::Params frozen = pred.params;  // w stays bit-identical by construction
    StageDriver d;
    d.kind = StepKind::theta;
    d.wp = &frozen;
    d.tp = &cond.params;
    d.data = &data;
    d.cfg = &cfg;
    d.tag = tag;
    d.scored = Scored::t;
    d.run(data.splits.train, cfg.stage_epochs, log);
}

void train_w_stage(models::PredictionNet& pred, const models::ConditionalNet& cond,
                   const synth::DiverseDataset& data, const TrainConfig& cfg,
                   const std::string& tag, TrainingLog& log) {
    net::Params frozen = cond.params;
    StageDriver d;
    d.kind = StepKind::w;
    d.wp = &pred.params;
    d.tp = &frozen;
    d.data = &data;
    d.cfg = &cfg;
    d.tag = tag;
    d.scored = Scored::w;
    d.run(data.splits.train, cfg.stage_epochs, log);
}

void train_iterative(models::PredictionNet& pred, models::ConditionalNet& cond,
                     const synth::DiverseDataset& data, const TrainConfig& cfg, int rounds,
                     TrainingLog& log) {
    if (rounds < 1) throw DataError("train_iterative: rounds must be >= 1");
    for (int r = 1; r <= rounds; ++r) {
        train_theta_stage(pred, cond, data, cfg, "iter" + std::to_string(r) + "_theta", log);
        train_w_stage(pred, cond, data, cfg, "iter" + std::to_string(r) + "_w", log);
    }
}

void train_joint(models::PredictionNet& pred, models::ConditionalNet& cond,
                 const synth::DiverseDataset& data, const TrainConfig& cfg, TrainingLog& log) {
    StageDriver d;
    d.kind = StepKind::joint;
    d.wp = &pred.params;
    d.tp = &cond.params;
    d.data = &data;
    d.cfg = &cfg;
    d.tag = "joint";
    d.scored = Scored::w;
    d.early_stop = true;  // the warm-start state enters the best tracking at epoch 0
    d.run(data.splits.train, cfg.joint_epochs, log);
}

models::PredictionNet train_fs_baseline(const synth::DiverseDataset& data, const TrainConfig& cfg,
                                        TrainingLog& log) {
    if (data.strong.empty()) throw DataError("train_fs_baseline: empty strong set");
    models::PredictionNet net;
    net.params = net::init_params(
        models::default_config(data.corpus.image_height, data.corpus.image_width,
                               data.corpus.skeleton.joints(), 1),
        substream_seed(cfg.seed, "init_w"));
    train_supervised(net.params, data, data.strong, cfg, cfg.epochs, Decoder::zero_noise,
                     "init_w", log);
    return net;
}

void train_pw_baseline(models::PredictionNet& pred, models::ConditionalNet& cond,
                       const synth::DiverseDataset& data, const TrainConfig& cfg,
                       TrainingLog& log) {
    for (int r = 1; r <= cfg.rounds; ++r) {
        {
            net::Params frozen = pred.params;
            StageDriver d;
            d.kind = StepKind::pw_theta;
            d.wp = &frozen;
            d.tp = &cond.params;
            d.data = &data;
            d.cfg = &cfg;
            d.tag = "pw" + std::to_string(r) + "_theta";
            d.scored = Scored::t;
            d.run(data.splits.train, cfg.stage_epochs, log);
        }
        {
            net::Params frozen = cond.params;
            StageDriver d;
            d.kind = StepKind::pw_w;
            d.wp = &pred.params;
            d.tp = &frozen;
            d.data = &data;
            d.cfg = &cfg;
            d.tag = "pw" + std::to_string(r) + "_w";
            d.scored = Scored::w;
            d.run(data.splits.train, cfg.stage_epochs, log);
        }
    }
}

}  // namespace dcpose::training
