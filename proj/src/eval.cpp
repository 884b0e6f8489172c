#include "dcpose/eval.hpp"

#include <cmath>
#include <limits>

#include "dcpose/errors.hpp"
#include "dcpose/parallel.hpp"
#include "dcpose/models.hpp"
#include "dcpose/rng.hpp"

namespace dcpose::eval {

Decoder decoder_from_string(const std::string& s) {
    if (s == "meu") return Decoder::meu;
    if (s == "zero_noise") return Decoder::zero_noise;
    throw DataError("unknown decoder: " + s);
}

std::string decoder_to_string(Decoder d) {
    return d == Decoder::meu ? "meu" : "zero_noise";
}

std::pair<Pose, std::size_t> meu_predict(const objective::SampleSet& samples,
                                         const lossmap::RenderConfig& cfg) {
    const auto r = meu_decode(samples, cfg);
    return {r.pose, r.index};
}

std::pair<Pose, std::size_t> meu_predict(
    const objective::SampleSet& samples,
    const std::function<double(const Pose&, const Pose&)>& delta) {
    if (samples.poses.empty()) throw DataError("meu_predict: empty sample set");
    std::size_t best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples.poses.size(); ++k) {
        double total = 0.0;
        for (std::size_t l = 0; l < samples.poses.size(); ++l)
            total += delta(samples.poses[k], samples.poses[l]);
        if (total < best_total) {
            best_total = total;
            best = k;
        }
    }
    return {samples.poses[best], best};
}

MeuResult meu_decode(const objective::SampleSet& samples, const lossmap::RenderConfig& cfg) {
    if (samples.poses.empty()) throw DataError("meu_predict: empty sample set");
    const std::size_t k = samples.poses.size();
    std::vector<lossmap::BeliefAxes> axes(k);
    for (std::size_t i = 0; i < k; ++i) axes[i] = lossmap::build_axes(samples.poses[i], cfg);
    std::size_t best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) total += lossmap::delta_from_axes(axes[i], axes[j]);
        if (total < best_total) {
            best_total = total;
            best = i;
        }
    }
    MeuResult res;
    res.pose = samples.poses[best];
    res.index = best;
    res.expected_loss = best_total / static_cast<double>(k);
    return res;
}

std::vector<MeuResult> decode_split(const net::Params& params, const synth::DiverseDataset& data,
                                    const std::vector<int>& indices, int k,
                                    const lossmap::RenderConfig& cfg, std::uint64_t seed,
                                    Decoder decoder, bool use_actions) {
    if (indices.empty()) throw DataError("decode_split: empty index list");
    if (params.cfg.num_heads > 1 && !use_actions)
        throw UsageError("conditional network requires action labels for decoding");
    std::vector<MeuResult> out(indices.size());
    const int n = static_cast<int>(indices.size());
    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
        const synth::Sample& s = data.corpus.samples[indices[i]];
        const int action = params.cfg.num_heads > 1 ? s.action : -1;
        if (decoder == Decoder::zero_noise) {
            const std::vector<double> zero(params.cfg.noise_dim, 0.0);
            MeuResult r;
            r.pose = net::forward(params, s.image, zero, action).first;
            r.index = 0;
            r.expected_loss = 0.0;
            out[i] = std::move(r);
        } else {
            Rng rng(child_seed(seed, static_cast<std::uint64_t>(indices[i])));
            const auto set = models::sample_poses(params, s.image, action, k, rng);
            out[i] = meu_decode(set, cfg);
        }
        });
    }
    guard.rethrow();
    return out;
}

namespace {

struct JointGroups {
    std::vector<std::string> names;
    std::vector<std::vector<int>> members;
};

JointGroups group_joints(const synth::Skeleton& skel) {
    JointGroups g;
    g.names = {"Head", "Sho.", "Elb.", "Wri.", "Hip", "Knee", "Ank."};
    g.members.resize(g.names.size());
    auto bucket = [&](const std::string& name) -> int {
        if (name == "head_top" || name == "neck") return 0;
        if (name.find("shoulder") != std::string::npos) return 1;
        if (name.find("elbow") != std::string::npos) return 2;
        if (name.find("wrist") != std::string::npos) return 3;
        if (name == "pelvis" || name.find("hip") != std::string::npos) return 4;
        if (name.find("knee") != std::string::npos) return 5;
        if (name.find("ankle") != std::string::npos) return 6;
        return -1;
    };
    for (int j = 0; j < skel.joints(); ++j) {
        const int b = bucket(skel.joint_names[j]);
        if (b >= 0) g.members[b].push_back(j);
    }
    return g;
}

}  // namespace

Evaluation evaluate(const net::Params& params, const synth::DiverseDataset& data,
                    const std::vector<int>& indices, int k, double tau,
                    const lossmap::RenderConfig& cfg, std::uint64_t seed, Decoder decoder,
                    bool use_actions) {
    Evaluation ev;
    ev.indices = indices;
    ev.decoded = decode_split(params, data, indices, k, cfg, seed, decoder, use_actions);

    std::vector<Pose> preds, gts;
    std::vector<double> heads;
    preds.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const synth::Sample& s = data.corpus.samples[indices[i]];
        if (!s.has_pose) throw DataError("evaluate: sample without ground-truth pose");
        preds.push_back(ev.decoded[i].pose);
        gts.push_back(s.pose);
        heads.push_back(s.head_length);
    }
    ev.pckh = lossmap::pckh(preds, gts, heads, tau);

    const auto groups = group_joints(data.corpus.skeleton);
    ev.group_names = groups.names;
    ev.group_names.push_back("Total");
    for (const auto& members : groups.members) {
        double acc = 0.0;
        for (int j : members) acc += ev.pckh.per_joint[j];
        ev.group_percent.push_back(members.empty() ? 0.0
                                                   : 100.0 * acc / static_cast<double>(members.size()));
    }
    ev.group_percent.push_back(100.0 * ev.pckh.total);
    return ev;
}

std::vector<std::pair<double, double>> pckh_curve(const Evaluation& ev,
                                                  const synth::DiverseDataset& data,
                                                  double max_tau, int steps) {
    std::vector<Pose> preds, gts;
    std::vector<double> heads;
    for (std::size_t i = 0; i < ev.indices.size(); ++i) {
        const synth::Sample& s = data.corpus.samples[ev.indices[i]];
        preds.push_back(ev.decoded[i].pose);
        gts.push_back(s.pose);
        heads.push_back(s.head_length);
    }
    std::vector<std::pair<double, double>> curve;
    for (int i = 0; i <= steps; ++i) {
        const double tau = max_tau * i / steps;
        if (tau <= 0.0) {
            curve.push_back({0.0, 0.0});
            continue;
        }
        curve.push_back({tau, lossmap::pckh(preds, gts, heads, tau).total});
    }
    return curve;
}

UncertaintyReport uncertainty_report(const net::Params& params,
                                     const synth::DiverseDataset& data,
                                     const std::vector<int>& indices, int k, std::uint64_t seed) {
    if (k < 2) throw DataError("uncertainty_report: k must be >= 2");
    if (indices.empty()) throw DataError("uncertainty_report: empty index list");
    const int joints = params.cfg.num_joints;
    const int n = static_cast<int>(indices.size());
    std::vector<std::vector<double>> pairwise(n), entropy(n);
    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        guard.run([&, i] {
        const synth::Sample& s = data.corpus.samples[indices[i]];
        Rng rng(child_seed(seed, static_cast<std::uint64_t>(indices[i])));
        const int action = params.cfg.num_heads > 1 ? s.action : -1;
        const auto set = models::sample_poses(params, s.image, action, k, rng);
        pairwise[i].assign(joints, 0.0);
        entropy[i].assign(joints, 0.0);
        for (int j = 0; j < joints; ++j) {
            double mu_u = 0.0, mu_v = 0.0;
            for (const auto& p : set.poses) {
                mu_u += p.u(j);
                mu_v += p.v(j);
            }
            mu_u /= k;
            mu_v /= k;
            double suu = 0.0, svv = 0.0, suv = 0.0, dist = 0.0;
            for (int a = 0; a < k; ++a) {
                const double du = set.poses[a].u(j) - mu_u;
                const double dv = set.poses[a].v(j) - mu_v;
                suu += du * du;
                svv += dv * dv;
                suv += du * dv;
                for (int b = a + 1; b < k; ++b)
                    dist += joint_distance(set.poses[a], set.poses[b], j);
            }
            suu /= k - 1;
            svv /= k - 1;
            suv /= k - 1;
            const double det = (suu + 1e-8) * (svv + 1e-8) - suv * suv;
            entropy[i][j] = 0.5 * std::log(std::pow(2.0 * M_PI * M_E, 2.0) * det);
            pairwise[i][j] = dist / (0.5 * k * (k - 1));
        }
        });
    }
    guard.rethrow();
    UncertaintyReport rep;
    rep.k = k;
    rep.mean_pairwise.assign(joints, 0.0);
    rep.entropy.assign(joints, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < joints; ++j) {
            rep.mean_pairwise[j] += pairwise[i][j];
            rep.entropy[j] += entropy[i][j];
        }
    }
    for (int j = 0; j < joints; ++j) {
        rep.mean_pairwise[j] /= n;
        rep.entropy[j] /= n;
    }
    return rep;
}

}  // namespace dcpose::eval
