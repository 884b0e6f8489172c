#pragma once

#include <vector>

#include "dcpose/lossmap.hpp"
#include "dcpose/pose.hpp"

namespace dcpose::objective {

enum class Source { prediction, conditional, ground_truth };

// Monte-Carlo representation of one network's output distribution on one
// image: K poses drawn with K independent noise vectors.
struct SampleSet {
    std::vector<Pose> poses;
    Source source = Source::prediction;

    std::size_t size() const { return poses.size(); }
};

struct DiscConfig {
    double gamma = 0.5;
    int samples = 100;  // K
};

// (1 / (Ka*Kb)) sum_k sum_k' delta(a_k, b_k'). Unbiased for independently
// drawn sample sets.
double div_estimate(const SampleSet& a, const SampleSet& b, const lossmap::RenderConfig& cfg);

// div(P,Q) - gamma*div(P,P) - (1-gamma)*div(Q,Q), evaluated as
// gamma*(cross - self_p) + (1-gamma)*(cross - self_q) so that two identical
// sample sets give exactly zero for any gamma.
double disc_estimate(const SampleSet& p, const SampleSet& q, double gamma,
                     const lossmap::RenderConfig& cfg);

// disc_estimate against the point mass at gt:
// (1/K) sum_k delta(p_k, gt) - gamma * (1/K^2) sum_{k,k'} delta(p_k, p_k').
double supervised_disco_loss(const SampleSet& p, const Pose& gt, double gamma,
                             const lossmap::RenderConfig& cfg);

// Block-coordinate objectives. samples_w comes from the prediction network,
// samples_t from the conditional one.
double theta_objective(const SampleSet& samples_w, const SampleSet& samples_t, double gamma,
                       const lossmap::RenderConfig& cfg);  // div(w,t) - (1-gamma)*div(t,t)
double w_objective(const SampleSet& samples_w, const SampleSet& samples_t, double gamma,
                   const lossmap::RenderConfig& cfg);  // div(w,t) - gamma*div(w,w)
double joint_objective(const SampleSet& samples_w, const SampleSet& samples_t, double gamma,
                       const lossmap::RenderConfig& cfg);  // == disc_estimate

enum class Objective { theta, w, joint };

// Gradients of the chosen objective w.r.t. the pose coordinates of the side(s)
// being optimized. The untouched side's gradients are contractually absent
// (empty vector): theta produces only t-side gradients, w only w-side, joint
// both. Each inner vector has 2J entries and feeds net::backward.
struct PoseGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> theta;
};

PoseGrads objective_pose_grads(const SampleSet& samples_w, const SampleSet& samples_t,
                               double gamma, const lossmap::RenderConfig& cfg, Objective which);

// Gradient of supervised_disco_loss w.r.t. each sample's coordinates.
std::vector<std::vector<double>> supervised_pose_grads(const SampleSet& p, const Pose& gt,
                                                       double gamma,
                                                       const lossmap::RenderConfig& cfg);

}  // namespace dcpose::objective
