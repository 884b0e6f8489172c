#include "dcpose/objective.hpp"

#include "dcpose/errors.hpp"
#include "dcpose/parallel.hpp"

namespace dcpose::objective {

namespace {

using lossmap::BeliefAxes;
using lossmap::RenderConfig;

std::vector<BeliefAxes> build_all(const SampleSet& s, const RenderConfig& cfg) {
    if (s.poses.empty()) throw DataError("empty sample set");
    std::vector<BeliefAxes> axes(s.poses.size());
    const int n = static_cast<int>(s.poses.size());
    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k)
        guard.run([&, k] { axes[k] = lossmap::build_axes(s.poses[k], cfg); });
    guard.rethrow();
    return axes;
}

// Pairwise mean of delta over two axis sets. Each outer row is summed
// sequentially into its own slot, then the slots are reduced in index order,
// so the result does not depend on the thread count.
double div_from_axes(const std::vector<BeliefAxes>& a, const std::vector<BeliefAxes>& b) {
    const int ka = static_cast<int>(a.size());
    const int kb = static_cast<int>(b.size());
    std::vector<double> rows(ka, 0.0);
    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < ka; ++i) {
        guard.run([&, i] {
            double acc = 0.0;
            for (int j = 0; j < kb; ++j) acc += lossmap::delta_from_axes(a[i], b[j]);
            rows[i] = acc;
        });
    }
    guard.rethrow();
    double total = 0.0;
    for (double r : rows) total += r;
    return total / (static_cast<double>(ka) * static_cast<double>(kb));
}

double disc_from_axes(const std::vector<BeliefAxes>& p, const std::vector<BeliefAxes>& q,
                      double gamma) {
    const double cross = div_from_axes(p, q);
    const double self_p = div_from_axes(p, p);
    const double self_q = div_from_axes(q, q);
    return gamma * (cross - self_p) + (1.0 - gamma) * (cross - self_q);
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in [0,1]");
}

}  // namespace

double div_estimate(const SampleSet& a, const SampleSet& b, const RenderConfig& cfg) {
    return div_from_axes(build_all(a, cfg), build_all(b, cfg));
}

double disc_estimate(const SampleSet& p, const SampleSet& q, double gamma,
                     const RenderConfig& cfg) {
    check_gamma(gamma);
    return disc_from_axes(build_all(p, cfg), build_all(q, cfg), gamma);
}

double supervised_disco_loss(const SampleSet& p, const Pose& gt, double gamma,
                             const RenderConfig& cfg) {
    check_gamma(gamma);
    const auto axes = build_all(p, cfg);
    const std::vector<BeliefAxes> gt_axes{lossmap::build_axes(gt, cfg)};
    const double cross = div_from_axes(axes, gt_axes);
    const double self_p = div_from_axes(axes, axes);
    // disc against a point mass: its self-diversity vanishes identically.
    return gamma * (cross - self_p) + (1.0 - gamma) * cross;
}

double theta_objective(const SampleSet& samples_w, const SampleSet& samples_t, double gamma,
                       const RenderConfig& cfg) {
    check_gamma(gamma);
    const auto aw = build_all(samples_w, cfg);
    const auto at = build_all(samples_t, cfg);
    return div_from_axes(aw, at) - (1.0 - gamma) * div_from_axes(at, at);
}

double w_objective(const SampleSet& samples_w, const SampleSet& samples_t, double gamma,
                   const RenderConfig& cfg) {
    check_gamma(gamma);
    const auto aw = build_all(samples_w, cfg);
    const auto at = build_all(samples_t, cfg);
    return div_from_axes(aw, at) - gamma * div_from_axes(aw, aw);
}

double joint_objective(const SampleSet& samples_w, const SampleSet& samples_t, double gamma,
                       const RenderConfig& cfg) {
    return disc_estimate(samples_w, samples_t, gamma, cfg);
}

namespace {

// grads[k] += cross_coef * d/dk mean_j delta(self[k], other[j])
//           + self_coef  * d/dk mean_{a,b} delta(self[a], self[b])
// The self term contributes twice per pair (both slots), hence the factor 2.
void side_grads(const std::vector<BeliefAxes>& self, const std::vector<BeliefAxes>& other,
                double cross_coef, double self_coef, std::size_t dims,
                std::vector<std::vector<double>>& grads) {
    const int k = static_cast<int>(self.size());
    const int m = static_cast<int>(other.size());
    grads.assign(k, std::vector<double>(dims, 0.0));
    const double cross_scale = cross_coef / (static_cast<double>(k) * m);
    const double self_scale = self_coef * 2.0 / (static_cast<double>(k) * k);
    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i) {
        guard.run([&, i] {
            double* out = grads[i].data();
            for (int j = 0; j < m; ++j)
                lossmap::delta_grad_accum(self[i], other[j], cross_scale, out);
            if (self_coef != 0.0) {
                for (int j = 0; j < k; ++j)
                    lossmap::delta_grad_accum(self[i], self[j], self_scale, out);
            }
        });
    }
    guard.rethrow();
}

}  // namespace

PoseGrads objective_pose_grads(const SampleSet& samples_w, const SampleSet& samples_t,
                               double gamma, const RenderConfig& cfg, Objective which) {
    check_gamma(gamma);
    const auto aw = build_all(samples_w, cfg);
    const auto at = build_all(samples_t, cfg);
    const std::size_t dims = 2 * samples_w.poses[0].joints();
    PoseGrads grads;
    if (which == Objective::w || which == Objective::joint)
        side_grads(aw, at, 1.0, -gamma, dims, grads.w);
    if (which == Objective::theta || which == Objective::joint)
        side_grads(at, aw, 1.0, -(1.0 - gamma), dims, grads.theta);
    return grads;
}

std::vector<std::vector<double>> supervised_pose_grads(const SampleSet& p, const Pose& gt,
                                                       double gamma, const RenderConfig& cfg) {
    check_gamma(gamma);
    const auto axes = build_all(p, cfg);
    const std::vector<BeliefAxes> gt_axes{lossmap::build_axes(gt, cfg)};
    std::vector<std::vector<double>> grads;
    side_grads(axes, gt_axes, 1.0, -gamma, 2 * gt.joints(), grads);
    return grads;
}

}  // namespace dcpose::objective
