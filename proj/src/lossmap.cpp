#include "dcpose/lossmap.hpp"

#include <cmath>
#include <string>

#include "dcpose/errors.hpp"

namespace dcpose::lossmap {

namespace {

void check_render_args(const Pose& pose, int rows, int cols, double sigma) {
    if (rows < 1 || cols < 1) throw DataError("belief grid must be at least 1x1");
    if (!(sigma > 0.0)) throw DataError("belief sigma must be positive");
    if (!pose.finite()) throw DataError("non-finite pose coordinates");
}

}  // namespace

BeliefMap render_belief(const Pose& pose, int rows, int cols, double sigma) {
    check_render_args(pose, rows, cols, sigma);
    const int joints = static_cast<int>(pose.joints());
    BeliefMap map;
    map.joints = joints;
    map.rows = rows;
    map.cols = cols;
    map.sigma = sigma;
    map.values.resize(static_cast<std::size_t>(joints) * rows * cols);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    std::size_t idx = 0;
    for (int j = 0; j < joints; ++j) {
        // Joint position in cell units.
        const double uc = pose.u(j) * cols;
        const double vc = pose.v(j) * rows;
        for (int r = 0; r < rows; ++r) {
            const double dy = vc - (r + 0.5);
            for (int c = 0; c < cols; ++c) {
                const double dx = uc - (c + 0.5);
                map.values[idx++] = std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
        }
    }
    return map;
}

BeliefAxes build_axes(const Pose& pose, const RenderConfig& cfg) {
    check_render_args(pose, cfg.rows, cfg.cols, cfg.sigma);
    const int joints = static_cast<int>(pose.joints());
    const int rows = cfg.rows;
    const int cols = cfg.cols;
    BeliefAxes ax;
    ax.joints = joints;
    ax.rows = rows;
    ax.cols = cols;
    ax.gx.resize(static_cast<std::size_t>(joints) * cols);
    ax.dgx.resize(ax.gx.size());
    ax.gy.resize(static_cast<std::size_t>(joints) * rows);
    ax.dgy.resize(ax.gy.size());
    ax.sxx.resize(joints);
    ax.syy.resize(joints);
    ax.dsxx.resize(joints);
    ax.dsyy.resize(joints);

    const double inv2s2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    const double invs2 = 1.0 / (cfg.sigma * cfg.sigma);
    for (int j = 0; j < joints; ++j) {
        const double uc = pose.u(j) * cols;
        const double vc = pose.v(j) * rows;
        double* gx = ax.gx.data() + static_cast<std::size_t>(j) * cols;
        double* dgx = ax.dgx.data() + static_cast<std::size_t>(j) * cols;
        double sxx = 0.0, sxd = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double dx = uc - (c + 0.5);
            const double g = std::exp(-dx * dx * inv2s2);
            gx[c] = g;
            // d/du of exp(-(u*cols - cc)^2 / (2 sigma^2))
            dgx[c] = g * (-dx * invs2) * cols;
            sxx += g * g;
            sxd += g * dgx[c];
        }
        ax.sxx[j] = sxx;
        ax.dsxx[j] = 2.0 * sxd;

        double* gy = ax.gy.data() + static_cast<std::size_t>(j) * rows;
        double* dgy = ax.dgy.data() + static_cast<std::size_t>(j) * rows;
        double syy = 0.0, syd = 0.0;
        for (int r = 0; r < rows; ++r) {
            const double dy = vc - (r + 0.5);
            const double g = std::exp(-dy * dy * inv2s2);
            gy[r] = g;
            dgy[r] = g * (-dy * invs2) * rows;
            syy += g * g;
            syd += g * dgy[r];
        }
        ax.syy[j] = syy;
        ax.dsyy[j] = 2.0 * syd;
    }
    return ax;
}

namespace {

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline void check_compatible(const BeliefAxes& a, const BeliefAxes& b) {
    if (a.joints != b.joints) {
        throw DataError("pose joint count mismatch: " + std::to_string(a.joints) + " vs " +
                        std::to_string(b.joints));
    }
    if (a.rows != b.rows || a.cols != b.cols) throw DataError("belief grid mismatch");
}

}  // namespace

double delta_from_axes(const BeliefAxes& a, const BeliefAxes& b) {
    check_compatible(a, b);
    const int J = a.joints;
    double acc = 0.0;
    for (int j = 0; j < J; ++j) {
        const double cx = dot(a.gx_row(j), b.gx_row(j), a.cols);
        const double cy = dot(a.gy_row(j), b.gy_row(j), a.rows);
        acc += (a.sxx[j] * a.syy[j] + b.sxx[j] * b.syy[j]) - 2.0 * (cx * cy);
    }
    return acc / (static_cast<double>(J) * a.rows * a.cols);
}

double delta_loss(const Pose& h1, const Pose& h2, const RenderConfig& cfg) {
    return delta_from_axes(build_axes(h1, cfg), build_axes(h2, cfg));
}

void delta_grad_accum(const BeliefAxes& a, const BeliefAxes& b, double scale, double* out) {
    check_compatible(a, b);
    const int J = a.joints;
    const double norm = scale / (static_cast<double>(J) * a.rows * a.cols);
    for (int j = 0; j < J; ++j) {
        const double cx = dot(a.gx_row(j), b.gx_row(j), a.cols);
        const double cy = dot(a.gy_row(j), b.gy_row(j), a.rows);
        const double cdx = dot(a.dgx_row(j), b.gx_row(j), a.cols);
        const double cdy = dot(a.dgy_row(j), b.gy_row(j), a.rows);
        const double du = a.dsxx[j] * a.syy[j] - 2.0 * (cdx * cy);
        const double dv = a.sxx[j] * a.dsyy[j] - 2.0 * (cx * cdy);
        out[2 * j] += norm * du;
        out[2 * j + 1] += norm * dv;
    }
}

std::vector<double> delta_grad(const Pose& h1, const Pose& h2, const RenderConfig& cfg) {
    std::vector<double> grad(2 * h1.joints(), 0.0);
    delta_grad_accum(build_axes(h1, cfg), build_axes(h2, cfg), 1.0, grad.data());
    return grad;
}

PckhResult pckh(const std::vector<Pose>& predictions, const std::vector<Pose>& ground_truths,
                const std::vector<double>& head_lengths, double tau) {
    if (predictions.size() != ground_truths.size() || predictions.size() != head_lengths.size())
        throw DataError("pckh: list length mismatch");
    if (predictions.empty()) throw DataError("pckh: empty sample list");
    if (!(tau > 0.0)) throw DataError("pckh: tau must be positive");

    const std::size_t joints = predictions[0].joints();
    PckhResult res;
    res.per_joint.assign(joints, 0.0);
    res.tau = tau;
    res.num_samples = predictions.size();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].joints() != joints || ground_truths[i].joints() != joints)
            throw DataError("pckh: joint count mismatch");
        if (!(head_lengths[i] > 0.0)) throw DataError("pckh: head length must be positive");
        const double radius = tau * head_lengths[i];
        for (std::size_t j = 0; j < joints; ++j) {
            if (joint_distance(predictions[i], ground_truths[i], j) <= radius)
                res.per_joint[j] += 1.0;
        }
    }
    double sum = 0.0;
    for (auto& a : res.per_joint) {
        a /= static_cast<double>(res.num_samples);
        sum += a;
    }
    res.total = sum / static_cast<double>(joints);
    return res;
}

}  // namespace dcpose::lossmap
