#pragma once

#include <cstddef>
#include <vector>

#include "dcpose/pose.hpp"

namespace dcpose::lossmap {

// Belief-map geometry. sigma is the Gaussian standard deviation measured in
// grid cells; cell (r, c) has its center at ((c+0.5)/cols, (r+0.5)/rows) in
// normalized image coordinates.
struct RenderConfig {
    int rows = 32;
    int cols = 32;
    double sigma = 1.5;
};

// Per-joint Gaussian heat grids. grid(j)[r][c] = exp(-d^2 / (2 sigma^2)),
// d the distance (in cells) from the joint to the cell center.
struct BeliefMap {
    int joints = 0;
    int rows = 0;
    int cols = 0;
    double sigma = 0.0;
    std::vector<double> values;  // joints * rows * cols, row-major per joint

    double at(int j, int r, int c) const {
        return values[(static_cast<std::size_t>(j) * rows + r) * cols + c];
    }
};

BeliefMap render_belief(const Pose& pose, int rows, int cols, double sigma);

// Factored form of the belief map: the grid of joint j is the outer product
// gy_j (x) gx_j, so any sum over cells splits into independent axis sums.
// This is what the pairwise kernels below run on; building the axes costs
// O(J*(rows+cols)) per pose instead of O(J*rows*cols) per pose pair.
struct BeliefAxes {
    int joints = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> gx, gy;    // J*cols, J*rows: axis Gaussians
    std::vector<double> dgx, dgy;  // derivatives w.r.t. normalized u resp. v
    std::vector<double> sxx, syy;  // J: sum gx^2, sum gy^2
    std::vector<double> dsxx, dsyy;  // J: d(sxx)/du, d(syy)/dv

    const double* gx_row(int j) const { return gx.data() + static_cast<std::size_t>(j) * cols; }
    const double* gy_row(int j) const { return gy.data() + static_cast<std::size_t>(j) * rows; }
    const double* dgx_row(int j) const { return dgx.data() + static_cast<std::size_t>(j) * cols; }
    const double* dgy_row(int j) const { return dgy.data() + static_cast<std::size_t>(j) * rows; }
};

BeliefAxes build_axes(const Pose& pose, const RenderConfig& cfg);

// Mean squared belief-map difference, normalized by joints*rows*cols so the
// value does not depend on grid resolution. Symmetric, >= 0, zero iff the
// maps coincide.
double delta_from_axes(const BeliefAxes& a, const BeliefAxes& b);
double delta_loss(const Pose& h1, const Pose& h2, const RenderConfig& cfg);

// Gradient of delta with respect to the first argument's coordinates.
// The *_accum form adds scale * grad into out (size 2J).
void delta_grad_accum(const BeliefAxes& a, const BeliefAxes& b, double scale,
                      double* out);
std::vector<double> delta_grad(const Pose& h1, const Pose& h2, const RenderConfig& cfg);

struct PckhResult {
    std::vector<double> per_joint;  // fraction correct per joint, in [0,1]
    double total = 0.0;
    double tau = 0.0;
    std::size_t num_samples = 0;
};

// Joint j of sample i counts as correct iff ||pred - gt|| <= tau * head_lengths[i].
// A tie at the threshold counts as correct.
PckhResult pckh(const std::vector<Pose>& predictions, const std::vector<Pose>& ground_truths,
                const std::vector<double>& head_lengths, double tau);

}  // namespace dcpose::lossmap
