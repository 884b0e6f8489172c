#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "dcpose/lossmap.hpp"
#include "dcpose/pose.hpp"

// Serial reference kernels. These evaluate the belief-map loss, the diversity
// estimator, and MEU selection directly on full H x W grids, one pair at a
// time, with no factorization and no threading. They are deliberately naive:
// the unit and acceptance tests check the fast kernels against them, and the
// benchmark tool reports the speed gap.
namespace dcpose::reference {

double delta_loss(const Pose& h1, const Pose& h2, const lossmap::RenderConfig& cfg);

std::vector<double> delta_grad(const Pose& h1, const Pose& h2, const lossmap::RenderConfig& cfg);

double div_estimate(const std::vector<Pose>& a, const std::vector<Pose>& b,
                    const lossmap::RenderConfig& cfg);

// Exhaustive argmin of the total loss to all other samples; ties resolved to
// the lowest index.
std::pair<Pose, std::size_t> meu_predict(
    const std::vector<Pose>& samples,
    const std::function<double(const Pose&, const Pose&)>& delta);

}  // namespace dcpose::reference
