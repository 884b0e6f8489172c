#pragma once

#include <string>
#include <vector>

#include "dcpose/pose.hpp"
#include "dcpose/synth.hpp"

namespace dcpose::svg {

// Stick figure with optional per-joint circles (radii in normalized units).
std::string figure(const synth::Skeleton& skel, const Pose& pose,
                   const std::vector<double>* circle_radii = nullptr);

// Superimposed sample skeletons with a colored frame: green when the expected
// loss is below the threshold, blue otherwise.
std::string superimposed(const synth::Skeleton& skel, const std::vector<Pose>& samples,
                         double expected_loss, double frame_threshold);

// Horizontal bar chart of per-joint accuracies (fractions in [0,1]).
std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values);

void write_file(const std::string& path, const std::string& content);

}  // namespace dcpose::svg
