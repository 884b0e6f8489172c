#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dcpose/pose.hpp"
#include "dcpose/rng.hpp"

namespace dcpose::synth {

struct Bone {
    int parent = 0;
    int child = 0;
    double length = 0.0;
};

// Joint/bone layout of the rendered figure. The bone list is a tree in
// topological order rooted at the pelvis; left/right joints come in swap
// pairs so horizontal flips can relabel them.
struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<int> flip_pair;  // mirror joint index; self for center joints
    std::vector<Bone> bones;
    int root = 0;

    int joints() const { return static_cast<int>(joint_names.size()); }
    int joint_index(const std::string& name) const;

    // 15 joints: head_top, neck, shoulders, elbows, wrists, pelvis, hips,
    // knees, ankles.
    static Skeleton human15();
};

// One action class: one or two modal joint-angle configurations plus a
// per-angle jitter standard deviation. Angles are relative to the parent
// bone's direction (the root measures against straight up), so jitter
// accumulates along each kinematic chain.
struct ActionPrototype {
    int action = 0;
    std::vector<std::vector<double>> modes;  // per mode: one angle per bone, radians
    std::vector<double> weights;             // positive, sum to 1
    double jitter = 0.08;                    // radians

    void validate(int bone_count) const;
};

// The six built-in actions; two of them are bimodal.
std::vector<ActionPrototype> default_actions();

Pose forward_kinematics(const Skeleton& skel, double root_u, double root_v,
                        const std::vector<double>& relative_angles);

// Line rendering: intensity = clamp(1 - d/stroke, 0, 1) with d the distance
// to the nearest bone segment; stroke is given in pixels of the target width.
Image render_figure(const Skeleton& skel, const Pose& pose, int height, int width,
                    double stroke_px = 1.5);

struct Sample {
    Image image;
    int action = 0;
    bool has_pose = false;
    Pose pose;
    double head_length = 0.0;
};

struct Corpus {
    std::vector<Sample> samples;
    int num_actions = 0;
    int image_height = 0;
    int image_width = 0;
    Skeleton skeleton;
    std::uint64_t seed = 0;
};

// Deterministic synthetic corpus: samples_per_action figures per action,
// grouped by action, each drawn from its prototype with jittered angles.
// jitter_scale multiplies every prototype's jitter.
Corpus gen_dataset(int actions, int samples_per_action, int image_size, double jitter_scale,
                   std::uint64_t seed);

struct Splits {
    std::vector<int> train, val, test;
};

// Per-action stratified split; fractions must be positive and sum to 1.
Splits make_splits(const Corpus& corpus, const std::array<double, 3>& fractions,
                   std::uint64_t seed);

struct DiverseDataset {
    Corpus corpus;
    Splits splits;
    std::vector<int> strong;  // train samples that keep their pose
    std::vector<int> weak;    // train samples with only the action label
    double strong_fraction = 1.0;
};

// Keeps poses for a per-action random subset of ceil(strong_fraction * train)
// samples (largest-remainder apportionment across actions) and strips the
// pose from the rest. Validation and test samples keep their annotations.
DiverseDataset make_diverse(Corpus&& corpus, const Splits& splits, double strong_fraction,
                            std::uint64_t seed);

// Deterministic core: rotate by angle_rad about the image center, then
// optionally mirror horizontally (swapping left/right joint labels).
Sample augment_with(const Sample& sample, const Skeleton& skel, double angle_rad, bool flip);

// Draws angle uniform on [-30deg, +30deg] and a fair flip coin, in that order.
Sample augment(const Sample& sample, const Skeleton& skel, Rng& rng);

}  // namespace dcpose::synth
