#include "dcpose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcpose/errors.hpp"
#include "dcpose/parallel.hpp"

namespace dcpose::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUp = -kPi / 2.0;  // world direction the root bone measures against

double deg(double d) { return d * kPi / 180.0; }

constexpr double kRootU = 0.5;
constexpr double kRootV = 0.58;

}  // namespace

int Skeleton::joint_index(const std::string& name) const {
    for (int i = 0; i < joints(); ++i)
        if (joint_names[i] == name) return i;
    throw DataError("unknown joint name: " + name);
}

Skeleton Skeleton::human15() {
    Skeleton s;
    s.joint_names = {"head_top", "neck",    "l_shoulder", "r_shoulder", "l_elbow",
                     "r_elbow",  "l_wrist", "r_wrist",    "pelvis",     "l_hip",
                     "r_hip",    "l_knee",  "r_knee",     "l_ankle",    "r_ankle"};
    s.flip_pair = {0, 1, 3, 2, 5, 4, 7, 6, 8, 10, 9, 12, 11, 14, 13};
    s.root = 8;
    s.bones = {
        {8, 1, 0.22},   // torso
        {1, 0, 0.11},   // head
        {1, 2, 0.085},  {1, 3, 0.085},    // clavicles
        {2, 4, 0.125},  {3, 5, 0.125},    // upper arms
        {4, 6, 0.115},  {5, 7, 0.115},    // forearms
        {8, 9, 0.07},   {8, 10, 0.07},    // pelvis wings
        {9, 11, 0.15},  {10, 12, 0.15},   // thighs
        {11, 13, 0.14}, {12, 14, 0.14},   // shins
    };
    return s;
}

void ActionPrototype::validate(int bone_count) const {
    if (modes.empty()) throw DataError("action prototype has no modes");
    if (modes.size() != weights.size()) throw DataError("mode/weight count mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw DataError("mixture weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("mixture weights must sum to 1");
    for (const auto& m : modes)
        if (static_cast<int>(m.size()) != bone_count)
            throw DataError("mode angle count does not match bone count");
    if (!(jitter >= 0.0)) throw DataError("jitter must be nonnegative");
}

namespace {

// Relative angles of the upright rest pose, one per bone in Skeleton order:
// torso, head, l/r clavicle, l/r upper arm, l/r forearm, l/r pelvis wing,
// l/r thigh, l/r shin.
std::vector<double> rest_angles() {
    return {deg(0),    deg(0),                 // torso, head
            deg(-100), deg(100),               // clavicles
            deg(-80),  deg(80),                // upper arms (hang down)
            deg(0),    deg(0),                 // forearms
            deg(-100), deg(100),               // pelvis wings
            deg(-80),  deg(80),                // thighs (straight down)
            deg(0),    deg(0)};                // shins
}

}  // namespace

std::vector<ActionPrototype> default_actions() {
    const auto base = rest_angles();
    std::vector<ActionPrototype> actions;

    {   // 0: stand
        ActionPrototype a;
        a.action = 0;
        a.modes = {base};
        a.weights = {1.0};
        actions.push_back(a);
    }
    {   // 1: both arms raised
        ActionPrototype a;
        a.action = 1;
        auto m = base;
        m[4] = deg(70);    // l upper arm up
        m[5] = deg(-70);   // r upper arm up
        a.modes = {m};
        a.weights = {1.0};
        actions.push_back(a);
    }
    {   // 2: wave -- bimodal, one arm raised (left or right)
        ActionPrototype a;
        a.action = 2;
        auto left = base;
        left[4] = deg(50);
        left[6] = deg(-30);
        auto right = base;
        right[5] = deg(-50);
        right[7] = deg(30);
        a.modes = {left, right};
        a.weights = {0.5, 0.5};
        actions.push_back(a);
    }
    {   // 3: squat
        ActionPrototype a;
        a.action = 3;
        auto m = base;
        m[10] = deg(-35);  // thighs splay outward
        m[11] = deg(35);
        m[12] = deg(-45);  // shins back to vertical
        m[13] = deg(45);
        a.modes = {m};
        a.weights = {1.0};
        actions.push_back(a);
    }
    {   // 4: lunge -- bimodal, one leg and one arm extended sideways
        ActionPrototype a;
        a.action = 4;
        auto left = base;
        left[10] = deg(10);  // l thigh out to horizontal
        left[12] = deg(0);
        left[4] = deg(10);   // l arm out
        left[6] = deg(0);
        auto right = base;
        right[11] = deg(-10);
        right[13] = deg(0);
        right[5] = deg(-10);
        right[7] = deg(0);
        a.modes = {left, right};
        a.weights = {0.5, 0.5};
        actions.push_back(a);
    }
    {   // 5: side bend
        ActionPrototype a;
        a.action = 5;
        auto m = base;
        m[0] = deg(40);  // torso tilts; arms and head follow
        a.modes = {m};
        a.weights = {1.0};
        actions.push_back(a);
    }
    return actions;
}

Pose forward_kinematics(const Skeleton& skel, double root_u, double root_v,
                        const std::vector<double>& relative_angles) {
    if (relative_angles.size() != skel.bones.size())
        throw DataError("forward_kinematics: angle count mismatch");
    const int J = skel.joints();
    Pose pose(J);
    std::vector<double> incoming(J, kUp);
    pose.u(skel.root) = root_u;
    pose.v(skel.root) = root_v;
    for (std::size_t b = 0; b < skel.bones.size(); ++b) {
        const Bone& bone = skel.bones[b];
        const double wa = incoming[bone.parent] + relative_angles[b];
        pose.u(bone.child) = pose.u(bone.parent) + bone.length * std::cos(wa);
        pose.v(bone.child) = pose.v(bone.parent) + bone.length * std::sin(wa);
        incoming[bone.child] = wa;
    }
    return pose;
}

namespace {

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
    const double cx = ax + t * dx - px;
    const double cy = ay + t * dy - py;
    return std::sqrt(cx * cx + cy * cy);
}

}  // namespace

Image render_figure(const Skeleton& skel, const Pose& pose, int height, int width,
                    double stroke_px) {
    if (height < 1 || width < 1) throw DataError("render_figure: invalid image size");
    if (!pose.finite()) throw DataError("render_figure: non-finite pose");
    Image img(height, width);
    const double stroke = stroke_px / width;  // stroke radius in normalized units
    for (int r = 0; r < height; ++r) {
        const double py = (r + 0.5) / height;
        for (int c = 0; c < width; ++c) {
            const double px = (c + 0.5) / width;
            double best = 1e30;
            for (const Bone& b : skel.bones) {
                const double d = point_segment_distance(px, py, pose.u(b.parent), pose.v(b.parent),
                                                        pose.u(b.child), pose.v(b.child));
                best = std::min(best, d);
            }
            const double val = std::clamp(1.0 - best / stroke, 0.0, 1.0);
            img.at(r, c) = static_cast<float>(val);
        }
    }
    return img;
}

Corpus gen_dataset(int actions, int samples_per_action, int image_size, double jitter_scale,
                   std::uint64_t seed) {
    const auto protos = default_actions();
    if (actions < 2 || actions > static_cast<int>(protos.size()))
        throw DataError("gen_dataset: actions must be between 2 and " +
                        std::to_string(protos.size()));
    if (samples_per_action < 1) throw DataError("gen_dataset: samples_per_action must be >= 1");
    if (image_size < 8) throw DataError("gen_dataset: image_size must be at least 8");
    if (!(jitter_scale >= 0.0)) throw DataError("gen_dataset: jitter_scale must be >= 0");

    Corpus corpus;
    corpus.skeleton = Skeleton::human15();
    corpus.num_actions = actions;
    corpus.image_height = image_size;
    corpus.image_width = image_size;
    corpus.seed = seed;
    for (int a = 0; a < actions; ++a) protos[a].validate(static_cast<int>(corpus.skeleton.bones.size()));

    const int total = actions * samples_per_action;
    corpus.samples.resize(total);
    const std::uint64_t data_seed = substream_seed(seed, "data");
    const int head_bone = 1;  // neck -> head_top
    const double head_len = corpus.skeleton.bones[head_bone].length;

    ExceptionCollector guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < total; ++i) {
        guard.run([&, i] {
        const int action = i / samples_per_action;
        const ActionPrototype& proto = protos[action];
        Rng rng(child_seed(data_seed, static_cast<std::uint64_t>(i)));
        // Pick a mode, then jitter every relative angle.
        std::size_t mode = 0;
        double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t m = 0; m < proto.weights.size(); ++m) {
            acc += proto.weights[m];
            if (u < acc) {
                mode = m;
                break;
            }
        }
        std::vector<double> angles = proto.modes[mode];
        const double sigma = proto.jitter * jitter_scale;
        for (double& a : angles) a += sigma * rng.gaussian();

        Sample& s = corpus.samples[i];
        s.action = action;
        s.pose = forward_kinematics(corpus.skeleton, kRootU, kRootV, angles);
        s.has_pose = true;
        s.head_length = head_len;
        s.image = render_figure(corpus.skeleton, s.pose, image_size, image_size);
        });
    }
    guard.rethrow();
    return corpus;
}

Splits make_splits(const Corpus& corpus, const std::array<double, 3>& fractions,
                   std::uint64_t seed) {
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw DataError("make_splits: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("make_splits: fractions must sum to 1");

    // Group sample indices per action, shuffle each, cut by fraction.
    std::vector<std::vector<int>> by_action(corpus.num_actions);
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
        const int a = corpus.samples[i].action;
        if (a < 0 || a >= corpus.num_actions) throw DataError("make_splits: action id out of range");
        by_action[a].push_back(static_cast<int>(i));
    }
    const std::uint64_t split_seed = substream_seed(seed, "split");
    Splits splits;
    for (int a = 0; a < corpus.num_actions; ++a) {
        auto& idx = by_action[a];
        Rng rng(child_seed(split_seed, static_cast<std::uint64_t>(a)));
        rng.shuffle(idx);
        const int n = static_cast<int>(idx.size());
        const int n_train = static_cast<int>(std::floor(fractions[0] * n));
        const int n_val = static_cast<int>(std::floor(fractions[1] * n));
        for (int i = 0; i < n; ++i) {
            if (i < n_train) splits.train.push_back(idx[i]);
            else if (i < n_train + n_val) splits.val.push_back(idx[i]);
            else splits.test.push_back(idx[i]);
        }
    }
    std::sort(splits.train.begin(), splits.train.end());
    std::sort(splits.val.begin(), splits.val.end());
    std::sort(splits.test.begin(), splits.test.end());
    return splits;
}

DiverseDataset make_diverse(Corpus&& corpus, const Splits& splits, double strong_fraction,
                            std::uint64_t seed) {
    if (!(strong_fraction > 0.0 && strong_fraction <= 1.0))
        throw DataError("make_diverse: strong_fraction must lie in (0, 1]");

    std::vector<std::vector<int>> by_action(corpus.num_actions);
    for (int i : splits.train) by_action[corpus.samples[i].action].push_back(i);

    // Largest-remainder apportionment so the total strong count is exactly
    // ceil(strong_fraction * |train|) while staying per-action stratified.
    const int total_strong = static_cast<int>(
        std::ceil(strong_fraction * static_cast<double>(splits.train.size())));
    std::vector<int> quota(corpus.num_actions, 0);
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int a = 0; a < corpus.num_actions; ++a) {
        const double exact = strong_fraction * static_cast<double>(by_action[a].size());
        quota[a] = static_cast<int>(std::floor(exact));
        quota[a] = std::min(quota[a], static_cast<int>(by_action[a].size()));
        assigned += quota[a];
        remainders.push_back({exact - quota[a], a});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (const auto& [rem, a] : remainders) {
        if (assigned >= total_strong) break;
        if (quota[a] < static_cast<int>(by_action[a].size())) {
            ++quota[a];
            ++assigned;
        }
    }

    DiverseDataset d;
    d.strong_fraction = strong_fraction;
    const std::uint64_t pick_seed = substream_seed(seed, "diverse");
    for (int a = 0; a < corpus.num_actions; ++a) {
        auto idx = by_action[a];
        Rng rng(child_seed(pick_seed, static_cast<std::uint64_t>(a)));
        rng.shuffle(idx);
        if (quota[a] == 0 && !idx.empty())
            std::fprintf(stderr, "warning: action %d has no strongly annotated samples\n", a);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (static_cast<int>(i) < quota[a]) {
                d.strong.push_back(idx[i]);
            } else {
                d.weak.push_back(idx[i]);
            }
        }
    }
    std::sort(d.strong.begin(), d.strong.end());
    std::sort(d.weak.begin(), d.weak.end());

    // Weak samples keep only their action label.
    for (int i : d.weak) {
        corpus.samples[i].has_pose = false;
        corpus.samples[i].pose = Pose();
        corpus.samples[i].head_length = 0.0;
    }
    d.corpus = std::move(corpus);
    d.splits = splits;
    return d;
}

namespace {

Image rotate_raster(const Image& in, double angle) {
    Image out(in.height, in.width);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int r = 0; r < in.height; ++r) {
        const double pv = (r + 0.5) / in.height - 0.5;
        for (int c = 0; c < in.width; ++c) {
            const double pu = (c + 0.5) / in.width - 0.5;
            // Inverse rotation: where did this output pixel come from?
            const double su = ca * pu + sa * pv + 0.5;
            const double sv = -sa * pu + ca * pv + 0.5;
            const double x = su * in.width - 0.5;
            const double y = sv * in.height - 0.5;
            const int x0 = static_cast<int>(std::floor(x));
            const int y0 = static_cast<int>(std::floor(y));
            const double fx = x - x0;
            const double fy = y - y0;
            double val = 0.0;
            for (int dy = 0; dy <= 1; ++dy) {
                for (int dx = 0; dx <= 1; ++dx) {
                    const int xi = x0 + dx;
                    const int yi = y0 + dy;
                    if (xi < 0 || xi >= in.width || yi < 0 || yi >= in.height) continue;
                    const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
                    val += wgt * in.at(yi, xi);
                }
            }
            out.at(r, c) = static_cast<float>(val);
        }
    }
    return out;
}

}  // namespace

Sample augment_with(const Sample& sample, const Skeleton& skel, double angle_rad, bool flip) {
    Sample out = sample;
    if (angle_rad != 0.0) {
        out.image = rotate_raster(sample.image, angle_rad);
        if (sample.has_pose) {
            const double ca = std::cos(angle_rad);
            const double sa = std::sin(angle_rad);
            for (std::size_t j = 0; j < sample.pose.joints(); ++j) {
                const double du = sample.pose.u(j) - 0.5;
                const double dv = sample.pose.v(j) - 0.5;
                out.pose.u(j) = 0.5 + ca * du - sa * dv;
                out.pose.v(j) = 0.5 + sa * du + ca * dv;
            }
        }
    }
    if (flip) {
        Image flipped(out.image.height, out.image.width);
        for (int r = 0; r < out.image.height; ++r)
            for (int c = 0; c < out.image.width; ++c)
                flipped.at(r, c) = out.image.at(r, out.image.width - 1 - c);
        out.image = std::move(flipped);
        if (out.has_pose) {
            Pose mirrored(out.pose.joints());
            for (std::size_t j = 0; j < out.pose.joints(); ++j) {
                const int m = skel.flip_pair[j];
                mirrored.u(j) = 1.0 - out.pose.u(m);
                mirrored.v(j) = out.pose.v(m);
            }
            out.pose = std::move(mirrored);
        }
    }
    return out;
}

Sample augment(const Sample& sample, const Skeleton& skel, Rng& rng) {
    const double angle = rng.uniform(-kPi / 6.0, kPi / 6.0);
    const bool flip = rng.uniform() < 0.5;
    return augment_with(sample, skel, angle, flip);
}

}  // namespace dcpose::synth
