#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "dcpose/dataset_io.hpp"
#include "dcpose/errors.hpp"
#include "dcpose/synth.hpp"
#include "helpers.hpp"

using namespace dcpose;
using namespace dcpose::synth;

namespace {

double joint_var(const std::vector<Sample>& samples, int joint) {
    double mu = 0.0, mv = 0.0;
    for (const auto& s : samples) {
        mu += s.pose.u(joint);
        mv += s.pose.v(joint);
    }
    mu /= samples.size();
    mv /= samples.size();
    double var = 0.0;
    for (const auto& s : samples) {
        const double du = s.pose.u(joint) - mu;
        const double dv = s.pose.v(joint) - mv;
        var += du * du + dv * dv;
    }
    return var / samples.size();
}

}  // namespace

TEST_CASE("forward kinematics reproduces the bone lengths exactly") {
    const auto skel = Skeleton::human15();
    Rng rng(1);
    std::vector<double> angles(skel.bones.size());
    for (auto& a : angles) a = rng.uniform(-1.5, 1.5);
    const Pose p = forward_kinematics(skel, 0.5, 0.55, angles);
    for (const auto& b : skel.bones) {
        const double du = p.u(b.child) - p.u(b.parent);
        const double dv = p.v(b.child) - p.v(b.parent);
        CHECK(std::abs(std::sqrt(du * du + dv * dv) - b.length) < 1e-9);
    }
}

TEST_CASE("the flip pairing swaps exactly the left/right joints") {
    const auto skel = Skeleton::human15();
    for (int j = 0; j < skel.joints(); ++j) {
        CHECK(skel.flip_pair[skel.flip_pair[j]] == j);
        const auto& name = skel.joint_names[j];
        if (name[0] == 'l' && name[1] == '_')
            CHECK(skel.joint_names[skel.flip_pair[j]] == "r" + name.substr(1));
        if (name == "head_top" || name == "neck" || name == "pelvis")
            CHECK(skel.flip_pair[j] == j);
    }
}

TEST_CASE("zero jitter collapses a unimodal action onto its prototype") {
    const auto corpus = gen_dataset(2, 12, 16, 0.0, 9);
    // action 0 (stand) is unimodal: every sample must carry the same pose
    const auto& first = corpus.samples[0];
    for (int i = 0; i < 12; ++i) {
        CHECK(corpus.samples[i].action == 0);
        CHECK(corpus.samples[i].pose.xy == first.pose.xy);
        CHECK(corpus.samples[i].image.pixels == first.image.pixels);
    }
}

TEST_CASE("the same seed regenerates the corpus bit for bit") {
    const auto a = gen_dataset(3, 5, 16, 1.0, 123);
    const auto b = gen_dataset(3, 5, 16, 1.0, 123);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].pose.xy == b.samples[i].pose.xy);
        CHECK(a.samples[i].image.pixels == b.samples[i].image.pixels);
    }
}

TEST_CASE("jitter accumulates along the chain: wrists and ankles move most") {
    const auto corpus = gen_dataset(6, 60, 16, 1.0, 31);
    const auto& skel = corpus.skeleton;
    // per-action variance so multi-modal actions do not inflate the numbers
    double distal = 0.0, proximal = 0.0;
    for (int a = 0; a < 6; ++a) {
        std::vector<Sample> of_action;
        for (const auto& s : corpus.samples)
            if (s.action == a) of_action.push_back(s);
        for (const auto& name : {"l_wrist", "r_wrist", "l_ankle", "r_ankle"})
            distal += joint_var(of_action, skel.joint_index(name));
        for (const auto& name : {"head_top", "neck"})
            proximal += joint_var(of_action, skel.joint_index(name));
    }
    distal /= 4.0;
    proximal /= 2.0;
    CHECK(distal > proximal);
}

TEST_CASE("splits are stratified, disjoint and cover everything") {
    const auto corpus = gen_dataset(4, 100, 16, 1.0, 7);
    const auto splits = make_splits(corpus, {0.7, 0.15, 0.15}, 7);
    CHECK(splits.train.size() == 280);
    CHECK(splits.val.size() == 60);
    CHECK(splits.test.size() == 60);

    std::vector<int> train_per_action(4, 0), val_per_action(4, 0), test_per_action(4, 0);
    for (int i : splits.train) ++train_per_action[corpus.samples[i].action];
    for (int i : splits.val) ++val_per_action[corpus.samples[i].action];
    for (int i : splits.test) ++test_per_action[corpus.samples[i].action];
    for (int a = 0; a < 4; ++a) {
        CHECK(train_per_action[a] == 70);
        CHECK(val_per_action[a] == 15);
        CHECK(test_per_action[a] == 15);
    }

    std::set<int> all;
    for (int i : splits.train) all.insert(i);
    for (int i : splits.val) all.insert(i);
    for (int i : splits.test) all.insert(i);
    CHECK(all.size() == corpus.samples.size());

    const auto again = make_splits(corpus, {0.7, 0.15, 0.15}, 7);
    CHECK(again.train == splits.train);
    CHECK(again.val == splits.val);
    CHECK(again.test == splits.test);
}

TEST_CASE("make_diverse keeps ceil(fraction * train) poses, stratified") {
    auto corpus = gen_dataset(6, 100, 16, 1.0, 8);
    const auto splits = make_splits(corpus, {0.7, 0.15, 0.15}, 8);
    const auto data = make_diverse(std::move(corpus), splits, 0.25, 8);
    // train = 420; ceil(0.25 * 420) = 105
    CHECK(data.strong.size() == 105);
    CHECK(data.weak.size() == 315);

    std::vector<int> strong_per_action(6, 0);
    for (int i : data.strong) {
        CHECK(data.corpus.samples[i].has_pose);
        ++strong_per_action[data.corpus.samples[i].action];
    }
    for (int a = 0; a < 6; ++a) CHECK(std::abs(strong_per_action[a] - 17) <= 1);
    for (int i : data.weak) {
        CHECK_FALSE(data.corpus.samples[i].has_pose);
        CHECK(data.corpus.samples[i].pose.xy.empty());
    }

    // strong and weak partition the train split exactly
    std::vector<int> joined = data.strong;
    joined.insert(joined.end(), data.weak.begin(), data.weak.end());
    std::sort(joined.begin(), joined.end());
    CHECK(joined == splits.train);
}

TEST_CASE("a full strong fraction leaves the weak set empty") {
    auto corpus = gen_dataset(2, 10, 16, 1.0, 9);
    const auto splits = make_splits(corpus, {0.7, 0.15, 0.15}, 9);
    const auto data = make_diverse(std::move(corpus), splits, 1.0, 9);
    CHECK(data.weak.empty());
    CHECK(data.strong.size() == splits.train.size());
}

TEST_CASE("augmenting with zero rotation and no flip is the identity") {
    const auto corpus = gen_dataset(2, 2, 16, 1.0, 10);
    const auto out = augment_with(corpus.samples[0], corpus.skeleton, 0.0, false);
    CHECK(out.pose.xy == corpus.samples[0].pose.xy);
    CHECK(out.image.pixels == corpus.samples[0].image.pixels);
}

TEST_CASE("two flips restore the pose and its labels") {
    const auto corpus = gen_dataset(2, 2, 16, 1.0, 11);
    const auto& s = corpus.samples[1];
    const auto once = augment_with(s, corpus.skeleton, 0.0, true);
    const auto twice = augment_with(once, corpus.skeleton, 0.0, true);
    for (std::size_t i = 0; i < s.pose.xy.size(); ++i)
        CHECK(twice.pose.xy[i] == doctest::Approx(s.pose.xy[i]).epsilon(1e-12));
    CHECK(twice.image.pixels == s.image.pixels);  // column mirroring is exact
}

TEST_CASE("rotation matches the closed-form turn about the image center") {
    const auto corpus = gen_dataset(2, 2, 16, 1.0, 12);
    const auto& s = corpus.samples[0];
    const double angle = 3.14159265358979323846 / 6.0;  // +30 degrees
    const auto rotated = augment_with(s, corpus.skeleton, angle, false);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t j = 0; j < s.pose.joints(); ++j) {
        const double du = s.pose.u(j) - 0.5, dv = s.pose.v(j) - 0.5;
        CHECK(rotated.pose.u(j) == doctest::Approx(0.5 + ca * du - sa * dv).epsilon(1e-12));
        CHECK(rotated.pose.v(j) == doctest::Approx(0.5 + sa * du + ca * dv).epsilon(1e-12));
    }
    // isometry: bone lengths survive
    for (const auto& b : corpus.skeleton.bones) {
        const double du = rotated.pose.u(b.child) - rotated.pose.u(b.parent);
        const double dv = rotated.pose.v(b.child) - rotated.pose.v(b.parent);
        CHECK(std::abs(std::sqrt(du * du + dv * dv) - b.length) < 1e-9);
    }
}

TEST_CASE("flip mirrors the raster and relabels left/right joints") {
    const auto corpus = gen_dataset(3, 4, 16, 1.0, 13);
    const auto& skel = corpus.skeleton;
    const auto& s = corpus.samples[5];
    const auto flipped = augment_with(s, skel, 0.0, true);
    const int lw = skel.joint_index("l_wrist"), rw = skel.joint_index("r_wrist");
    CHECK(flipped.pose.u(lw) == doctest::Approx(1.0 - s.pose.u(rw)).epsilon(1e-12));
    CHECK(flipped.pose.v(lw) == doctest::Approx(s.pose.v(rw)).epsilon(1e-12));
    for (int r = 0; r < s.image.height; ++r)
        for (int c = 0; c < s.image.width; ++c)
            CHECK(flipped.image.at(r, c) == s.image.at(r, s.image.width - 1 - c));
}

TEST_CASE("weak samples are augmented image-only without error") {
    auto corpus = gen_dataset(2, 10, 16, 1.0, 14);
    const auto splits = make_splits(corpus, {0.7, 0.15, 0.15}, 14);
    const auto data = make_diverse(std::move(corpus), splits, 0.5, 14);
    Rng rng(5);
    const auto& weak = data.corpus.samples[data.weak.front()];
    const auto out = augment(weak, data.corpus.skeleton, rng);
    CHECK_FALSE(out.has_pose);
    CHECK(out.image.pixels.size() == weak.image.pixels.size());
}

TEST_CASE("the dataset archive round-trips and rewrites byte-identically") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "dcpose_test_ds";
    fs::create_directories(dir);
    auto corpus = gen_dataset(3, 8, 16, 1.0, 77);
    const auto splits = make_splits(corpus, {0.7, 0.15, 0.15}, 77);
    const auto data = make_diverse(std::move(corpus), splits, 0.5, 77);

    const auto path = (dir / "d.dcp").string();
    dataset_io::save_dataset(data, path);
    const auto loaded = dataset_io::load_dataset(path);

    CHECK(loaded.corpus.num_actions == data.corpus.num_actions);
    CHECK(loaded.corpus.skeleton.joint_names == data.corpus.skeleton.joint_names);
    CHECK(loaded.corpus.skeleton.flip_pair == data.corpus.skeleton.flip_pair);
    CHECK(loaded.splits.train == data.splits.train);
    CHECK(loaded.strong == data.strong);
    CHECK(loaded.weak == data.weak);
    REQUIRE(loaded.corpus.samples.size() == data.corpus.samples.size());
    for (std::size_t i = 0; i < data.corpus.samples.size(); ++i) {
        CHECK(loaded.corpus.samples[i].action == data.corpus.samples[i].action);
        CHECK(loaded.corpus.samples[i].has_pose == data.corpus.samples[i].has_pose);
        CHECK(loaded.corpus.samples[i].pose.xy == data.corpus.samples[i].pose.xy);
        CHECK(loaded.corpus.samples[i].image.pixels == data.corpus.samples[i].image.pixels);
    }

    const auto path2 = (dir / "d2.dcp").string();
    dataset_io::save_dataset(loaded, path2);
    std::ifstream fa(path, std::ios::binary), fb(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    fs::remove_all(dir);
}

TEST_CASE("generator rejects invalid requests") {
    CHECK_THROWS_AS(gen_dataset(1, 10, 16, 1.0, 1), DataError);
    CHECK_THROWS_AS(gen_dataset(2, 0, 16, 1.0, 1), DataError);
    CHECK_THROWS_AS(gen_dataset(2, 10, 4, 1.0, 1), DataError);
    const auto corpus = gen_dataset(2, 10, 16, 1.0, 1);
    CHECK_THROWS_AS(make_splits(corpus, {0.5, 0.2, 0.2}, 1), DataError);
}
