#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dcpose/errors.hpp"
#include "dcpose/models.hpp"
#include "dcpose/training.hpp"
#include "helpers.hpp"

using namespace dcpose;

namespace {

training::TrainConfig tiny_train(std::uint64_t seed) {
    training::TrainConfig tc;
    tc.seed = seed;
    tc.K = 4;
    tc.batch_size = 4;
    tc.epochs = 8;
    tc.head_epochs = 6;
    tc.eval_samples = 4;
    tc.augment = training::AugmentMode::none;
    tc.patience = 50;
    return tc;
}

double mean_self_div(const net::Params& params, const synth::DiverseDataset& data,
                     const std::vector<int>& indices, int k, std::uint64_t seed,
                     const lossmap::RenderConfig& cfg) {
    double acc = 0.0;
    for (int idx : indices) {
        const auto& s = data.corpus.samples[idx];
        Rng rng(child_seed(seed, idx));
        const int action = params.cfg.num_heads > 1 ? s.action : -1;
        const auto set = models::sample_poses(params, s.image, action, k, rng);
        acc += objective::div_estimate(set, set, cfg);
    }
    return acc / indices.size();
}

double mean_supervised_loss(const net::Params& params, const synth::DiverseDataset& data,
                            const std::vector<int>& indices, int k, std::uint64_t seed,
                            double gamma, const lossmap::RenderConfig& cfg) {
    double acc = 0.0;
    for (int idx : indices) {
        const auto& s = data.corpus.samples[idx];
        Rng rng(child_seed(seed, idx));
        const int action = params.cfg.num_heads > 1 ? s.action : -1;
        const auto set = models::sample_poses(params, s.image, action, k, rng);
        acc += objective::supervised_disco_loss(set, s.pose, gamma, cfg);
    }
    return acc / indices.size();
}

}  // namespace

TEST_CASE("sample_poses: K draws, deterministic per stream, trunk reuse is exact") {
    const auto data = testutil::tiny_dataset(2, 6, 16, 1.0, 3);
    const auto cfg = models::default_config(16, 16, 15, 1);
    const auto params = net::init_params(cfg, 11);
    const auto& img = data.corpus.samples[0].image;

    Rng r1(77);
    const auto one = models::sample_poses(params, img, -1, 1, r1);
    CHECK(one.poses.size() == 1);

    Rng r2(77), r3(77);
    const auto a = models::sample_poses(params, img, -1, 5, r2);
    const auto b = models::sample_poses(params, img, -1, 5, r3);
    for (int i = 0; i < 5; ++i) CHECK(a.poses[i].xy == b.poses[i].xy);

    // naive path: draw the same noise vectors, run full forward passes
    Rng r4(77);
    std::vector<std::vector<double>> zs;
    for (int i = 0; i < 5; ++i) zs.push_back(r4.uniform_vector(cfg.noise_dim));
    for (int i = 0; i < 5; ++i) {
        const Pose naive = net::forward(params, img, zs[i], -1).first;
        CHECK(naive.xy == a.poses[i].xy);
    }
}

TEST_CASE("sample_poses enforces the action contract") {
    const auto data = testutil::tiny_dataset(2, 6, 16, 1.0, 4);
    const auto& img = data.corpus.samples[0].image;
    const auto pred = net::init_params(models::default_config(16, 16, 15, 1), 1);
    const auto cond = net::init_params(models::default_config(16, 16, 15, 2), 1);
    Rng rng(1);
    CHECK_THROWS_AS(models::sample_poses(cond, img, -1, 2, rng), DataError);
    CHECK_THROWS_AS(models::sample_poses(pred, img, 1, 2, rng), DataError);
    CHECK_THROWS_AS(models::sample_poses(pred, img, -1, 0, rng), DataError);
}

TEST_CASE("zero training epochs return the seeded initialization unchanged") {
    const auto data = testutil::tiny_dataset(2, 10, 16, 1.0, 5);
    auto tc = tiny_train(5);
    tc.epochs = 0;
    const auto net = models::init_prediction(data, tc);
    const auto expected = net::init_params(models::default_config(16, 16, 15, 1),
                                           substream_seed(tc.seed, "init_w"));
    CHECK(net.params.values == expected.values);
}

TEST_CASE("supervised training lowers the strong-set loss") {
    const auto data = testutil::tiny_dataset(3, 12, 16, 1.0, 6);
    auto tc = tiny_train(6);
    tc.epochs = 0;
    const auto before = models::init_prediction(data, tc);
    tc.epochs = 10;
    const auto after = models::init_prediction(data, tc);
    const double loss_before = mean_supervised_loss(before.params, data, data.strong, 8, 99,
                                                    tc.gamma, tc.render);
    const double loss_after = mean_supervised_loss(after.params, data, data.strong, 8, 99,
                                                   tc.gamma, tc.render);
    CHECK(loss_after < loss_before);
}

TEST_CASE("a single strong sample is overfit to a perfect PCKh") {
    auto data = testutil::tiny_dataset(2, 10, 16, 1.0, 7);
    data.strong.resize(1);
    data.splits.val.clear();  // run the full budget, keep the final parameters
    auto tc = tiny_train(7);
    tc.epochs = 500;
    tc.K = 4;
    const auto net = models::init_prediction(data, tc);

    const auto& s = data.corpus.samples[data.strong[0]];
    Rng rng(substream_seed(tc.seed, "eval"));
    const auto set = models::sample_poses(net.params, s.image, -1, 20, rng);
    const auto [pose, idx] = eval::meu_predict(set, tc.render);
    const auto res = lossmap::pckh({pose}, {s.pose}, {s.head_length}, 0.5);
    CHECK(res.total == 1.0);
}

TEST_CASE("the conditional net starts as an exact copy of the prediction net") {
    const auto data = testutil::tiny_dataset(3, 10, 16, 0.5, 8);
    auto tc = tiny_train(8);
    tc.epochs = 4;
    const auto pred = models::init_prediction(data, tc);
    tc.head_epochs = 0;
    const auto cond = models::init_conditional(pred, data, tc);

    const std::size_t trunk = pred.params.trunk_size();
    for (std::size_t i = 0; i < trunk; ++i)
        CHECK(cond.params.values[i] == pred.params.values[i]);
    const std::size_t head = pred.params.head_size();
    for (int h = 0; h < 3; ++h)
        for (std::size_t i = 0; i < head; ++i)
            CHECK(cond.params.values[trunk + h * head + i] == pred.params.values[trunk + i]);
}

TEST_CASE("fine-tuning does not worsen any head's supervised loss") {
    const auto data = testutil::tiny_dataset(3, 12, 16, 0.75, 9);
    auto tc = tiny_train(9);
    tc.epochs = 6;
    const auto pred = models::init_prediction(data, tc);
    tc.head_epochs = 0;
    const auto copied = models::init_conditional(pred, data, tc);
    tc.head_epochs = 8;
    const auto tuned = models::init_conditional(pred, data, tc);

    for (int a = 0; a < 3; ++a) {
        std::vector<int> of_action;
        for (int idx : data.strong)
            if (data.corpus.samples[idx].action == a) of_action.push_back(idx);
        REQUIRE(!of_action.empty());
        const double before = mean_supervised_loss(copied.params, data, of_action, 6, 123,
                                                   tc.gamma, tc.render);
        const double after = mean_supervised_loss(tuned.params, data, of_action, 6, 123,
                                                  tc.gamma, tc.render);
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("an action with no strong samples keeps its copied head") {
    auto data = testutil::tiny_dataset(3, 10, 16, 0.5, 10);
    // strip action 2 of its strong samples
    std::vector<int> strong;
    for (int idx : data.strong) {
        if (data.corpus.samples[idx].action == 2) {
            data.corpus.samples[idx].has_pose = false;
            data.corpus.samples[idx].pose = Pose();
            data.weak.push_back(idx);
        } else {
            strong.push_back(idx);
        }
    }
    data.strong = strong;
    std::sort(data.weak.begin(), data.weak.end());

    auto tc = tiny_train(10);
    tc.epochs = 3;
    const auto pred = models::init_prediction(data, tc);
    tc.head_epochs = 5;
    const auto cond = models::init_conditional(pred, data, tc);  // warns, must not throw

    const std::size_t trunk = pred.params.trunk_size();
    const std::size_t head = pred.params.head_size();
    for (std::size_t i = 0; i < head; ++i)
        CHECK(cond.params.values[trunk + 2 * head + i] == pred.params.values[trunk + i]);
}

TEST_CASE("the conditional net is at least as concentrated as the prediction net") {
    // statistical check over 5 seeds: knowing the action never hurts
    int wins = 0;
    double acc_pred = 0.0, acc_cond = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto data = testutil::tiny_dataset(3, 12, 16, 0.75, 100 + seed);
        auto tc = tiny_train(seed);
        tc.epochs = 8;
        tc.head_epochs = 6;
        const auto pred = models::init_prediction(data, tc);
        const auto cond = models::init_conditional(pred, data, tc);
        const double sp = mean_self_div(pred.params, data, data.strong, 8, 7, tc.render);
        const double sc = mean_self_div(cond.params, data, data.strong, 8, 7, tc.render);
        acc_pred += sp;
        acc_cond += sc;
        if (sc <= sp) ++wins;
    }
    CHECK(acc_cond <= acc_pred);
    CHECK(wins >= 3);
}
