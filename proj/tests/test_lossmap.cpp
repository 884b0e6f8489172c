#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dcpose/errors.hpp"
#include "dcpose/lossmap.hpp"
#include "dcpose/reference.hpp"
#include "helpers.hpp"

using namespace dcpose;
using lossmap::RenderConfig;

TEST_CASE("a joint on a cell center renders to exactly 1 there") {
    // joint at the center of cell (5, 9) of a 16x16 grid
    Pose p(1);
    p.u(0) = (9 + 0.5) / 16.0;
    p.v(0) = (5 + 0.5) / 16.0;
    const auto map = lossmap::render_belief(p, 16, 16, 1.5);
    CHECK(map.at(0, 5, 9) == 1.0);
    // and values fall off monotonically with distance along the row
    double prev = map.at(0, 5, 9);
    for (int c = 10; c < 16; ++c) {
        CHECK(map.at(0, 5, c) < prev);
        prev = map.at(0, 5, c);
    }
}

TEST_CASE("a cell at distance sigma holds exp(-1/2)") {
    Pose p(1);
    p.u(0) = (4 + 0.5) / 32.0;
    p.v(0) = (7 + 0.5) / 32.0;
    const double sigma = 2.0;  // cells; cell (7, 6) is exactly 2 cells away
    const auto map = lossmap::render_belief(p, 32, 32, sigma);
    CHECK(map.at(0, 7, 6) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("a far-outside joint renders without error to vanishing mass") {
    Pose p(1);
    p.u(0) = 10.0;
    p.v(0) = 10.0;
    const auto map = lossmap::render_belief(p, 64, 64, 1.5);
    // nearest cell is > 600 cells away; every entry is below the closed-form
    // bound at the nearest cell, which itself underflows
    for (double v : map.values) {
        CHECK(v >= 0.0);
        CHECK(v < 1e-300);
    }
}

TEST_CASE("non-finite pose coordinates are rejected") {
    Pose p(1);
    p.u(0) = std::nan("");
    CHECK_THROWS_AS(lossmap::render_belief(p, 8, 8, 1.5), DataError);
}

TEST_CASE("belief maps factor exactly into the axis representation") {
    Rng rng(5);
    const RenderConfig cfg{24, 20, 1.7};
    for (int t = 0; t < 5; ++t) {
        const Pose p = testutil::random_pose(rng, 3, -0.2, 1.2);
        const auto map = lossmap::render_belief(p, cfg.rows, cfg.cols, cfg.sigma);
        const auto ax = lossmap::build_axes(p, cfg);
        for (int j = 0; j < 3; ++j)
            for (int r = 0; r < cfg.rows; ++r)
                for (int c = 0; c < cfg.cols; ++c)
                    CHECK(map.at(j, r, c) ==
                          doctest::Approx(ax.gy_row(j)[r] * ax.gx_row(j)[c]).epsilon(1e-12));
    }
}

TEST_CASE("delta of a pose with itself is exactly zero") {
    Rng rng(6);
    const RenderConfig cfg;
    const Pose p = testutil::random_pose(rng, 15);
    CHECK(lossmap::delta_loss(p, p, cfg) == 0.0);
    CHECK(reference::delta_loss(p, p, cfg) == 0.0);
}

TEST_CASE("delta is symmetric, exactly") {
    Rng rng(7);
    const RenderConfig cfg;
    for (int t = 0; t < 20; ++t) {
        const Pose a = testutil::random_pose(rng, 8);
        const Pose b = testutil::random_pose(rng, 8);
        CHECK(lossmap::delta_loss(a, b, cfg) == lossmap::delta_loss(b, a, cfg));
    }
}

TEST_CASE("delta is nonnegative and positive for different poses") {
    Rng rng(8);
    const RenderConfig cfg;
    for (int t = 0; t < 20; ++t) {
        const Pose a = testutil::random_pose(rng, 4);
        Pose b = a;
        b.u(2) += 0.05;
        CHECK(lossmap::delta_loss(a, b, cfg) > 0.0);
    }
}

TEST_CASE("two far-separated joints give twice one Gaussian's squared mass") {
    // J = 1, the two Gaussians do not overlap: loss = 2*S/(H*W) with S the
    // direct sum over one squared Gaussian.
    const RenderConfig cfg{32, 32, 1.5};
    Pose a(1), b(1);
    a.u(0) = 0.25;
    a.v(0) = 0.25;
    b.u(0) = 0.78;
    b.v(0) = 0.74;
    double s_direct = 0.0;  // direct summation oracle for pose a
    for (int r = 0; r < cfg.rows; ++r)
        for (int c = 0; c < cfg.cols; ++c) {
            const double dx = a.u(0) * cfg.cols - (c + 0.5);
            const double dy = a.v(0) * cfg.rows - (r + 0.5);
            const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.sigma * cfg.sigma));
            s_direct += g * g;
        }
    double s_direct_b = 0.0;
    for (int r = 0; r < cfg.rows; ++r)
        for (int c = 0; c < cfg.cols; ++c) {
            const double dx = b.u(0) * cfg.cols - (c + 0.5);
            const double dy = b.v(0) * cfg.rows - (r + 0.5);
            const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.sigma * cfg.sigma));
            s_direct_b += g * g;
        }
    const double expected = (s_direct + s_direct_b) / (cfg.rows * cfg.cols);
    CHECK(lossmap::delta_loss(a, b, cfg) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("fast delta agrees with the full-grid reference") {
    Rng rng(9);
    const RenderConfig cfg{32, 32, 1.5};
    for (int t = 0; t < 30; ++t) {
        const Pose a = testutil::random_pose(rng, 15, -0.1, 1.1);
        const Pose b = testutil::random_pose(rng, 15, -0.1, 1.1);
        const double fast = lossmap::delta_loss(a, b, cfg);
        const double ref = reference::delta_loss(a, b, cfg);
        CHECK(testutil::rel_err(fast, ref) < 1e-12);
    }
}

TEST_CASE("joint count mismatch is rejected") {
    const RenderConfig cfg;
    CHECK_THROWS_AS(lossmap::delta_loss(Pose(3), Pose(4), cfg), DataError);
}

TEST_CASE("delta gradient vanishes exactly at identical poses") {
    Rng rng(10);
    const RenderConfig cfg;
    const Pose p = testutil::random_pose(rng, 6);
    for (double g : lossmap::delta_grad(p, p, cfg)) CHECK(g == 0.0);
}

TEST_CASE("delta gradient matches central finite differences") {
    Rng rng(11);
    const RenderConfig cfg{32, 32, 2.0};
    const double eps = 1e-6;
    for (int t = 0; t < 10; ++t) {
        const Pose a = testutil::random_pose(rng, 5, 0.2, 0.8);
        Pose b = a;
        for (auto& c : b.xy) c += rng.uniform(-0.08, 0.08);
        const auto grad = lossmap::delta_grad(a, b, cfg);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            Pose up = a, down = a;
            up.xy[i] += eps;
            down.xy[i] -= eps;
            const double fd =
                (lossmap::delta_loss(up, b, cfg) - lossmap::delta_loss(down, b, cfg)) / (2 * eps);
            CHECK(testutil::fd_close(grad[i], fd));
        }
    }
}

TEST_CASE("delta gradient agrees with the reference gradient") {
    Rng rng(12);
    const RenderConfig cfg{24, 24, 1.5};
    for (int t = 0; t < 10; ++t) {
        const Pose a = testutil::random_pose(rng, 7);
        const Pose b = testutil::random_pose(rng, 7);
        // tiny components lose relative precision to cancellation; hold the
        // agreement to the same grade as the finite-difference contract
        CHECK(testutil::max_rel_err(lossmap::delta_grad(a, b, cfg),
                                    reference::delta_grad(a, b, cfg)) < 1e-6);
    }
}

TEST_CASE("the gradient of joint j ignores every other joint of the target") {
    Rng rng(13);
    const RenderConfig cfg;
    const Pose a = testutil::random_pose(rng, 5);
    Pose b = testutil::random_pose(rng, 5);
    const auto before = lossmap::delta_grad(a, b, cfg);
    b.u(4) += 0.2;  // move an unrelated target joint
    b.v(4) -= 0.1;
    const auto after = lossmap::delta_grad(a, b, cfg);
    for (int j = 0; j < 4; ++j) {
        CHECK(before[2 * j] == after[2 * j]);
        CHECK(before[2 * j + 1] == after[2 * j + 1]);
    }
    CHECK(before[8] != after[8]);
}

// --- PCKh ---

TEST_CASE("identical predictions score a perfect total") {
    Rng rng(14);
    std::vector<Pose> poses;
    for (int i = 0; i < 4; ++i) poses.push_back(testutil::random_pose(rng, 6));
    const std::vector<double> heads(4, 0.11);
    const auto res = lossmap::pckh(poses, poses, heads, 0.5);
    CHECK(res.total == 1.0);
    for (double a : res.per_joint) CHECK(a == 1.0);
}

TEST_CASE("the threshold is inclusive at exactly tau times the head length") {
    Pose gt(1);
    gt.u(0) = 0.5;
    gt.v(0) = 0.5;
    const double head = 0.2, tau = 0.5;
    Pose near = gt, at = gt, far = gt;
    near.u(0) += 0.49 * head * tau / 0.5 * 0.5;  // 0.49 * head * tau / ... keep simple below
    near = gt;
    near.u(0) += 0.49 * head;  // displacement 0.49 * head, radius = 0.5 * head
    at = gt;
    at.u(0) += tau * head;  // exactly on the boundary
    far = gt;
    far.u(0) += 0.51 * head;
    const std::vector<double> heads{head};
    CHECK(lossmap::pckh({near}, {gt}, heads, tau).total == 1.0);
    CHECK(lossmap::pckh({at}, {gt}, heads, tau).total == 1.0);
    CHECK(lossmap::pckh({far}, {gt}, heads, tau).total == 0.0);
}

TEST_CASE("a hand-enumerated mixed batch scores one half") {
    // 4 single-joint samples; displacements 0, 0.04, 0.2, 0.3 with
    // radius tau*head = 0.5*0.2 = 0.1: correct, correct, wrong, wrong.
    Pose gt(1);
    gt.u(0) = 0.5;
    gt.v(0) = 0.5;
    std::vector<Pose> preds(4, gt), gts(4, gt);
    preds[1].u(0) += 0.04;
    preds[2].u(0) += 0.2;
    preds[3].v(0) += 0.3;
    const std::vector<double> heads(4, 0.2);
    const auto res = lossmap::pckh(preds, gts, heads, 0.5);
    CHECK(res.total == doctest::Approx(0.5));
    CHECK(res.num_samples == 4);
}

TEST_CASE("pckh is invariant under permuting the samples") {
    Rng rng(15);
    std::vector<Pose> preds, gts;
    std::vector<double> heads;
    for (int i = 0; i < 6; ++i) {
        gts.push_back(testutil::random_pose(rng, 5));
        preds.push_back(testutil::random_pose(rng, 5));
        heads.push_back(0.15);
    }
    const auto base = lossmap::pckh(preds, gts, heads, 0.5);
    std::vector<Pose> p2{preds[3], preds[0], preds[5], preds[1], preds[4], preds[2]};
    std::vector<Pose> g2{gts[3], gts[0], gts[5], gts[1], gts[4], gts[2]};
    const auto perm = lossmap::pckh(p2, g2, heads, 0.5);
    CHECK(base.total == perm.total);
    for (std::size_t j = 0; j < base.per_joint.size(); ++j)
        CHECK(base.per_joint[j] == perm.per_joint[j]);
}

TEST_CASE("pckh rejects mismatched lists") {
    const std::vector<double> heads{0.1};
    CHECK_THROWS_AS(lossmap::pckh({Pose(2)}, {Pose(2), Pose(2)}, heads, 0.5), DataError);
}
