#pragma once

#include <cmath>
#include <vector>

#include "dcpose/lossmap.hpp"
#include "dcpose/objective.hpp"
#include "dcpose/pose.hpp"
#include "dcpose/rng.hpp"
#include "dcpose/synth.hpp"

namespace testutil {

inline dcpose::Pose random_pose(dcpose::Rng& rng, int joints, double lo = 0.1, double hi = 0.9) {
    dcpose::Pose p(joints);
    for (auto& c : p.xy) c = rng.uniform(lo, hi);
    return p;
}

inline dcpose::objective::SampleSet random_set(dcpose::Rng& rng, int k, int joints) {
    dcpose::objective::SampleSet s;
    for (int i = 0; i < k; ++i) s.poses.push_back(random_pose(rng, joints));
    return s;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

// finite-difference comparisons: absolute slack for components drowned in
// truncation noise, relative everywhere else
inline bool fd_close(double analytic, double numeric, double rel = 1e-6, double abs_tol = 1e-9) {
    return std::abs(analytic - numeric) <= abs_tol + rel * std::max(std::abs(analytic), std::abs(numeric));
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a[i], b[i]));
    return m;
}

// A discrete pushforward: a single uniform draw picks one of a few fixed
// poses by cumulative probability. Used as an enumerable stand-in for a
// network's output distribution.
struct DiscreteDistribution {
    std::vector<double> probs;
    std::vector<dcpose::Pose> poses;

    dcpose::Pose sample(dcpose::Rng& rng) const {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return poses[i];
        }
        return poses.back();
    }

    dcpose::objective::SampleSet draw(dcpose::Rng& rng, int k) const {
        dcpose::objective::SampleSet s;
        for (int i = 0; i < k; ++i) s.poses.push_back(sample(rng));
        return s;
    }
};

// Exact mean and variance of the two-sample diversity estimator
// (1/(Ka*Kb)) sum_{k,l} delta(A_k, B_l) for independent i.i.d. draws from
// two enumerable distributions, computed from the outcome table:
//   Var = (sigma2 + (Kb-1)*cA + (Ka-1)*cB) / (Ka*Kb)
// with sigma2 the variance of delta(A,B), cA = Var_a E_b delta, cB the mirror.
struct EstimatorMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline EstimatorMoments div_estimator_moments(const DiscreteDistribution& da,
                                              const DiscreteDistribution& db,
                                              const dcpose::lossmap::RenderConfig& cfg, int ka,
                                              int kb) {
    const std::size_t na = da.probs.size(), nb = db.probs.size();
    std::vector<std::vector<double>> d(na, std::vector<double>(nb, 0.0));
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            d[i][j] = dcpose::lossmap::delta_loss(da.poses[i], db.poses[j], cfg);

    double mean = 0.0, second = 0.0;
    std::vector<double> ga(na, 0.0), gb(nb, 0.0);  // conditional means
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            const double pij = da.probs[i] * db.probs[j];
            mean += pij * d[i][j];
            second += pij * d[i][j] * d[i][j];
            ga[i] += db.probs[j] * d[i][j];
            gb[j] += da.probs[i] * d[i][j];
        }
    double var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < na; ++i) var_a += da.probs[i] * (ga[i] - mean) * (ga[i] - mean);
    for (std::size_t j = 0; j < nb; ++j) var_b += db.probs[j] * (gb[j] - mean) * (gb[j] - mean);
    const double sigma2 = second - mean * mean;

    EstimatorMoments m;
    m.mean = mean;
    m.variance = (sigma2 + (kb - 1) * var_a + (ka - 1) * var_b) /
                 (static_cast<double>(ka) * static_cast<double>(kb));
    return m;
}

// Small dataset for training tests: A actions, n per action.
inline dcpose::synth::DiverseDataset tiny_dataset(int actions, int per_action, int image_size,
                                                  double strong_fraction, std::uint64_t seed,
                                                  double jitter = 1.0) {
    auto corpus = dcpose::synth::gen_dataset(actions, per_action, image_size, jitter, seed);
    const auto splits = dcpose::synth::make_splits(corpus, {0.7, 0.15, 0.15}, seed);
    return dcpose::synth::make_diverse(std::move(corpus), splits, strong_fraction, seed);
}

}  // namespace testutil
