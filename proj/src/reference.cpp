#include "dcpose/reference.hpp"

#include <limits>

#include "dcpose/errors.hpp"

namespace dcpose::reference {

double delta_loss(const Pose& h1, const Pose& h2, const lossmap::RenderConfig& cfg) {
    if (h1.joints() != h2.joints()) throw DataError("pose joint count mismatch");
    const auto b1 = lossmap::render_belief(h1, cfg.rows, cfg.cols, cfg.sigma);
    const auto b2 = lossmap::render_belief(h2, cfg.rows, cfg.cols, cfg.sigma);
    double acc = 0.0;
    for (std::size_t i = 0; i < b1.values.size(); ++i) {
        const double d = b1.values[i] - b2.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(b1.values.size());
}

std::vector<double> delta_grad(const Pose& h1, const Pose& h2, const lossmap::RenderConfig& cfg) {
    if (h1.joints() != h2.joints()) throw DataError("pose joint count mismatch");
    const auto b1 = lossmap::render_belief(h1, cfg.rows, cfg.cols, cfg.sigma);
    const auto b2 = lossmap::render_belief(h2, cfg.rows, cfg.cols, cfg.sigma);
    const int J = b1.joints;
    const double invs2 = 1.0 / (cfg.sigma * cfg.sigma);
    const double norm = 2.0 / static_cast<double>(b1.values.size());
    std::vector<double> grad(2 * h1.joints(), 0.0);
    for (int j = 0; j < J; ++j) {
        const double uc = h1.u(j) * cfg.cols;
        const double vc = h1.v(j) * cfg.rows;
        double gu = 0.0, gv = 0.0;
        for (int r = 0; r < cfg.rows; ++r) {
            const double dy = vc - (r + 0.5);
            for (int c = 0; c < cfg.cols; ++c) {
                const double dx = uc - (c + 0.5);
                const double b = b1.at(j, r, c);
                const double diff = b - b2.at(j, r, c);
                gu += diff * b * (-dx * invs2) * cfg.cols;
                gv += diff * b * (-dy * invs2) * cfg.rows;
            }
        }
        grad[2 * j] = norm * gu;
        grad[2 * j + 1] = norm * gv;
    }
    return grad;
}

double div_estimate(const std::vector<Pose>& a, const std::vector<Pose>& b,
                    const lossmap::RenderConfig& cfg) {
    if (a.empty() || b.empty()) throw DataError("div_estimate: empty sample set");
    double acc = 0.0;
    for (const auto& pa : a)
        for (const auto& pb : b) acc += reference::delta_loss(pa, pb, cfg);
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

std::pair<Pose, std::size_t> meu_predict(
    const std::vector<Pose>& samples,
    const std::function<double(const Pose&, const Pose&)>& delta) {
    if (samples.empty()) throw DataError("meu_predict: empty sample set");
    std::size_t best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        double total = 0.0;
        for (std::size_t l = 0; l < samples.size(); ++l)
            total += delta(samples[k], samples[l]);
        if (total < best_total) {
            best_total = total;
            best = k;
        }
    }
    return {samples[best], best};
}

}  // namespace dcpose::reference
