#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace dcpose {

// An ordered list of J joint locations in normalized image coordinates
// (unit square, origin top-left, u right, v down). Coordinates may fall
// outside [0,1] after augmentation; consumers must tolerate that.
struct Pose {
    std::vector<double> xy;  // flat [u0, v0, u1, v1, ...]

    Pose() = default;
    explicit Pose(std::size_t joints) : xy(2 * joints, 0.0) {}

    std::size_t joints() const { return xy.size() / 2; }

    double u(std::size_t j) const { return xy[2 * j]; }
    double v(std::size_t j) const { return xy[2 * j + 1]; }
    double& u(std::size_t j) { return xy[2 * j]; }
    double& v(std::size_t j) { return xy[2 * j + 1]; }

    bool finite() const {
        for (double c : xy)
            if (!std::isfinite(c)) return false;
        return true;
    }
};

inline bool operator==(const Pose& a, const Pose& b) { return a.xy == b.xy; }

inline double joint_distance(const Pose& a, const Pose& b, std::size_t j) {
    double du = a.u(j) - b.u(j);
    double dv = a.v(j) - b.v(j);
    return std::sqrt(du * du + dv * dv);
}

// Grayscale raster, values in [0,1], row-major.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, 0.0f) {}

    float& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

}  // namespace dcpose
