#include "dcpose/svg.hpp"

#include <charconv>
#include <fstream>

#include "dcpose/errors.hpp"

namespace dcpose::svg {

namespace {

constexpr double kCanvas = 256.0;

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"256\" height=\"256\" "
           "viewBox=\"0 0 256 256\">\n<rect width=\"256\" height=\"256\" fill=\"white\"/>\n";
}

void draw_bones(std::string& out, const synth::Skeleton& skel, const Pose& pose,
                const std::string& stroke, double width, double opacity) {
    for (const auto& b : skel.bones) {
        out += "<line x1=\"" + num(pose.u(b.parent) * kCanvas) + "\" y1=\"" +
               num(pose.v(b.parent) * kCanvas) + "\" x2=\"" + num(pose.u(b.child) * kCanvas) +
               "\" y2=\"" + num(pose.v(b.child) * kCanvas) + "\" stroke=\"" + stroke +
               "\" stroke-width=\"" + num(width) + "\" stroke-opacity=\"" + num(opacity) +
               "\" stroke-linecap=\"round\"/>\n";
    }
}

}  // namespace

std::string figure(const synth::Skeleton& skel, const Pose& pose,
                   const std::vector<double>* circle_radii) {
    std::string out = header();
    draw_bones(out, skel, pose, "#333333", 3.0, 1.0);
    if (circle_radii) {
        for (std::size_t j = 0; j < pose.joints() && j < circle_radii->size(); ++j) {
            out += "<circle cx=\"" + num(pose.u(j) * kCanvas) + "\" cy=\"" +
                   num(pose.v(j) * kCanvas) + "\" r=\"" + num((*circle_radii)[j] * kCanvas) +
                   "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

std::string superimposed(const synth::Skeleton& skel, const std::vector<Pose>& samples,
                         double expected_loss, double frame_threshold) {
    std::string out = header();
    for (const auto& p : samples) draw_bones(out, skel, p, "#1f77b4", 1.5, 0.12);
    const std::string frame = expected_loss < frame_threshold ? "#2ca02c" : "#1f4fd6";
    out += "<rect x=\"2\" y=\"2\" width=\"252\" height=\"252\" fill=\"none\" stroke=\"" + frame +
           "\" stroke-width=\"4\"/>\n";
    out += "</svg>\n";
    return out;
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values) {
    if (labels.size() != values.size()) throw DataError("bar_chart: label/value mismatch");
    std::string out = header();
    const double row = 256.0 / (values.empty() ? 1 : values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double y = i * row + row * 0.2;
        out += "<rect x=\"60\" y=\"" + num(y) + "\" width=\"" + num(values[i] * 180.0) +
               "\" height=\"" + num(row * 0.6) + "\" fill=\"#1f77b4\"/>\n";
        out += "<text x=\"4\" y=\"" + num(y + row * 0.45) + "\" font-size=\"10\">" + labels[i] +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << content;
    if (!out) throw DataError("short write on " + path);
}

}  // namespace dcpose::svg
