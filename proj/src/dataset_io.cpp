#include "dcpose/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dcpose/errors.hpp"

namespace dcpose::dataset_io {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw DataError("dataset: bad number '" + tok + "'");
    return v;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

// "key = value" -> {key, value}; empty key if the line is not of that form.
std::pair<std::string, std::string> parse_kv(const std::string& line) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) return {"", ""};
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        if (a == std::string::npos) return std::string();
        return s.substr(a, b - a + 1);
    };
    return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

}  // namespace

void save_dataset(const synth::DiverseDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset: " + path);
    const synth::Corpus& c = data.corpus;
    out << "dcpose-dataset 1\n";
    out << "[meta]\n";
    out << "seed = " << c.seed << "\n";
    out << "actions = " << c.num_actions << "\n";
    out << "joints = " << c.skeleton.joints() << "\n";
    out << "samples = " << c.samples.size() << "\n";
    out << "image_height = " << c.image_height << "\n";
    out << "image_width = " << c.image_width << "\n";
    out << "strong_fraction = " << fmt(data.strong_fraction) << "\n";

    out << "[skeleton]\n";
    out << "root = " << c.skeleton.root << "\n";
    std::string names;
    for (std::size_t i = 0; i < c.skeleton.joint_names.size(); ++i) {
        if (i) names += ',';
        names += c.skeleton.joint_names[i];
    }
    out << "names = " << names << "\n";
    out << "flip_pairs = " << join_ints(c.skeleton.flip_pair) << "\n";
    std::string bones;
    for (std::size_t i = 0; i < c.skeleton.bones.size(); ++i) {
        if (i) bones += ' ';
        bones += std::to_string(c.skeleton.bones[i].parent) + ":" +
                 std::to_string(c.skeleton.bones[i].child) + ":" + fmt(c.skeleton.bones[i].length);
    }
    out << "bones = " << bones << "\n";

    out << "[samples]\n";
    for (const auto& s : c.samples) {
        out << s.action;
        if (s.has_pose) {
            out << " " << fmt(s.head_length);
            for (double v : s.pose.xy) out << " " << fmt(v);
        } else {
            out << " -";
        }
        out << "\n";
    }

    out << "[splits]\n";
    out << "train = " << join_ints(data.splits.train) << "\n";
    out << "val = " << join_ints(data.splits.val) << "\n";
    out << "test = " << join_ints(data.splits.test) << "\n";
    out << "strong = " << join_ints(data.strong) << "\n";
    out << "weak = " << join_ints(data.weak) << "\n";

    out << "[rasters]\n";
    for (const auto& s : c.samples) {
        static_assert(sizeof(float) == 4);
        out.write(reinterpret_cast<const char*>(s.image.pixels.data()),
                  static_cast<std::streamsize>(s.image.pixels.size() * sizeof(float)));
    }
    if (!out) throw DataError("short write on dataset: " + path);
}

synth::DiverseDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "dcpose-dataset 1")
        throw DataError("unrecognized dataset header in " + path);

    synth::DiverseDataset data;
    synth::Corpus& c = data.corpus;
    std::size_t samples = 0;
    std::string section;
    std::vector<std::string> sample_lines;

    while (std::getline(in, line)) {
        if (line == "[rasters]") break;
        if (!line.empty() && line.front() == '[') {
            section = line;
            continue;
        }
        if (line.empty()) continue;
        if (section == "[samples]") {
            sample_lines.push_back(line);
            continue;
        }
        auto [key, value] = parse_kv(line);
        if (key.empty()) throw DataError("dataset: malformed line '" + line + "'");
        if (section == "[meta]") {
            if (key == "seed") c.seed = std::stoull(value);
            else if (key == "actions") c.num_actions = std::stoi(value);
            else if (key == "joints") { /* implied by skeleton names */ }
            else if (key == "samples") samples = std::stoull(value);
            else if (key == "image_height") c.image_height = std::stoi(value);
            else if (key == "image_width") c.image_width = std::stoi(value);
            else if (key == "strong_fraction") data.strong_fraction = parse_double(value);
            else throw DataError("dataset: unknown meta key '" + key + "'");
        } else if (section == "[skeleton]") {
            if (key == "root") c.skeleton.root = std::stoi(value);
            else if (key == "names") {
                std::stringstream ss(value);
                std::string item;
                while (std::getline(ss, item, ',')) c.skeleton.joint_names.push_back(item);
            } else if (key == "flip_pairs") c.skeleton.flip_pair = split_ints(value);
            else if (key == "bones") {
                std::stringstream ss(value);
                std::string item;
                while (ss >> item) {
                    synth::Bone b;
                    const auto p1 = item.find(':');
                    const auto p2 = item.find(':', p1 + 1);
                    if (p1 == std::string::npos || p2 == std::string::npos)
                        throw DataError("dataset: malformed bone '" + item + "'");
                    b.parent = std::stoi(item.substr(0, p1));
                    b.child = std::stoi(item.substr(p1 + 1, p2 - p1 - 1));
                    b.length = parse_double(item.substr(p2 + 1));
                    c.skeleton.bones.push_back(b);
                }
            } else throw DataError("dataset: unknown skeleton key '" + key + "'");
        } else if (section == "[splits]") {
            if (key == "train") data.splits.train = split_ints(value);
            else if (key == "val") data.splits.val = split_ints(value);
            else if (key == "test") data.splits.test = split_ints(value);
            else if (key == "strong") data.strong = split_ints(value);
            else if (key == "weak") data.weak = split_ints(value);
            else throw DataError("dataset: unknown splits key '" + key + "'");
        } else {
            throw DataError("dataset: line outside a known section: '" + line + "'");
        }
    }

    if (sample_lines.size() != samples)
        throw DataError("dataset: sample line count does not match manifest");
    const int J = c.skeleton.joints();
    c.samples.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        std::stringstream ss(sample_lines[i]);
        synth::Sample& s = c.samples[i];
        std::string tok;
        ss >> s.action >> tok;
        if (tok == "-") {
            s.has_pose = false;
        } else {
            s.has_pose = true;
            s.head_length = parse_double(tok);
            s.pose = Pose(J);
            for (int k = 0; k < 2 * J; ++k) {
                if (!(ss >> tok)) throw DataError("dataset: truncated pose on sample line");
                s.pose.xy[k] = parse_double(tok);
            }
        }
        s.image = Image(c.image_height, c.image_width);
    }

    for (auto& s : c.samples) {
        in.read(reinterpret_cast<char*>(s.image.pixels.data()),
                static_cast<std::streamsize>(s.image.pixels.size() * sizeof(float)));
        if (!in) throw DataError("dataset: truncated raster data in " + path);
    }
    return data;
}

}  // namespace dcpose::dataset_io
