#include "dcpose/net.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dcpose/errors.hpp"
#include "dcpose/rng.hpp"

namespace dcpose::net {

std::vector<int> NetConfig::widths() const {
    std::vector<int> w;
    w.reserve(hidden.size() + 2);
    w.push_back(input_dim);
    for (int h : hidden) w.push_back(h);
    w.push_back(output_dim());
    return w;
}

int NetConfig::layer_in(int layer) const {
    const auto w = widths();
    return w[layer] + (layer == injection_layer ? noise_dim : 0);
}

int NetConfig::layer_out(int layer) const { return widths()[layer + 1]; }

void NetConfig::validate() const {
    if (input_dim < 1) throw DataError("net: input_dim must be positive");
    if (num_joints < 1) throw DataError("net: num_joints must be positive");
    if (num_heads < 1) throw DataError("net: num_heads must be positive");
    for (int h : hidden)
        if (h < 1) throw DataError("net: hidden widths must be positive");
    if (noise_dim < 0) throw DataError("net: noise_dim must be nonnegative");
    if (noise_dim > 0) {
        // The injection point must be a hidden layer: not the input layer,
        // not the output layer.
        if (injection_layer < 1 || injection_layer > layers() - 2)
            throw DataError("net: injection_layer must name a hidden layer");
    } else if (injection_layer != -1) {
        throw DataError("net: injection_layer must be -1 when noise_dim is 0");
    }
    if (num_heads > 1 && noise_dim == 0)
        throw DataError("net: a multi-head network requires a noise path");
}

namespace {

std::size_t layer_size(const NetConfig& cfg, int layer) {
    return static_cast<std::size_t>(cfg.layer_out(layer)) * cfg.layer_in(layer) +
           cfg.layer_out(layer);
}

}  // namespace

std::size_t Params::trunk_size() const {
    std::size_t n = 0;
    for (int l = 0; l < cfg.trunk_layers(); ++l) n += layer_size(cfg, l);
    return n;
}

std::size_t Params::head_size() const {
    std::size_t n = 0;
    for (int l = cfg.trunk_layers(); l < cfg.layers(); ++l) n += layer_size(cfg, l);
    return n;
}

std::size_t Params::weight_offset(int head, int layer) const {
    std::size_t off = 0;
    const int trunk = cfg.trunk_layers();
    if (layer < trunk) {
        for (int l = 0; l < layer; ++l) off += layer_size(cfg, l);
        return off;
    }
    off = trunk_size() + static_cast<std::size_t>(head) * head_size();
    for (int l = trunk; l < layer; ++l) off += layer_size(cfg, l);
    return off;
}

std::size_t Params::bias_offset(int head, int layer) const {
    return weight_offset(head, layer) +
           static_cast<std::size_t>(cfg.layer_out(layer)) * cfg.layer_in(layer);
}

std::size_t param_count(const NetConfig& cfg) {
    std::size_t n = 0;
    for (int l = 0; l < cfg.trunk_layers(); ++l) n += layer_size(cfg, l);
    std::size_t head = 0;
    for (int l = cfg.trunk_layers(); l < cfg.layers(); ++l) head += layer_size(cfg, l);
    return n + static_cast<std::size_t>(cfg.num_heads) * head;
}

Params init_params(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Params p;
    p.cfg = cfg;
    p.values.assign(param_count(cfg), 0.0);
    Rng rng(seed);
    auto fill_layer = [&](int head, int layer) {
        const int fan_in = cfg.layer_in(layer);
        const int fan_out = cfg.layer_out(layer);
        // The output layer starts near the image center with a small weight
        // scale: the belief-map loss has no usable gradient between joints
        // whose Gaussians do not overlap, so initial predictions must sit
        // inside the grid rather than scattered around the origin.
        const bool output = layer == cfg.layers() - 1;
        const double s = std::sqrt(6.0 / (fan_in + fan_out)) * (output ? 0.05 : 1.0);
        double* w = p.values.data() + p.weight_offset(head, layer);
        const std::size_t n = static_cast<std::size_t>(fan_in) * fan_out;
        for (std::size_t i = 0; i < n; ++i) w[i] = rng.uniform(-s, s);
        if (output) {
            double* b = p.values.data() + p.bias_offset(head, layer);
            for (int i = 0; i < fan_out; ++i) b[i] = 0.5;
        }
    };
    for (int l = 0; l < cfg.trunk_layers(); ++l) fill_layer(0, l);
    for (int h = 0; h < cfg.num_heads; ++h)
        for (int l = cfg.trunk_layers(); l < cfg.layers(); ++l) fill_layer(h, l);
    return p;
}

namespace {

// y = W x + b, W row-major (out x in).
void affine(const double* w, const double* b, const std::vector<double>& x, int out, int in,
            std::vector<double>& y) {
    y.resize(out);
    for (int r = 0; r < out; ++r) {
        const double* row = w + static_cast<std::size_t>(r) * in;
        double acc = b[r];
        for (int c = 0; c < in; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

void check_head(const NetConfig& cfg, int head) {
    if (cfg.num_heads == 1) {
        if (head != -1 && head != 0)
            throw DataError("net: head must be none for a single-head network");
    } else if (head < 0 || head >= cfg.num_heads) {
        throw DataError("net: invalid head index " + std::to_string(head));
    }
}

}  // namespace

TrunkCache forward_trunk(const Params& params, const Image& image) {
    const NetConfig& cfg = params.cfg;
    if (static_cast<int>(image.pixels.size()) != cfg.input_dim)
        throw DataError("net: image size " + std::to_string(image.pixels.size()) +
                        " does not match input layer " + std::to_string(cfg.input_dim));
    TrunkCache cache;
    std::vector<double> act(image.pixels.begin(), image.pixels.end());
    const int trunk = cfg.trunk_layers();
    const int last = cfg.layers() - 1;
    for (int l = 0; l < trunk; ++l) {
        cache.inputs.push_back(act);
        std::vector<double> pre;
        affine(params.values.data() + params.weight_offset(0, l),
               params.values.data() + params.bias_offset(0, l), act, cfg.layer_out(l),
               cfg.layer_in(l), pre);
        cache.preacts.push_back(pre);
        act.resize(pre.size());
        if (l == last) {
            act = pre;  // no-noise nets: the final trunk layer is the output layer
        } else {
            for (std::size_t i = 0; i < pre.size(); ++i) act[i] = std::tanh(pre[i]);
        }
    }
    cache.output = std::move(act);
    return cache;
}

std::pair<Pose, HeadCache> forward_head(const Params& params, const TrunkCache& trunk,
                                        std::span<const double> noise, int head) {
    const NetConfig& cfg = params.cfg;
    check_head(cfg, head);
    if (static_cast<int>(noise.size()) != cfg.noise_dim)
        throw DataError("net: noise vector size mismatch");
    HeadCache cache;
    cache.head = head < 0 ? 0 : head;
    cache.noise.assign(noise.begin(), noise.end());

    std::vector<double> act = trunk.output;
    const int first = cfg.trunk_layers();
    const int last = cfg.layers() - 1;
    for (int l = first; l < cfg.layers(); ++l) {
        if (l == cfg.injection_layer) act.insert(act.end(), noise.begin(), noise.end());
        cache.inputs.push_back(act);
        std::vector<double> pre;
        affine(params.values.data() + params.weight_offset(cache.head, l),
               params.values.data() + params.bias_offset(cache.head, l), act, cfg.layer_out(l),
               cfg.layer_in(l), pre);
        cache.preacts.push_back(pre);
        if (l == last) {
            act = pre;
        } else {
            act.resize(pre.size());
            for (std::size_t i = 0; i < pre.size(); ++i) act[i] = std::tanh(pre[i]);
        }
    }
    Pose pose;
    pose.xy = act;
    return {std::move(pose), std::move(cache)};
}

std::pair<Pose, ForwardCache> forward(const Params& params, const Image& image,
                                      std::span<const double> noise, int head) {
    ForwardCache cache;
    cache.trunk = forward_trunk(params, image);
    auto [pose, head_cache] = forward_head(params, cache.trunk, noise, head);
    cache.head = std::move(head_cache);
    return {std::move(pose), std::move(cache)};
}

void backward_head_accum(const Params& params, const TrunkCache& trunk, const HeadCache& head,
                         std::span<const double> dpose, std::vector<double>& grad,
                         std::vector<double>& dtrunk) {
    const NetConfig& cfg = params.cfg;
    if (grad.size() != params.values.size()) throw DataError("net: gradient buffer size mismatch");
    if (static_cast<int>(dpose.size()) != cfg.output_dim())
        throw DataError("net: upstream gradient size mismatch");
    const int first = cfg.trunk_layers();
    const int last = cfg.layers() - 1;
    if (head.inputs.size() != static_cast<std::size_t>(cfg.layers() - first))
        throw DataError("net: cache does not match network depth");

    std::vector<double> delta(dpose.begin(), dpose.end());
    for (int l = last; l >= first; --l) {
        const int ci = l - first;
        const std::vector<double>& input = head.inputs[ci];
        const std::vector<double>& pre = head.preacts[ci];
        if (static_cast<int>(input.size()) != cfg.layer_in(l))
            throw DataError("net: cache/layer shape mismatch");
        if (l != last) {
            // delta currently holds dL/d(activation); fold in tanh'.
            for (std::size_t i = 0; i < delta.size(); ++i) {
                const double t = std::tanh(pre[i]);
                delta[i] *= 1.0 - t * t;
            }
        }
        const int out = cfg.layer_out(l);
        const int in = cfg.layer_in(l);
        double* gw = grad.data() + params.weight_offset(head.head, l);
        double* gb = grad.data() + params.bias_offset(head.head, l);
        for (int r = 0; r < out; ++r) {
            double* grow = gw + static_cast<std::size_t>(r) * in;
            const double d = delta[r];
            for (int c = 0; c < in; ++c) grow[c] += d * input[c];
            gb[r] += d;
        }
        // Propagate to the layer input.
        const double* w = params.values.data() + params.weight_offset(head.head, l);
        std::vector<double> dinput(in, 0.0);
        for (int r = 0; r < out; ++r) {
            const double* row = w + static_cast<std::size_t>(r) * in;
            const double d = delta[r];
            for (int c = 0; c < in; ++c) dinput[c] += row[c] * d;
        }
        if (l == cfg.injection_layer) dinput.resize(in - cfg.noise_dim);  // drop the noise slice
        delta = std::move(dinput);
    }
    if (dtrunk.size() != trunk.output.size()) dtrunk.assign(trunk.output.size(), 0.0);
    for (std::size_t i = 0; i < delta.size(); ++i) dtrunk[i] += delta[i];
}

void backward_trunk_accum(const Params& params, const TrunkCache& trunk,
                          std::span<const double> dtrunk, std::vector<double>& grad) {
    const NetConfig& cfg = params.cfg;
    const int trunk_layers = cfg.trunk_layers();
    if (trunk_layers == 0) return;
    const int last = cfg.layers() - 1;
    std::vector<double> delta(dtrunk.begin(), dtrunk.end());
    for (int l = trunk_layers - 1; l >= 0; --l) {
        const std::vector<double>& input = trunk.inputs[l];
        const std::vector<double>& pre = trunk.preacts[l];
        if (l != last) {
            for (std::size_t i = 0; i < delta.size(); ++i) {
                const double t = std::tanh(pre[i]);
                delta[i] *= 1.0 - t * t;
            }
        }
        const int out = cfg.layer_out(l);
        const int in = cfg.layer_in(l);
        double* gw = grad.data() + params.weight_offset(0, l);
        double* gb = grad.data() + params.bias_offset(0, l);
        for (int r = 0; r < out; ++r) {
            double* grow = gw + static_cast<std::size_t>(r) * in;
            const double d = delta[r];
            for (int c = 0; c < in; ++c) grow[c] += d * input[c];
            gb[r] += d;
        }
        if (l == 0) break;
        const double* w = params.values.data() + params.weight_offset(0, l);
        std::vector<double> dinput(in, 0.0);
        for (int r = 0; r < out; ++r) {
            const double* row = w + static_cast<std::size_t>(r) * in;
            const double d = delta[r];
            for (int c = 0; c < in; ++c) dinput[c] += row[c] * d;
        }
        delta = std::move(dinput);
    }
}

std::vector<double> backward(const Params& params, const ForwardCache& cache,
                             std::span<const double> dpose) {
    std::vector<double> grad(params.values.size(), 0.0);
    std::vector<double> dtrunk;
    backward_head_accum(params, cache.trunk, cache.head, dpose, grad, dtrunk);
    backward_trunk_accum(params, cache.trunk, dtrunk, grad);
    return grad;
}

double grad_check(const Params& params, const Image& image, std::span<const double> noise,
                  int head, const PoseLoss& loss, double epsilon) {
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
    auto [pose, cache] = forward(params, image, noise, head);
    auto [value, dpose] = loss(pose);
    if (!std::isfinite(value)) throw NumericError("grad_check: non-finite loss");
    const std::vector<double> analytic = backward(params, cache, dpose);

    Params probe = params;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < probe.values.size(); ++i) {
        const double saved = probe.values[i];
        probe.values[i] = saved + epsilon;
        const double up = loss(forward(probe, image, noise, head).first).first;
        probe.values[i] = saved - epsilon;
        const double down = loss(forward(probe, image, noise, head).first).first;
        probe.values[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("grad_check: non-finite loss");
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string csv_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> parse_csv_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

}  // namespace

void save_checkpoint(const Params& params, const std::string& role, const std::string& decoder,
                     std::uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    const NetConfig& c = params.cfg;
    out << "dcpose-checkpoint 1\n";
    out << "role " << role << "\n";
    out << "decoder " << decoder << "\n";
    out << "input_dim " << c.input_dim << "\n";
    out << "hidden " << csv_ints(c.hidden) << "\n";
    out << "noise_dim " << c.noise_dim << "\n";
    out << "num_joints " << c.num_joints << "\n";
    out << "num_heads " << c.num_heads << "\n";
    out << "injection_layer " << c.injection_layer << "\n";
    out << "seed " << seed << "\n";
    out << "values " << params.values.size() << "\n";
    for (double v : params.values) out << format_double(v) << "\n";
    if (!out) throw DataError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "dcpose-checkpoint" || version != "1")
        throw DataError("unrecognized checkpoint header in " + path);
    Checkpoint ck;
    NetConfig& c = ck.params.cfg;
    std::size_t count = 0;
    std::string key;
    while (in >> key) {
        if (key == "role") in >> ck.role;
        else if (key == "decoder") in >> ck.decoder;
        else if (key == "input_dim") in >> c.input_dim;
        else if (key == "hidden") {
            std::string v;
            in >> v;
            c.hidden = parse_csv_ints(v);
        } else if (key == "noise_dim") in >> c.noise_dim;
        else if (key == "num_joints") in >> c.num_joints;
        else if (key == "num_heads") in >> c.num_heads;
        else if (key == "injection_layer") in >> c.injection_layer;
        else if (key == "seed") in >> ck.seed;
        else if (key == "values") {
            in >> count;
            break;
        } else {
            throw DataError("unknown checkpoint field: " + key);
        }
    }
    if (!in) throw DataError("truncated checkpoint header in " + path);
    c.validate();
    if (count != param_count(c)) throw DataError("checkpoint value count mismatch in " + path);
    ck.params.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string tok;
        if (!(in >> tok)) throw DataError("truncated checkpoint values in " + path);
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw DataError("bad checkpoint value '" + tok + "' in " + path);
        ck.params.values[i] = v;
    }
    return ck;
}

}  // namespace dcpose::net
