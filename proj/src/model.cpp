#include "jcnp/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "jcnp/ops.hpp"

namespace jcnp {

JcnpSpec JcnpSpec::with_levels(int levels, int guidance_channels) {
    JcnpSpec spec;
    spec.target.levels = levels;
    spec.guidance.levels = levels;
    spec.guidance.in_channels = guidance_channels;
    return spec;
}

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Input: return "input";
        case LayerKind::Conv: return "conv";
        case LayerKind::Prelu: return "prelu";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Deconv: return "deconv";
        case LayerKind::Add: return "add";
        case LayerKind::Concat: return "concat";
    }
    return "?";
}

int NetworkGraph::push(LayerSpec layer) {
    for (int in : layer.inputs) {
        if (in < 0 || in >= static_cast<int>(layers_.size())) {
            throw std::out_of_range("layer '" + layer.name + "' refers to unknown layer " +
                                    std::to_string(in));
        }
    }
    layers_.push_back(std::move(layer));
    return static_cast<int>(layers_.size()) - 1;
}

int NetworkGraph::add_input(std::string name, int channels) {
    const int id = push({LayerKind::Input, std::move(name), {}, channels, channels, 1, 1});
    inputs_.push_back(id);
    return id;
}

int NetworkGraph::add_conv(std::string name, int input, int out_channels, int kernel) {
    const int in = layer(input).out_channels;
    return push({LayerKind::Conv, std::move(name), {input}, in, out_channels, kernel, 1});
}

int NetworkGraph::add_prelu(std::string name, int input) {
    const int c = layer(input).out_channels;
    return push({LayerKind::Prelu, std::move(name), {input}, c, c, 1, 1});
}

int NetworkGraph::add_maxpool(std::string name, int input) {
    const int c = layer(input).out_channels;
    return push({LayerKind::MaxPool, std::move(name), {input}, c, c, 2, 2});
}

int NetworkGraph::add_deconv(std::string name, int input, int out_channels, int kernel) {
    const int in = layer(input).out_channels;
    return push({LayerKind::Deconv, std::move(name), {input}, in, out_channels, kernel, 2});
}

int NetworkGraph::add_add(std::string name, int a, int b) {
    if (layer(a).out_channels != layer(b).out_channels) {
        throw std::invalid_argument("add layer '" + name + "' joins mismatched channel counts");
    }
    const int c = layer(a).out_channels;
    return push({LayerKind::Add, std::move(name), {a, b}, c, c, 1, 1});
}

int NetworkGraph::add_concat(std::string name, int a, int b) {
    const int ca = layer(a).out_channels, cb = layer(b).out_channels;
    return push({LayerKind::Concat, std::move(name), {a, b}, ca + cb, ca + cb, 1, 1});
}

int NetworkGraph::find(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<ParamSpec> NetworkGraph::parameters() const {
    std::vector<ParamSpec> out;
    for (const auto& l : layers_) {
        const auto k = static_cast<std::size_t>(l.kernel);
        const auto in = static_cast<std::size_t>(l.in_channels);
        const auto co = static_cast<std::size_t>(l.out_channels);
        switch (l.kind) {
            case LayerKind::Conv:
                out.push_back({l.name + ".weight", {co, in, k, k}, l.kind});
                out.push_back({l.name + ".bias", {co}, l.kind});
                break;
            case LayerKind::Deconv:
                out.push_back({l.name + ".weight", {in, co, k, k}, l.kind});
                out.push_back({l.name + ".bias", {co}, l.kind});
                break;
            case LayerKind::Prelu:
                out.push_back({l.name + ".alpha", {co}, l.kind});
                break;
            default:
                break;
        }
    }
    return out;
}

std::size_t NetworkGraph::count(LayerKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        layers_.begin(), layers_.end(), [kind](const LayerSpec& l) { return l.kind == kind; }));
}

namespace {

std::string level_name(const std::string& prefix, int level, const char* part) {
    return prefix + ".L" + std::to_string(level) + "." + part;
}

}  // namespace

int append_cnp(NetworkGraph& graph, const CnpSpec& spec, int input, const std::string& prefix) {
    if (spec.levels < 0) throw std::invalid_argument("pyramid levels must be >= 0");
    const int k = spec.kernel;

    std::vector<int> extracted;
    int cur = input;
    for (int level = 0; level <= spec.levels; ++level) {
        if (level > 0) cur = graph.add_maxpool(level_name(prefix, level, "pool"), cur);
        cur = graph.add_conv(level_name(prefix, level, "extract.conv1"), cur, spec.feat_channels, k);
        cur = graph.add_prelu(level_name(prefix, level, "extract.prelu1"), cur);
        cur = graph.add_conv(level_name(prefix, level, "extract.conv2"), cur, spec.feat_channels, k);
        cur = graph.add_prelu(level_name(prefix, level, "extract.prelu2"), cur);
        extracted.push_back(cur);
    }

    std::vector<int> mapped;
    for (int level = 0; level <= spec.levels; ++level) {
        int m = extracted[static_cast<std::size_t>(level)];
        for (int j = 0; j < 3; ++j) {
            const std::string idx = std::to_string(j + 1);
            m = graph.add_conv(level_name(prefix, level, ("map.conv" + idx).c_str()), m,
                               spec.map_channels[static_cast<std::size_t>(j)], k);
            if (j < 2 || spec.prelu_after_last_mapping) {
                m = graph.add_prelu(level_name(prefix, level, ("map.prelu" + idx).c_str()), m);
            }
        }
        mapped.push_back(m);
    }

    int rec = mapped.back();
    for (int level = spec.levels - 1; level >= 0; --level) {
        const int up = graph.add_deconv(level_name(prefix, level, "up"), rec,
                                        spec.map_channels[2], k);
        rec = graph.add_add(level_name(prefix, level, "fuse"), mapped[static_cast<std::size_t>(level)],
                            up);
    }
    return rec;
}

NetworkGraph build_cnp(const CnpSpec& spec) {
    NetworkGraph graph;
    const int in = graph.add_input("input", spec.in_channels);
    graph.set_output(append_cnp(graph, spec, in, "cnp"));
    return graph;
}

NetworkGraph build_jcnp(const JcnpSpec& spec) {
    if (spec.target.levels != spec.guidance.levels) {
        throw std::invalid_argument("both pyramids must have the same number of levels");
    }
    if (spec.target.in_channels != 1) {
        throw std::invalid_argument("the target pyramid takes a single-channel image");
    }
    NetworkGraph graph;
    const int target = graph.add_input("target", spec.target.in_channels);
    const int guidance = graph.add_input("guidance", spec.guidance.in_channels);
    const int ft = append_cnp(graph, spec.target, target, "cnp_t");
    const int fg = append_cnp(graph, spec.guidance, guidance, "cnp_g");

    int f = graph.add_concat("fuse.concat_features", ft, fg);
    f = graph.add_conv("fuse.conv1", f, spec.fusion_channels[0]);
    f = graph.add_conv("fuse.conv2", f, spec.fusion_channels[1]);
    f = graph.add_prelu("fuse.prelu2", f);
    if (spec.target_skip) f = graph.add_concat("fuse.concat_target", f, target);
    f = graph.add_conv("fuse.conv3", f, spec.fusion_channels[2]);
    graph.set_output(f);
    return graph;
}

template <typename Real>
Network<Real>::Network(NetworkGraph graph, std::uint64_t seed) : graph_(std::move(graph)) {
    std::mt19937_64 rng(seed);
    for (const auto& p : graph_.parameters()) {
        const std::size_t n = shape_numel(p.shape);
        std::vector<Real> values(n, Real(0));
        const bool is_weight = p.name.ends_with(".weight");
        if (p.owner == LayerKind::Prelu) {
            std::fill(values.begin(), values.end(), Real(0.25));
        } else if (is_weight) {
            // Conv weights are [out, in, k, k]; deconv weights are [in, out, k, k].
            const std::size_t in = p.owner == LayerKind::Conv ? p.shape[1] : p.shape[0];
            const double fan_in = static_cast<double>(in * p.shape[2] * p.shape[3]);
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
            for (auto& v : values) v = static_cast<Real>(dist(rng));
        }
        order_.push_back(p.name);
        params_.emplace(p.name, Tensor<Real>::from(p.shape, std::move(values), true));
    }
}

template <typename Real>
Tensor<Real> Network<Real>::forward(Tape<Real>& tape, std::span<const Tensor<Real>> inputs) const {
    const auto& input_ids = graph_.inputs();
    if (inputs.size() != input_ids.size()) {
        throw DimensionError("network expects " + std::to_string(input_ids.size()) +
                             " inputs, got " + std::to_string(inputs.size()));
    }
    const auto& layers = graph_.layers();
    std::vector<Tensor<Real>> act(layers.size());
    // Last consumer of each activation, so inference can drop it early.
    std::vector<int> last_use(layers.size(), -1);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (int in : layers[i].inputs) last_use[static_cast<std::size_t>(in)] = static_cast<int>(i);
    }

    for (std::size_t i = 0; i < input_ids.size(); ++i) {
        const auto& l = graph_.layer(input_ids[i]);
        const auto& t = inputs[i];
        if (!t.defined() || t.rank() != 4 || t.dim(1) != static_cast<std::size_t>(l.out_channels)) {
            throw DimensionError("input '" + l.name + "' must be [B," +
                                 std::to_string(l.out_channels) + ",H,W], got " +
                                 (t.defined() ? shape_str(t.shape()) : "undefined"));
        }
        act[static_cast<std::size_t>(input_ids[i])] = t;
    }

    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        auto in = [&](std::size_t k) -> const Tensor<Real>& {
            return act[static_cast<std::size_t>(l.inputs[k])];
        };
        switch (l.kind) {
            case LayerKind::Input:
                break;
            case LayerKind::Conv:
                act[i] = conv2d(tape, in(0), parameter(l.name + ".weight"), parameter(l.name + ".bias"));
                break;
            case LayerKind::Prelu:
                act[i] = prelu(tape, in(0), parameter(l.name + ".alpha"));
                break;
            case LayerKind::MaxPool:
                act[i] = maxpool2(tape, in(0));
                break;
            case LayerKind::Deconv:
                act[i] = deconv2d(tape, in(0), parameter(l.name + ".weight"),
                                  parameter(l.name + ".bias"));
                break;
            case LayerKind::Add:
                act[i] = add(tape, in(0), in(1));
                break;
            case LayerKind::Concat:
                act[i] = concat_channels(tape, in(0), in(1));
                break;
        }
        if (!tape.recording()) {
            for (int src : l.inputs) {
                if (last_use[static_cast<std::size_t>(src)] == static_cast<int>(i) &&
                    src != graph_.output()) {
                    act[static_cast<std::size_t>(src)] = Tensor<Real>();
                }
            }
        }
    }
    return act[static_cast<std::size_t>(graph_.output())];
}

template <typename Real>
std::vector<NamedParameter<Real>> Network<Real>::parameters() const {
    std::vector<NamedParameter<Real>> out;
    out.reserve(order_.size());
    for (const auto& name : order_) out.push_back({name, params_.at(name)});
    return out;
}

template <typename Real>
Tensor<Real>& Network<Real>::parameter(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
}

template <typename Real>
const Tensor<Real>& Network<Real>::parameter(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
}

template <typename Real>
std::size_t Network<Real>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

template <typename Real>
void Network<Real>::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

template <typename Real>
void JcnpModel<Real>::make_target_identity() {
    if (!spec_.target_skip) throw std::logic_error("identity construction needs the target skip");
    auto& w = net_.parameter("fuse.conv3.weight");
    auto& b = net_.parameter("fuse.conv3.bias");
    std::fill(w.data().begin(), w.data().end(), Real(0));
    std::fill(b.data().begin(), b.data().end(), Real(0));
    // weight [1, C_features + 1, 3, 3]; the target is the last input channel.
    const std::size_t target_channel = w.dim(1) - 1;
    w.data()[target_channel * 9 + 4] = Real(1);
}

template class Network<float>;
template class Network<double>;
template class JcnpModel<float>;
template class JcnpModel<double>;

}  // namespace jcnp
