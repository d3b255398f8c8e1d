#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "jcnp/autograd.hpp"
#include "jcnp/optimizer.hpp"
#include "jcnp/tensor.hpp"

namespace jcnp {

/// One convolutional neural pyramid. Level 0 runs at input resolution; level
/// i runs at 1/2^i of it.
struct CnpSpec {
    int levels = 2;
    int in_channels = 1;
    int feat_channels = 64;
    std::array<int, 3> map_channels{16, 16, 64};
    int kernel = 3;
    /// PReLU after the third mapping conv. Deconvs never get one.
    bool prelu_after_last_mapping = true;

    bool operator==(const CnpSpec&) const = default;
};

/// Target pyramid + guidance pyramid + fusion CNN with a target skip into the
/// last fusion conv.
struct JcnpSpec {
    CnpSpec target;
    CnpSpec guidance;
    std::array<int, 3> fusion_channels{32, 1, 1};
    bool target_skip = true;

    static JcnpSpec with_levels(int levels, int guidance_channels = 1);
    int levels() const { return target.levels; }

    bool operator==(const JcnpSpec&) const = default;
};

enum class LayerKind { Input, Conv, Prelu, MaxPool, Deconv, Add, Concat };

const char* to_string(LayerKind kind);

struct LayerSpec {
    LayerKind kind;
    std::string name;
    std::vector<int> inputs;  // indices of earlier layers
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
};

struct ParamSpec {
    std::string name;
    Shape shape;
    LayerKind owner;
};

/**
 * Declarative network wiring. Layers are stored in execution order; each
 * layer only refers to earlier ones, so a single pass in index order is a
 * valid schedule. Parameter shapes, parameter counts and receptive fields are
 * all derived from this description.
 */
class NetworkGraph {
public:
    int add_input(std::string name, int channels);
    int add_conv(std::string name, int input, int out_channels, int kernel = 3);
    int add_prelu(std::string name, int input);
    int add_maxpool(std::string name, int input);
    int add_deconv(std::string name, int input, int out_channels, int kernel = 3);
    int add_add(std::string name, int a, int b);
    int add_concat(std::string name, int a, int b);
    void set_output(int layer) { output_ = layer; }

    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    const LayerSpec& layer(int index) const { return layers_.at(static_cast<std::size_t>(index)); }
    int find(const std::string& name) const;  // -1 if absent
    const std::vector<int>& inputs() const noexcept { return inputs_; }
    int output() const noexcept { return output_; }

    std::vector<ParamSpec> parameters() const;
    std::size_t count(LayerKind kind) const;

private:
    int push(LayerSpec layer);

    std::vector<LayerSpec> layers_;
    std::vector<int> inputs_;
    int output_ = -1;
};

/// Appends one pyramid reading from `input`; returns the level-0
/// reconstruction layer. Layer names are prefixed with `prefix`.
int append_cnp(NetworkGraph& graph, const CnpSpec& spec, int input, const std::string& prefix);

/// Standalone pyramid with a single input named "input".
NetworkGraph build_cnp(const CnpSpec& spec);

/// Full model with inputs "target" (index 0) and "guidance" (index 1).
NetworkGraph build_jcnp(const JcnpSpec& spec);

/**
 * Parameters plus an executor for a NetworkGraph.
 *
 * Weights are initialised zero-mean normal with std sqrt(2 / fan_in), where
 * fan_in = in_channels * k * k for both convs and deconvs; biases are 0 and
 * PReLU slopes 0.25.
 */
template <typename Real>
class Network {
public:
    explicit Network(NetworkGraph graph, std::uint64_t seed = 0);

    const NetworkGraph& graph() const noexcept { return graph_; }

    /// Inputs are matched positionally to graph().inputs().
    Tensor<Real> forward(Tape<Real>& tape, std::span<const Tensor<Real>> inputs) const;

    std::vector<NamedParameter<Real>> parameters() const;
    Tensor<Real>& parameter(const std::string& name);
    const Tensor<Real>& parameter(const std::string& name) const;
    std::size_t parameter_count() const;

    void zero_grad();

private:
    NetworkGraph graph_;
    std::vector<std::string> order_;
    std::map<std::string, Tensor<Real>> params_;
};

extern template class Network<float>;
extern template class Network<double>;

/// Convenience wrapper binding a Network to its JcnpSpec.
template <typename Real>
class JcnpModel {
public:
    explicit JcnpModel(const JcnpSpec& spec, std::uint64_t seed = 0)
        : spec_(spec), net_(build_jcnp(spec), seed) {}

    const JcnpSpec& spec() const noexcept { return spec_; }
    Network<Real>& network() noexcept { return net_; }
    const Network<Real>& network() const noexcept { return net_; }

    /// target: [B,1,H,W] upsampled target; guidance: [B,Cg,H,W].
    Tensor<Real> forward(Tape<Real>& tape, const Tensor<Real>& target,
                         const Tensor<Real>& guidance) const {
        const Tensor<Real> inputs[2] = {target, guidance};
        return net_.forward(tape, inputs);
    }

    /// Sets the last fusion conv to pass the target channel through unchanged.
    void make_target_identity();

private:
    JcnpSpec spec_;
    Network<Real> net_;
};

extern template class JcnpModel<float>;
extern template class JcnpModel<double>;

}  // namespace jcnp
