#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jcnp/model.hpp"

namespace jcnp {

struct ParamCount {
    std::size_t total = 0;         // weights + biases + PReLU slopes
    std::size_t prelu_slopes = 0;

    std::size_t without_slopes() const { return total - prelu_slopes; }
    double millions() const { return static_cast<double>(total) / 1e6; }
};

ParamCount count_params(const NetworkGraph& graph);

/// Receptive field and input-pixel stride ("jump") at one layer's output.
struct LayerRf {
    long rf = 1;
    long jump = 1;
};

/**
 * Per-layer receptive fields by the usual recurrence: a k x k layer adds
 * (k - 1) * jump; pooling multiplies the jump by its stride; a stride-2
 * deconv halves the jump first and then adds (k - 1) * jump_out. Joins (add,
 * concat) take the largest field among their operands.
 */
std::vector<LayerRf> layer_receptive_fields(const NetworkGraph& graph);

struct RfReport {
    /// At the deepest mapping output: extraction L0..LN, pools, mapping at LN.
    long pyramid_path_rf = 0;
    /// At the network output, through the deconvs and the fusion convs.
    long end_to_end_rf = 0;
    std::string convention;
};

RfReport receptive_field(const JcnpSpec& spec);

}  // namespace jcnp
