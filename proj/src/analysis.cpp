#include "jcnp/analysis.hpp"

#include <algorithm>
#include <stdexcept>

namespace jcnp {

ParamCount count_params(const NetworkGraph& graph) {
    ParamCount count;
    for (const auto& p : graph.parameters()) {
        const std::size_t n = shape_numel(p.shape);
        count.total += n;
        if (p.owner == LayerKind::Prelu) count.prelu_slopes += n;
    }
    return count;
}

std::vector<LayerRf> layer_receptive_fields(const NetworkGraph& graph) {
    const auto& layers = graph.layers();
    std::vector<LayerRf> rf(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.kind == LayerKind::Input) continue;
        LayerRf cur = rf[static_cast<std::size_t>(l.inputs[0])];
        for (std::size_t k = 1; k < l.inputs.size(); ++k) {
            const LayerRf& other = rf[static_cast<std::size_t>(l.inputs[k])];
            if (other.rf > cur.rf) cur = other;
        }
        switch (l.kind) {
            case LayerKind::Conv:
                cur.rf += (l.kernel - 1) * cur.jump;
                break;
            case LayerKind::MaxPool:
                cur.rf += (l.kernel - 1) * cur.jump;
                cur.jump *= l.stride;
                break;
            case LayerKind::Deconv:
                if (cur.jump % l.stride != 0) {
                    throw std::logic_error("deconv '" + l.name + "' upsamples past input resolution");
                }
                cur.jump /= l.stride;
                cur.rf += (l.kernel - 1) * cur.jump;
                break;
            default:
                break;
        }
        rf[i] = cur;
    }
    return rf;
}

RfReport receptive_field(const JcnpSpec& spec) {
    const NetworkGraph graph = build_jcnp(spec);
    const auto rf = layer_receptive_fields(graph);
    const std::string deepest = "cnp_t.L" + std::to_string(spec.levels()) + ".map.conv3";
    const int deepest_id = graph.find(deepest);
    if (deepest_id < 0) throw std::logic_error("missing layer " + deepest);

    RfReport report;
    report.pyramid_path_rf = rf[static_cast<std::size_t>(deepest_id)].rf;
    report.end_to_end_rf = rf[static_cast<std::size_t>(graph.output())].rf;
    report.convention =
        "pyramid path: extraction L0..LN with 2x2 pools, then mapping at LN; "
        "end to end: adds the stride-2 deconvs back to L0 and the three fusion convs";
    return report;
}

}  // namespace jcnp
