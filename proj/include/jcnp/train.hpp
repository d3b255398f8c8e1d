#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jcnp/dataset.hpp"
#include "jcnp/model.hpp"
#include "jcnp/optimizer.hpp"

namespace jcnp {

/// Training produced a non-finite loss.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainOptions {
    int steps = 20000;
    int batch_size = 8;
    LearningRateSchedule schedule;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 42;
    int log_every = 100;
    /// 0 disables periodic checkpoints.
    int checkpoint_every = 0;
    std::function<void(int step, const JcnpModel<float>&)> on_checkpoint;
    std::function<void(int step, double loss)> on_log;
    /// Stop as soon as a minibatch loss falls below this value.
    std::optional<double> stop_below;
};

struct LossRecord {
    int step;
    double loss;
};

struct TrainResult {
    std::vector<LossRecord> history;
    int steps_run = 0;
    double last_loss = 0.0;
};

struct Batch {
    Tensor<float> target;
    Tensor<float> guidance;
    Tensor<float> gt;
};
/// Packs the patches at `indices` into NCHW tensors.
Batch make_batch(const std::vector<PatchTriple>& patches, const std::vector<std::size_t>& indices);

/// Converts an interleaved image into a [1, C, H, W] tensor.
Tensor<float> image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor<float>& t, std::size_t batch_index = 0);

/**
 * Minibatch training of mse_loss(model(target, guidance), gt). Minibatches are
 * drawn by walking seeded per-epoch permutations of the dataset, so a given
 * seed and dataset always produce the same parameter trajectory.
 *
 * Throws std::invalid_argument on an empty dataset and NumericError naming
 * the step when the loss becomes non-finite.
 */
TrainResult train(JcnpModel<float>& model, const std::vector<PatchTriple>& dataset,
                  const TrainOptions& options);

struct SrResult {
    Image image;
    bool factor_mismatch = false;
};

/**
 * Upsamples lr_target bicubically to the guidance grid, reflect-pads both on
 * the right/bottom to a multiple of 2^levels, runs the model, crops back and
 * clamps to [0, 1]. Guidance is converted to the model's channel count.
 */
SrResult super_resolve(const JcnpModel<float>& model, int trained_factor, const Image& lr_target,
                       const Image& guidance, int factor);

/// Runs the network on an already-upsampled target; no padding or clamping.
Image run_network(const JcnpModel<float>& model, const Image& up_target, const Image& guidance);

/// Mirror-reflects (without repeating the edge pixel) to the new size.
Image reflect_pad(const Image& image, int width, int height);

}  // namespace jcnp
