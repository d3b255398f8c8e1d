#include "jcnp/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "jcnp/ops.hpp"

namespace jcnp {

Tensor<float> image_to_tensor(const Image& image) {
    const auto c = static_cast<std::size_t>(image.channels);
    const std::size_t n = image.pixel_count();
    std::vector<float> values(n * c);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) values[k * n + i] = static_cast<float>(image.values[i * c + k]);
    return Tensor<float>::from(
        {1, c, static_cast<std::size_t>(image.height), static_cast<std::size_t>(image.width)},
        std::move(values));
}

Image tensor_to_image(const Tensor<float>& t, std::size_t batch_index) {
    const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3), n = h * w;
    Image img = Image::zeros(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
    const float* src = t.data().data() + batch_index * c * n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) img.values[i * c + k] = src[k * n + i];
    return img;
}

namespace {

void pack(const Image& image, float* dst) {
    const auto c = static_cast<std::size_t>(image.channels);
    const std::size_t n = image.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) dst[k * n + i] = static_cast<float>(image.values[i * c + k]);
}

}  // namespace

Batch make_batch(const std::vector<PatchTriple>& patches, const std::vector<std::size_t>& indices) {
    const auto& first = patches.at(indices.at(0));
    const auto b = indices.size();
    const auto h = static_cast<std::size_t>(first.gt.height), w = static_cast<std::size_t>(first.gt.width);
    const auto cg = static_cast<std::size_t>(first.guidance.channels);
    Batch batch{Tensor<float>::zeros({b, 1, h, w}), Tensor<float>::zeros({b, cg, h, w}),
                Tensor<float>::zeros({b, 1, h, w})};
    for (std::size_t i = 0; i < b; ++i) {
        const auto& p = patches.at(indices[i]);
        if (static_cast<std::size_t>(p.gt.height) != h || static_cast<std::size_t>(p.gt.width) != w) {
            throw DimensionError("patches in one batch must share a size");
        }
        pack(p.lr_target, batch.target.data().data() + i * h * w);
        pack(p.guidance, batch.guidance.data().data() + i * cg * h * w);
        pack(p.gt, batch.gt.data().data() + i * h * w);
    }
    return batch;
}

TrainResult train(JcnpModel<float>& model, const std::vector<PatchTriple>& dataset,
                  const TrainOptions& options) {
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    if (options.batch_size < 1 || options.steps < 0) {
        throw std::invalid_argument("batch size must be >= 1 and steps >= 0");
    }
    const std::size_t divisor = std::size_t{1} << model.spec().levels();
    for (const auto& p : dataset) {
        if (p.gt.width % divisor != 0 || p.gt.height % divisor != 0) {
            throw std::invalid_argument("patch size must be divisible by 2^levels = " + std::to_string(divisor));
        }
    }

#ifdef __GLIBC__
    // Activations are freed and reallocated every step; keeping them off mmap
    // avoids re-faulting the same pages each time.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    Optimizer<float> optimizer(model.network().parameters(), options.schedule, options.optimizer);
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(dataset.size());
    std::size_t cursor = order.size();
    std::vector<std::size_t> indices(static_cast<std::size_t>(options.batch_size));

    TrainResult result;
    for (int step = 0; step < options.steps; ++step) {
        for (auto& idx : indices) {
            if (cursor == order.size()) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            idx = order[cursor++];
        }
        const Batch batch = make_batch(dataset, indices);

        optimizer.zero_grad();
        Tape<float> tape;
        const auto pred = model.forward(tape, batch.target, batch.guidance);
        const auto loss = mse_loss(tape, pred, batch.gt);
        const double value = loss.item();
        if (!std::isfinite(value)) {
            throw NumericError("non-finite training loss at step " + std::to_string(step));
        }
        tape.backward(loss);
        optimizer.step();

        result.steps_run = step + 1;
        result.last_loss = value;
        const bool stop = options.stop_below && value < *options.stop_below;
        if (options.log_every > 0 && (step % options.log_every == 0 || stop || step + 1 == options.steps)) {
            result.history.push_back({step, value});
            if (options.on_log) options.on_log(step, value);
        }
        if (options.checkpoint_every > 0 && options.on_checkpoint &&
            (step + 1) % options.checkpoint_every == 0) {
            options.on_checkpoint(step + 1, model);
        }
        if (stop) break;
    }
    return result;
}

Image reflect_pad(const Image& image, int width, int height) {
    if (width < image.width || height < image.height) {
        throw std::invalid_argument("reflect_pad cannot shrink an image");
    }
    auto mirror = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i %= period;
        return i < n ? i : period - i;
    };
    Image out = Image::zeros(width, height, image.channels);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < image.channels; ++c)
                out.at(x, y, c) = image.at(mirror(x, image.width), mirror(y, image.height), c);
    return out;
}

Image run_network(const JcnpModel<float>& model, const Image& up_target, const Image& guidance) {
    Tape<float> tape(false);
    const auto out = model.forward(tape, image_to_tensor(up_target), image_to_tensor(guidance));
    return tensor_to_image(out);
}

SrResult super_resolve(const JcnpModel<float>& model, int trained_factor, const Image& lr_target,
                       const Image& guidance, int factor) {
    if (factor < 1 || guidance.width != lr_target.width * factor ||
        guidance.height != lr_target.height * factor) {
        throw DimensionError("guidance is " + std::to_string(guidance.width) + "x" +
                             std::to_string(guidance.height) + " but the target is " +
                             std::to_string(lr_target.width) + "x" + std::to_string(lr_target.height) +
                             " at factor " + std::to_string(factor));
    }
    const Image target = to_luminance(lr_target);
    const Image guide = model.spec().guidance.in_channels == 1 ? to_luminance(guidance) : to_rgb(guidance);
    const Image up = upsample_bicubic(target, factor);

    const int divisor = 1 << model.spec().levels();
    const int pw = (up.width + divisor - 1) / divisor * divisor;
    const int ph = (up.height + divisor - 1) / divisor * divisor;
    const Image raw = run_network(model, reflect_pad(up, pw, ph), reflect_pad(guide, pw, ph));

    SrResult result;
    result.factor_mismatch = trained_factor != factor;
    result.image = crop(raw, 0, 0, up.width, up.height);
    for (double& v : result.image.values) v = std::clamp(v, 0.0, 1.0);
    return result;
}

}  // namespace jcnp
