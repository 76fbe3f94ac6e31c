#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "geoevent/types.hpp"

namespace geoevent {

/// A square RGB patch, channel-major (c, y, x), values in [0, 1].
struct Crop {
    int size = 0;
    std::vector<double> pixels;  // 3 * size * size
    std::string source_image_id;
    int crop_index = 0;

    std::size_t element_count() const { return pixels.size(); }
    double at(int channel, int y, int x) const {
        return pixels[(static_cast<std::size_t>(channel) * size + y) * size + x];
    }
};

/// One 3x3 convolution, padding 1, optionally preceded by 2x nearest-neighbour
/// upsampling.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    bool upsample = false;
    bool activation = true;  // leaky rectifier after the convolution

    std::size_t weight_count() const {
        return static_cast<std::size_t>(in_channels) * out_channels * 9;
    }
    std::size_t parameter_count() const { return weight_count() + out_channels; }
    bool operator==(const ConvSpec&) const = default;
};

inline constexpr double kLeakySlope = 0.1;

/// Convolutional autoencoder:
///   conv 3->8 /2, conv 8->16 /2  (latent (S/4)x(S/4)x16)
///   up x2, conv 16->8, up x2, conv 8->3 (linear output)
/// All parameters live in one flat vector in layer order (weights, then biases).
class AEModel {
public:
    AEModel() = default;

    /// Glorot-uniform weights, zero biases.
    static AEModel init(std::uint64_t seed, int crop_size = 32);

    static std::vector<ConvSpec> topology();

    int crop_size() const { return crop_size_; }
    const std::vector<ConvSpec>& layers() const { return layers_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::size_t layer_offset(std::size_t layer) const { return offsets_.at(layer); }

    /// Mean loss per epoch of the last training run.
    const std::vector<double>& loss_history() const { return loss_history_; }
    double final_training_loss() const {
        return loss_history_.empty() ? 0.0 : loss_history_.back();
    }
    void set_loss_history(std::vector<double> h) { loss_history_ = std::move(h); }

    void save(const std::filesystem::path& path) const;
    static AEModel load(const std::filesystem::path& path);

    bool operator==(const AEModel& o) const {
        return crop_size_ == o.crop_size_ && layers_ == o.layers_ && params_ == o.params_;
    }

private:
    AEModel(int crop_size, std::vector<ConvSpec> layers);

    int crop_size_ = 0;
    std::vector<ConvSpec> layers_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
    std::vector<double> loss_history_;
};

struct TrainOptions {
    int epochs = 30;
    double learning_rate = 1e-3;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Reconstruction of one crop (same shape, channel-major).
std::vector<double> forward(const AEModel& model, const Crop& crop);

/// Squared Euclidean distance between a crop and a reconstruction of it.
double reconstruction_error(const Crop& crop, std::span<const double> reconstruction);
double reconstruction_error(const AEModel& model, const Crop& crop);

/// Per-crop reconstruction errors, evaluated in batches.
std::vector<double> reconstruction_errors(const AEModel& model, std::span<const Crop> crops);

/// Mean-squared-error loss over `crops` (mean over crops and elements) and its
/// gradient with respect to every parameter, in parameter order.
double loss_and_gradient(const AEModel& model, std::span<const Crop> crops,
                         std::vector<double>& gradient);

/// Mini-batch Adam on mean squared error. Throws DivergenceError on a
/// non-finite loss.
AEModel train(AEModel model, std::span<const Crop> crops, const TrainOptions& options);

}  // namespace geoevent
