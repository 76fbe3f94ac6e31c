#include "geoevent/autoencoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace geoevent {

namespace {

using Matrix = Eigen::MatrixXd;  // activations: channels x (batch * height * width)
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Copies 3x3 neighbourhoods (padding 1) into columns ordered (ky, kx, channel).
void im2col(const Matrix& in, int channels, int batch, int height, int width, int stride,
            int out_h, int out_w, Matrix& cols) {
    const int k = 9 * channels;
    cols.resize(k, static_cast<Eigen::Index>(batch) * out_h * out_w);
    const double* src = in.data();
    double* dst = cols.data();
    for (int b = 0; b < batch; ++b) {
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double* col = dst + ((static_cast<std::size_t>(b) * out_h + oy) * out_w + ox) * k;
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = oy * stride + ky - 1;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = ox * stride + kx - 1;
                        double* slot = col + (ky * 3 + kx) * channels;
                        if (iy < 0 || iy >= height || ix < 0 || ix >= width) {
                            std::fill(slot, slot + channels, 0.0);
                        } else {
                            const double* px =
                                src + ((static_cast<std::size_t>(b) * height + iy) * width + ix) *
                                          channels;
                            std::copy(px, px + channels, slot);
                        }
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatters column gradients back onto the input grid.
void col2im(const Matrix& cols, int channels, int batch, int height, int width, int stride,
            int out_h, int out_w, Matrix& out) {
    const int k = 9 * channels;
    out.setZero(channels, static_cast<Eigen::Index>(batch) * height * width);
    const double* src = cols.data();
    double* dst = out.data();
    for (int b = 0; b < batch; ++b) {
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                const double* col =
                    src + ((static_cast<std::size_t>(b) * out_h + oy) * out_w + ox) * k;
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= height) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int ix = ox * stride + kx - 1;
                        if (ix < 0 || ix >= width) continue;
                        const double* slot = col + (ky * 3 + kx) * channels;
                        double* px =
                            dst + ((static_cast<std::size_t>(b) * height + iy) * width + ix) *
                                      channels;
                        for (int c = 0; c < channels; ++c) px[c] += slot[c];
                    }
                }
            }
        }
    }
}

int floor_half(int v) { return v >= 0 ? v / 2 : -((1 - v) / 2); }

// A 2x nearest-neighbour upsample followed by a 3x3 convolution equals, at
// source resolution, four 3x3 "phase" convolutions (one per output parity)
// whose kernels are sums of the original taps. Rows of the expanded matrix
// are (phase, out_channel); columns follow the im2col order.
Matrix expand_phase_weights(const double* w, int out_c, int in_c) {
    ConstMatrixMap weights(w, out_c, 9 * in_c);
    Matrix e = Matrix::Zero(4 * out_c, 9 * in_c);
    for (int py = 0; py < 2; ++py) {
        for (int px = 0; px < 2; ++px) {
            const int phase = py * 2 + px;
            for (int ky = 0; ky < 3; ++ky) {
                const int ry = floor_half(py + ky - 1) + 1;
                for (int kx = 0; kx < 3; ++kx) {
                    const int rx = floor_half(px + kx - 1) + 1;
                    e.block(phase * out_c, (ry * 3 + rx) * in_c, out_c, in_c) +=
                        weights.block(0, (ky * 3 + kx) * in_c, out_c, in_c);
                }
            }
        }
    }
    return e;
}

// Adjoint of expand_phase_weights.
void reduce_phase_gradient(const Matrix& d_expanded, int out_c, int in_c, double* d_w) {
    MatrixMap d_weights(d_w, out_c, 9 * in_c);
    for (int py = 0; py < 2; ++py) {
        for (int px = 0; px < 2; ++px) {
            const int phase = py * 2 + px;
            for (int ky = 0; ky < 3; ++ky) {
                const int ry = floor_half(py + ky - 1) + 1;
                for (int kx = 0; kx < 3; ++kx) {
                    const int rx = floor_half(px + kx - 1) + 1;
                    d_weights.block(0, (ky * 3 + kx) * in_c, out_c, in_c) +=
                        d_expanded.block(phase * out_c, (ry * 3 + rx) * in_c, out_c, in_c);
                }
            }
        }
    }
}

// (phase, channel) x source positions  ->  channel x upsampled positions
void interleave_phases(const Matrix& phased, int channels, int batch, int height, int width,
                       Matrix& out) {
    const int oh = height * 2, ow = width * 2;
    out.resize(channels, static_cast<Eigen::Index>(batch) * oh * ow);
    const double* src = phased.data();
    double* dst = out.data();
    for (int b = 0; b < batch; ++b) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const auto n = (static_cast<std::size_t>(b) * height + y) * width + x;
                const double* col = src + n * 4 * channels;
                for (int phase = 0; phase < 4; ++phase) {
                    const int yy = 2 * y + phase / 2, xx = 2 * x + phase % 2;
                    double* px =
                        dst + ((static_cast<std::size_t>(b) * oh + yy) * ow + xx) * channels;
                    std::copy(col + phase * channels, col + (phase + 1) * channels, px);
                }
            }
        }
    }
}

// Inverse of interleave_phases.
void gather_phases(const Matrix& full, int channels, int batch, int height, int width,
                   Matrix& phased) {
    const int oh = height * 2, ow = width * 2;
    phased.resize(4 * channels, static_cast<Eigen::Index>(batch) * height * width);
    const double* src = full.data();
    double* dst = phased.data();
    for (int b = 0; b < batch; ++b) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const auto n = (static_cast<std::size_t>(b) * height + y) * width + x;
                double* col = dst + n * 4 * channels;
                for (int phase = 0; phase < 4; ++phase) {
                    const int yy = 2 * y + phase / 2, xx = 2 * x + phase % 2;
                    const double* px =
                        src + ((static_cast<std::size_t>(b) * oh + yy) * ow + xx) * channels;
                    std::copy(px, px + channels, col + phase * channels);
                }
            }
        }
    }
}

struct LayerState {
    int src_h = 0, src_w = 0;    // input grid (before any upsampling)
    int out_h = 0, out_w = 0;
    Matrix cols;                 // im2col of the input grid
    Matrix expanded;             // phase weights, upsampling layers only
    Matrix phased;               // (phase, channel) x source positions
    Matrix pre;                  // pre-activation, channel x output positions
    Matrix out;                  // post-activation
};

/// Forward/backward passes over one batch, reusing buffers between calls.
class Network {
public:
    explicit Network(const AEModel& model) : model_(model) {}

    const Matrix& forward(const Matrix& x, int batch) {
        batch_ = batch;
        const auto& layers = model_.layers();
        states_.resize(layers.size());
        const Matrix* current = &x;
        int h = model_.crop_size(), w = model_.crop_size();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const ConvSpec& spec = layers[l];
            LayerState& st = states_[l];
            const double* p = model_.parameters().data() + model_.layer_offset(l);
            ConstVectorMap bias(p + spec.weight_count(), spec.out_channels);
            st.src_h = h;
            st.src_w = w;
            if (spec.upsample) {
                // stride-1 convolution on the upsampled grid
                im2col(*current, spec.in_channels, batch, h, w, 1, h, w, st.cols);
                st.expanded = expand_phase_weights(p, spec.out_channels, spec.in_channels);
                st.phased.noalias() = st.expanded * st.cols;
                interleave_phases(st.phased, spec.out_channels, batch, h, w, st.pre);
                st.out_h = 2 * h;
                st.out_w = 2 * w;
            } else {
                st.out_h = (h - 1) / spec.stride + 1;
                st.out_w = (w - 1) / spec.stride + 1;
                im2col(*current, spec.in_channels, batch, h, w, spec.stride, st.out_h, st.out_w,
                       st.cols);
                const Matrix weights = ConstMatrixMap(p, spec.out_channels, 9 * spec.in_channels);
                st.pre.noalias() = weights * st.cols;
            }
            st.pre.colwise() += Eigen::VectorXd(bias);
            if (spec.activation) {
                st.out = st.pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
            } else {
                st.out = st.pre;
            }
            h = st.out_h;
            w = st.out_w;
            current = &st.out;
        }
        return *current;
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
    void backward(const Matrix& d_output, std::vector<double>& grad) {
        const auto& layers = model_.layers();
        Matrix d_out = d_output;
        Matrix d_pre, d_phased, d_expanded, d_cols, d_in;
        for (std::size_t l = layers.size(); l-- > 0;) {
            const ConvSpec& spec = layers[l];
            LayerState& st = states_[l];
            if (spec.activation) {
                d_pre = st.pre.binaryExpr(d_out, [](double z, double g) {
                    return z > 0.0 ? g : kLeakySlope * g;
                });
            } else {
                d_pre = std::move(d_out);
            }
            double* gp = grad.data() + model_.layer_offset(l);
            // Products go through owned (aligned) buffers so results do not depend on the
            // alignment of the caller's vectors.
            const Eigen::VectorXd bias_sum = d_pre.rowwise().sum();
            Eigen::Map<Eigen::VectorXd> d_bias(gp + spec.weight_count(), spec.out_channels);
            d_bias += bias_sum;
            const double* p = model_.parameters().data() + model_.layer_offset(l);
            if (spec.upsample) {
                gather_phases(d_pre, spec.out_channels, batch_, st.src_h, st.src_w, d_phased);
                d_expanded.noalias() = d_phased * st.cols.transpose();
                reduce_phase_gradient(d_expanded, spec.out_channels, spec.in_channels, gp);
                if (l == 0) break;
                d_cols.noalias() = st.expanded.transpose() * d_phased;
                col2im(d_cols, spec.in_channels, batch_, st.src_h, st.src_w, 1, st.src_h,
                       st.src_w, d_in);
            } else {
                const Matrix weight_grad = d_pre * st.cols.transpose();
                MatrixMap d_weights(gp, spec.out_channels, 9 * spec.in_channels);
                d_weights += weight_grad;
                if (l == 0) break;
                const Matrix weights = ConstMatrixMap(p, spec.out_channels, 9 * spec.in_channels);
                d_cols.noalias() = weights.transpose() * d_pre;
                col2im(d_cols, spec.in_channels, batch_, st.src_h, st.src_w, spec.stride,
                       st.out_h, st.out_w, d_in);
            }
            d_out = std::move(d_in);
        }
    }

private:
    const AEModel& model_;
    std::vector<LayerState> states_;
    int batch_ = 0;
};

void check_crop(const AEModel& model, const Crop& crop) {
    const auto expected = static_cast<std::size_t>(3) * model.crop_size() * model.crop_size();
    if (crop.size != model.crop_size() || crop.pixels.size() != expected) {
        throw ShapeError("crop of size " + std::to_string(crop.size) + " (" +
                         std::to_string(crop.pixels.size()) + " values) does not match model size " +
                         std::to_string(model.crop_size()));
    }
}

void pack_into(const AEModel& model, const Crop& crop, std::size_t slot, Matrix& x) {
    check_crop(model, crop);
    const auto plane = static_cast<std::size_t>(model.crop_size()) * model.crop_size();
    const auto& px = crop.pixels;
    double* dst = x.data() + slot * plane * 3;
    for (std::size_t i = 0; i < plane; ++i) {
        dst[3 * i] = px[i];
        dst[3 * i + 1] = px[plane + i];
        dst[3 * i + 2] = px[2 * plane + i];
    }
}

// Packs crops into the channels x (batch*h*w) activation layout.
Matrix pack(const AEModel& model, std::span<const Crop> crops) {
    const auto plane = static_cast<Eigen::Index>(model.crop_size()) * model.crop_size();
    Matrix x(3, static_cast<Eigen::Index>(crops.size()) * plane);
    for (std::size_t b = 0; b < crops.size(); ++b) pack_into(model, crops[b], b, x);
    return x;
}

// Crops are pushed through the network in chunks of this many samples; the
// gradient is the sum over chunks, so the chunk size only affects cache use.
constexpr std::size_t kChunk = 16;

/// Mean-squared-error loss over the selected crops and its gradient
/// (overwrites `gradient`).
double batch_loss_and_gradient(const AEModel& model, Network& net, std::span<const Crop> crops,
                               std::span<const std::size_t> selection,
                               std::vector<double>& gradient) {
    std::fill(gradient.begin(), gradient.end(), 0.0);
    const auto plane = static_cast<Eigen::Index>(model.crop_size()) * model.crop_size();
    const double scale = 1.0 / (static_cast<double>(selection.size()) * 3.0 * plane);
    double loss = 0.0;
    Matrix x, diff;
    for (std::size_t begin = 0; begin < selection.size(); begin += kChunk) {
        const std::size_t end = std::min(selection.size(), begin + kChunk);
        x.resize(3, static_cast<Eigen::Index>(end - begin) * plane);
        for (std::size_t i = begin; i < end; ++i) pack_into(model, crops[selection[i]], i - begin, x);
        diff = net.forward(x, static_cast<int>(end - begin)) - x;
        loss += diff.squaredNorm() * scale;
        diff *= 2.0 * scale;
        net.backward(diff, gradient);
    }
    return loss;
}

constexpr char kMagic[8] = {'G', 'E', 'O', 'E', 'V', 'A', 'E', '1'};

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw LoadError("truncated model file");
    return value;
}

}  // namespace

// ------------------------------------------------------------
// AEModel
// ------------------------------------------------------------

std::vector<ConvSpec> AEModel::topology() {
    return {
        {3, 8, 2, false, true},
        {8, 16, 2, false, true},
        {16, 8, 1, true, true},
        {8, 3, 1, true, false},
    };
}

AEModel::AEModel(int crop_size, std::vector<ConvSpec> layers)
    : crop_size_(crop_size), layers_(std::move(layers)) {
    if (crop_size_ <= 0 || crop_size_ % 4 != 0) {
        throw ShapeError("crop size must be a positive multiple of 4");
    }
    std::size_t total = 0;
    for (const auto& l : layers_) {
        offsets_.push_back(total);
        total += l.parameter_count();
    }
    params_.assign(total, 0.0);
}

AEModel AEModel::init(std::uint64_t seed, int crop_size) {
    AEModel model(crop_size, topology());
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < model.layers_.size(); ++l) {
        const auto& spec = model.layers_[l];
        const double fan_in = 9.0 * spec.in_channels;
        const double fan_out = 9.0 * spec.out_channels;
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-a, a);
        double* w = model.params_.data() + model.offsets_[l];
        for (std::size_t i = 0; i < spec.weight_count(); ++i) w[i] = dist(rng);
    }
    return model;
}

void AEModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(crop_size_));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layers_.size()));
    for (const auto& l : layers_) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_channels));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_channels));
        write_le<std::uint32_t>(out, 3u);  // kernel
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.stride));
        write_le<std::uint8_t>(out, l.upsample ? 1 : 0);
        write_le<std::uint8_t>(out, l.activation ? 1 : 0);
    }
    write_le<std::uint64_t>(out, params_.size());
    for (double v : params_) write_le<double>(out, v);
    if (!out) throw IoError("failed writing model: " + path.string());
}

AEModel AEModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model: " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw LoadError("not an autoencoder model file: " + path.string());
    }
    const auto crop_size = static_cast<int>(read_le<std::uint32_t>(in));
    const auto n_layers = read_le<std::uint32_t>(in);
    std::vector<ConvSpec> layers;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        ConvSpec s;
        s.in_channels = static_cast<int>(read_le<std::uint32_t>(in));
        s.out_channels = static_cast<int>(read_le<std::uint32_t>(in));
        if (read_le<std::uint32_t>(in) != 3u) throw LoadError("unsupported kernel size");
        s.stride = static_cast<int>(read_le<std::uint32_t>(in));
        s.upsample = read_le<std::uint8_t>(in) != 0;
        s.activation = read_le<std::uint8_t>(in) != 0;
        layers.push_back(s);
    }
    if (layers != topology()) throw LoadError("model topology does not match this build");
    AEModel model(crop_size, std::move(layers));
    const auto count = read_le<std::uint64_t>(in);
    if (count != model.params_.size()) throw LoadError("parameter count mismatch");
    for (auto& v : model.params_) v = read_le<double>(in);
    return model;
}

// ------------------------------------------------------------
// Inference
// ------------------------------------------------------------

std::vector<double> forward(const AEModel& model, const Crop& crop) {
    check_crop(model, crop);
    Network net(model);
    const Crop* one = &crop;
    const Matrix& y = net.forward(pack(model, std::span(one, 1)), 1);
    const auto plane = static_cast<std::size_t>(model.crop_size()) * model.crop_size();
    std::vector<double> out(3 * plane);
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) out[c * plane + i] = y(c, static_cast<Eigen::Index>(i));
    }
    return out;
}

double reconstruction_error(const Crop& crop, std::span<const double> reconstruction) {
    if (reconstruction.size() != crop.pixels.size()) {
        throw ShapeError("reconstruction shape does not match crop");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < reconstruction.size(); ++i) {
        const double d = crop.pixels[i] - reconstruction[i];
        sum += d * d;
    }
    return sum;
}

double reconstruction_error(const AEModel& model, const Crop& crop) {
    return reconstruction_error(crop, forward(model, crop));
}

std::vector<double> reconstruction_errors(const AEModel& model, std::span<const Crop> crops) {
    constexpr std::size_t kBatch = 128;
    const auto plane = static_cast<Eigen::Index>(model.crop_size()) * model.crop_size();
    std::vector<double> out;
    out.reserve(crops.size());
    Network net(model);
    for (std::size_t begin = 0; begin < crops.size(); begin += kBatch) {
        const auto batch = crops.subspan(begin, std::min(kBatch, crops.size() - begin));
        const Matrix x = pack(model, batch);
        const Matrix& y = net.forward(x, static_cast<int>(batch.size()));
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const auto cols = Eigen::seqN(static_cast<Eigen::Index>(b) * plane, plane);
            out.push_back((x(Eigen::all, cols) - y(Eigen::all, cols)).squaredNorm());
        }
    }
    return out;
}

// ------------------------------------------------------------
// Training
// ------------------------------------------------------------

double loss_and_gradient(const AEModel& model, std::span<const Crop> crops,
                         std::vector<double>& gradient) {
    gradient.assign(model.parameter_count(), 0.0);
    if (crops.empty()) return 0.0;
    Network net(model);
    std::vector<std::size_t> all(crops.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return batch_loss_and_gradient(model, net, crops, all, gradient);
}

AEModel train(AEModel model, std::span<const Crop> crops, const TrainOptions& options) {
    if (crops.empty()) throw Error("training set is empty");
    if (options.batch_size <= 0) throw Error("batch size must be positive");
    for (const auto& c : crops) check_crop(model, c);

    const std::size_t n_params = model.parameter_count();
    std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad(n_params, 0.0);
    std::vector<std::size_t> order(crops.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.seed);
    Network net(model);
    std::vector<double> history;
    long step = 0;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
            const double loss = batch_loss_and_gradient(
                model, net, crops, std::span(order).subspan(begin, end - begin), grad);
            if (!std::isfinite(loss)) {
                throw DivergenceError("autoencoder loss diverged at epoch " +
                                      std::to_string(epoch));
            }
            epoch_loss += loss * static_cast<double>(end - begin);

            ++step;
            const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
            auto params = model.parameters();
            for (std::size_t i = 0; i < n_params; ++i) {
                m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * grad[i];
                v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * grad[i] * grad[i];
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                params[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
            }
        }
        history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    model.set_loss_history(std::move(history));
    return model;
}

}  // namespace geoevent
