#include "geoevent/texture.hpp"

#include <algorithm>
#include <cmath>

#include "geoevent/seed.hpp"

namespace geoevent {

namespace {

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy, int octave) {
    std::uint64_t h = derive_seed(seed, static_cast<std::uint64_t>(octave));
    h = derive_seed(h, static_cast<std::uint64_t>(ix) * 0x9e3779b1ULL);
    h = derive_seed(h, static_cast<std::uint64_t>(iy));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y, int octave) {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = smoothstep(x - fx), ty = smoothstep(y - fy);
    const double v00 = lattice_value(seed, ix, iy, octave);
    const double v10 = lattice_value(seed, ix + 1, iy, octave);
    const double v01 = lattice_value(seed, ix, iy + 1, octave);
    const double v11 = lattice_value(seed, ix + 1, iy + 1, octave);
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

}  // namespace

TextureFamily random_texture_family(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TextureFamily f;
    f.lattice_seed = rng();
    f.base_period = std::exp(std::log(3.0) + unit(rng) * (std::log(24.0) - std::log(3.0)));
    f.octaves = 1 + static_cast<int>(unit(rng) * 4.0);
    f.persistence = 0.3 + 0.4 * unit(rng);
    f.contrast = 0.6 + 0.8 * unit(rng);
    for (auto& stop : f.palette) {
        for (auto& c : stop) c = unit(rng);
    }
    return f;
}

Image render_texture(const TextureFamily& f, int width, int height, double offset_x,
                     double offset_y) {
    Image img(width, height);
    double norm = 0.0;
    for (int o = 0; o < f.octaves; ++o) norm += std::pow(f.persistence, o);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double v = 0.0;
            for (int o = 0; o < f.octaves; ++o) {
                const double period = f.base_period / std::pow(2.0, o);
                v += std::pow(f.persistence, o) *
                     value_noise(f.lattice_seed, (x + offset_x) / period, (y + offset_y) / period, o);
            }
            v = std::clamp(0.5 + f.contrast * (v / norm - 0.5), 0.0, 1.0);
            const auto& lo = v < 0.5 ? f.palette[0] : f.palette[1];
            const auto& hi = v < 0.5 ? f.palette[1] : f.palette[2];
            const double t = v < 0.5 ? v * 2.0 : (v - 0.5) * 2.0;
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = lo[c] + (hi[c] - lo[c]) * t;
        }
    }
    return img;
}

namespace {

void add_noise(Image& img, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& v : img.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
}

}  // namespace

Image coherent_image(const TextureFamily& family, int size, double jitter, double noise_sigma,
                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> shift(0.0, jitter);
    const double ox = shift(rng);
    const double oy = shift(rng);
    Image img = render_texture(family, size, size, ox, oy);
    add_noise(img, noise_sigma, rng);
    return img;
}

Image incoherent_image(int size, double noise_sigma, std::mt19937_64& rng) {
    const TextureFamily family = random_texture_family(rng);
    Image img = render_texture(family, size, size);
    add_noise(img, noise_sigma, rng);
    return img;
}

}  // namespace geoevent
