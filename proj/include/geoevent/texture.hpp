#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "geoevent/image.hpp"

namespace geoevent {

/// Parameters of a value-noise texture: lattice noise summed over octaves,
/// then mapped through a three-colour palette.
struct TextureFamily {
    std::uint64_t lattice_seed = 0;
    double base_period = 16.0;   // pixels per lattice cell at the first octave
    int octaves = 3;
    double persistence = 0.5;
    double contrast = 1.0;
    std::array<std::array<double, 3>, 3> palette{};  // RGB stops at v = 0, 0.5, 1
};

TextureFamily random_texture_family(std::mt19937_64& rng);

/// Renders a width x height window whose top-left corner sits at
/// (offset_x, offset_y) in the family's infinite texture plane.
Image render_texture(const TextureFamily& family, int width, int height, double offset_x = 0.0,
                     double offset_y = 0.0);

/// One image of a coherent set: a jittered window of the shared texture plus
/// per-pixel Gaussian noise.
Image coherent_image(const TextureFamily& family, int size, double jitter, double noise_sigma,
                     std::mt19937_64& rng);

/// One image of an incoherent set: a fresh random family, same noise model.
Image incoherent_image(int size, double noise_sigma, std::mt19937_64& rng);

}  // namespace geoevent
