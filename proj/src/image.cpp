#include "geoevent/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "geoevent/types.hpp"

namespace geoevent {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw LoadError("invalid PNG " + name + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&img);
        throw LoadError("cannot decode PNG " + name + ": " + img.message);
    }
    Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const auto base = (static_cast<std::size_t>(y) * out.width + x) * 3;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = buffer[base + c] / 255.0;
        }
    }
    return out;
}

// Netpbm P2/P3/P5/P6.
Image decode_pnm(const std::vector<unsigned char>& bytes, const std::string& name) {
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
            throw LoadError("malformed PNM header in " + name);
        }
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        return v;
    };
    const char kind = static_cast<char>(bytes[1]);
    const bool color = kind == '3' || kind == '6';
    const bool binary = kind == '5' || kind == '6';
    const long w = next_token(), h = next_token(), maxval = next_token();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
        throw LoadError("unsupported PNM dimensions in " + name);
    }
    Image out(static_cast<int>(w), static_cast<int>(h));
    const int channels = color ? 3 : 1;
    const int sample_bytes = maxval > 255 ? 2 : 1;
    if (binary) ++pos;  // single whitespace after maxval
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double px[3];
            for (int c = 0; c < channels; ++c) {
                long v;
                if (binary) {
                    if (pos + sample_bytes > bytes.size()) throw LoadError("truncated PNM " + name);
                    v = bytes[pos++];
                    if (sample_bytes == 2) v = (v << 8) | bytes[pos++];
                } else {
                    v = next_token();
                }
                px[c] = std::clamp(static_cast<double>(v) / static_cast<double>(maxval), 0.0, 1.0);
            }
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = px[color ? c : 0];
        }
    }
    return out;
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) {
        return decode_png(bytes, path.string());
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && std::strchr("2356", bytes[1]) != nullptr) {
        return decode_pnm(bytes, path.string());
    }
    throw LoadError("unsupported image format: " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path.string());
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    std::vector<char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                row[static_cast<std::size_t>(x) * 3 + c] = static_cast<char>(to_byte(image.at(c, y, x)));
            }
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("failed writing image: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& image) {
    std::vector<unsigned char> buffer(static_cast<std::size_t>(image.width) * image.height * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                buffer[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] =
                    to_byte(image.at(c, y, x));
            }
        }
    }
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw IoError("cannot write PNG " + path.string() + ": " + img.message);
    }
}

std::optional<Image> DirectoryImageSource::load(const std::string& image_id) const {
    try {
        return load_image(root_ / image_id);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::optional<Image> MemoryImageSource::load(const std::string& image_id) const {
    auto it = images_.find(image_id);
    if (it == images_.end()) return std::nullopt;
    return it->second;
}

}  // namespace geoevent
