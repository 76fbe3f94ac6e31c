#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace geoevent {

/// RGB image, channel-major (c, y, x), values in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0.0) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

/// Decodes PNG or binary/ASCII PPM/PGM (chosen by file signature).
/// Grayscale input is replicated across the three channels.
Image load_image(const std::filesystem::path& path);

void write_ppm(const std::filesystem::path& path, const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

/// Resolves image identifiers (as referenced by tweets) to pixels.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    /// Returns nothing when the image is unavailable or undecodable.
    virtual std::optional<Image> load(const std::string& image_id) const = 0;
};

/// Image ids are paths relative to a root directory.
class DirectoryImageSource : public ImageSource {
public:
    explicit DirectoryImageSource(std::filesystem::path root) : root_(std::move(root)) {}
    std::optional<Image> load(const std::string& image_id) const override;

private:
    std::filesystem::path root_;
};

class MemoryImageSource : public ImageSource {
public:
    void add(std::string image_id, Image image) { images_[std::move(image_id)] = std::move(image); }
    std::optional<Image> load(const std::string& image_id) const override;

private:
    std::map<std::string, Image> images_;
};

}  // namespace geoevent
