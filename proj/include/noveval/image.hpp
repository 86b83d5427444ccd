#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace noveval {

/// RGB crop with intensities in [0,1], row-major H x W x 3.
struct ImageCrop {
    int width = 0;
    int height = 0;
    std::vector<float> px;

    ImageCrop() = default;
    ImageCrop(int w, int h) : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3, 0.0f) {}

    float at(int y, int x, int c) const {
        return px[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    float& at(int y, int x, int c) {
        return px[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

/// Throws ValidationError if dimensions are below 4 or any value leaves [0,1].
void validate_crop(const ImageCrop& crop);

/// Binary PPM (P6, 8-bit). Channel byte = round(255 * v).
void write_ppm(const std::filesystem::path& path, const ImageCrop& crop);
ImageCrop read_ppm(const std::filesystem::path& path);

/// Tiles laid out left to right into one image. All tiles must share dimensions.
ImageCrop hstack(std::span<const ImageCrop> tiles);

/// Separable Gaussian blur, kernel radius ceil(3*sigma), reflect padding.
/// sigma <= 0 returns the input unchanged.
ImageCrop gaussian_blur(const ImageCrop& crop, double sigma);

double mean_intensity(const ImageCrop& crop);

}  // namespace noveval
