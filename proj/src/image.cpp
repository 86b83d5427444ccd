#include "noveval/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "noveval/common.hpp"

namespace noveval {

void validate_crop(const ImageCrop& crop) {
    if (crop.width < 4 || crop.height < 4)
        throw ValidationError("crop dimensions must be at least 4x4, got " +
                              std::to_string(crop.width) + "x" + std::to_string(crop.height));
    if (crop.px.size() != static_cast<std::size_t>(crop.width) * crop.height * 3)
        throw ValidationError("crop pixel buffer size does not match dimensions");
    for (float v : crop.px) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw ValidationError("crop channel value outside [0,1]: " + format_double(v));
    }
}

void write_ppm(const std::filesystem::path& path, const ImageCrop& crop) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open for writing: " + path.string());
    f << "P6\n" << crop.width << " " << crop.height << "\n255\n";
    std::vector<std::uint8_t> bytes;
    bytes.reserve(crop.px.size());
    for (float v : crop.px) {
        float clamped = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        bytes.push_back(static_cast<std::uint8_t>(std::lround(255.0f * clamped)));
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ValidationError("write failed: " + path.string());
}

namespace {

int read_ppm_token(std::istream& in) {
    // Skips whitespace and '#' comments between header fields.
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return value;
}

}  // namespace

ImageCrop read_ppm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open: " + path.string());
    std::string magic;
    f >> magic;
    if (magic != "P6") throw ValidationError("not a P6 PPM: " + path.string());
    int w = read_ppm_token(f);
    int h = read_ppm_token(f);
    int maxval = read_ppm_token(f);
    if (w <= 0 || h <= 0 || maxval != 255)
        throw ValidationError("unsupported PPM header in " + path.string());
    f.get();  // single whitespace after maxval
    ImageCrop crop(w, h);
    std::vector<std::uint8_t> bytes(crop.px.size());
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (f.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw ValidationError("truncated PPM: " + path.string());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        crop.px[i] = static_cast<float>(bytes[i]) / 255.0f;
    return crop;
}

ImageCrop hstack(std::span<const ImageCrop> tiles) {
    if (tiles.empty()) throw ValidationError("hstack: no tiles");
    int w = tiles[0].width, h = tiles[0].height;
    for (const auto& t : tiles)
        if (t.width != w || t.height != h)
            throw ValidationError("hstack: tile dimensions differ");
    ImageCrop out(w * static_cast<int>(tiles.size()), h);
    for (std::size_t k = 0; k < tiles.size(); ++k)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(y, static_cast<int>(k) * w + x, c) = tiles[k].at(y, x, c);
    return out;
}

namespace {

int reflect_index(int i, int n) {
    // Plain reflect padding: ..., 1, 0 | 0, 1, ...
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

std::vector<float> gaussian_kernel(double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[i + radius] = static_cast<float>(w);
        sum += w;
    }
    for (auto& w : k) w = static_cast<float>(w / sum);
    return k;
}

}  // namespace

ImageCrop gaussian_blur(const ImageCrop& crop, double sigma) {
    if (sigma <= 0.0) return crop;
    auto kernel = gaussian_kernel(sigma);
    int radius = static_cast<int>(kernel.size() / 2);

    ImageCrop tmp(crop.width, crop.height);
    for (int y = 0; y < crop.height; ++y)
        for (int x = 0; x < crop.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * crop.at(y, reflect_index(x + i, crop.width), c);
                tmp.at(y, x, c) = acc;
            }

    ImageCrop out(crop.width, crop.height);
    for (int y = 0; y < crop.height; ++y)
        for (int x = 0; x < crop.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * tmp.at(reflect_index(y + i, crop.height), x, c);
                out.at(y, x, c) = acc < 0.0f ? 0.0f : (acc > 1.0f ? 1.0f : acc);
            }
    return out;
}

double mean_intensity(const ImageCrop& crop) {
    double s = 0.0;
    for (float v : crop.px) s += v;
    return crop.px.empty() ? 0.0 : s / static_cast<double>(crop.px.size());
}

}  // namespace noveval
