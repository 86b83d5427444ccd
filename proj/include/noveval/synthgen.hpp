#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noveval/detect_eval.hpp"
#include "noveval/image.hpp"

namespace noveval {

enum class ColorClass { red, yellow, green };
enum class Inlay { circle, arrow };

std::string to_string(ColorClass c);
std::string to_string(Inlay i);
ColorClass color_class_from_string(const std::string& s);
Inlay inlay_from_string(const std::string& s);

/// Generative factors for one synthetic traffic-light crop.
struct CropFactors {
    ColorClass color_class = ColorClass::red;
    double bulb_radius = 0.2;           // fraction of crop height, [0.05, 0.45]
    double background_brightness = 0.5; // [0, 1]
    double blur_sigma = 0.0;            // pixels, >= 0
    Inlay inlay = Inlay::circle;
    double hue_shift = 0.0;             // [-0.1, 0.1], fraction of the hue circle
};

/// Throws ValidationError naming the offending field.
void validate_factors(const CropFactors& factors);

struct FactorRanges {
    std::array<double, 2> bulb_radius{0.08, 0.30};
    std::array<double, 2> background_brightness{0.0, 1.0};
    std::array<double, 2> blur_sigma{0.0, 1.5};
    std::array<double, 2> hue_shift{-0.05, 0.05};
    double arrow_probability = 0.25;
};

struct DatasetSpec {
    int n_per_class = 100;
    int size = 16;  // crop edge length in pixels
    FactorRanges ranges;
    std::uint64_t seed = 0;
    std::array<bool, 3> include_class{true, true, true};  // indexed by ColorClass
};

void validate_spec(const DatasetSpec& spec);

/// Renders one crop: housing on a flat background, a lit bulb of the class
/// color at the class position, the inlay shape inside the bulb, then a
/// Gaussian blur. Byte-deterministic in (factors, size).
ImageCrop render_crop(const CropFactors& factors, int size);

struct GeneratedDataset {
    std::vector<ImageCrop> crops;
    std::vector<CropFactors> factors;       // row i describes crop i
    std::vector<Annotation> annotations;    // crop i pasted into a 4x scene
};

/// Fully seeded generation; crop i only depends on (spec.seed, i), so any
/// parallel rendering order gives identical output. Crops come out grouped
/// by class in enum order, skipping excluded classes.
GeneratedDataset generate_dataset(const DatasetSpec& spec);

// factors.csv: id,color_class,bulb_radius,background_brightness,blur_sigma,inlay,hue_shift
void write_factors_csv(const std::filesystem::path& path, std::span<const CropFactors> factors);
std::vector<CropFactors> read_factors_csv(const std::filesystem::path& path);

}  // namespace noveval
