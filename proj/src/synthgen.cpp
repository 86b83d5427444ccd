#include "noveval/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "noveval/common.hpp"
#include "noveval/rng.hpp"

namespace noveval {

std::string to_string(ColorClass c) {
    switch (c) {
        case ColorClass::red: return "red";
        case ColorClass::yellow: return "yellow";
        case ColorClass::green: return "green";
    }
    return "red";
}

std::string to_string(Inlay i) { return i == Inlay::circle ? "circle" : "arrow"; }

ColorClass color_class_from_string(const std::string& s) {
    if (s == "red") return ColorClass::red;
    if (s == "yellow") return ColorClass::yellow;
    if (s == "green") return ColorClass::green;
    throw ValidationError("unknown color class: " + s);
}

Inlay inlay_from_string(const std::string& s) {
    if (s == "circle") return Inlay::circle;
    if (s == "arrow") return Inlay::arrow;
    throw ValidationError("unknown inlay: " + s);
}

void validate_factors(const CropFactors& f) {
    if (f.bulb_radius < 0.05 || f.bulb_radius > 0.45)
        throw ValidationError("bulb_radius outside [0.05, 0.45]: " + format_double(f.bulb_radius));
    if (f.background_brightness < 0.0 || f.background_brightness > 1.0)
        throw ValidationError("background_brightness outside [0, 1]: " +
                              format_double(f.background_brightness));
    if (!(f.blur_sigma >= 0.0))
        throw ValidationError("blur_sigma must be >= 0: " + format_double(f.blur_sigma));
    if (f.hue_shift < -0.1 || f.hue_shift > 0.1)
        throw ValidationError("hue_shift outside [-0.1, 0.1]: " + format_double(f.hue_shift));
}

void validate_spec(const DatasetSpec& spec) {
    if (spec.n_per_class < 1) throw ValidationError("n_per_class must be >= 1");
    if (spec.size < 8) throw ValidationError("size must be >= 8");
    auto check_range = [](const std::array<double, 2>& r, double lo, double hi, const char* name) {
        if (r[0] > r[1] || r[0] < lo || r[1] > hi)
            throw ValidationError(std::string("factor range for ") + name +
                                  " is not a subset of its domain");
    };
    check_range(spec.ranges.bulb_radius, 0.05, 0.45, "bulb_radius");
    check_range(spec.ranges.background_brightness, 0.0, 1.0, "background_brightness");
    check_range(spec.ranges.blur_sigma, 0.0, 1e9, "blur_sigma");
    check_range(spec.ranges.hue_shift, -0.1, 0.1, "hue_shift");
    if (spec.ranges.arrow_probability < 0.0 || spec.ranges.arrow_probability > 1.0)
        throw ValidationError("arrow_probability outside [0, 1]");
    if (!spec.include_class[0] && !spec.include_class[1] && !spec.include_class[2])
        throw ValidationError("all color classes excluded");
}

namespace {

struct Rgb {
    float r, g, b;
};

// Lit-lens base colors before the hue shift.
Rgb base_color(ColorClass c) {
    switch (c) {
        case ColorClass::red: return {1.0f, 0.15f, 0.10f};
        case ColorClass::yellow: return {1.0f, 0.85f, 0.10f};
        case ColorClass::green: return {0.10f, 1.0f, 0.30f};
    }
    return {1.0f, 0.15f, 0.10f};
}

Rgb shift_hue(Rgb c, double shift) {
    if (shift == 0.0) return c;
    float mx = std::max({c.r, c.g, c.b});
    float mn = std::min({c.r, c.g, c.b});
    float delta = mx - mn;
    double h = 0.0;
    if (delta > 0.0f) {
        if (mx == c.r) h = std::fmod((c.g - c.b) / delta, 6.0f);
        else if (mx == c.g) h = (c.b - c.r) / delta + 2.0;
        else h = (c.r - c.g) / delta + 4.0;
        h *= 60.0;
        if (h < 0.0) h += 360.0;
    }
    double s = mx <= 0.0f ? 0.0 : static_cast<double>(delta) / mx;
    double v = mx;
    h = std::fmod(h + shift * 360.0 + 360.0, 360.0);
    double cc = v * s;
    double x = cc * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
    double m = v - cc;
    double r = 0, g = 0, b = 0;
    if (h < 60) { r = cc; g = x; }
    else if (h < 120) { r = x; g = cc; }
    else if (h < 180) { g = cc; b = x; }
    else if (h < 240) { g = x; b = cc; }
    else if (h < 300) { r = x; b = cc; }
    else { r = cc; b = x; }
    return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

constexpr float kHousingGray = 0.05f;
constexpr float kLensGray = 0.12f;

double bulb_center_y(ColorClass c) {
    switch (c) {
        case ColorClass::red: return 0.25;
        case ColorClass::yellow: return 0.50;
        case ColorClass::green: return 0.75;
    }
    return 0.25;
}

bool inside_left_arrow(double dx, double dy, double radius) {
    // Filled isoceles triangle pointing left, inscribed in the bulb disc:
    // apex at (-r, 0), base edge at x = +r/2 spanning |y| <= 0.8*r.
    double half_base = 0.8 * radius;
    double apex_x = -radius;
    double base_x = 0.5 * radius;
    if (dx < apex_x || dx > base_x) return false;
    double t = (dx - apex_x) / (base_x - apex_x);
    return std::abs(dy) <= t * half_base;
}

}  // namespace

ImageCrop render_crop(const CropFactors& factors, int size) {
    validate_factors(factors);
    if (size < 8) throw ValidationError("size must be >= 8, got " + std::to_string(size));

    ImageCrop crop(size, size);
    float bg = static_cast<float>(factors.background_brightness);
    Rgb lit = shift_hue(base_color(factors.color_class), factors.hue_shift);

    // Housing occupies the central 40% of the width and 80% of the height.
    double hx1 = 0.30 * size, hx2 = 0.70 * size;
    double hy1 = 0.10 * size, hy2 = 0.90 * size;
    double cx = 0.5 * size;
    double cy = bulb_center_y(factors.color_class) * size;
    double radius = factors.bulb_radius * size;

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double px = x + 0.5, py = y + 0.5;
            float r = bg, g = bg, b = bg;
            if (px >= hx1 && px < hx2 && py >= hy1 && py < hy2) {
                r = g = b = kHousingGray;
            }
            double dx = px - cx, dy = py - cy;
            if (dx * dx + dy * dy <= radius * radius) {
                bool lit_here = factors.inlay == Inlay::circle || inside_left_arrow(dx, dy, radius);
                if (lit_here) {
                    r = lit.r;
                    g = lit.g;
                    b = lit.b;
                } else {
                    r = g = b = kLensGray;
                }
            }
            crop.at(y, x, 0) = r;
            crop.at(y, x, 1) = g;
            crop.at(y, x, 2) = b;
        }
    }
    return gaussian_blur(crop, factors.blur_sigma);
}

GeneratedDataset generate_dataset(const DatasetSpec& spec) {
    validate_spec(spec);
    GeneratedDataset out;
    std::int64_t index = 0;
    for (int ci = 0; ci < 3; ++ci) {
        if (!spec.include_class[ci]) continue;
        auto color = static_cast<ColorClass>(ci);
        for (int k = 0; k < spec.n_per_class; ++k, ++index) {
            Rng rng = derive_rng(spec.seed, {0xc509u, static_cast<std::uint64_t>(ci),
                                             static_cast<std::uint64_t>(k)});
            CropFactors f;
            f.color_class = color;
            f.bulb_radius = rng.uniform(spec.ranges.bulb_radius[0], spec.ranges.bulb_radius[1]);
            f.background_brightness = rng.uniform(spec.ranges.background_brightness[0],
                                                  spec.ranges.background_brightness[1]);
            f.blur_sigma = rng.uniform(spec.ranges.blur_sigma[0], spec.ranges.blur_sigma[1]);
            f.inlay = rng.bernoulli(spec.ranges.arrow_probability) ? Inlay::arrow : Inlay::circle;
            f.hue_shift = rng.uniform(spec.ranges.hue_shift[0], spec.ranges.hue_shift[1]);
            out.crops.push_back(render_crop(f, spec.size));
            out.factors.push_back(f);

            // Scene paste: the crop sits somewhere in a 4x-larger canvas, which
            // gives each object a nontrivial normalized box.
            Annotation a;
            a.image_id = index;
            a.object_id = index;
            double x1 = rng.uniform(0.0, 0.75);
            double y1 = rng.uniform(0.0, 0.75);
            a.box = {x1, y1, x1 + 0.25, y1 + 0.25};
            out.annotations.push_back(a);
        }
    }
    return out;
}

void write_factors_csv(const std::filesystem::path& path, std::span<const CropFactors> factors) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path.string());
    f << "id,color_class,bulb_radius,background_brightness,blur_sigma,inlay,hue_shift\n";
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& r = factors[i];
        f << i << "," << to_string(r.color_class) << "," << format_double(r.bulb_radius) << ","
          << format_double(r.background_brightness) << "," << format_double(r.blur_sigma) << ","
          << to_string(r.inlay) << "," << format_double(r.hue_shift) << "\n";
    }
}

std::vector<CropFactors> read_factors_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw ValidationError("empty factors csv: " + path.string());
    std::vector<CropFactors> out;
    std::size_t expected_id = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7)
            throw ValidationError("factors csv row with " + std::to_string(cells.size()) +
                                  " cells in " + path.string());
        if (std::stoull(cells[0]) != expected_id)
            throw ValidationError("factors csv ids must be consecutive from 0");
        CropFactors r;
        r.color_class = color_class_from_string(cells[1]);
        r.bulb_radius = std::stod(cells[2]);
        r.background_brightness = std::stod(cells[3]);
        r.blur_sigma = std::stod(cells[4]);
        r.inlay = inlay_from_string(cells[5]);
        r.hue_shift = std::stod(cells[6]);
        validate_factors(r);
        out.push_back(r);
        ++expected_id;
    }
    return out;
}

}  // namespace noveval
