#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "noveval/common.hpp"
#include "noveval/image.hpp"
#include "noveval/latent.hpp"

namespace noveval {

/// MLP encoder/decoder pair: flattened pixels -> tanh hidden -> (mu, logvar),
/// mirrored decoder with sigmoid output. All weights row-major (rows = outputs).
struct VaeParams {
    int width = 16;
    int height = 16;
    int d = 8;
    int hidden = 128;
    double beta = 0.1;

    Matrix w1;                    // hidden x n
    std::vector<double> b1;       // hidden
    Matrix w_mu, w_logvar;        // d x hidden
    std::vector<double> b_mu, b_logvar;
    Matrix v1;                    // hidden x d
    std::vector<double> c1;       // hidden
    Matrix v2;                    // n x hidden
    std::vector<double> c2;       // n

    int input_dim() const { return width * height * 3; }
};

void validate_params(const VaeParams& p);

/// Zeroed parameter set with the given shape; also used as a gradient buffer.
VaeParams make_params(int width, int height, int d, int hidden, double beta);

/// Pointers to every trainable scalar, in a fixed order shared by gradients,
/// Adam state and the finite-difference check.
std::vector<double*> param_ptrs(VaeParams& p);
std::vector<const double*> param_ptrs(const VaeParams& p);

struct TrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double beta = 0.1;
    int d = 8;
    int hidden = 128;
    int threads = 1;
};

/// Settings the reference experiments used at full scale.
TrainConfig full_scale_config();

struct LossBreakdown {
    double reconstruction = 0;
    double kl = 0;
    double total = 0;
};

/// Deterministic; no sampling.
std::pair<std::vector<double>, std::vector<double>> encode(const VaeParams& p,
                                                           const ImageCrop& image);
ImageCrop decode(const VaeParams& p, std::span<const double> z);

/// Closed form -1/2 * sum(1 + logvar - mu^2 - exp(logvar)). Always >= 0.
double kl_divergence(std::span<const double> mu, std::span<const double> logvar);

/// Reconstruction term is summed per-pixel binary cross-entropy; outputs at
/// exactly 0 or 1 are clamped to eps=1e-7 and the clamp is logged.
LossBreakdown elbo_loss(std::span<const double> image, std::span<const double> reconstruction,
                        std::span<const double> mu, std::span<const double> logvar, double beta);

/// Mean per-sample loss over a batch, with explicit reparameterization noise
/// (one eps vector of length d per sample). Exposed so gradients can be
/// checked against finite differences of this exact function.
LossBreakdown batch_loss(const VaeParams& p, std::span<const ImageCrop> batch,
                         std::span<const std::vector<double>> eps, double beta);

/// Analytic gradients of batch_loss w.r.t. every parameter.
VaeParams batch_gradients(const VaeParams& p, std::span<const ImageCrop> batch,
                          std::span<const std::vector<double>> eps, double beta);

/// Adam training. Reparameterization noise is derived per (seed, epoch,
/// sample index), so the result is identical for any thread count.
std::pair<VaeParams, std::vector<LossBreakdown>> train(std::span<const ImageCrop> crops,
                                                       const TrainConfig& config);

LatentMatrix embed_dataset(const VaeParams& p, std::span<const ImageCrop> crops);
LatentMatrix embed_dataset(const VaeParams& p, std::span<const ImageCrop> crops,
                           std::span<const std::int64_t> ids);

/// Decodes a sweep of one latent coordinate, all others fixed at base_z.
std::vector<ImageCrop> traverse(const VaeParams& p, std::span<const double> base_z, int dim,
                                double lo, double hi, int steps);

void save_params_json(const std::filesystem::path& path, const VaeParams& p);
VaeParams load_params_json(const std::filesystem::path& path);

}  // namespace noveval
