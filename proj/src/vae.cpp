#include "noveval/vae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "noveval/rng.hpp"

namespace noveval {

namespace {

constexpr double kReconEps = 1e-7;
constexpr double kLogvarMin = -10.0;
constexpr double kLogvarMax = 10.0;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
// Gradient accumulation always uses this many chunks, reduced in chunk
// order, so results do not depend on the thread count.
constexpr int kGradChunks = 8;

constexpr std::uint64_t kTagInit = 0x1217;
constexpr std::uint64_t kTagShuffle = 0x50f1;
constexpr std::uint64_t kTagNoise = 0xe450;

void affine(const Matrix& w, const std::vector<double>& b, std::span<const double> x,
            std::vector<double>& out) {
    out.resize(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.v.data() + i * w.cols;
        double acc = b[i];
        for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

// out += w^T * d
void tmatvec_acc(const Matrix& w, std::span<const double> d, std::vector<double>& out) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.v.data() + i * w.cols;
        const double di = d[i];
        for (std::size_t j = 0; j < w.cols; ++j) out[j] += row[j] * di;
    }
}

// g += d (outer) x
void add_outer(Matrix& g, std::span<const double> d, std::span<const double> x) {
    for (std::size_t i = 0; i < g.rows; ++i) {
        double* row = g.v.data() + i * g.cols;
        const double di = d[i];
        for (std::size_t j = 0; j < g.cols; ++j) row[j] += di * x[j];
    }
}

void tanh_inplace(std::vector<double>& v) {
    for (double& x : v) x = std::tanh(x);
}

std::vector<double> flatten(const ImageCrop& image) {
    std::vector<double> x(image.px.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(image.px[i]);
    return x;
}

struct ForwardCache {
    std::vector<double> a1, mu, logvar_raw, logvar, z, h2, y;
    LossBreakdown loss;
};

// Full forward pass with the caller-supplied reparameterization noise.
void forward(const VaeParams& p, std::span<const double> x, std::span<const double> eps,
             ForwardCache& c, double beta) {
    affine(p.w1, p.b1, x, c.a1);
    tanh_inplace(c.a1);
    affine(p.w_mu, p.b_mu, c.a1, c.mu);
    affine(p.w_logvar, p.b_logvar, c.a1, c.logvar_raw);
    c.logvar.resize(c.logvar_raw.size());
    for (std::size_t j = 0; j < c.logvar.size(); ++j)
        c.logvar[j] = std::clamp(c.logvar_raw[j], kLogvarMin, kLogvarMax);
    c.z.resize(c.mu.size());
    for (std::size_t j = 0; j < c.z.size(); ++j)
        c.z[j] = c.mu[j] + std::exp(0.5 * c.logvar[j]) * eps[j];
    affine(p.v1, p.c1, c.z, c.h2);
    tanh_inplace(c.h2);
    affine(p.v2, p.c2, c.h2, c.y);
    for (double& v : c.y) v = 1.0 / (1.0 + std::exp(-v));

    double recon = 0;
    for (std::size_t i = 0; i < c.y.size(); ++i) {
        const double yi = std::clamp(c.y[i], kReconEps, 1.0 - kReconEps);
        recon -= x[i] * std::log(yi) + (1.0 - x[i]) * std::log(1.0 - yi);
    }
    c.loss.reconstruction = recon;
    c.loss.kl = kl_divergence(c.mu, c.logvar);
    c.loss.total = recon + beta * c.loss.kl;
}

// Accumulates d(sample loss)/d(params) into g. Scratch buffers are reused
// across samples by the caller.
struct BackwardScratch {
    std::vector<double> dpre_y, dh2, dz, dmu, dlogvar, da1;
};

void backward(const VaeParams& p, std::span<const double> x, std::span<const double> eps,
              const ForwardCache& c, double beta, VaeParams& g, BackwardScratch& s) {
    const std::size_t n = c.y.size();
    s.dpre_y.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.dpre_y[i] = c.y[i] - x[i];
    add_outer(g.v2, s.dpre_y, c.h2);
    for (std::size_t i = 0; i < n; ++i) g.c2[i] += s.dpre_y[i];

    s.dh2.assign(c.h2.size(), 0.0);
    tmatvec_acc(p.v2, s.dpre_y, s.dh2);
    for (std::size_t i = 0; i < s.dh2.size(); ++i) s.dh2[i] *= 1.0 - c.h2[i] * c.h2[i];
    add_outer(g.v1, s.dh2, c.z);
    for (std::size_t i = 0; i < s.dh2.size(); ++i) g.c1[i] += s.dh2[i];

    s.dz.assign(c.z.size(), 0.0);
    tmatvec_acc(p.v1, s.dh2, s.dz);

    s.dmu.resize(c.mu.size());
    s.dlogvar.resize(c.mu.size());
    for (std::size_t j = 0; j < c.mu.size(); ++j) {
        s.dmu[j] = s.dz[j] + beta * c.mu[j];
        double dlv = s.dz[j] * 0.5 * std::exp(0.5 * c.logvar[j]) * eps[j] +
                     beta * 0.5 * (std::exp(c.logvar[j]) - 1.0);
        // No gradient through the clamp when it is active.
        if (c.logvar_raw[j] <= kLogvarMin || c.logvar_raw[j] >= kLogvarMax) dlv = 0.0;
        s.dlogvar[j] = dlv;
    }
    add_outer(g.w_mu, s.dmu, c.a1);
    add_outer(g.w_logvar, s.dlogvar, c.a1);
    for (std::size_t j = 0; j < c.mu.size(); ++j) {
        g.b_mu[j] += s.dmu[j];
        g.b_logvar[j] += s.dlogvar[j];
    }

    s.da1.assign(c.a1.size(), 0.0);
    tmatvec_acc(p.w_mu, s.dmu, s.da1);
    tmatvec_acc(p.w_logvar, s.dlogvar, s.da1);
    for (std::size_t i = 0; i < s.da1.size(); ++i) s.da1[i] *= 1.0 - c.a1[i] * c.a1[i];
    add_outer(g.w1, s.da1, x);
    for (std::size_t i = 0; i < s.da1.size(); ++i) g.b1[i] += s.da1[i];
}

std::vector<double> noise_for(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample,
                              int d) {
    Rng rng = derive_rng(seed, {kTagNoise, epoch, sample});
    std::vector<double> eps(static_cast<std::size_t>(d));
    for (double& e : eps) e = rng.normal();
    return eps;
}

void xavier_init(Matrix& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double& v : w.v) v = rng.uniform(-limit, limit);
}

void check_batch_args(const VaeParams& p, std::span<const ImageCrop> batch,
                      std::span<const std::vector<double>> eps) {
    if (batch.empty()) throw ValidationError("batch must not be empty");
    if (eps.size() != batch.size())
        throw ValidationError("need one noise vector per batch sample");
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].width != p.width || batch[i].height != p.height)
            throw ValidationError("batch sample " + std::to_string(i) +
                                  " does not match model input size");
        if (eps[i].size() != static_cast<std::size_t>(p.d))
            throw ValidationError("noise vector " + std::to_string(i) + " must have length d");
    }
}

nlohmann::json matrix_to_json(const Matrix& m) { return nlohmann::json(m.v); }

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                        const std::string& name) {
    Matrix m(rows, cols);
    if (!j.is_array() || j.size() != rows * cols)
        throw ValidationError("field '" + name + "' must be an array of " +
                              std::to_string(rows * cols) + " numbers");
    for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = j[i].get<double>();
    return m;
}

std::vector<double> vector_from_json(const nlohmann::json& j, std::size_t n,
                                     const std::string& name) {
    if (!j.is_array() || j.size() != n)
        throw ValidationError("field '" + name + "' must be an array of " + std::to_string(n) +
                              " numbers");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = j[i].get<double>();
    return v;
}

}  // namespace

void validate_params(const VaeParams& p) {
    if (p.width < 1 || p.height < 1) throw ValidationError("image size must be positive");
    if (p.d < 2) throw ValidationError("latent dimension must be >= 2");
    if (p.hidden < 1) throw ValidationError("hidden width must be >= 1");
    if (!(p.beta > 0)) throw ValidationError("beta must be > 0");
    const auto n = static_cast<std::size_t>(p.input_dim());
    const auto h = static_cast<std::size_t>(p.hidden);
    const auto d = static_cast<std::size_t>(p.d);
    const bool ok = p.w1.rows == h && p.w1.cols == n && p.b1.size() == h &&
                    p.w_mu.rows == d && p.w_mu.cols == h && p.b_mu.size() == d &&
                    p.w_logvar.rows == d && p.w_logvar.cols == h && p.b_logvar.size() == d &&
                    p.v1.rows == h && p.v1.cols == d && p.c1.size() == h &&
                    p.v2.rows == n && p.v2.cols == h && p.c2.size() == n;
    if (!ok) throw ValidationError("parameter shapes do not match width/height/d/hidden");
}

VaeParams make_params(int width, int height, int d, int hidden, double beta) {
    VaeParams p;
    p.width = width;
    p.height = height;
    p.d = d;
    p.hidden = hidden;
    p.beta = beta;
    const auto n = static_cast<std::size_t>(p.input_dim());
    const auto h = static_cast<std::size_t>(hidden);
    const auto dd = static_cast<std::size_t>(d);
    p.w1 = Matrix(h, n);
    p.b1.assign(h, 0.0);
    p.w_mu = Matrix(dd, h);
    p.b_mu.assign(dd, 0.0);
    p.w_logvar = Matrix(dd, h);
    p.b_logvar.assign(dd, 0.0);
    p.v1 = Matrix(h, dd);
    p.c1.assign(h, 0.0);
    p.v2 = Matrix(n, h);
    p.c2.assign(n, 0.0);
    validate_params(p);
    return p;
}

std::vector<double*> param_ptrs(VaeParams& p) {
    std::vector<double*> out;
    auto take = [&out](std::vector<double>& v) {
        for (double& x : v) out.push_back(&x);
    };
    take(p.w1.v);
    take(p.b1);
    take(p.w_mu.v);
    take(p.b_mu);
    take(p.w_logvar.v);
    take(p.b_logvar);
    take(p.v1.v);
    take(p.c1);
    take(p.v2.v);
    take(p.c2);
    return out;
}

std::vector<const double*> param_ptrs(const VaeParams& p) {
    auto mut = param_ptrs(const_cast<VaeParams&>(p));
    return {mut.begin(), mut.end()};
}

TrainConfig full_scale_config() {
    TrainConfig c;
    c.epochs = 750;
    c.batch_size = 64;
    c.learning_rate = 1e-4;
    c.d = 32;
    c.beta = 0.1;
    return c;
}

std::pair<std::vector<double>, std::vector<double>> encode(const VaeParams& p,
                                                           const ImageCrop& image) {
    validate_params(p);
    if (image.width != p.width || image.height != p.height)
        throw ValidationError("image does not match model input size");
    const std::vector<double> x = flatten(image);
    std::vector<double> a1, mu, logvar;
    affine(p.w1, p.b1, x, a1);
    tanh_inplace(a1);
    affine(p.w_mu, p.b_mu, a1, mu);
    affine(p.w_logvar, p.b_logvar, a1, logvar);
    for (double& v : logvar) v = std::clamp(v, kLogvarMin, kLogvarMax);
    return {std::move(mu), std::move(logvar)};
}

ImageCrop decode(const VaeParams& p, std::span<const double> z) {
    validate_params(p);
    if (z.size() != static_cast<std::size_t>(p.d))
        throw ValidationError("latent vector must have length d");
    std::vector<double> h2, y;
    affine(p.v1, p.c1, z, h2);
    tanh_inplace(h2);
    affine(p.v2, p.c2, h2, y);
    ImageCrop out;
    out.width = p.width;
    out.height = p.height;
    out.px.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out.px[i] = static_cast<float>(1.0 / (1.0 + std::exp(-y[i])));
    return out;
}

double kl_divergence(std::span<const double> mu, std::span<const double> logvar) {
    if (mu.size() != logvar.size())
        throw ValidationError("mu and logvar must have the same length");
    double acc = 0;
    for (std::size_t j = 0; j < mu.size(); ++j)
        acc += 1.0 + logvar[j] - mu[j] * mu[j] - std::exp(logvar[j]);
    return -0.5 * acc;
}

LossBreakdown elbo_loss(std::span<const double> image, std::span<const double> reconstruction,
                        std::span<const double> mu, std::span<const double> logvar,
                        double beta) {
    if (image.size() != reconstruction.size())
        throw ValidationError("image and reconstruction must have the same length");
    if (!(beta >= 0)) throw ValidationError("beta must be >= 0");
    std::size_t clamped = 0;
    double recon = 0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        double y = reconstruction[i];
        if (y <= 0.0 || y >= 1.0) {
            y = std::clamp(y, kReconEps, 1.0 - kReconEps);
            ++clamped;
        }
        recon -= image[i] * std::log(y) + (1.0 - image[i]) * std::log(1.0 - y);
    }
    if (clamped > 0)
        std::cerr << "[vae] clamped " << clamped << " reconstruction values to [" << kReconEps
                  << ", 1-" << kReconEps << "]\n";
    LossBreakdown out;
    out.reconstruction = recon;
    out.kl = kl_divergence(mu, logvar);
    out.total = recon + beta * out.kl;
    return out;
}

LossBreakdown batch_loss(const VaeParams& p, std::span<const ImageCrop> batch,
                         std::span<const std::vector<double>> eps, double beta) {
    validate_params(p);
    check_batch_args(p, batch, eps);
    ForwardCache cache;
    LossBreakdown sum;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        forward(p, flatten(batch[i]), eps[i], cache, beta);
        sum.reconstruction += cache.loss.reconstruction;
        sum.kl += cache.loss.kl;
        sum.total += cache.loss.total;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    return {sum.reconstruction * inv, sum.kl * inv, sum.total * inv};
}

VaeParams batch_gradients(const VaeParams& p, std::span<const ImageCrop> batch,
                          std::span<const std::vector<double>> eps, double beta) {
    validate_params(p);
    check_batch_args(p, batch, eps);
    VaeParams g = make_params(p.width, p.height, p.d, p.hidden, p.beta);
    ForwardCache cache;
    BackwardScratch scratch;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::vector<double> x = flatten(batch[i]);
        forward(p, x, eps[i], cache, beta);
        backward(p, x, eps[i], cache, beta, g, scratch);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double* ptr : param_ptrs(g)) *ptr *= inv;
    return g;
}

std::pair<VaeParams, std::vector<LossBreakdown>> train(std::span<const ImageCrop> crops,
                                                       const TrainConfig& config) {
    if (config.epochs < 1) throw ValidationError("epochs must be >= 1");
    if (config.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(config.learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
    if (config.d < 2) throw ValidationError("latent dimension must be >= 2");
    if (config.hidden < 1) throw ValidationError("hidden width must be >= 1");
    if (config.threads < 1) throw ValidationError("threads must be >= 1");
    if (!(config.beta > 0)) throw ValidationError("beta must be > 0");
    if (crops.size() < 2 * static_cast<std::size_t>(config.batch_size))
        throw ValidationError("training needs at least 2 * batch_size crops, got " +
                              std::to_string(crops.size()));
    for (const ImageCrop& c : crops) {
        validate_crop(c);
        if (c.width != crops[0].width || c.height != crops[0].height)
            throw ValidationError("all training crops must have the same size");
    }

    const std::size_t n_samples = crops.size();
    std::vector<std::vector<double>> inputs(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) inputs[i] = flatten(crops[i]);

    VaeParams params = make_params(crops[0].width, crops[0].height, config.d, config.hidden,
                                   config.beta);
    {
        Rng r0 = derive_rng(config.seed, {kTagInit, 0});
        xavier_init(params.w1, r0);
        Rng r1 = derive_rng(config.seed, {kTagInit, 1});
        xavier_init(params.w_mu, r1);
        Rng r2 = derive_rng(config.seed, {kTagInit, 2});
        xavier_init(params.w_logvar, r2);
        Rng r3 = derive_rng(config.seed, {kTagInit, 3});
        xavier_init(params.v1, r3);
        Rng r4 = derive_rng(config.seed, {kTagInit, 4});
        xavier_init(params.v2, r4);
    }

    VaeParams adam_m = make_params(params.width, params.height, params.d, params.hidden, params.beta);
    VaeParams adam_v = make_params(params.width, params.height, params.d, params.hidden, params.beta);
    std::vector<double*> p_ptr = param_ptrs(params);
    std::vector<double*> m_ptr = param_ptrs(adam_m);
    std::vector<double*> v_ptr = param_ptrs(adam_v);

    std::vector<VaeParams> chunk_grads;
    chunk_grads.reserve(kGradChunks);
    std::vector<std::vector<double*>> chunk_ptrs;
    for (int c = 0; c < kGradChunks; ++c) {
        chunk_grads.push_back(make_params(params.width, params.height, params.d, params.hidden, params.beta));
        chunk_ptrs.push_back(param_ptrs(chunk_grads.back()));
    }

    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LossBreakdown> history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    long long adam_t = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = derive_rng(config.seed, {kTagShuffle, static_cast<std::uint64_t>(epoch)});
        shuffle_rng.shuffle(order);

        LossBreakdown epoch_sum;
        for (std::size_t start = 0; start < n_samples; start += config.batch_size) {
            const std::size_t end = std::min(n_samples, start + config.batch_size);
            const std::size_t batch_n = end - start;

            for (auto& cg : chunk_grads)
                for (double* ptr : param_ptrs(cg)) *ptr = 0.0;
            std::vector<LossBreakdown> chunk_loss(kGradChunks);

            parallel_chunks(batch_n, config.threads, kGradChunks,
                            [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
                                ForwardCache cache;
                                BackwardScratch scratch;
                                for (std::size_t k = lo; k < hi; ++k) {
                                    const std::size_t idx = order[start + k];
                                    const std::vector<double> eps =
                                        noise_for(config.seed, static_cast<std::uint64_t>(epoch),
                                                  idx, config.d);
                                    forward(params, inputs[idx], eps, cache, config.beta);
                                    backward(params, inputs[idx], eps, cache, config.beta,
                                             chunk_grads[chunk], scratch);
                                    chunk_loss[chunk].reconstruction += cache.loss.reconstruction;
                                    chunk_loss[chunk].kl += cache.loss.kl;
                                    chunk_loss[chunk].total += cache.loss.total;
                                }
                            });

            LossBreakdown batch_sum;
            for (int c = 0; c < kGradChunks; ++c) {
                batch_sum.reconstruction += chunk_loss[c].reconstruction;
                batch_sum.kl += chunk_loss[c].kl;
                batch_sum.total += chunk_loss[c].total;
            }
            if (!std::isfinite(batch_sum.total))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         " batch " + std::to_string(start / config.batch_size) +
                                         "; reduce the learning rate");
            epoch_sum.reconstruction += batch_sum.reconstruction;
            epoch_sum.kl += batch_sum.kl;
            epoch_sum.total += batch_sum.total;

            // Reduce in fixed chunk order, then one Adam step on the mean gradient.
            const double inv = 1.0 / static_cast<double>(batch_n);
            ++adam_t;
            const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_t));
            for (std::size_t i = 0; i < p_ptr.size(); ++i) {
                double g = 0;
                for (int c = 0; c < kGradChunks; ++c) g += *chunk_ptrs[c][i];
                g *= inv;
                double& m = *m_ptr[i];
                double& v = *v_ptr[i];
                m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
                v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
                *p_ptr[i] -= config.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
            }
        }

        const double inv_n = 1.0 / static_cast<double>(n_samples);
        history.push_back({epoch_sum.reconstruction * inv_n, epoch_sum.kl * inv_n,
                           epoch_sum.total * inv_n});
    }
    return {std::move(params), std::move(history)};
}

LatentMatrix embed_dataset(const VaeParams& p, std::span<const ImageCrop> crops) {
    std::vector<std::int64_t> ids(crops.size());
    std::iota(ids.begin(), ids.end(), std::int64_t{0});
    return embed_dataset(p, crops, ids);
}

LatentMatrix embed_dataset(const VaeParams& p, std::span<const ImageCrop> crops,
                           std::span<const std::int64_t> ids) {
    validate_params(p);
    if (ids.size() != crops.size())
        throw ValidationError("need exactly one id per crop");
    LatentMatrix out;
    out.ids.assign(ids.begin(), ids.end());
    out.z = Matrix(crops.size(), static_cast<std::size_t>(p.d));
    for (std::size_t i = 0; i < crops.size(); ++i) {
        const auto [mu, logvar] = encode(p, crops[i]);
        std::copy(mu.begin(), mu.end(), out.z.row(i).begin());
    }
    return out;
}

std::vector<ImageCrop> traverse(const VaeParams& p, std::span<const double> base_z, int dim,
                                double lo, double hi, int steps) {
    validate_params(p);
    if (base_z.size() != static_cast<std::size_t>(p.d))
        throw ValidationError("base latent vector must have length d");
    if (dim < 0 || dim >= p.d) throw ValidationError("traversal dimension out of range");
    if (steps < 2) throw ValidationError("traversal needs at least 2 steps");
    std::vector<ImageCrop> frames;
    frames.reserve(static_cast<std::size_t>(steps));
    std::vector<double> z(base_z.begin(), base_z.end());
    for (int k = 0; k < steps; ++k) {
        z[static_cast<std::size_t>(dim)] =
            lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
        frames.push_back(decode(p, z));
    }
    return frames;
}

void save_params_json(const std::filesystem::path& path, const VaeParams& p) {
    validate_params(p);
    nlohmann::json j;
    j["width"] = p.width;
    j["height"] = p.height;
    j["d"] = p.d;
    j["hidden"] = p.hidden;
    j["beta"] = p.beta;
    j["w1"] = matrix_to_json(p.w1);
    j["b1"] = nlohmann::json(p.b1);
    j["w_mu"] = matrix_to_json(p.w_mu);
    j["b_mu"] = nlohmann::json(p.b_mu);
    j["w_logvar"] = matrix_to_json(p.w_logvar);
    j["b_logvar"] = nlohmann::json(p.b_logvar);
    j["v1"] = matrix_to_json(p.v1);
    j["c1"] = nlohmann::json(p.c1);
    j["v2"] = matrix_to_json(p.v2);
    j["c2"] = nlohmann::json(p.c2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump() << '\n';
}

VaeParams load_params_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed model file " + path.string() + ": " + e.what());
    }
    for (const char* key : {"width", "height", "d", "hidden", "beta", "w1", "b1", "w_mu", "b_mu",
                            "w_logvar", "b_logvar", "v1", "c1", "v2", "c2"})
        if (!j.contains(key))
            throw ValidationError("model file missing field '" + std::string(key) + "'");

    VaeParams p;
    p.width = j["width"].get<int>();
    p.height = j["height"].get<int>();
    p.d = j["d"].get<int>();
    p.hidden = j["hidden"].get<int>();
    p.beta = j["beta"].get<double>();
    if (p.width < 1 || p.height < 1 || p.d < 1 || p.hidden < 1)
        throw ValidationError("model file has non-positive dimensions");
    const auto n = static_cast<std::size_t>(p.input_dim());
    const auto h = static_cast<std::size_t>(p.hidden);
    const auto d = static_cast<std::size_t>(p.d);
    p.w1 = matrix_from_json(j["w1"], h, n, "w1");
    p.b1 = vector_from_json(j["b1"], h, "b1");
    p.w_mu = matrix_from_json(j["w_mu"], d, h, "w_mu");
    p.b_mu = vector_from_json(j["b_mu"], d, "b_mu");
    p.w_logvar = matrix_from_json(j["w_logvar"], d, h, "w_logvar");
    p.b_logvar = vector_from_json(j["b_logvar"], d, "b_logvar");
    p.v1 = matrix_from_json(j["v1"], h, d, "v1");
    p.c1 = vector_from_json(j["c1"], h, "c1");
    p.v2 = matrix_from_json(j["v2"], n, h, "v2");
    p.c2 = vector_from_json(j["c2"], n, "c2");
    validate_params(p);
    return p;
}

}  // namespace noveval
