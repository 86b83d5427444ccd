#include "noveval/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "noveval/image.hpp"

namespace noveval {

double mutual_information(std::span<const double> column, std::span<const int> labels,
                          std::size_t n_bins) {
    if (column.size() != labels.size())
        throw ValidationError("column and labels must have the same length");
    if (n_bins < 2) throw ValidationError("n_bins must be >= 2");
    if (column.size() < 2 * n_bins)
        throw ValidationError("mutual information needs at least " + std::to_string(2 * n_bins) +
                              " samples, got " + std::to_string(column.size()));
    std::size_t n_pos = 0;
    for (const int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
        n_pos += static_cast<std::size_t>(l);
    }
    if (n_pos == 0 || n_pos == labels.size())
        throw ValidationError("labels must contain both classes");

    const std::vector<double> edges =
        quantile_edges(std::vector<double>(column.begin(), column.end()), n_bins);
    Matrix counts(n_bins, 2);
    for (std::size_t i = 0; i < column.size(); ++i)
        counts.at(bin_of(column[i], edges), static_cast<std::size_t>(labels[i])) += 1.0;

    const auto n = static_cast<double>(column.size());
    const double p_label[2] = {static_cast<double>(labels.size() - n_pos) / n,
                               static_cast<double>(n_pos) / n};
    double mi = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double p_bin = (counts.at(b, 0) + counts.at(b, 1)) / n;
        if (p_bin == 0) continue;
        for (std::size_t l = 0; l < 2; ++l) {
            const double p_joint = counts.at(b, l) / n;
            if (p_joint == 0) continue;
            mi += p_joint * std::log(p_joint / (p_bin * p_label[l]));
        }
    }
    return std::max(mi, 0.0);
}

MiRanking select_informative_dims(const LatentMatrix& z, const NoveltyBins& bins,
                                  std::size_t top_k) {
    if (bins.labels.size() != z.size())
        throw ValidationError("novelty bins and latent matrix must cover the same objects");
    if (top_k < 1) throw ValidationError("top_k must be >= 1");

    std::vector<std::size_t> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < bins.labels.size(); ++i) {
        if (bins.labels[i] == NoveltyBin::medium) continue;
        rows.push_back(i);
        labels.push_back(bins.labels[i] == NoveltyBin::high ? 1 : 0);
    }
    if (std::count(labels.begin(), labels.end(), 1) == 0 ||
        std::count(labels.begin(), labels.end(), 0) == 0)
        throw ValidationError("high and low novelty bins must both be non-empty");

    MiRanking out;
    out.mi.resize(z.dim());
    std::vector<double> column(rows.size());
    for (std::size_t dim = 0; dim < z.dim(); ++dim) {
        for (std::size_t i = 0; i < rows.size(); ++i) column[i] = z.z.at(rows[i], dim);
        out.mi[dim] = mutual_information(column, labels);
    }
    out.ranking.resize(z.dim());
    std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
    std::stable_sort(out.ranking.begin(), out.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return out.mi[a] > out.mi[b]; });
    out.top_k = std::min(top_k, z.dim());
    return out;
}

std::vector<TraversalStrip> export_traversal_grid(const VaeParams& params,
                                                  const LatentMatrix& z_train,
                                                  const MiRanking& ranking, std::size_t n_dims,
                                                  int steps, double range_sigmas,
                                                  const std::filesystem::path& out_dir) {
    if (z_train.dim() != static_cast<std::size_t>(params.d))
        throw ValidationError("latent matrix dimension does not match the model");
    if (z_train.size() == 0) throw ValidationError("latent matrix must be non-empty");
    if (ranking.ranking.size() != z_train.dim())
        throw ValidationError("ranking does not cover every latent dimension");
    if (!(range_sigmas >= 0)) throw ValidationError("range_sigmas must be >= 0");
    n_dims = std::min(n_dims, ranking.ranking.size());

    std::vector<double> mean_z(z_train.dim(), 0.0);
    std::vector<double> std_z(z_train.dim(), 0.0);
    for (std::size_t i = 0; i < z_train.size(); ++i)
        for (std::size_t j = 0; j < z_train.dim(); ++j) mean_z[j] += z_train.z.at(i, j);
    for (double& v : mean_z) v /= static_cast<double>(z_train.size());
    for (std::size_t i = 0; i < z_train.size(); ++i)
        for (std::size_t j = 0; j < z_train.dim(); ++j) {
            const double diff = z_train.z.at(i, j) - mean_z[j];
            std_z[j] += diff * diff;
        }
    for (double& v : std_z) v = std::sqrt(v / static_cast<double>(z_train.size()));

    std::filesystem::create_directories(out_dir);
    std::vector<TraversalStrip> strips;
    strips.reserve(n_dims);
    for (std::size_t r = 0; r < n_dims; ++r) {
        const std::size_t dim = ranking.ranking[r];
        const double lo = mean_z[dim] - range_sigmas * std_z[dim];
        const double hi = mean_z[dim] + range_sigmas * std_z[dim];
        const std::vector<ImageCrop> frames =
            traverse(params, mean_z, static_cast<int>(dim), lo, hi, steps);
        TraversalStrip strip;
        strip.dim = dim;
        strip.mi = ranking.mi[dim];
        strip.values.reserve(static_cast<std::size_t>(steps));
        for (int k = 0; k < steps; ++k)
            strip.values.push_back(lo + (hi - lo) * static_cast<double>(k) /
                                            static_cast<double>(steps - 1));
        strip.file = "traversal_dim" + std::to_string(dim) + ".ppm";
        write_ppm(out_dir / strip.file, hstack(frames));
        strips.push_back(std::move(strip));
    }

    nlohmann::json manifest = nlohmann::json::array();
    for (const TraversalStrip& s : strips)
        manifest.push_back(
            {{"dim", s.dim}, {"mi", s.mi}, {"values", s.values}, {"file", s.file}});
    std::ofstream out(out_dir / "traversal_manifest.json", std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (out_dir / "traversal_manifest.json").string());
    out << manifest.dump(2) << '\n';
    return strips;
}

void export_parallel_coordinates(const LatentMatrix& z, std::span<const double> novelty,
                                 const MiRanking& ranking, std::size_t n_dims,
                                 const std::filesystem::path& path) {
    if (novelty.size() != z.size())
        throw ValidationError("novelty scores and latent matrix must cover the same objects");
    if (ranking.ranking.size() != z.dim())
        throw ValidationError("ranking does not cover every latent dimension");
    n_dims = std::min(n_dims, ranking.ranking.size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "id,novelty";
    for (std::size_t r = 0; r < n_dims; ++r) out << ",z" << ranking.ranking[r];
    out << '\n';
    for (std::size_t i = 0; i < z.size(); ++i) {
        out << z.ids[i] << ',' << format_double(novelty[i]);
        for (std::size_t r = 0; r < n_dims; ++r)
            out << ',' << format_double(z.z.at(i, ranking.ranking[r]));
        out << '\n';
    }
}

}  // namespace noveval
