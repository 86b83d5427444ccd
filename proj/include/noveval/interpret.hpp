#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "noveval/genscore.hpp"
#include "noveval/latent.hpp"
#include "noveval/vae.hpp"

namespace noveval {

/// Plug-in mutual information (nats) between a latent column and a binary
/// label, after equal-frequency discretization of the column. Needs at least
/// 2 * n_bins samples and both label values.
double mutual_information(std::span<const double> column, std::span<const int> labels,
                          std::size_t n_bins = 10);

struct MiRanking {
    std::vector<double> mi;            // per dimension, nats
    std::vector<std::size_t> ranking;  // all dims, MI descending, ties by lower index
    std::size_t top_k = 0;
};

/// Ranks latent dimensions by MI against the high-vs-low novelty label.
/// Medium-bin objects are excluded.
MiRanking select_informative_dims(const LatentMatrix& z, const NoveltyBins& bins,
                                  std::size_t top_k);

struct TraversalStrip {
    std::size_t dim = 0;
    double mi = 0;
    std::vector<double> values;  // latent values decoded into the strip tiles
    std::string file;
};

/// Decode sweeps of the top-ranked dimensions around the training mean
/// (mean +/- range_sigmas * std per dim). Writes one PPM strip per dimension
/// plus traversal_manifest.json into out_dir.
std::vector<TraversalStrip> export_traversal_grid(const VaeParams& params,
                                                  const LatentMatrix& z_train,
                                                  const MiRanking& ranking, std::size_t n_dims,
                                                  int steps, double range_sigmas,
                                                  const std::filesystem::path& out_dir);

/// CSV with header id,novelty,z<i>,... for the top-ranked dimensions.
void export_parallel_coordinates(const LatentMatrix& z, std::span<const double> novelty,
                                 const MiRanking& ranking, std::size_t n_dims,
                                 const std::filesystem::path& path);

}  // namespace noveval
