#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "noveval/common.hpp"

namespace noveval {

/// N x d matrix of encoder means, one row per object id.
struct LatentMatrix {
    std::vector<std::int64_t> ids;
    Matrix z;

    std::size_t size() const { return z.rows; }
    std::size_t dim() const { return z.cols; }
};

// CSV with header id,z0,...,z{d-1}; one row per object.
void write_latent_csv(const std::filesystem::path& path, const LatentMatrix& m);
LatentMatrix read_latent_csv(const std::filesystem::path& path);

/// Rows selected by index, ids preserved.
LatentMatrix select_rows(const LatentMatrix& m, const std::vector<std::size_t>& indices);

}  // namespace noveval
