#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noveval {

/// Thrown on invalid user input (bad factor ranges, malformed files,
/// mismatched ids). The CLI maps it to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Small enough that we do not pull in a
/// linear-algebra library for it.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {v.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
};

/// Shortest round-trip decimal text for a double. Locale independent, so CSV
/// and JSON outputs are byte-stable across runs.
std::string format_double(double x);

/// Type-1 empirical quantile edges: edges[j] = sorted[ceil((j+1)*n/bins) - 1]
/// for j in [0, bins-2]. Input need not be sorted.
std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins);

/// Bin index under the "values equal to an edge go to the lower bin" rule:
/// the number of edges strictly below v.
std::size_t bin_of(double v, std::span<const double> edges);

/// Runs fn(chunk_index, begin, end) over n items split into a fixed number of
/// contiguous chunks. The chunk layout never depends on the thread count, so
/// callers that reduce per-chunk results in chunk order get identical bytes
/// for any --threads value.
void parallel_chunks(std::size_t n_items, int threads, std::size_t n_chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

double mean(std::span<const double> xs);

/// Sample standard deviation (n-1). Returns 0 for fewer than two values.
double sample_std(std::span<const double> xs);

}  // namespace noveval
