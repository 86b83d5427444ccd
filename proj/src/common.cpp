#include "noveval/common.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>
#include <utility>

namespace noveval {

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
    if (values.empty() || bins < 2) return {};
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::vector<double> edges;
    edges.reserve(bins - 1);
    for (std::size_t j = 1; j < bins; ++j) {
        std::size_t idx = (j * n + bins - 1) / bins;  // ceil(j*n/bins)
        if (idx == 0) idx = 1;
        edges.push_back(values[idx - 1]);
    }
    return edges;
}

std::size_t bin_of(double v, std::span<const double> edges) {
    std::size_t b = 0;
    for (double e : edges) {
        if (e < v) ++b;
    }
    return b;
}

void parallel_chunks(std::size_t n_items, int threads, std::size_t n_chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n_items == 0) return;
    n_chunks = std::min(n_chunks, n_items);
    auto chunk_bounds = [&](std::size_t c) {
        return std::pair{c * n_items / n_chunks, (c + 1) * n_items / n_chunks};
    };
    if (threads <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            auto [b, e] = chunk_bounds(c);
            fn(c, b, e);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            auto [b, e] = chunk_bounds(c);
            fn(c, b, e);
        }
    };
    std::vector<std::thread> pool;
    std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n_chunks);
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace noveval
