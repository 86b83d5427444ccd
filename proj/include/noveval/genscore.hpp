#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace noveval {

/// Novelty-weighted generalization score G = sum(novelty_i * (1 - L_i)) /
/// sum(novelty_i). Losses must lie in [0,1], weights must be >= 0 with a
/// positive sum.
double generalization_score(std::span<const double> novelty, std::span<const double> losses);

enum class NoveltyBin { low, medium, high };
std::string to_string(NoveltyBin bin);

struct NoveltyBins {
    std::vector<NoveltyBin> labels;  // aligned to the input order
    double edge_low = 0;             // 1/3 quantile
    double edge_high = 0;            // 2/3 quantile
    bool degenerate = false;         // fewer than 3 distinct novelty values
};

/// Tertile binning; values equal to an edge go to the lower bin.
NoveltyBins bin_by_novelty(std::span<const double> novelty);

/// Same labeling rule with caller-chosen thresholds.
NoveltyBins bin_with_edges(std::span<const double> novelty, double edge_low, double edge_high);

/// Up to per_bin ids drawn without replacement from each bin; ascending
/// within each bin, ordered low, medium, high.
std::vector<std::int64_t> sample_balanced(const NoveltyBins& bins,
                                          std::span<const std::int64_t> ids,
                                          std::size_t per_bin, std::uint64_t seed);

struct CurvePoint {
    double window_mid_novelty = 0;  // midrange of the window's novelty values
    double mean_loss = 0;
};

/// Sorts objects by novelty and averages the loss over equal-count windows.
/// Fewer objects than windows shrinks the window count to the object count.
std::vector<CurvePoint> loss_novelty_curve(std::span<const double> novelty,
                                           std::span<const double> losses,
                                           std::size_t window_quantiles = 10);

struct BinStat {
    std::size_t count = 0;
    double mean_loss = 0;
};

struct GeneralizationReport {
    double g_score = 0;
    double unweighted_complement = 0;  // 1 - mean loss
    double accuracy = 0;
    std::size_t n_objects = 0;
    std::size_t fp_count = 0;  // excluded from G, reported for context
    bool degenerate_bins = false;
    BinStat low, medium, high;
};

GeneralizationReport make_report(std::span<const double> novelty, std::span<const double> losses,
                                 double accuracy, std::size_t fp_count);

void write_report_json(const std::filesystem::path& path, const GeneralizationReport& report);
void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> points);

}  // namespace noveval
