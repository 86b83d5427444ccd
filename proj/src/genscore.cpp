#include "noveval/genscore.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "noveval/common.hpp"
#include "noveval/rng.hpp"

namespace noveval {

namespace {

constexpr std::uint64_t kTagBalanced = 0xba1a;

void check_aligned(std::span<const double> novelty, std::span<const double> losses) {
    if (novelty.empty()) throw ValidationError("need at least one scored object");
    if (novelty.size() != losses.size())
        throw ValidationError("novelty and loss vectors must have the same length, got " +
                              std::to_string(novelty.size()) + " and " +
                              std::to_string(losses.size()));
}

NoveltyBin label_for(double v, double edge_low, double edge_high) {
    if (v <= edge_low) return NoveltyBin::low;
    if (v <= edge_high) return NoveltyBin::medium;
    return NoveltyBin::high;
}

}  // namespace

double generalization_score(std::span<const double> novelty, std::span<const double> losses) {
    check_aligned(novelty, losses);
    double weight_sum = 0;
    double weighted = 0;
    for (std::size_t i = 0; i < novelty.size(); ++i) {
        if (!(novelty[i] >= 0))
            throw ValidationError("novelty weight " + std::to_string(i) + " must be >= 0");
        if (!(losses[i] >= 0 && losses[i] <= 1))
            throw ValidationError("loss " + std::to_string(i) + " must be in [0,1]");
        weight_sum += novelty[i];
        weighted += novelty[i] * (1.0 - losses[i]);
    }
    if (weight_sum <= 0) throw ValidationError("degenerate novelty weights");
    return weighted / weight_sum;
}

std::string to_string(NoveltyBin bin) {
    switch (bin) {
        case NoveltyBin::low: return "low";
        case NoveltyBin::medium: return "medium";
        case NoveltyBin::high: return "high";
    }
    throw std::logic_error("unreachable novelty bin");
}

NoveltyBins bin_by_novelty(std::span<const double> novelty) {
    if (novelty.size() < 3) throw ValidationError("binning needs at least 3 objects");
    const std::vector<double> edges =
        quantile_edges(std::vector<double>(novelty.begin(), novelty.end()), 3);
    NoveltyBins bins = bin_with_edges(novelty, edges[0], edges[1]);
    const std::set<double> distinct(novelty.begin(), novelty.end());
    bins.degenerate = distinct.size() < 3;
    return bins;
}

NoveltyBins bin_with_edges(std::span<const double> novelty, double edge_low, double edge_high) {
    if (novelty.empty()) throw ValidationError("need at least one scored object");
    if (edge_low > edge_high) throw ValidationError("bin edges must be non-decreasing");
    NoveltyBins bins;
    bins.edge_low = edge_low;
    bins.edge_high = edge_high;
    bins.labels.reserve(novelty.size());
    for (const double v : novelty) bins.labels.push_back(label_for(v, edge_low, edge_high));
    return bins;
}

std::vector<std::int64_t> sample_balanced(const NoveltyBins& bins,
                                          std::span<const std::int64_t> ids,
                                          std::size_t per_bin, std::uint64_t seed) {
    if (per_bin < 1) throw ValidationError("per_bin must be >= 1");
    if (bins.labels.size() != ids.size())
        throw ValidationError("bin labels and ids must have the same length");
    std::vector<std::int64_t> out;
    for (const NoveltyBin bin : {NoveltyBin::low, NoveltyBin::medium, NoveltyBin::high}) {
        std::vector<std::int64_t> members;
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (bins.labels[i] == bin) members.push_back(ids[i]);
        const std::size_t take = std::min(per_bin, members.size());
        Rng rng = derive_rng(seed, {kTagBalanced, static_cast<std::uint64_t>(bin)});
        for (std::size_t i = 0; i < take; ++i)
            std::swap(members[i], members[i + rng.below(members.size() - i)]);
        members.resize(take);
        std::sort(members.begin(), members.end());
        out.insert(out.end(), members.begin(), members.end());
    }
    return out;
}

std::vector<CurvePoint> loss_novelty_curve(std::span<const double> novelty,
                                           std::span<const double> losses,
                                           std::size_t window_quantiles) {
    check_aligned(novelty, losses);
    if (window_quantiles < 1) throw ValidationError("window_quantiles must be >= 1");
    const std::size_t n = novelty.size();
    const std::size_t windows = std::min(window_quantiles, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return novelty[a] < novelty[b]; });

    std::vector<CurvePoint> curve;
    curve.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t begin = w * n / windows;
        const std::size_t end = (w + 1) * n / windows;
        double loss_sum = 0;
        double lo = novelty[order[begin]];
        double hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            loss_sum += losses[order[i]];
            lo = std::min(lo, novelty[order[i]]);
            hi = std::max(hi, novelty[order[i]]);
        }
        curve.push_back({0.5 * (lo + hi), loss_sum / static_cast<double>(end - begin)});
    }
    return curve;
}

GeneralizationReport make_report(std::span<const double> novelty, std::span<const double> losses,
                                 double accuracy, std::size_t fp_count) {
    if (!(accuracy >= 0 && accuracy <= 1)) throw ValidationError("accuracy must be in [0,1]");
    GeneralizationReport r;
    r.g_score = generalization_score(novelty, losses);
    r.unweighted_complement =
        1.0 - std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    r.accuracy = accuracy;
    r.n_objects = novelty.size();
    r.fp_count = fp_count;

    const NoveltyBins bins = bin_by_novelty(novelty);
    r.degenerate_bins = bins.degenerate;
    for (std::size_t i = 0; i < novelty.size(); ++i) {
        BinStat& stat = bins.labels[i] == NoveltyBin::low      ? r.low
                        : bins.labels[i] == NoveltyBin::medium ? r.medium
                                                               : r.high;
        ++stat.count;
        stat.mean_loss += losses[i];
    }
    for (BinStat* stat : {&r.low, &r.medium, &r.high})
        if (stat->count > 0) stat->mean_loss /= static_cast<double>(stat->count);
    return r;
}

void write_report_json(const std::filesystem::path& path, const GeneralizationReport& report) {
    auto bin_json = [](const BinStat& s) {
        return nlohmann::json{{"count", s.count}, {"mean_loss", s.mean_loss}};
    };
    nlohmann::json j;
    j["g_score"] = report.g_score;
    j["unweighted_complement"] = report.unweighted_complement;
    j["accuracy"] = report.accuracy;
    j["n_objects"] = report.n_objects;
    j["fp_count"] = report.fp_count;
    j["degenerate_bins"] = report.degenerate_bins;
    j["per_bin"] = {{"low", bin_json(report.low)},
                    {"medium", bin_json(report.medium)},
                    {"high", bin_json(report.high)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "window_mid_novelty,mean_loss\n";
    for (const CurvePoint& p : points)
        out << format_double(p.window_mid_novelty) << ',' << format_double(p.mean_loss) << '\n';
}

}  // namespace noveval
