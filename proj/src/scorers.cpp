#include "noveval/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "noveval/rng.hpp"

namespace noveval {

namespace {

constexpr double kReachFloor = 1e-12;
constexpr double kHbosFloor = 1e-9;
constexpr std::uint64_t kTagForest = 0x1f07;

void check_hyper(const ScorerHyper& h) {
    if (h.lof_k < 1) throw ValidationError("lof_k must be >= 1");
    if (h.knn_k < 1) throw ValidationError("knn_k must be >= 1");
    if (h.hbos_bins < 2) throw ValidationError("hbos_bins must be >= 2");
    if (!(h.kde_bandwidth >= 0)) throw ValidationError("kde_bandwidth must be >= 0");
    if (h.iforest_trees < 1) throw ValidationError("iforest_trees must be >= 1");
    if (h.iforest_subsample < 1) throw ValidationError("iforest_subsample must be >= 1");
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// Maps a raw query into the model's standardized kept-dimension space.
std::vector<double> to_model_space(const ScorerModel& m, std::span<const double> z) {
    if (z.size() != m.original_dim)
        throw ValidationError("query has " + std::to_string(z.size()) + " dims, model expects " +
                              std::to_string(m.original_dim));
    std::vector<double> out(m.kept_dims.size());
    for (std::size_t j = 0; j < m.kept_dims.size(); ++j) {
        double v = z[m.kept_dims[j]];
        if (!m.mean.empty()) v = (v - m.mean[j]) / m.std[j];
        out[j] = v;
    }
    return out;
}

std::vector<double> dists_to_points(const Matrix& pts, std::span<const double> q) {
    std::vector<double> d(pts.rows);
    for (std::size_t i = 0; i < pts.rows; ++i) d[i] = std::sqrt(sq_dist(pts.row(i), q));
    return d;
}

// k-distance and local reachability density of every training point, for a
// given k. Neighborhoods include all points tied at the k-distance.
struct LofTables {
    std::vector<double> kdist;
    std::vector<double> lrd;
};

LofTables build_lof_tables(const Matrix& pts, int k) {
    const std::size_t n = pts.rows;
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        dist.at(i, i) = 0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::sqrt(sq_dist(pts.row(i), pts.row(j)));
            dist.at(i, j) = d;
            dist.at(j, i) = d;
        }
    }
    LofTables t;
    t.kdist.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(dist.at(i, j));
        std::nth_element(others.begin(), others.begin() + (k - 1), others.end());
        t.kdist[i] = others[static_cast<std::size_t>(k - 1)];
    }
    t.lrd.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double reach_sum = 0;
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || dist.at(i, j) > t.kdist[i]) continue;
            reach_sum += std::max(std::max(t.kdist[j], dist.at(i, j)), kReachFloor);
            ++count;
        }
        t.lrd[i] = static_cast<double>(count) / reach_sum;
    }
    return t;
}

double lof_query(const Matrix& pts, const LofTables& t, std::span<const double> q, int k) {
    const std::vector<double> d = dists_to_points(pts, q);
    std::vector<double> sorted = d;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const double kdist_q = sorted[static_cast<std::size_t>(k - 1)];

    double reach_sum = 0;
    double lrd_sum = 0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < pts.rows; ++j) {
        if (d[j] > kdist_q) continue;
        reach_sum += std::max(std::max(t.kdist[j], d[j]), kReachFloor);
        lrd_sum += t.lrd[j];
        ++count;
    }
    const double lrd_q = static_cast<double>(count) / reach_sum;
    return lrd_sum / (static_cast<double>(count) * lrd_q);
}

std::vector<HbosHistogram> build_histograms(const Matrix& pts, int n_bins) {
    std::vector<HbosHistogram> hists(pts.cols);
    for (std::size_t j = 0; j < pts.cols; ++j) {
        HbosHistogram& h = hists[j];
        h.lo = std::numeric_limits<double>::infinity();
        h.hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts.rows; ++i) {
            h.lo = std::min(h.lo, pts.at(i, j));
            h.hi = std::max(h.hi, pts.at(i, j));
        }
        h.heights.assign(static_cast<std::size_t>(n_bins), 0.0);
        if (h.hi == h.lo) {
            h.heights[0] = 1.0;
        } else {
            const double width = (h.hi - h.lo) / n_bins;
            for (std::size_t i = 0; i < pts.rows; ++i) {
                auto bin = static_cast<std::size_t>((pts.at(i, j) - h.lo) / width);
                bin = std::min(bin, static_cast<std::size_t>(n_bins - 1));
                h.heights[bin] += 1.0;
            }
            for (double& v : h.heights) v /= static_cast<double>(pts.rows);
        }
        for (double& v : h.heights) v = std::max(v, kHbosFloor);
    }
    return hists;
}

// Average unsuccessful-search path length in a BST of n nodes, with exact
// harmonic numbers.
double c_factor(std::size_t n) {
    if (n <= 1) return 0.0;
    double harmonic = 0;
    for (std::size_t i = 1; i + 1 <= n; ++i) harmonic += 1.0 / static_cast<double>(i);
    return 2.0 * harmonic - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

IsoTree build_iso_tree(const Matrix& pts, std::vector<std::size_t> sample, Rng& rng) {
    IsoTree tree;
    const int height_limit =
        static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(sample.size(), 2)))));

    // Recursive build over index subsets; returns the new node's index.
    auto build = [&](auto&& self, std::vector<std::size_t> idx, int depth) -> int {
        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[static_cast<std::size_t>(node_index)].size = static_cast<int>(idx.size());
        if (idx.size() <= 1 || depth >= height_limit) return node_index;

        std::vector<std::size_t> splittable;
        for (std::size_t j = 0; j < pts.cols; ++j) {
            double lo = pts.at(idx[0], j), hi = lo;
            for (const std::size_t i : idx) {
                lo = std::min(lo, pts.at(i, j));
                hi = std::max(hi, pts.at(i, j));
            }
            if (hi > lo) splittable.push_back(j);
        }
        if (splittable.empty()) return node_index;

        const std::size_t dim = splittable[rng.below(splittable.size())];
        double lo = pts.at(idx[0], dim), hi = lo;
        for (const std::size_t i : idx) {
            lo = std::min(lo, pts.at(i, dim));
            hi = std::max(hi, pts.at(i, dim));
        }
        const double split = rng.uniform(lo, hi);
        std::vector<std::size_t> left, right;
        for (const std::size_t i : idx)
            (pts.at(i, dim) < split ? left : right).push_back(i);
        if (left.empty() || right.empty()) return node_index;

        const int l = self(self, std::move(left), depth + 1);
        const int r = self(self, std::move(right), depth + 1);
        IsoNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
        node.dim = static_cast<int>(dim);
        node.split = split;
        node.left = l;
        node.right = r;
        return node_index;
    };
    build(build, std::move(sample), 0);
    return tree;
}

double iso_path_length(const IsoTree& tree, std::span<const double> q) {
    int node = 0;
    int depth = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].dim >= 0) {
        const IsoNode& n = tree.nodes[static_cast<std::size_t>(node)];
        node = q[static_cast<std::size_t>(n.dim)] < n.split ? n.left : n.right;
        ++depth;
    }
    return depth + c_factor(static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(node)].size));
}

void require_kind(const ScorerModel& m, ScorerKind kind, const char* op) {
    if (m.kind != kind)
        throw ValidationError(std::string(op) + " requires a " + to_string(kind) + " model, got " +
                              to_string(m.kind));
}

}  // namespace

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::kde: return "kde";
        case ScorerKind::lof: return "lof";
        case ScorerKind::knn: return "knn";
        case ScorerKind::mahalanobis: return "mahalanobis";
        case ScorerKind::hbos: return "hbos";
        case ScorerKind::iforest: return "iforest";
    }
    throw std::logic_error("unreachable scorer kind");
}

ScorerKind scorer_kind_from_string(const std::string& name) {
    for (const ScorerKind k : all_scorer_kinds())
        if (to_string(k) == name) return k;
    throw ValidationError("unknown scorer '" + name +
                          "' (expected kde, lof, knn, mahalanobis, hbos or iforest)");
}

std::vector<ScorerKind> all_scorer_kinds() {
    return {ScorerKind::kde,          ScorerKind::lof,  ScorerKind::knn,
            ScorerKind::mahalanobis, ScorerKind::hbos, ScorerKind::iforest};
}

Orientation orientation_of(ScorerKind kind) {
    return kind == ScorerKind::kde ? Orientation::density : Orientation::anomaly;
}

ScorerModel fit_scorer(const Matrix& z_train, ScorerKind kind, const ScorerHyper& hyper) {
    check_hyper(hyper);
    const std::size_t n = z_train.rows;
    const std::size_t dim = z_train.cols;
    if (n == 0 || dim == 0) throw ValidationError("training matrix must be non-empty");

    if (kind == ScorerKind::lof && static_cast<std::size_t>(hyper.lof_k) >= n)
        throw ValidationError("k must be < N");
    if (kind == ScorerKind::knn && static_cast<std::size_t>(hyper.knn_k) >= n)
        throw ValidationError("k must be < N");
    const std::size_t min_points = (kind == ScorerKind::kde && !hyper.standardize) ? 1 : 2;
    if (n < min_points)
        throw ValidationError("need at least " + std::to_string(min_points) +
                              " training points, got " + std::to_string(n));

    ScorerModel m;
    m.kind = kind;
    m.orientation = orientation_of(kind);
    m.hyper = hyper;
    m.original_dim = dim;
    m.n_train = n;

    // Constant columns carry no information and break standardization.
    std::vector<std::size_t> dropped;
    for (std::size_t j = 0; j < dim; ++j) {
        double lo = z_train.at(0, j), hi = lo;
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, z_train.at(i, j));
            hi = std::max(hi, z_train.at(i, j));
        }
        if (!hyper.standardize || hi > lo)
            m.kept_dims.push_back(j);
        else
            dropped.push_back(j);
    }
    if (m.kept_dims.empty())
        throw ValidationError("all dimensions have zero variance; cannot fit a scorer");
    if (!dropped.empty()) {
        std::cerr << "[scorers] dropping zero-variance dimension(s):";
        for (const std::size_t j : dropped) std::cerr << ' ' << j;
        std::cerr << '\n';
    }

    const std::size_t d_eff = m.kept_dims.size();
    if (hyper.standardize) {
        m.mean.resize(d_eff);
        m.std.resize(d_eff);
        for (std::size_t j = 0; j < d_eff; ++j) {
            const std::size_t col = m.kept_dims[j];
            double sum = 0;
            for (std::size_t i = 0; i < n; ++i) sum += z_train.at(i, col);
            m.mean[j] = sum / static_cast<double>(n);
            double ss = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double diff = z_train.at(i, col) - m.mean[j];
                ss += diff * diff;
            }
            m.std[j] = std::sqrt(ss / static_cast<double>(n));
        }
    }

    Matrix pts(n, d_eff);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d_eff; ++j) {
            double v = z_train.at(i, m.kept_dims[j]);
            if (hyper.standardize) v = (v - m.mean[j]) / m.std[j];
            pts.at(i, j) = v;
        }

    switch (kind) {
        case ScorerKind::kde: {
            m.points = std::move(pts);
            m.bandwidth = hyper.kde_bandwidth > 0
                              ? hyper.kde_bandwidth
                              : std::pow(static_cast<double>(n),
                                         -1.0 / (static_cast<double>(d_eff) + 4.0));
            break;
        }
        case ScorerKind::lof: {
            LofTables t = build_lof_tables(pts, hyper.lof_k);
            m.points = std::move(pts);
            m.kdist = std::move(t.kdist);
            m.lrd = std::move(t.lrd);
            break;
        }
        case ScorerKind::knn: {
            m.points = std::move(pts);
            break;
        }
        case ScorerKind::mahalanobis: {
            m.center.assign(d_eff, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d_eff; ++j) m.center[j] += pts.at(i, j);
            for (double& v : m.center) v /= static_cast<double>(n);

            Matrix cov(d_eff, d_eff);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t a = 0; a < d_eff; ++a) {
                    const double da = pts.at(i, a) - m.center[a];
                    for (std::size_t b = a; b < d_eff; ++b)
                        cov.at(a, b) += da * (pts.at(i, b) - m.center[b]);
                }
            for (std::size_t a = 0; a < d_eff; ++a)
                for (std::size_t b = a; b < d_eff; ++b) {
                    cov.at(a, b) /= static_cast<double>(n - 1);
                    cov.at(b, a) = cov.at(a, b);
                }
            double trace = 0;
            for (std::size_t a = 0; a < d_eff; ++a) trace += cov.at(a, a);
            const double ridge = 1e-6 * trace / static_cast<double>(d_eff);
            for (std::size_t a = 0; a < d_eff; ++a) cov.at(a, a) += ridge;

            // Cholesky factorization in place (lower triangle).
            Matrix chol = cov;
            for (std::size_t a = 0; a < d_eff; ++a) {
                for (std::size_t b = 0; b <= a; ++b) {
                    double acc = chol.at(a, b);
                    for (std::size_t k = 0; k < b; ++k) acc -= chol.at(a, k) * chol.at(b, k);
                    if (a == b) {
                        if (acc <= 0)
                            throw ValidationError(
                                "covariance is singular even after ridge regularization");
                        chol.at(a, a) = std::sqrt(acc);
                    } else {
                        chol.at(a, b) = acc / chol.at(b, b);
                    }
                }
            }
            m.inv_cov = Matrix(d_eff, d_eff);
            std::vector<double> y(d_eff), x(d_eff);
            for (std::size_t col = 0; col < d_eff; ++col) {
                for (std::size_t a = 0; a < d_eff; ++a) {
                    double acc = (a == col) ? 1.0 : 0.0;
                    for (std::size_t k = 0; k < a; ++k) acc -= chol.at(a, k) * y[k];
                    y[a] = acc / chol.at(a, a);
                }
                for (std::size_t a = d_eff; a-- > 0;) {
                    double acc = y[a];
                    for (std::size_t k = a + 1; k < d_eff; ++k) acc -= chol.at(k, a) * x[k];
                    x[a] = acc / chol.at(a, a);
                }
                for (std::size_t a = 0; a < d_eff; ++a) m.inv_cov.at(a, col) = x[a];
            }
            break;
        }
        case ScorerKind::hbos: {
            m.histograms = build_histograms(pts, hyper.hbos_bins);
            m.points = std::move(pts);
            break;
        }
        case ScorerKind::iforest: {
            const auto psi = std::min<std::size_t>(static_cast<std::size_t>(hyper.iforest_subsample), n);
            m.iforest_cn = c_factor(psi);
            m.forest.reserve(static_cast<std::size_t>(hyper.iforest_trees));
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), std::size_t{0});
            for (int t = 0; t < hyper.iforest_trees; ++t) {
                Rng rng = derive_rng(hyper.seed, {kTagForest, static_cast<std::uint64_t>(t)});
                std::vector<std::size_t> idx = all;
                for (std::size_t i = 0; i < psi; ++i)
                    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
                idx.resize(psi);
                m.forest.push_back(build_iso_tree(pts, std::move(idx), rng));
            }
            break;
        }
    }
    return m;
}

ScorerModel fit_scorer(const LatentMatrix& z_train, ScorerKind kind, const ScorerHyper& hyper) {
    return fit_scorer(z_train.z, kind, hyper);
}

double kde_log_density(const ScorerModel& m, std::span<const double> z) {
    require_kind(m, ScorerKind::kde, "kde_log_density");
    const std::vector<double> q = to_model_space(m, z);
    const double h2 = m.bandwidth * m.bandwidth;
    double max_exp = -std::numeric_limits<double>::infinity();
    std::vector<double> exps(m.points.rows);
    for (std::size_t i = 0; i < m.points.rows; ++i) {
        exps[i] = -sq_dist(m.points.row(i), q) / (2.0 * h2);
        max_exp = std::max(max_exp, exps[i]);
    }
    double acc = 0;
    for (const double e : exps) acc += std::exp(e - max_exp);
    const auto d = static_cast<double>(m.kept_dims.size());
    return max_exp + std::log(acc) - std::log(static_cast<double>(m.points.rows)) -
           0.5 * d * std::log(2.0 * std::numbers::pi * h2);
}

double lof_factor(const ScorerModel& m, std::span<const double> z, int k) {
    require_kind(m, ScorerKind::lof, "lof_factor");
    if (k < 1) throw ValidationError("k must be >= 1");
    if (static_cast<std::size_t>(k) >= m.points.rows) throw ValidationError("k must be < N");
    const std::vector<double> q = to_model_space(m, z);
    if (k == m.hyper.lof_k) {
        const LofTables t{m.kdist, m.lrd};
        return lof_query(m.points, t, q, k);
    }
    const LofTables t = build_lof_tables(m.points, k);
    return lof_query(m.points, t, q, k);
}

double knn_distance(const ScorerModel& m, std::span<const double> z, int k) {
    require_kind(m, ScorerKind::knn, "knn_distance");
    if (k < 1) throw ValidationError("k must be >= 1");
    // Unlike LOF there is no self-neighbor to exclude, so a query may ask for
    // the farthest training point (k = N).
    if (static_cast<std::size_t>(k) > m.points.rows) throw ValidationError("k must be <= N");
    const std::vector<double> q = to_model_space(m, z);
    std::vector<double> d = dists_to_points(m.points, q);
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    return d[static_cast<std::size_t>(k - 1)];
}

double mahalanobis_distance(const ScorerModel& m, std::span<const double> z) {
    require_kind(m, ScorerKind::mahalanobis, "mahalanobis_distance");
    const std::vector<double> q = to_model_space(m, z);
    const std::size_t d = m.center.size();
    double acc = 0;
    for (std::size_t a = 0; a < d; ++a) {
        const double da = q[a] - m.center[a];
        for (std::size_t b = 0; b < d; ++b) acc += da * m.inv_cov.at(a, b) * (q[b] - m.center[b]);
    }
    return std::sqrt(std::max(acc, 0.0));
}

double hbos_score(const ScorerModel& m, std::span<const double> z, int n_bins) {
    require_kind(m, ScorerKind::hbos, "hbos_score");
    if (n_bins < 2) throw ValidationError("n_bins must be >= 2");
    const std::vector<double> q = to_model_space(m, z);
    const std::vector<HbosHistogram> rebuilt =
        (n_bins == m.hyper.hbos_bins) ? std::vector<HbosHistogram>{}
                                      : build_histograms(m.points, n_bins);
    const std::vector<HbosHistogram>& hists = rebuilt.empty() ? m.histograms : rebuilt;

    double score = 0;
    for (std::size_t j = 0; j < hists.size(); ++j) {
        const HbosHistogram& h = hists[j];
        double height = kHbosFloor;
        if (q[j] >= h.lo && q[j] <= h.hi) {
            if (h.hi == h.lo) {
                height = h.heights[0];
            } else {
                const double width = (h.hi - h.lo) / static_cast<double>(h.heights.size());
                auto bin = static_cast<std::size_t>((q[j] - h.lo) / width);
                bin = std::min(bin, h.heights.size() - 1);
                height = h.heights[bin];
            }
        }
        score -= std::log(height);
    }
    return score;
}

double iforest_score(const ScorerModel& m, std::span<const double> z) {
    require_kind(m, ScorerKind::iforest, "iforest_score");
    const std::vector<double> q = to_model_space(m, z);
    double path_sum = 0;
    for (const IsoTree& tree : m.forest) path_sum += iso_path_length(tree, q);
    const double mean_path = path_sum / static_cast<double>(m.forest.size());
    return std::exp2(-mean_path / m.iforest_cn);
}

double raw_score(const ScorerModel& m, std::span<const double> z) {
    switch (m.kind) {
        case ScorerKind::kde: return kde_log_density(m, z);
        case ScorerKind::lof: return lof_factor(m, z, m.hyper.lof_k);
        case ScorerKind::knn: return knn_distance(m, z, m.hyper.knn_k);
        case ScorerKind::mahalanobis: return mahalanobis_distance(m, z);
        case ScorerKind::hbos: return hbos_score(m, z, m.hyper.hbos_bins);
        case ScorerKind::iforest: return iforest_score(m, z);
    }
    throw std::logic_error("unreachable scorer kind");
}

std::vector<double> raw_scores(const ScorerModel& m, const Matrix& z_test, int threads) {
    if (threads < 1) throw ValidationError("threads must be >= 1");
    if (z_test.rows == 0) throw ValidationError("test matrix must be non-empty");
    std::vector<double> raw(z_test.rows);
    parallel_chunks(z_test.rows, threads, 8, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) raw[i] = raw_score(m, z_test.row(i));
    });
    return raw;
}

std::vector<double> novelty_from_raw(Orientation orientation, std::span<const double> raw) {
    if (raw.empty()) throw ValidationError("raw scores must be non-empty");
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (!std::isfinite(raw[i]))
            throw ValidationError("non-finite raw score for row " + std::to_string(i));
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(raw.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double up = (raw[i] - lo) / (hi - lo);
        out[i] = orientation == Orientation::anomaly ? up : 1.0 - up;
    }
    return out;
}

std::vector<double> novelty_scores(const ScorerModel& m, const Matrix& z_test, int threads) {
    return novelty_from_raw(m.orientation, raw_scores(m, z_test, threads));
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"v", m.v}};
}

Matrix matrix_from(const nlohmann::json& j, const std::string& name) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("v"))
        throw ValidationError("field '" + name + "' must be a matrix object");
    Matrix m(j["rows"].get<std::size_t>(), j["cols"].get<std::size_t>());
    const auto v = j["v"].get<std::vector<double>>();
    if (v.size() != m.rows * m.cols)
        throw ValidationError("field '" + name + "' has wrong element count");
    m.v = v;
    return m;
}

}  // namespace

void save_scorer_json(const std::filesystem::path& path, const ScorerModel& m) {
    nlohmann::json j;
    j["kind"] = to_string(m.kind);
    j["hyper"] = {{"lof_k", m.hyper.lof_k},
                  {"knn_k", m.hyper.knn_k},
                  {"hbos_bins", m.hyper.hbos_bins},
                  {"kde_bandwidth", m.hyper.kde_bandwidth},
                  {"iforest_trees", m.hyper.iforest_trees},
                  {"iforest_subsample", m.hyper.iforest_subsample},
                  {"seed", m.hyper.seed},
                  {"standardize", m.hyper.standardize}};
    j["original_dim"] = m.original_dim;
    j["n_train"] = m.n_train;
    j["kept_dims"] = m.kept_dims;
    j["mean"] = m.mean;
    j["std"] = m.std;
    j["points"] = matrix_json(m.points);
    j["bandwidth"] = m.bandwidth;
    j["kdist"] = m.kdist;
    j["lrd"] = m.lrd;
    j["center"] = m.center;
    j["inv_cov"] = matrix_json(m.inv_cov);
    nlohmann::json hists = nlohmann::json::array();
    for (const HbosHistogram& h : m.histograms)
        hists.push_back({{"lo", h.lo}, {"hi", h.hi}, {"heights", h.heights}});
    j["histograms"] = hists;
    nlohmann::json forest = nlohmann::json::array();
    for (const IsoTree& tree : m.forest) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const IsoNode& n : tree.nodes)
            nodes.push_back({{"dim", n.dim},
                             {"split", n.split},
                             {"left", n.left},
                             {"right", n.right},
                             {"size", n.size}});
        forest.push_back(std::move(nodes));
    }
    j["forest"] = forest;
    j["iforest_cn"] = m.iforest_cn;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump() << '\n';
}

ScorerModel load_scorer_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed scorer file " + path.string() + ": " + e.what());
    }
    for (const char* key : {"kind", "hyper", "original_dim", "n_train", "kept_dims", "mean",
                            "std", "points", "bandwidth", "kdist", "lrd", "center", "inv_cov",
                            "histograms", "forest", "iforest_cn"})
        if (!j.contains(key))
            throw ValidationError("scorer file missing field '" + std::string(key) + "'");

    ScorerModel m;
    m.kind = scorer_kind_from_string(j["kind"].get<std::string>());
    m.orientation = orientation_of(m.kind);
    const auto& h = j["hyper"];
    m.hyper.lof_k = h["lof_k"].get<int>();
    m.hyper.knn_k = h["knn_k"].get<int>();
    m.hyper.hbos_bins = h["hbos_bins"].get<int>();
    m.hyper.kde_bandwidth = h["kde_bandwidth"].get<double>();
    m.hyper.iforest_trees = h["iforest_trees"].get<int>();
    m.hyper.iforest_subsample = h["iforest_subsample"].get<int>();
    m.hyper.seed = h["seed"].get<std::uint64_t>();
    m.hyper.standardize = h["standardize"].get<bool>();
    check_hyper(m.hyper);
    m.original_dim = j["original_dim"].get<std::size_t>();
    m.n_train = j["n_train"].get<std::size_t>();
    m.kept_dims = j["kept_dims"].get<std::vector<std::size_t>>();
    m.mean = j["mean"].get<std::vector<double>>();
    m.std = j["std"].get<std::vector<double>>();
    m.points = matrix_from(j["points"], "points");
    m.bandwidth = j["bandwidth"].get<double>();
    m.kdist = j["kdist"].get<std::vector<double>>();
    m.lrd = j["lrd"].get<std::vector<double>>();
    m.center = j["center"].get<std::vector<double>>();
    m.inv_cov = matrix_from(j["inv_cov"], "inv_cov");
    for (const auto& hj : j["histograms"]) {
        HbosHistogram hist;
        hist.lo = hj["lo"].get<double>();
        hist.hi = hj["hi"].get<double>();
        hist.heights = hj["heights"].get<std::vector<double>>();
        m.histograms.push_back(std::move(hist));
    }
    for (const auto& tj : j["forest"]) {
        IsoTree tree;
        for (const auto& nj : tj)
            tree.nodes.push_back({nj["dim"].get<int>(), nj["split"].get<double>(),
                                  nj["left"].get<int>(), nj["right"].get<int>(),
                                  nj["size"].get<int>()});
        m.forest.push_back(std::move(tree));
    }
    m.iforest_cn = j["iforest_cn"].get<double>();
    if (m.kept_dims.empty() || m.original_dim == 0)
        throw ValidationError("scorer file has no usable dimensions");
    return m;
}

void write_scores_csv(const std::filesystem::path& path, const ScoreTable& table) {
    if (table.ids.size() != table.raw.size() || table.ids.size() != table.novelty.size())
        throw ValidationError("score table columns must have equal length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "id,raw,novelty\n";
    for (std::size_t i = 0; i < table.ids.size(); ++i)
        out << table.ids[i] << ',' << format_double(table.raw[i]) << ','
            << format_double(table.novelty[i]) << '\n';
}

ScoreTable read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "id,raw,novelty")
        throw ValidationError(path.string() + ": expected header 'id,raw,novelty'");
    ScoreTable t;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id_s, raw_s, nov_s;
        if (!std::getline(ss, id_s, ',') || !std::getline(ss, raw_s, ',') ||
            !std::getline(ss, nov_s))
            throw ValidationError(path.string() + ": malformed line " + std::to_string(line_no));
        try {
            t.ids.push_back(std::stoll(id_s));
            t.raw.push_back(std::stod(raw_s));
            t.novelty.push_back(std::stod(nov_s));
        } catch (const std::exception&) {
            throw ValidationError(path.string() + ": malformed line " + std::to_string(line_no));
        }
    }
    if (t.ids.empty()) throw ValidationError(path.string() + ": no score rows");
    return t;
}

}  // namespace noveval
