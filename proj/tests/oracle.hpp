#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here deliberately favors the most obvious possible algorithm
// over speed or cleverness: full sorts instead of partial selection,
// Gauss-Jordan elimination instead of Cholesky solves, explicit pair
// counting instead of rank sums, and grid counting instead of closed-form
// geometry. A bug would have to appear in both code paths to go unnoticed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "noveval/common.hpp"
#include "noveval/detect_eval.hpp"
#include "noveval/genscore.hpp"
#include "noveval/scorers.hpp"

namespace oracle {

inline double dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(acc);
}

/// Distance from q to the k-th nearest row of pts, by fully sorting all
/// distances.
inline double knn_distance(const noveval::Matrix& pts, std::span<const double> q, int k) {
    std::vector<double> d(pts.rows);
    for (std::size_t i = 0; i < pts.rows; ++i) d[i] = dist(pts.row(i), q);
    std::sort(d.begin(), d.end());
    return d[static_cast<std::size_t>(k - 1)];
}

/// Local outlier factor of an external query against training rows, built
/// from first principles: k-distances among the training rows (excluding
/// self), tie-inclusive neighborhoods, reachability distances floored at
/// 1e-12, local reachability densities, and finally the mean lrd ratio.
inline double lof(const noveval::Matrix& pts, std::span<const double> q, int k) {
    const std::size_t n = pts.rows;
    const double floor = 1e-12;

    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i][j] = dist(pts.row(i), pts.row(j));

    // k-distance of each training row among the other rows.
    std::vector<double> kdist(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> others;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(d[i][j]);
        std::sort(others.begin(), others.end());
        kdist[i] = others[static_cast<std::size_t>(k - 1)];
    }

    // lrd of each training row over its tie-inclusive neighborhood.
    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double reach = 0;
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || d[i][j] > kdist[i]) continue;
            reach += std::max({kdist[j], d[i][j], floor});
            ++count;
        }
        lrd[i] = static_cast<double>(count) / reach;
    }

    std::vector<double> dq(n);
    for (std::size_t j = 0; j < n; ++j) dq[j] = dist(pts.row(j), q);
    std::vector<double> sorted = dq;
    std::sort(sorted.begin(), sorted.end());
    const double kdist_q = sorted[static_cast<std::size_t>(k - 1)];

    double reach_q = 0, lrd_sum = 0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (dq[j] > kdist_q) continue;
        reach_q += std::max({kdist[j], dq[j], floor});
        lrd_sum += lrd[j];
        ++count;
    }
    const double lrd_q = static_cast<double>(count) / reach_q;
    return lrd_sum / (static_cast<double>(count) * lrd_q);
}

/// Gauss-Jordan inverse with partial pivoting. Throws on a zero pivot.
inline noveval::Matrix invert(noveval::Matrix a) {
    const std::size_t n = a.rows;
    noveval::Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv.at(i, i) = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
        if (a.at(pivot, col) == 0.0) throw std::runtime_error("oracle: singular matrix");
        if (pivot != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a.at(pivot, c), a.at(col, c));
                std::swap(inv.at(pivot, c), inv.at(col, c));
            }
        const double p = a.at(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a.at(col, c) /= p;
            inv.at(col, c) /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a.at(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a.at(r, c) -= f * a.at(col, c);
                inv.at(r, c) -= f * inv.at(col, c);
            }
        }
    }
    return inv;
}

/// Mahalanobis distance via sample covariance (n-1 denominator), the same
/// relative ridge 1e-6 * trace / d on the diagonal, and an explicit
/// Gauss-Jordan inverse.
inline double mahalanobis(const noveval::Matrix& pts, std::span<const double> q) {
    const std::size_t n = pts.rows, d = pts.cols;
    std::vector<double> mu(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mu[j] += pts.at(i, j);
    for (double& v : mu) v /= static_cast<double>(n);

    noveval::Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i)
                acc += (pts.at(i, a) - mu[a]) * (pts.at(i, b) - mu[b]);
            cov.at(a, b) = acc / static_cast<double>(n - 1);
        }
    double trace = 0;
    for (std::size_t a = 0; a < d; ++a) trace += cov.at(a, a);
    for (std::size_t a = 0; a < d; ++a) cov.at(a, a) += 1e-6 * trace / static_cast<double>(d);

    const noveval::Matrix inv = invert(cov);
    double acc = 0;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            acc += (q[a] - mu[a]) * inv.at(a, b) * (q[b] - mu[b]);
    return std::sqrt(std::max(acc, 0.0));
}

/// All-pairs ROC AUC: P(pos > neg) + 0.5 * P(pos == neg).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
            ++pairs;
        }
    }
    return wins / static_cast<double>(pairs);
}

/// IoU by counting cell centers on an n x n grid spanning both boxes.
inline double iou_grid(const noveval::BoundingBox& a, const noveval::BoundingBox& b, int n) {
    const double lo_x = std::min(a.x1, b.x1), hi_x = std::max(a.x2, b.x2);
    const double lo_y = std::min(a.y1, b.y1), hi_y = std::max(a.y2, b.y2);
    const double sx = (hi_x - lo_x) / n, sy = (hi_y - lo_y) / n;
    long long inter = 0, uni = 0;
    for (int iy = 0; iy < n; ++iy) {
        const double y = lo_y + (iy + 0.5) * sy;
        const bool ya = y >= a.y1 && y <= a.y2;
        const bool yb = y >= b.y1 && y <= b.y2;
        if (!ya && !yb) continue;
        for (int ix = 0; ix < n; ++ix) {
            const double x = lo_x + (ix + 0.5) * sx;
            const bool in_a = ya && x >= a.x1 && x <= a.x2;
            const bool in_b = yb && x >= b.x1 && x <= b.x2;
            if (in_a || in_b) ++uni;
            if (in_a && in_b) ++inter;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Plug-in mutual information from an explicitly built contingency table.
/// Bin edges are the type-1 empirical quantiles sorted[ceil((j+1)*n/bins)-1];
/// values equal to an edge fall into the lower bin.
inline double mutual_information(std::span<const double> col, std::span<const int> labels,
                                 std::size_t bins) {
    const std::size_t n = col.size();
    std::vector<double> sorted(col.begin(), col.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (std::size_t j = 0; j + 1 < bins; ++j) {
        const auto idx = static_cast<std::size_t>(
            std::ceil(static_cast<double>((j + 1) * n) / static_cast<double>(bins)));
        edges.push_back(sorted[idx - 1]);
    }
    std::vector<std::vector<double>> table(bins, std::vector<double>(2, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = 0;
        for (const double e : edges)
            if (col[i] > e) ++b;
        table[b][static_cast<std::size_t>(labels[i])] += 1.0;
    }
    std::vector<double> row(bins, 0.0), colsum(2, 0.0);
    for (std::size_t b = 0; b < bins; ++b)
        for (std::size_t l = 0; l < 2; ++l) {
            row[b] += table[b][l];
            colsum[l] += table[b][l];
        }
    const auto total = static_cast<double>(n);
    double mi = 0;
    for (std::size_t b = 0; b < bins; ++b)
        for (std::size_t l = 0; l < 2; ++l) {
            if (table[b][l] == 0.0) continue;
            const double pj = table[b][l] / total;
            mi += pj * std::log(pj * total * total / (row[b] * colsum[l]));
        }
    return std::max(mi, 0.0);
}

/// Loss-vs-novelty curve by stable-sorting index pairs and chunking into
/// equal-count windows [w*n/W, (w+1)*n/W).
inline std::vector<noveval::CurvePoint> curve(std::span<const double> novelty,
                                              std::span<const double> losses,
                                              std::size_t windows) {
    const std::size_t n = novelty.size();
    windows = std::min(windows, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return novelty[a] < novelty[b]; });
    std::vector<noveval::CurvePoint> out;
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t lo = w * n / windows;
        const std::size_t hi = (w + 1) * n / windows;
        double loss_sum = 0;
        double nov_min = novelty[order[lo]], nov_max = nov_min;
        for (std::size_t i = lo; i < hi; ++i) {
            loss_sum += losses[order[i]];
            nov_min = std::min(nov_min, novelty[order[i]]);
            nov_max = std::max(nov_max, novelty[order[i]]);
        }
        out.push_back({0.5 * (nov_min + nov_max), loss_sum / static_cast<double>(hi - lo)});
    }
    return out;
}

/// Monte-Carlo estimate of KL(N(mu, diag e^logvar) || N(0, I)) as the
/// sample mean of log q(z) - log p(z) under z ~ q.
inline double kl_monte_carlo(std::span<const double> mu, std::span<const double> logvar,
                             std::size_t n_samples, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    double acc = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double term = 0;
        for (std::size_t j = 0; j < mu.size(); ++j) {
            const double sigma = std::exp(0.5 * logvar[j]);
            const double z = mu[j] + sigma * g(eng);
            // log q - log p; the shared -0.5*ln(2*pi) cancels.
            const double lq = -0.5 * logvar[j] - 0.5 * (z - mu[j]) * (z - mu[j]) /
                                                     (sigma * sigma);
            const double lp = -0.5 * z * z;
            term += lq - lp;
        }
        acc += term;
    }
    return acc / static_cast<double>(n_samples);
}

/// Total probability mass of a fitted 2-d KDE over [lo, hi]^2 by midpoint
/// quadrature on an n x n grid.
inline double kde_mass(const noveval::ScorerModel& model, double lo, double hi, int n) {
    const double step = (hi - lo) / n;
    double mass = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const double z[2] = {lo + (ix + 0.5) * step, lo + (iy + 0.5) * step};
            mass += std::exp(noveval::kde_log_density(model, z)) * step * step;
        }
    return mass;
}

}  // namespace oracle
