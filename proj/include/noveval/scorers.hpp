#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "noveval/common.hpp"
#include "noveval/latent.hpp"

namespace noveval {

enum class ScorerKind { kde, lof, knn, mahalanobis, hbos, iforest };
enum class Orientation { density, anomaly };

std::string to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(const std::string& name);
std::vector<ScorerKind> all_scorer_kinds();

/// kde reports a density (higher = more typical); everything else reports an
/// anomaly score (higher = more novel).
Orientation orientation_of(ScorerKind kind);

struct ScorerHyper {
    int lof_k = 20;
    int knn_k = 5;
    int hbos_bins = 10;
    double kde_bandwidth = 0;  // 0 selects Scott's rule N^(-1/(d+4))
    int iforest_trees = 100;
    int iforest_subsample = 256;
    std::uint64_t seed = 0;
    bool standardize = true;
};

struct HbosHistogram {
    double lo = 0;
    double hi = 0;
    std::vector<double> heights;  // normalized counts, floored at 1e-9
};

/// Flat isolation-tree node; dim == -1 marks a leaf holding `size` samples.
struct IsoNode {
    int dim = -1;
    double split = 0;
    int left = -1;
    int right = -1;
    int size = 0;
};

struct IsoTree {
    std::vector<IsoNode> nodes;
};

struct ScorerModel {
    ScorerKind kind = ScorerKind::kde;
    Orientation orientation = Orientation::density;
    ScorerHyper hyper;
    std::size_t original_dim = 0;
    std::size_t n_train = 0;

    // Columns dropped at fit time (zero variance) stay dropped for queries.
    std::vector<std::size_t> kept_dims;
    std::vector<double> mean, std;  // per kept dim; empty when standardize=false

    Matrix points;  // standardized training rows (kde, lof, knn, hbos)
    double bandwidth = 0;
    std::vector<double> kdist, lrd;  // lof tables for hyper.lof_k
    std::vector<double> center;
    Matrix inv_cov;
    std::vector<HbosHistogram> histograms;
    std::vector<IsoTree> forest;
    double iforest_cn = 0;
};

/// Fits on raw (unstandardized) latent rows. Neighbor methods need
/// N >= max(2, k+1); kde accepts a single point only with standardize=false.
ScorerModel fit_scorer(const Matrix& z_train, ScorerKind kind, const ScorerHyper& hyper);
ScorerModel fit_scorer(const LatentMatrix& z_train, ScorerKind kind, const ScorerHyper& hyper);

/// Per-query scores. Queries are in the original (unstandardized) space.
double kde_log_density(const ScorerModel& model, std::span<const double> z);
double lof_factor(const ScorerModel& model, std::span<const double> z, int k);
double knn_distance(const ScorerModel& model, std::span<const double> z, int k);
double mahalanobis_distance(const ScorerModel& model, std::span<const double> z);
double hbos_score(const ScorerModel& model, std::span<const double> z, int n_bins);
double iforest_score(const ScorerModel& model, std::span<const double> z);

/// Dispatches to the model's own scorer with its fitted hyperparameters.
double raw_score(const ScorerModel& model, std::span<const double> z);

std::vector<double> raw_scores(const ScorerModel& model, const Matrix& z_test, int threads = 1);

/// Min-max normalization of raw scores into [0,1] novelty weights, inverted
/// for density scorers. All-equal raw scores map to 0.5 everywhere.
std::vector<double> novelty_from_raw(Orientation orientation, std::span<const double> raw);
std::vector<double> novelty_scores(const ScorerModel& model, const Matrix& z_test,
                                   int threads = 1);

void save_scorer_json(const std::filesystem::path& path, const ScorerModel& model);
ScorerModel load_scorer_json(const std::filesystem::path& path);

struct ScoreTable {
    std::vector<std::int64_t> ids;
    std::vector<double> raw;
    std::vector<double> novelty;
};

/// CSV with header id,raw,novelty.
void write_scores_csv(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable read_scores_csv(const std::filesystem::path& path);

}  // namespace noveval
