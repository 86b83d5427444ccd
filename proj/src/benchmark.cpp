#include "noveval/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "noveval/rng.hpp"

namespace noveval {

namespace {

constexpr std::uint64_t kTagContam = 0xc0a7;

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t n,
                                                  Rng& rng) {
    for (std::size_t i = 0; i < n; ++i)
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(n);
    return pool;
}

Matrix select_matrix_rows(const Matrix& m, const std::vector<std::size_t>& indices) {
    Matrix out(indices.size(), m.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = m.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace

void validate_spec(const ContaminationSpec& spec) {
    if (!(spec.fraction > 0 && spec.fraction <= 1))
        throw ValidationError("contamination fraction must be in (0,1]");
    if (spec.repeats < 1) throw ValidationError("repeats must be >= 1");
    if (spec.scorers.empty()) throw ValidationError("scorer list must not be empty");
}

ContaminationSplit engineer_contamination(std::span<const ColorClass> train_labels,
                                          std::span<const ColorClass> test_labels,
                                          const ContaminationSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    ContaminationSplit split;
    for (std::size_t i = 0; i < train_labels.size(); ++i)
        if (train_labels[i] != spec.contamination_class) split.train_indices.push_back(i);
    if (split.train_indices.empty())
        throw ValidationError("training set has no samples outside the contamination class");
    if (split.train_indices.size() == train_labels.size())
        throw ValidationError("training set has no contamination-class samples to remove");

    std::vector<std::size_t> contam_pool, other_pool;
    for (std::size_t i = 0; i < test_labels.size(); ++i)
        (test_labels[i] == spec.contamination_class ? contam_pool : other_pool).push_back(i);
    if (contam_pool.empty())
        throw ValidationError("test set has no contamination-class samples");
    if (other_pool.empty())
        throw ValidationError("test set has no samples outside the contamination class");

    // Largest test size both pools can serve at the requested fraction.
    std::size_t size = 0, n_contam = 0;
    for (std::size_t t = contam_pool.size() + other_pool.size(); t >= 1; --t) {
        const auto c = static_cast<std::size_t>(
            std::ceil(spec.fraction * static_cast<double>(t)));
        if (c >= 1 && c <= contam_pool.size() && t - c <= other_pool.size()) {
            size = t;
            n_contam = c;
            break;
        }
    }
    if (size == 0) throw ValidationError("test pools cannot satisfy the contamination fraction");

    Rng contam_rng = derive_rng(seed, {kTagContam, 0});
    Rng other_rng = derive_rng(seed, {kTagContam, 1});
    std::vector<std::size_t> picked =
        draw_without_replacement(std::move(contam_pool), n_contam, contam_rng);
    const std::vector<std::size_t> others =
        draw_without_replacement(std::move(other_pool), size - n_contam, other_rng);
    picked.insert(picked.end(), others.begin(), others.end());
    std::sort(picked.begin(), picked.end());

    split.test_indices = std::move(picked);
    split.novelty_labels.reserve(split.test_indices.size());
    for (const std::size_t i : split.test_indices)
        split.novelty_labels.push_back(test_labels[i] == spec.contamination_class ? 1 : 0);
    return split;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ValidationError("scores and labels must have the same length");
    if (scores.empty()) throw ValidationError("AUC needs at least one sample");
    std::size_t n_pos = 0;
    for (const int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
        n_pos += static_cast<std::size_t>(l);
    }
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("labels must contain both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks within tie groups, then the Mann-Whitney U statistic.
    double pos_rank_sum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    const double u = pos_rank_sum -
                     static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<BenchmarkRow> run_contamination_benchmark(const Matrix& z_train,
                                                      std::span<const ColorClass> train_labels,
                                                      const Matrix& z_test,
                                                      std::span<const ColorClass> test_labels,
                                                      const ContaminationSpec& spec,
                                                      int threads) {
    validate_spec(spec);
    if (z_train.rows != train_labels.size())
        throw ValidationError("training embeddings and labels must have the same length");
    if (z_test.rows != test_labels.size())
        throw ValidationError("test embeddings and labels must have the same length");

    std::vector<BenchmarkRow> rows;
    rows.reserve(spec.scorers.size());
    for (const ScorerKind scorer : spec.scorers) {
        BenchmarkRow row;
        row.scorer = scorer;
        row.contamination_class = spec.contamination_class;
        row.fraction = spec.fraction;
        row.repeats = spec.repeats;
        rows.push_back(std::move(row));
    }

    for (int r = 0; r < spec.repeats; ++r) {
        const std::uint64_t repeat_seed = spec.seed + static_cast<std::uint64_t>(r);
        const ContaminationSplit split =
            engineer_contamination(train_labels, test_labels, spec, repeat_seed);
        const Matrix train_z = select_matrix_rows(z_train, split.train_indices);
        const Matrix test_z = select_matrix_rows(z_test, split.test_indices);

        for (std::size_t s = 0; s < spec.scorers.size(); ++s) {
            try {
                ScorerHyper hyper = spec.hyper;
                hyper.seed = repeat_seed;
                const ScorerModel model = fit_scorer(train_z, spec.scorers[s], hyper);
                const std::vector<double> novelty = novelty_scores(model, test_z, threads);
                rows[s].per_repeat.push_back(roc_auc(novelty, split.novelty_labels));
            } catch (const std::exception& e) {
                throw ValidationError("repeat " + std::to_string(r) + ", scorer " +
                                      to_string(spec.scorers[s]) + ": " + e.what());
            }
        }
    }

    for (BenchmarkRow& row : rows) {
        row.mean_auc = mean(row.per_repeat);
        row.std_auc = sample_std(row.per_repeat);
    }
    return rows;
}

void write_benchmark_csv(const std::filesystem::path& path, std::span<const BenchmarkRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "scorer,class,fraction,mean_auc,std_auc,repeats\n";
    for (const BenchmarkRow& row : rows)
        out << to_string(row.scorer) << ',' << to_string(row.contamination_class) << ','
            << format_double(row.fraction) << ',' << format_double(row.mean_auc) << ','
            << format_double(row.std_auc) << ',' << row.repeats << '\n';
}

std::string format_benchmark_table(std::span<const BenchmarkRow> rows) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s %-8s %-9s %-9s %-8s %s\n", "scorer", "class",
                  "fraction", "mean_auc", "std_auc", "repeats");
    out << line;
    for (const BenchmarkRow& row : rows) {
        std::snprintf(line, sizeof(line), "%-14s %-8s %-9.3f %-9.4f %-8.4f %d\n",
                      to_string(row.scorer).c_str(), to_string(row.contamination_class).c_str(),
                      row.fraction, row.mean_auc, row.std_auc, row.repeats);
        out << line;
    }
    return out.str();
}

}  // namespace noveval
