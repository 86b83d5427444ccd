#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "noveval/common.hpp"
#include "noveval/scorers.hpp"
#include "noveval/synthgen.hpp"

namespace noveval {

struct ContaminationSpec {
    ColorClass contamination_class = ColorClass::green;
    double fraction = 0.10;
    int repeats = 3;
    std::vector<ScorerKind> scorers = all_scorer_kinds();
    std::uint64_t seed = 0;
    ScorerHyper hyper;
};

void validate_spec(const ContaminationSpec& spec);

/// Index-level description of one engineered split: the training set with
/// the contamination class removed, and a test sample whose contamination
/// share is ceil(fraction * size).
struct ContaminationSplit {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::vector<int> novelty_labels;  // aligned to test_indices; 1 = contamination class
};

/// Picks the largest test size whose class demands both pools can satisfy,
/// then draws the two parts without replacement.
ContaminationSplit engineer_contamination(std::span<const ColorClass> train_labels,
                                          std::span<const ColorClass> test_labels,
                                          const ContaminationSpec& spec, std::uint64_t seed);

/// Mann-Whitney rank AUC with average ranks for ties; equals
/// P(score_pos > score_neg) + 0.5 * P(tie).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct BenchmarkRow {
    ScorerKind scorer = ScorerKind::kde;
    ColorClass contamination_class = ColorClass::green;
    double fraction = 0;
    double mean_auc = 0;
    double std_auc = 0;  // sample std over repeats; 0 for a single repeat
    int repeats = 0;
    std::vector<double> per_repeat;
};

/// One row per scorer; repeat r uses seed spec.seed + r for both the split
/// and the scorer fit.
std::vector<BenchmarkRow> run_contamination_benchmark(const Matrix& z_train,
                                                      std::span<const ColorClass> train_labels,
                                                      const Matrix& z_test,
                                                      std::span<const ColorClass> test_labels,
                                                      const ContaminationSpec& spec,
                                                      int threads = 1);

/// CSV with header scorer,class,fraction,mean_auc,std_auc,repeats.
void write_benchmark_csv(const std::filesystem::path& path, std::span<const BenchmarkRow> rows);

/// Fixed-width table for the terminal.
std::string format_benchmark_table(std::span<const BenchmarkRow> rows);

}  // namespace noveval
