#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vge/ensemble.hpp"

namespace vge {

struct ScoredSample {
  std::string id;
  double score = 0.0;
  std::optional<bool> correct;
  double confidence = 0.0;
  std::optional<std::size_t> predicted;
  std::optional<std::size_t> label;
};

// Fractional (average) ranks, 1-based.
std::vector<double> fractional_ranks(std::span<const double> x);

// Pearson correlation of fractional ranks. Throws kLengthMismatch, or
// kDegenerateVariance when either input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

// Kendall tau-b. Same errors as spearman.
double kendall(std::span<const double> a, std::span<const double> b);

// Points (i/n, cumulative normalized mass of the i largest scores), i = 0..n.
std::vector<std::pair<double, double>> aucc_curve(std::span<const double> scores);

// Trapezoidal area under aucc_curve. Throws kAllZero, kEmptyInput, or
// kInvalidArgument for negative scores.
double aucc(std::span<const double> scores);

// Equal-width bins on [0, 1]: sum_b (n_b / N) |acc_b - conf_b|.
double ece(std::span<const double> confidences, std::span<const bool> correct,
           std::size_t bins = 15);
// std::vector<bool> is not contiguous; this overload takes 0/1 flags.
double ece(std::span<const double> confidences, std::span<const int> correct,
           std::size_t bins = 15);

// Mean over samples and classes of the Bessel-corrected member variance.
double diversity(const EnsembleBatch& batch);

struct AccuracyF1 {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

AccuracyF1 accuracy_f1(std::span<const std::size_t> predictions,
                       std::span<const std::size_t> labels, std::size_t classes);

struct RocSummary {
  double auc = 0.0;
  double fpr_at_95_tpr = 0.0;
};

// OOD samples are the positives; a higher score means "more OOD".
// AUC is Mann-Whitney with ties counted half. Throws kEmptySet.
RocSummary roc_auc_fpr95(std::span<const double> id_scores, std::span<const double> ood_scores);

// (fpr, tpr) points, thresholds swept from high to low over distinct scores.
std::vector<std::pair<double, double>> roc_curve(std::span<const double> id_scores,
                                                 std::span<const double> ood_scores);

}  // namespace vge
