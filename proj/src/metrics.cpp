#include "vge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vge/error.hpp"

namespace vge {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kLengthMismatch, "inputs differ in length");
  if (a.size() < 2) throw Error(ErrorCode::kLengthMismatch, "need at least two observations");
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  // Mean rank is (n + 1) / 2 regardless of ties.
  const double mean = 0.5 * (n + 1.0);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean, db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::kDegenerateVariance, "constant input has no rank variance");
  }
  return sab / std::sqrt(saa * sbb);
}

double kendall(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  // Pair enumeration: n <= 1e4 in practice, so O(n^2) is acceptable.
  long long concordant_minus_discordant = 0;
  long long untied_a = 0, untied_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int sa = sign(a[i] - a[j]);
      const int sb = sign(b[i] - b[j]);
      concordant_minus_discordant += sa * sb;
      untied_a += sa != 0;
      untied_b += sb != 0;
    }
  }
  if (untied_a == 0 || untied_b == 0) {
    throw Error(ErrorCode::kDegenerateVariance, "constant input has no rank variance");
  }
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_a) * static_cast<double>(untied_b));
}

std::vector<std::pair<double, double>> aucc_curve(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scores");
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double s : sorted) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "scores must be finite and non-negative");
    }
  }
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (total <= 0.0) throw Error(ErrorCode::kAllZero, "all scores are zero");
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> curve;
  curve.reserve(sorted.size() + 1);
  curve.emplace_back(0.0, 0.0);
  double cum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cum += sorted[i];
    curve.emplace_back(static_cast<double>(i + 1) / n, cum / total);
  }
  curve.back().second = 1.0;
  return curve;
}

double aucc(std::span<const double> scores) {
  const auto curve = aucc_curve(scores);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += 0.5 * (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second);
  }
  return area;
}

double ece(std::span<const double> confidences, std::span<const int> correct, std::size_t bins) {
  if (confidences.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  if (confidences.size() != correct.size()) {
    throw Error(ErrorCode::kLengthMismatch, "confidences and flags differ in length");
  }
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one bin");
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "confidence outside [0, 1]");
    }
    // Bins are (b/bins, (b+1)/bins]; a confidence of exactly 0 goes to the
    // first bin. The product c * bins can round across an edge, so the guess
    // is corrected against the edges themselves.
    const double nb = static_cast<double>(bins);
    auto bin = static_cast<std::size_t>(std::ceil(c * nb));
    bin = bin == 0 ? 0 : std::min(bin - 1, bins - 1);
    while (bin > 0 && c <= static_cast<double>(bin) / nb) --bin;
    while (bin + 1 < bins && c > static_cast<double>(bin + 1) / nb) ++bin;
    conf_sum[bin] += c;
    acc_sum[bin] += correct[i] ? 1.0 : 0.0;
    ++count[bin];
  }
  const double n = static_cast<double>(confidences.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    total += (nb / n) * std::abs(acc_sum[b] / nb - conf_sum[b] / nb);
  }
  return total;
}

double ece(std::span<const double> confidences, std::span<const bool> correct, std::size_t bins) {
  std::vector<int> flags(correct.begin(), correct.end());
  return ece(confidences, std::span<const int>(flags), bins);
}

double diversity(const EnsembleBatch& batch) {
  const auto mom = ensemble_moments(batch);
  double total = 0.0;
  for (double sd : mom.stddev) total += sd * sd;
  return total / static_cast<double>(mom.stddev.size());
}

AccuracyF1 accuracy_f1(std::span<const std::size_t> predictions,
                       std::span<const std::size_t> labels, std::size_t classes) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predictions and labels differ in length");
  }
  if (predictions.empty()) throw Error(ErrorCode::kEmptyInput, "no predictions");
  std::vector<double> tp(classes, 0.0), fp(classes, 0.0), fn(classes, 0.0);
  double correct = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = predictions[i], y = labels[i];
    if (p >= classes || y >= classes) {
      throw Error(ErrorCode::kInvalidArgument, "class index out of range");
    }
    if (p == y) {
      correct += 1.0;
      tp[y] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[y] += 1.0;
    }
  }
  AccuracyF1 out;
  out.accuracy = correct / static_cast<double>(labels.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    f1_sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  out.macro_f1 = f1_sum / static_cast<double>(classes);
  return out;
}

std::vector<std::pair<double, double>> roc_curve(std::span<const double> id_scores,
                                                 std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw Error(ErrorCode::kEmptySet, "both score sets must be non-empty");
  }
  std::vector<std::pair<double, bool>> all;  // (score, is_ood)
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.emplace_back(s, false);
  for (double s : ood_scores) all.emplace_back(s, true);
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  const double n_pos = static_cast<double>(ood_scores.size());
  const double n_neg = static_cast<double>(id_scores.size());
  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? tp : fp) += 1.0;
      ++j;
    }
    curve.emplace_back(fp / n_neg, tp / n_pos);
    i = j;
  }
  return curve;
}

RocSummary roc_auc_fpr95(std::span<const double> id_scores, std::span<const double> ood_scores) {
  const auto curve = roc_curve(id_scores, ood_scores);
  RocSummary out;
  // Trapezoids over tie groups equal the Mann-Whitney statistic with half ties.
  for (std::size_t i = 1; i < curve.size(); ++i) {
    out.auc += 0.5 * (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second);
  }
  out.fpr_at_95_tpr = 1.0;
  for (const auto& [fpr, tpr] : curve) {
    if (tpr >= 0.95) {
      out.fpr_at_95_tpr = fpr;
      break;
    }
  }
  return out;
}

}  // namespace vge
