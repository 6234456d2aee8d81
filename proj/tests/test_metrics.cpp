#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "reference_metrics.hpp"
#include "test_util.hpp"
#include "vge/error.hpp"
#include "vge/metrics.hpp"

namespace vge {
namespace {

using V = std::vector<double>;

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(spearman(V{1, 2, 3, 4}, V{1, 2, 3, 4}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(V{1, 2, 3, 4}, V{4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman(V{1, 2, 3, 4}, V{1, 3, 2, 4}), 0.8, 1e-15);
  EXPECT_EQ(code_of([] { spearman(V{1, 2}, V{1, 2, 3}); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([] { spearman(V{1, 1, 1}, V{1, 2, 3}); }), ErrorCode::kDegenerateVariance);
}

TEST(Kendall, Examples) {
  EXPECT_NEAR(kendall(V{1, 2, 3, 4}, V{1, 2, 3, 4}), 1.0, 1e-15);
  EXPECT_NEAR(kendall(V{1, 2, 3, 4}, V{4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(kendall(V{1, 2, 3, 4}, V{1, 3, 2, 4}), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(code_of([] { kendall(V{2, 2}, V{1, 2}); }), ErrorCode::kDegenerateVariance);
}

TEST(FractionalRanks, AveragesTies) {
  const auto r = fractional_ranks(V{10, 20, 20, 5});
  EXPECT_EQ(r, (V{2, 3.5, 3.5, 1}));
}

TEST(Aucc, Examples) {
  // The hand trapezoid through (0,0), (1/3,1/2), (2/3,5/6), (1,1) is 11/18.
  EXPECT_NEAR(aucc(V{3, 2, 1}), 11.0 / 18.0, 1e-15);
  for (std::size_t n : {1u, 2u, 5u, 50u, 1000u}) {
    const V flat(n, 0.7);
    EXPECT_LE(std::abs(aucc(flat) - 0.5), 1.0 / (2.0 * n) + 1e-12);
    V spike(n, 0.0);
    spike[n / 2] = 3.0;
    EXPECT_NEAR(aucc(spike), 1.0 - 1.0 / (2.0 * n), 1e-12);
  }
  EXPECT_EQ(code_of([] { aucc(V{}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([] { aucc(V{0, 0}); }), ErrorCode::kAllZero);
  EXPECT_EQ(code_of([] { aucc(V{1, -1}); }), ErrorCode::kInvalidArgument);
  const auto curve = aucc_curve(V{3, 2, 1});
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_NEAR(curve[1].second, 0.5, 1e-15);
  EXPECT_NEAR(curve[2].second, 5.0 / 6.0, 1e-15);
}

TEST(Ece, Examples) {
  // Each bin's hit rate matches its confidence.
  V calibrated;
  std::vector<int> calibrated_hits;
  for (int i = 0; i < 10; ++i) {
    calibrated.push_back(0.3);
    calibrated_hits.push_back(i < 3);
    calibrated.push_back(0.8);
    calibrated_hits.push_back(i < 8);
  }
  EXPECT_NEAR(ece(calibrated, calibrated_hits), 0.0, 1e-15);
  const V ones(10, 1.0);
  std::vector<int> half{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  EXPECT_NEAR(ece(ones, half), 0.5, 1e-15);
  EXPECT_NEAR(ece(V{0.9, 0.6}, std::vector<int>{1, 0}, 10), 0.35, 1e-15);
  const bool flags[] = {true, false};
  EXPECT_NEAR(ece(V{0.9, 0.6}, std::span<const bool>(flags), 10), 0.35, 1e-15);
  EXPECT_EQ(code_of([] { ece(V{1.5}, std::vector<int>{1}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { ece(V{}, std::vector<int>{}); }), ErrorCode::kEmptyInput);
}

TEST(Ece, SingleBinIsAccuracyGap) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  V conf(40);
  std::vector<int> hit(40);
  double mean_conf = 0, acc = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    conf[i] = u(rng);
    hit[i] = u(rng) < 0.6;
    mean_conf += conf[i] / 40;
    acc += hit[i] / 40.0;
  }
  EXPECT_NEAR(ece(conf, hit, 1), std::abs(acc - mean_conf), 1e-14);
}

TEST(Diversity, Examples) {
  using testing::batch_of;
  EXPECT_EQ(diversity(batch_of(1, 2, {0.3, 0.7, 0.3, 0.7})), 0.0);
  EXPECT_NEAR(diversity(batch_of(1, 2, {1, 0, 0, 1})), 0.5, 1e-15);
  EXPECT_NEAR(diversity(batch_of(1, 3, {0.2, 0.8, 0.6, 0.4, 0.5, 0.5})),
              diversity(batch_of(1, 3, {0.5, 0.5, 0.2, 0.8, 0.6, 0.4})), 1e-15);
}

TEST(AccuracyF1, Examples) {
  using S = std::vector<std::size_t>;
  auto r = accuracy_f1(S{0, 1, 2}, S{0, 1, 2}, 3);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  r = accuracy_f1(S{1, 0}, S{0, 1}, 2);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.macro_f1, 0.0);
  r = accuracy_f1(S{0, 0, 1, 1}, S{0, 1, 1, 1}, 2);
  EXPECT_NEAR(r.accuracy, 0.75, 1e-15);
  EXPECT_NEAR(r.macro_f1, (2.0 / 3.0 + 0.8) / 2.0, 1e-15);
}

TEST(Roc, Examples) {
  auto r = roc_auc_fpr95(V{0.1, 0.2}, V{0.8, 0.9});
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.fpr_at_95_tpr, 0.0);
  r = roc_auc_fpr95(V{0.1, 0.5, 0.5, 0.9}, V{0.9, 0.5, 0.1, 0.5});
  EXPECT_NEAR(r.auc, 0.5, 1e-15);
  r = roc_auc_fpr95(V{0.1, 0.2, 0.3}, V{0.25, 0.35, 0.4});
  EXPECT_NEAR(r.auc, 8.0 / 9.0, 1e-15);
  EXPECT_EQ(code_of([] { roc_auc_fpr95(V{}, V{1}); }), ErrorCode::kEmptySet);
}

TEST(MetricProperties, MonotoneTransformInvariance) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    V a(15), b(15);
    for (auto& x : a) x = normal(rng);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[i] + normal(rng);
    V ea(a.size()), cb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ea[i] = std::exp(a[i]);
      cb[i] = b[i] * b[i] * b[i] + 2.0;
    }
    EXPECT_NEAR(spearman(a, b), spearman(ea, cb), 1e-12);
    EXPECT_NEAR(kendall(a, b), kendall(ea, cb), 1e-12);
    V ea_id(a.size()), eb_ood(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ea_id[i] = std::atan(a[i]);
      eb_ood[i] = std::atan(b[i]);
    }
    EXPECT_NEAR(roc_auc_fpr95(a, b).auc, roc_auc_fpr95(ea_id, eb_ood).auc, 1e-15);
    V pos(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) pos[i] = std::exp(a[i]);
    V scaled = pos, shuffled = pos;
    for (double& x : scaled) x *= 7.5;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(aucc(pos), aucc(scaled), 1e-12);
    EXPECT_NEAR(aucc(pos), aucc(shuffled), 1e-15);
  }
}

TEST(MetricProperties, AgreeWithBruteForceReferences) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> level(0, 5);  // coarse values force ties
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 19;
    V a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = t % 2 ? level(rng) : u(rng);
      b[i] = t % 3 ? level(rng) : u(rng);
    }
    const bool degenerate = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; }) ||
                            std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
    if (!degenerate) {
      EXPECT_NEAR(spearman(a, b), reference::spearman(a, b), 1e-12);
      EXPECT_NEAR(kendall(a, b), reference::kendall(a, b), 1e-12);
    }
    if (std::any_of(a.begin(), a.end(), [](double x) { return x > 0; })) {
      EXPECT_NEAR(aucc(a), reference::aucc(a), 1e-12);
    }
    std::vector<int> hit(n);
    V conf(n);
    for (std::size_t i = 0; i < n; ++i) {
      conf[i] = t % 2 ? level(rng) / 5.0 : u(rng);
      hit[i] = u(rng) < 0.5;
    }
    for (std::size_t bins : {1u, 5u, 10u, 15u}) {
      EXPECT_NEAR(ece(conf, hit, bins), reference::ece(conf, hit, bins), 1e-12);
    }
    const V id(a.begin(), a.begin() + n / 2 + 1), ood(b.begin() + n / 2, b.end());
    const auto roc = roc_auc_fpr95(id, ood);
    EXPECT_NEAR(roc.auc, reference::roc_auc(id, ood), 1e-12);
    EXPECT_NEAR(roc.fpr_at_95_tpr, reference::fpr_at_95(id, ood), 1e-12);
  }
}

}  // namespace
}  // namespace vge
