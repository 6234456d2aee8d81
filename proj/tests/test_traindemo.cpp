#include <gtest/gtest.h>

#include <cmath>

#include "vge/error.hpp"
#include "vge/traindemo.hpp"

namespace vge {
namespace {

TEST(Blobs, DeterministicAndBalanced) {
  TrainConfig cfg;
  const auto a = generate_blobs(cfg, 3);
  const auto b = generate_blobs(cfg, 3);
  const auto c = generate_blobs(cfg, 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.x, c.x);
  ASSERT_EQ(a.size(), cfg.classes * cfg.samples_per_class);
  EXPECT_EQ(a.x.size(), a.size() * cfg.features);
  std::vector<std::size_t> counts(cfg.classes, 0);
  for (auto y : a.labels) ++counts[y];
  for (auto n : counts) EXPECT_EQ(n, cfg.samples_per_class);
  cfg.classes = 1;
  EXPECT_THROW(generate_blobs(cfg, 0), Error);
}

TEST(Blobs, ClassMeansAreSeparated) {
  TrainConfig cfg;
  const auto data = generate_blobs(cfg, 11);
  std::vector<double> mx(cfg.classes, 0.0), my(cfg.classes, 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    mx[data.labels[n]] += data.x[n * 2] / cfg.samples_per_class;
    my[data.labels[n]] += data.x[n * 2 + 1] / cfg.samples_per_class;
  }
  for (std::size_t i = 0; i < cfg.classes; ++i) {
    for (std::size_t j = i + 1; j < cfg.classes; ++j) {
      EXPECT_GT(std::hypot(mx[i] - mx[j], my[i] - my[j]), 4.0);
    }
  }
}

TEST(Training, ReachesHighAccuracyAndLearnsK) {
  const auto result = train_toy_ensemble(TrainConfig{});
  ASSERT_FALSE(result.history.empty());
  EXPECT_GT(result.history.back().accuracy, 0.9);
  EXPECT_LT(result.history.back().loss, result.history.front().loss);
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    EXPECT_LE(result.history[i].loss, result.history[i - 1].loss * (1 + 1e-12));
  }
  const auto k = result.gate.k_values();
  bool moved = false;
  for (double v : k) {
    EXPECT_GE(v, result.gate.k_min);
    moved |= std::abs(v - std::log(2.0)) > 1e-3;
  }
  EXPECT_TRUE(moved);
}

TEST(Training, FixedKStaysFixed) {
  TrainConfig cfg;
  cfg.learn_k = false;
  cfg.fixed_k = 1.5;
  cfg.epochs = 30;
  const auto result = train_toy_ensemble(cfg);
  for (const auto& rec : result.history) {
    for (double v : rec.k) EXPECT_NEAR(v, 1.5, 1e-12);
  }
}

TEST(Training, IdenticalInitKeepsMembersIdentical) {
  TrainConfig cfg;
  cfg.identical_init = true;
  cfg.epochs = 40;
  const auto result = train_toy_ensemble(cfg);
  for (std::size_t m = 1; m < result.members.size(); ++m) {
    EXPECT_EQ(result.members[m].weights, result.members[0].weights);
  }
  for (const auto& rec : result.history) EXPECT_LE(rec.max_abs_eu, 1e-12);
}

TEST(Training, DeterministicUnderSeed) {
  TrainConfig cfg;
  cfg.epochs = 20;
  const auto a = train_toy_ensemble(cfg);
  const auto b = train_toy_ensemble(cfg);
  EXPECT_EQ(a.members[0].weights, b.members[0].weights);
  EXPECT_EQ(a.gate.raw, b.gate.raw);
}

TEST(Training, GradientMatchesFiniteDifferences) {
  TrainConfig cfg;
  cfg.members = 3;
  cfg.samples_per_class = 4;
  cfg.noise = 2.0;
  const auto data = generate_blobs(cfg, 5);
  auto members = init_members(cfg);
  GateParams gate = GateParams::from_k(std::vector<double>{0.6, 1.1, 0.9});
  const auto grad = training_gradient(members, gate, data);
  const double h = 1e-6;
  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
  };
  const std::size_t stride = cfg.classes * (cfg.features + 1);
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (std::size_t i = 0; i < stride; ++i) {
      auto plus = members, minus = members;
      plus[m].weights[i] += h;
      minus[m].weights[i] -= h;
      const double fd = (training_gradient(plus, gate, data).loss -
                         training_gradient(minus, gate, data).loss) / (2 * h);
      EXPECT_LT(rel(grad.d_weights[m * stride + i], fd), 1e-4) << m << "," << i;
    }
  }
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    auto plus = gate, minus = gate;
    plus.raw[c] += h;
    minus.raw[c] -= h;
    const double fd = (training_gradient(members, plus, data).loss -
                       training_gradient(members, minus, data).loss) / (2 * h);
    EXPECT_LT(rel(grad.d_raw[c], fd), 1e-4) << c;
  }
}

TEST(Training, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.members = 1;
  EXPECT_THROW(train_toy_ensemble(cfg), Error);
  cfg.members = 3;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train_toy_ensemble(cfg), Error);
}

}  // namespace
}  // namespace vge
