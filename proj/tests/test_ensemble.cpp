#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "test_util.hpp"
#include "vge/ensemble.hpp"
#include "vge/error.hpp"

namespace vge {
namespace {

using testing::batch_of;

constexpr double kEps = kDefaultEpsilon;

void expect_code(ErrorCode code, const auto& fn) {
  try {
    fn();
    FAIL() << "expected " << error_code_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(ValidateSimplex, AcceptsExactPointUnchanged) {
  const std::vector<double> v{0.5, 0.5};
  const auto p = validate_simplex(v);
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(ValidateSimplex, AcceptsVertex) {
  const auto p = validate_simplex(std::vector<double>{1.0, 0.0, 0.0});
  EXPECT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0], 1.0);
}

TEST(ValidateSimplex, RejectsMassMismatch) {
  expect_code(ErrorCode::kMassMismatch, [] { validate_simplex(std::vector<double>{0.7, 0.4}); });
}

TEST(ValidateSimplex, RejectsNegativeAndNonFinite) {
  expect_code(ErrorCode::kNegativeMass, [] { validate_simplex(std::vector<double>{1.1, -0.1}); });
  expect_code(ErrorCode::kNonFinite, [] {
    validate_simplex(std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 1.0});
  });
  expect_code(ErrorCode::kNonFinite, [] {
    validate_simplex(std::vector<double>{std::numeric_limits<double>::infinity(), 0.0});
  });
  expect_code(ErrorCode::kEmptyInput, [] { validate_simplex(std::vector<double>{}); });
}

TEST(ValidateSimplex, ClipsTinyNegativesAndRenormalizes) {
  const auto p = validate_simplex(std::vector<double>{1.0 + 5e-7, -5e-7, 0.0});
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  for (double x : p.values()) EXPECT_GE(x, 0.0);
}

TEST(EnsembleBatch, RejectsSingleMemberAndBadShape) {
  expect_code(ErrorCode::kTooFewMembers,
              [] { EnsembleBatch::create(1, 1, 2, std::vector<double>{0.5, 0.5}); });
  expect_code(ErrorCode::kShapeMismatch,
              [] { EnsembleBatch::create(1, 2, 2, std::vector<double>{0.5, 0.5, 1.0}); });
}

TEST(EnsembleMoments, IdenticalMembersGiveEpsilonSpread) {
  const auto m = ensemble_moments(batch_of(1, 2, {0.8, 0.2, 0.8, 0.2}));
  EXPECT_DOUBLE_EQ(m.mean_at(0, 0), 0.8);
  EXPECT_DOUBLE_EQ(m.mean_at(0, 1), 0.2);
  EXPECT_EQ(m.stddev_at(0, 0), 0.0);
  EXPECT_EQ(m.spread_at(0, 0), kEps);
  EXPECT_EQ(m.spread_at(0, 1), kEps);
}

TEST(EnsembleMoments, TwoMembersMatchOracle) {
  const auto m = ensemble_moments(batch_of(1, 2, {0.9, 0.1, 0.5, 0.5}));
  EXPECT_NEAR(m.mean_at(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(m.mean_at(0, 1), 0.3, 1e-15);
  EXPECT_NEAR(m.spread_at(0, 0), 0.282842712475 + kEps, 1e-12);
  EXPECT_NEAR(m.spread_at(0, 1), 0.282842712475 + kEps, 1e-12);
}

TEST(EnsembleMoments, VerticesMatchOracle) {
  const auto m = ensemble_moments(batch_of(1, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(m.mean_at(0, c), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.spread_at(0, c), 0.57735026919 + kEps, 1e-11);
  }
}

TEST(EnsembleMoments, ErrorsOnBadEpsilon) {
  const auto b = batch_of(1, 2, {0.5, 0.5, 0.5, 0.5});
  expect_code(ErrorCode::kInvalidArgument, [&] { ensemble_moments(b, 0.0); });
}

TEST(EnsembleMoments, PropertiesOnRandomBatches) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t B = 1 + rng() % 4, M = 2 + rng() % 6, C = 2 + rng() % 7;
    auto data = testing::dirichlet_rows(rng, B * M, C, 0.5);
    const auto batch = EnsembleBatch::create(B, M, C, data);
    const auto mom = ensemble_moments(batch);
    for (std::size_t b = 0; b < B; ++b) {
      const auto row = mom.mean_row(b);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-6);
      for (double s : mom.spread_row(b)) EXPECT_GE(s, kEps);
    }
    // Shuffle members within each sample; moments must not change.
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> shuffled(data.size());
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t m = 0; m < M; ++m) {
        std::copy_n(data.begin() + (b * M + order[m]) * C, C, shuffled.begin() + (b * M + m) * C);
      }
    }
    const auto mom2 = ensemble_moments(EnsembleBatch::create(B, M, C, shuffled));
    for (std::size_t i = 0; i < mom.mean.size(); ++i) {
      EXPECT_NEAR(mom.mean[i], mom2.mean[i], 1e-15);
      EXPECT_NEAR(mom.spread[i], mom2.spread[i], 1e-14);
    }
  }
}

TEST(Mixture, Examples) {
  auto pv = [](std::vector<double> v) { return validate_simplex(v); };
  {
    const std::vector<ProbVector> m{pv({1, 0}), pv({0, 1})};
    const auto q = mixture(m);
    EXPECT_EQ(q[0], 0.5);
    EXPECT_EQ(q[1], 0.5);
  }
  {
    const std::vector<ProbVector> m(7, pv({0.6, 0.4}));
    const auto q = mixture(m);
    EXPECT_EQ(q[0], 0.6);
    EXPECT_EQ(q[1], 0.4);
  }
  {
    const std::vector<ProbVector> m{pv({0.9, 0.1}), pv({0.5, 0.5}), pv({0.7, 0.3})};
    const auto q = mixture(m);
    EXPECT_NEAR(q[0], 0.7, 1e-15);
    EXPECT_NEAR(q[1], 0.3, 1e-15);
  }
  expect_code(ErrorCode::kEmptyEnsemble, [] { mixture(std::vector<ProbVector>{}); });
}

TEST(Mixture, IdempotentOnCopies) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto v = validate_simplex(testing::dirichlet_rows(rng, 1, 5));
    const std::vector<ProbVector> copies(2 + t % 9, v);
    const auto q = mixture(copies);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(q[c], v[c]);
  }
}

TEST(ErrorCodes, NamesAreDistinct) {
  EXPECT_EQ(error_code_name(ErrorCode::kParseError), "ParseError");
  EXPECT_EQ(error_code_name(ErrorCode::kDegenerateVariance), "DegenerateVariance");
  const Error e(ErrorCode::kAllZero, "x");
  EXPECT_STREQ(e.what(), "AllZero: x");
  EXPECT_EQ(e.message(), "x");
}

}  // namespace
}  // namespace vge
