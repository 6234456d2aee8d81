#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vge/ensemble.hpp"
#include "vge/gate.hpp"

namespace vge {

// Floor applied to probabilities inside every logarithm.
inline constexpr double kLogFloor = 1e-12;

// Shannon entropy in nats (0 log 0 = 0); divided by ln C when normalize is set.
double entropy(std::span<const double> p, bool normalize = false);
double entropy(const ProbVector& p, bool normalize = false);

// KL(p || q) in nats with both sides floored at kLogFloor.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct Decomposition {
  double tu = 0.0;  // H(mixture)
  double au = 0.0;  // mean member entropy
  double eu = 0.0;  // tu - au
};

// Members given as an M x C row-major block.
Decomposition decompose(std::span<const double> members, std::size_t classes,
                        bool normalize = false);
Decomposition decompose(std::span<const ProbVector> members, bool normalize = false);

// Mean KL(member || mixture); equals decompose(...).eu in exact arithmetic.
double mean_kl_to_mixture(std::span<const double> members, std::size_t classes);

// Expected pairwise KL / Jensen-Shannon over ordered member pairs (nats).
// Both throw kTooFewMembers when M < 2.
double epkl(std::span<const double> members, std::size_t classes);
double epkl(std::span<const ProbVector> members);
double epjs(std::span<const double> members, std::size_t classes);
double epjs(std::span<const ProbVector> members);

struct SnrDecision {
  double snr = 0.0;
  std::optional<std::size_t> decision;  // nullopt = abstain
  std::size_t top1 = 0;
  std::size_t top2 = 1;
};

// Top-2 margin of the mean over the summed raw stddevs of those classes:
// snr = (p1 - p2) / (S1 + S2 + epsilon). Predicts top1 when snr > threshold.
// Ties in the ranking go to the lower class index.
SnrDecision snr_decision(std::span<const double> mean, std::span<const double> stddev,
                         double threshold, double epsilon = kDefaultEpsilon);
std::vector<SnrDecision> snr_decision(const EnsembleMoments& moments, double threshold);

// 1 - (1 - exp(-snr)) * p1.
double vgmu(std::span<const double> mean, std::span<const double> stddev,
            double epsilon = kDefaultEpsilon);
std::vector<double> vgmu(const EnsembleMoments& moments);

struct UncertaintyReport {
  std::string id;
  Decomposition plain;
  Decomposition gated;
  double epkl = 0.0;
  double epjs = 0.0;
  double snr = 0.0;
  double vgmu = 0.0;
  std::optional<std::size_t> decision;
  SimplexRegion region = SimplexRegion::kAmbiguousUncertain;
};

struct ScoreOptions {
  // nullopt disables the gate (Gamma = 1), reproducing the ungated scores.
  std::optional<GateParams> gate;
  double snr_threshold = 1.0;
  bool normalize = false;
  RegionThresholds regions;
  std::size_t threads = 1;  // samples are split into contiguous chunks
};

// Scores every sample; output order matches the batch for any thread count. Gated entropies are taken over the VGN-gated members.
std::vector<UncertaintyReport> score_batch(const EnsembleBatch& batch,
                                           const ScoreOptions& options);

}  // namespace vge
