#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vge/gate.hpp"

namespace vge {

struct TrainConfig {
  std::size_t members = 5;
  std::size_t classes = 3;
  std::size_t features = 2;
  std::size_t samples_per_class = 100;
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  std::uint64_t seed = 7;
  bool learn_k = true;
  double fixed_k = 0.693;     // used when learn_k is false
  double center_radius = 4.0; // cluster centers sit on a circle of this radius
  double noise = 1.0;         // isotropic cluster stddev
  double init_scale = 0.5;    // stddev of initial weights
  bool identical_init = false;
};

struct Dataset {
  std::size_t features = 0;
  std::vector<double> x;           // N x D
  std::vector<std::size_t> labels; // N
  std::size_t size() const { return labels.size(); }
};

// Linear-softmax member: logits = W [x; 1], W is C x (D + 1).
struct ToyMember {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> weights;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double mean_eu = 0.0;
  double max_abs_eu = 0.0;
  std::vector<double> k;
};

struct TrainResult {
  std::vector<ToyMember> members;
  GateParams gate;
  std::vector<EpochRecord> history;
  double learning_rate = 0.0;  // after any halving
  std::size_t lr_halvings = 0;
};

// C isotropic Gaussian clusters, deterministic under seed. Throws
// kInvalidArgument when C < 2 or D < 2.
Dataset generate_blobs(const TrainConfig& config, std::uint64_t seed);

// Member probabilities for every sample, N x M x C.
std::vector<double> member_probabilities(const std::vector<ToyMember>& members,
                                         const Dataset& data);

// Full-batch gradient descent on the cross-entropy of the VGN mixture.
// If the loss ever increases, the learning rate is halved once and training
// restarts; a second increase or a non-finite loss throws kDivergence.
TrainResult train_toy_ensemble(const TrainConfig& config);

// Gradient of the training loss with respect to every member weight
// (M x C x (D + 1)) and the gate raw parameters, at the given state.
struct TrainGradient {
  double loss = 0.0;
  std::vector<double> d_weights;
  std::vector<double> d_raw;
};
TrainGradient training_gradient(const std::vector<ToyMember>& members, const GateParams& gate,
                                const Dataset& data);

std::vector<ToyMember> init_members(const TrainConfig& config);

}  // namespace vge
