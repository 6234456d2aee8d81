#include "vge/traindemo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <random>

#include "vge/error.hpp"
#include "vge/uncertainty.hpp"
#include "vge/vgn.hpp"

namespace vge {

Dataset generate_blobs(const TrainConfig& config, std::uint64_t seed) {
  if (config.classes < 2 || config.features < 2) {
    throw Error(ErrorCode::kInvalidArgument, "blobs need C >= 2 and D >= 2");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.features = config.features;
  const std::size_t n = config.classes * config.samples_per_class;
  data.x.reserve(n * config.features);
  data.labels.reserve(n);
  for (std::size_t c = 0; c < config.classes; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                         static_cast<double>(config.classes);
    for (std::size_t i = 0; i < config.samples_per_class; ++i) {
      for (std::size_t d = 0; d < config.features; ++d) {
        double centre = 0.0;
        if (d == 0) centre = config.center_radius * std::cos(angle);
        if (d == 1) centre = config.center_radius * std::sin(angle);
        data.x.push_back(centre + config.noise * normal(rng));
      }
      data.labels.push_back(c);
    }
  }
  return data;
}

std::vector<ToyMember> init_members(const TrainConfig& config) {
  std::vector<ToyMember> members;
  for (std::size_t m = 0; m < config.members; ++m) {
    const std::uint64_t member_seed =
        config.seed * 1000003ULL + (config.identical_init ? 0 : m + 1);
    std::mt19937_64 rng(member_seed);
    std::normal_distribution<double> normal(0.0, config.init_scale);
    ToyMember w;
    w.classes = config.classes;
    w.features = config.features;
    w.weights.resize(config.classes * (config.features + 1));
    for (double& x : w.weights) x = normal(rng);
    members.push_back(std::move(w));
  }
  return members;
}

std::vector<double> member_probabilities(const std::vector<ToyMember>& members,
                                         const Dataset& data) {
  const std::size_t M = members.size();
  const std::size_t C = members.front().classes;
  const std::size_t D = data.features;
  std::vector<double> logits(data.size() * M * C);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double* x = data.x.data() + n * D;
    for (std::size_t m = 0; m < M; ++m) {
      const auto& w = members[m].weights;
      for (std::size_t c = 0; c < C; ++c) {
        const double* row = w.data() + c * (D + 1);
        double z = row[D];
        for (std::size_t d = 0; d < D; ++d) z += row[d] * x[d];
        logits[(n * M + m) * C + c] = z;
      }
    }
  }
  return softmax_rows(logits, C);
}

TrainGradient training_gradient(const std::vector<ToyMember>& members, const GateParams& gate,
                                const Dataset& data) {
  const std::size_t M = members.size();
  const std::size_t C = members.front().classes;
  const std::size_t D = data.features;
  const auto probs = member_probabilities(members, data);
  const auto batch = EnsembleBatch::create(data.size(), M, C, probs, 1e-6);
  const auto cache = vgn_forward(batch, gate);
  const auto loss = cross_entropy_loss(data.labels, C);
  const auto grads = vgn_backward(cache, loss.gradient(cache.mixture));
  const auto d_logits = softmax_backward(batch.data(), grads.d_input, C);

  TrainGradient out;
  out.loss = loss.value(cache.mixture);
  out.d_raw = grads.d_raw;
  out.d_weights.assign(M * C * (D + 1), 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double* x = data.x.data() + n * D;
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t c = 0; c < C; ++c) {
        const double dz = d_logits[(n * M + m) * C + c];
        double* row = out.d_weights.data() + (m * C + c) * (D + 1);
        for (std::size_t d = 0; d < D; ++d) row[d] += dz * x[d];
        row[D] += dz;
      }
    }
  }
  return out;
}

namespace {

EpochRecord summarize(std::size_t epoch, double loss, const std::vector<ToyMember>& members,
                      const GateParams& gate, const Dataset& data) {
  const std::size_t M = members.size();
  const std::size_t C = members.front().classes;
  const auto probs = member_probabilities(members, data);
  const auto batch = EnsembleBatch::create(data.size(), M, C, probs, 1e-6);
  const auto cache = vgn_forward(batch, gate);
  EpochRecord rec;
  rec.epoch = epoch;
  rec.loss = loss;
  std::size_t correct = 0;
  double eu_sum = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto q = cache.mixture_row(n);
    const auto pred = static_cast<std::size_t>(
        std::distance(q.begin(), std::max_element(q.begin(), q.end())));
    correct += pred == data.labels[n];
    const double eu = decompose(batch.sample(n), C).eu;
    eu_sum += eu;
    rec.max_abs_eu = std::max(rec.max_abs_eu, std::abs(eu));
  }
  rec.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  rec.mean_eu = eu_sum / static_cast<double>(data.size());
  rec.k = gate.k_values();
  return rec;
}

// Returns false when the loss increased (caller may retry with a smaller step).
bool run(const TrainConfig& config, const Dataset& data, double lr, TrainResult& result) {
  result.members = init_members(config);
  result.gate = config.learn_k ? GateParams::initial(config.classes)
                               : GateParams::from_k(config.fixed_k, config.classes);
  result.history.clear();
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
    const auto grad = training_gradient(result.members, result.gate, data);
    if (!std::isfinite(grad.loss)) {
      throw Error(ErrorCode::kDivergence, "loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.history.push_back(summarize(epoch, grad.loss, result.members, result.gate, data));
    if (grad.loss > previous + 1e-12 * std::abs(previous)) return false;
    previous = grad.loss;
    if (epoch == config.epochs) break;

    const std::size_t stride = config.classes * (config.features + 1);
    for (std::size_t m = 0; m < result.members.size(); ++m) {
      auto& w = result.members[m].weights;
      for (std::size_t i = 0; i < stride; ++i) w[i] -= lr * grad.d_weights[m * stride + i];
    }
    if (config.learn_k) {
      for (std::size_t c = 0; c < config.classes; ++c) result.gate.raw[c] -= lr * grad.d_raw[c];
    }
  }
  return true;
}

}  // namespace

TrainResult train_toy_ensemble(const TrainConfig& config) {
  if (config.members < 2 || config.epochs == 0 || !(config.learning_rate > 0.0) ||
      config.samples_per_class == 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training configuration");
  }
  const auto data = generate_blobs(config, config.seed);
  TrainResult result;
  result.learning_rate = config.learning_rate;
  if (run(config, data, result.learning_rate, result)) return result;
  result.learning_rate *= 0.5;
  result.lr_halvings = 1;
  if (run(config, data, result.learning_rate, result)) return result;
  throw Error(ErrorCode::kDivergence, "loss increased even after halving the learning rate");
}

}  // namespace vge
