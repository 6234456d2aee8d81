#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vge/ensemble.hpp"
#include "vge/gate.hpp"

namespace vge {

inline constexpr double kNormalizerFloor = 1e-8;

// Everything the backward pass reads. Arrays are row-major with shapes noted.
struct VgnForwardCache {
  std::size_t samples = 0;
  std::size_t members = 0;
  std::size_t classes = 0;
  std::vector<double> input;       // P, B x M x C
  EnsembleMoments moments;
  GateOutput gate;
  std::vector<double> raw;         // copy of GateParams::raw used for the gate
  std::vector<double> normalizer;  // Z, B x M, floored at kNormalizerFloor
  std::size_t floored_normalizers = 0;
  std::vector<double> gated;       // Q, B x M x C
  std::vector<double> mixture;     // q-bar, B x C

  std::span<const double> gated_row(std::size_t b, std::size_t m) const {
    return {gated.data() + (b * members + m) * classes, classes};
  }
  std::span<const double> mixture_row(std::size_t b) const {
    return {mixture.data() + b * classes, classes};
  }
};

struct VgnGradients {
  std::vector<double> d_input;  // dL/dP, B x M x C
  std::vector<double> d_raw;    // dL/d(raw), C
  std::vector<double> d_k;      // dL/dk, C (before the softplus factor)
  std::vector<double> d_gate;   // dL/dGamma, B x C
  // Per-path contributions to d_input; d_input is their sum.
  std::vector<double> direct;
  std::vector<double> via_mean;
  std::vector<double> via_spread;
};

// Gates every member with the shared variance gate and renormalizes:
// Q_m = (p_m * Gamma) / (p_m . Gamma), q-bar = mean_m Q_m.
VgnForwardCache vgn_forward(const EnsembleBatch& batch, const GateParams& params);

// Closed-form reverse pass for upstream = dL/d(q-bar), B x C.
// Throws kCacheMismatch when the upstream shape disagrees with the cache.
VgnGradients vgn_backward(const VgnForwardCache& cache, std::span<const double> upstream);

// Forward-mode derivative of the normalization step: for a gate direction
// dGamma (C values, shared by all samples), returns dQ (B x M x C).
std::vector<double> jvp_gate(const VgnForwardCache& cache, std::span<const double> direction);

// Scalar loss on q-bar (B x C) plus its gradient with respect to q-bar.
struct MixtureLoss {
  std::function<double(std::span<const double> mixture)> value;
  std::function<std::vector<double>(std::span<const double> mixture)> gradient;
};

// Mean cross-entropy of q-bar against integer labels (one per sample).
MixtureLoss cross_entropy_loss(std::vector<std::size_t> labels, std::size_t classes);
MixtureLoss constant_loss(double value);

struct GradcheckReport {
  double max_rel_error_input = 0.0;  // over member logits
  double max_rel_error_raw = 0.0;    // over gate raw parameters
  double max_abs_error = 0.0;
  double max_rel_error() const {
    return max_rel_error_input > max_rel_error_raw ? max_rel_error_input : max_rel_error_raw;
  }
  std::size_t checked = 0;
};

// Central-difference check of the analytic VGN gradient. Members are
// parameterized as p_m = softmax(z_m) so every perturbation stays on the
// simplex; the analytic side is vgn_backward composed with the softmax
// Jacobian. Relative error per entry is |a - n| / max(|a|, |n|, floor).
GradcheckReport finite_diff_gradcheck(std::span<const double> logits, std::size_t samples,
                                      std::size_t members, std::size_t classes,
                                      const GateParams& params, const MixtureLoss& loss,
                                      double h = 1e-5, double floor = 1e-6);

// Row-wise softmax over blocks of `classes` entries.
std::vector<double> softmax_rows(std::span<const double> logits, std::size_t classes);

// Pulls dL/dp back to dL/dz for p = softmax(z), row-wise.
std::vector<double> softmax_backward(std::span<const double> probs,
                                     std::span<const double> d_probs, std::size_t classes);

}  // namespace vge
