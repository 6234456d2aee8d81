#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "vge/ensemble.hpp"

namespace vge {

double softplus(double x);
double inverse_softplus(double y);
double logistic(double x);

// Per-class gate sensitivity. The unconstrained parameter `raw` maps to
// k = max(softplus(raw) + epsilon, k_min).
struct GateParams {
  std::vector<double> raw;
  double k_min = 1e-3;
  double gamma_min = 1e-8;
  double epsilon = kDefaultEpsilon;

  // raw = 0 for every class, i.e. k ~= ln 2.
  static GateParams initial(std::size_t classes);
  // Picks raw so that the derived k equals the requested values (each >= k_min).
  static GateParams from_k(std::span<const double> k);
  static GateParams from_k(double k, std::size_t classes);

  std::size_t classes() const { return raw.size(); }
  double k(std::size_t c) const;
  std::vector<double> k_values() const;
};

struct GateOutput {
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::vector<double> gamma;  // B x C, in [gamma_min, 1)
  std::vector<double> mean;
  std::vector<double> spread;
  std::vector<double> k;      // C

  double gamma_at(std::size_t b, std::size_t c) const { return gamma[b * classes + c]; }
  std::span<const double> gamma_row(std::size_t b) const {
    return {gamma.data() + b * classes, classes};
  }
};

// Gamma = 1 - exp(-mean / (k * spread)), clamped below by gamma_min.
// Throws kShapeMismatch when params.classes() != C.
GateOutput compute_gate(const EnsembleMoments& moments, const GateParams& params);

// Analytic partials of the gate, B x C each. When the gamma_min clamp is
// active the unclamped formula is used (gradients pass through).
std::vector<double> gate_grad_mean(const GateOutput& gate);
std::vector<double> gate_grad_spread(const GateOutput& gate);
std::vector<double> gate_grad_k(const GateOutput& gate);

enum class SimplexRegion {
  kConfidentCertain,
  kAmbiguousCertain,
  kConfidentUncertain,
  kAmbiguousUncertain,
};

std::string_view region_name(SimplexRegion r);

struct RegionThresholds {
  double confidence = 0.5;
  double spread = 0.1;
};

// Confident when the largest mean reaches `confidence`; certain when the
// spread of that same class is below `spread`. Ties on the largest mean go to
// the lowest class index.
std::vector<SimplexRegion> classify_region(const EnsembleMoments& moments,
                                           RegionThresholds thresholds = {});

}  // namespace vge
