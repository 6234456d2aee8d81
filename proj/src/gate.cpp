#include "vge/gate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vge/error.hpp"

namespace vge {

double softplus(double x) {
  // log(1 + e^x) without overflow for large x.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw Error(ErrorCode::kInvalidArgument, "inverse_softplus needs y > 0");
  // log(e^y - 1) = y + log(1 - e^-y)
  return y > 20.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GateParams GateParams::initial(std::size_t classes) {
  GateParams p;
  p.raw.assign(classes, 0.0);
  return p;
}

GateParams GateParams::from_k(std::span<const double> k) {
  GateParams p;
  p.raw.reserve(k.size());
  for (double kc : k) {
    if (!std::isfinite(kc) || kc < p.k_min) {
      throw Error(ErrorCode::kInvalidArgument,
                  "k must be finite and >= k_min, got " + std::to_string(kc));
    }
    // Below this, softplus(raw) + epsilon cannot reach kc; the clamp supplies it.
    const double target = kc - p.epsilon;
    p.raw.push_back(target > 0.0 ? inverse_softplus(target) : -50.0);
  }
  return p;
}

GateParams GateParams::from_k(double k, std::size_t classes) {
  const std::vector<double> ks(classes, k);
  return from_k(ks);
}

double GateParams::k(std::size_t c) const {
  return std::max(softplus(raw[c]) + epsilon, k_min);
}

std::vector<double> GateParams::k_values() const {
  std::vector<double> out(raw.size());
  for (std::size_t c = 0; c < raw.size(); ++c) out[c] = k(c);
  return out;
}

GateOutput compute_gate(const EnsembleMoments& moments, const GateParams& params) {
  if (params.classes() != moments.classes) {
    throw Error(ErrorCode::kShapeMismatch,
                "gate has " + std::to_string(params.classes()) + " classes, moments have " +
                    std::to_string(moments.classes));
  }
  GateOutput g;
  g.samples = moments.samples;
  g.classes = moments.classes;
  g.mean = moments.mean;
  g.spread = moments.spread;
  g.k = params.k_values();
  g.gamma.resize(g.mean.size());
  for (std::size_t b = 0; b < g.samples; ++b) {
    for (std::size_t c = 0; c < g.classes; ++c) {
      const std::size_t i = b * g.classes + c;
      const double x = g.mean[i] / (g.k[c] * g.spread[i]);
      g.gamma[i] = std::max(-std::expm1(-x), params.gamma_min);
    }
  }
  return g;
}

namespace {

template <typename F>
std::vector<double> per_entry(const GateOutput& gate, F f) {
  std::vector<double> out(gate.gamma.size());
  for (std::size_t b = 0; b < gate.samples; ++b) {
    for (std::size_t c = 0; c < gate.classes; ++c) {
      const std::size_t i = b * gate.classes + c;
      out[i] = f(1.0 - gate.gamma[i], gate.mean[i], gate.spread[i], gate.k[c]);
    }
  }
  return out;
}

}  // namespace

std::vector<double> gate_grad_mean(const GateOutput& gate) {
  return per_entry(gate, [](double one_minus, double, double s, double k) {
    return one_minus / (k * s);
  });
}

std::vector<double> gate_grad_spread(const GateOutput& gate) {
  return per_entry(gate, [](double one_minus, double p, double s, double k) {
    return -one_minus * p / (k * s * s);
  });
}

std::vector<double> gate_grad_k(const GateOutput& gate) {
  return per_entry(gate, [](double one_minus, double p, double s, double k) {
    return -one_minus * p / (k * k * s);
  });
}

std::string_view region_name(SimplexRegion r) {
  switch (r) {
    case SimplexRegion::kConfidentCertain: return "confident-certain";
    case SimplexRegion::kAmbiguousCertain: return "ambiguous-certain";
    case SimplexRegion::kConfidentUncertain: return "confident-uncertain";
    case SimplexRegion::kAmbiguousUncertain: return "ambiguous-uncertain";
  }
  return "unknown";
}

std::vector<SimplexRegion> classify_region(const EnsembleMoments& moments,
                                           RegionThresholds thresholds) {
  std::vector<SimplexRegion> out;
  out.reserve(moments.samples);
  for (std::size_t b = 0; b < moments.samples; ++b) {
    const auto mean = moments.mean_row(b);
    const auto top = static_cast<std::size_t>(
        std::distance(mean.begin(), std::max_element(mean.begin(), mean.end())));
    const bool confident = mean[top] >= thresholds.confidence;
    const bool certain = moments.spread_at(b, top) < thresholds.spread;
    if (confident) {
      out.push_back(certain ? SimplexRegion::kConfidentCertain
                            : SimplexRegion::kConfidentUncertain);
    } else {
      out.push_back(certain ? SimplexRegion::kAmbiguousCertain
                            : SimplexRegion::kAmbiguousUncertain);
    }
  }
  return out;
}

}  // namespace vge
