#include "vge/vgn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "vge/error.hpp"

namespace vge {

VgnForwardCache vgn_forward(const EnsembleBatch& batch, const GateParams& params) {
  VgnForwardCache cache;
  cache.samples = batch.samples();
  cache.members = batch.members();
  cache.classes = batch.classes();
  cache.input.assign(batch.data().begin(), batch.data().end());
  cache.moments = ensemble_moments(batch, params.epsilon);
  cache.gate = compute_gate(cache.moments, params);
  cache.raw = params.raw;

  const std::size_t B = cache.samples, M = cache.members, C = cache.classes;
  cache.normalizer.resize(B * M);
  cache.gated.resize(B * M * C);
  cache.mixture.assign(B * C, 0.0);
  const double inv_m = 1.0 / static_cast<double>(M);

  for (std::size_t b = 0; b < B; ++b) {
    const auto gamma = cache.gate.gamma_row(b);
    double* qbar = cache.mixture.data() + b * C;
    for (std::size_t m = 0; m < M; ++m) {
      const auto p = batch.member(b, m);
      double z = 0.0;
      for (std::size_t c = 0; c < C; ++c) z += p[c] * gamma[c];
      if (z < kNormalizerFloor) {
        z = kNormalizerFloor;
        ++cache.floored_normalizers;
      }
      cache.normalizer[b * M + m] = z;
      double* q = cache.gated.data() + (b * M + m) * C;
      for (std::size_t c = 0; c < C; ++c) {
        q[c] = p[c] * gamma[c] / z;
        qbar[c] += q[c];
      }
    }
    for (std::size_t c = 0; c < C; ++c) qbar[c] *= inv_m;
  }
  return cache;
}

VgnGradients vgn_backward(const VgnForwardCache& cache, std::span<const double> upstream) {
  const std::size_t B = cache.samples, M = cache.members, C = cache.classes;
  if (upstream.size() != B * C) {
    throw Error(ErrorCode::kCacheMismatch, "upstream has " + std::to_string(upstream.size()) +
                                               " entries, expected " + std::to_string(B * C));
  }
  if (cache.gated.size() != B * M * C || cache.normalizer.size() != B * M ||
      cache.gate.gamma.size() != B * C || cache.raw.size() != C) {
    throw Error(ErrorCode::kCacheMismatch, "forward cache is inconsistent");
  }

  VgnGradients g;
  g.d_input.assign(B * M * C, 0.0);
  g.direct.assign(B * M * C, 0.0);
  g.via_mean.assign(B * M * C, 0.0);
  g.via_spread.assign(B * M * C, 0.0);
  g.d_gate.assign(B * C, 0.0);
  g.d_k.assign(C, 0.0);
  g.d_raw.assign(C, 0.0);

  const double inv_m = 1.0 / static_cast<double>(M);
  const double inv_dof = 1.0 / static_cast<double>(M - 1);
  const auto& k = cache.gate.k;
  std::vector<double> residual(C);  // u - (q_m . u)
  std::vector<double> d_mean(C), d_spread(C);

  for (std::size_t b = 0; b < B; ++b) {
    const auto u = upstream.subspan(b * C, C);
    const auto gamma = cache.gate.gamma_row(b);
    double* d_gamma = g.d_gate.data() + b * C;

    for (std::size_t m = 0; m < M; ++m) {
      const auto q = cache.gated_row(b, m);
      const double* p = cache.input.data() + (b * M + m) * C;
      double qu = 0.0;
      for (std::size_t c = 0; c < C; ++c) qu += q[c] * u[c];
      const double scale = inv_m / cache.normalizer[b * M + m];
      double* direct = g.direct.data() + (b * M + m) * C;
      for (std::size_t c = 0; c < C; ++c) {
        residual[c] = u[c] - qu;
        direct[c] = scale * gamma[c] * residual[c];
        d_gamma[c] += scale * p[c] * residual[c];
      }
    }

    for (std::size_t c = 0; c < C; ++c) {
      const double one_minus = 1.0 - gamma[c];
      const double pbar = cache.moments.mean_at(b, c);
      const double s = cache.moments.spread_at(b, c);
      d_mean[c] = d_gamma[c] * one_minus / (k[c] * s);
      d_spread[c] = -d_gamma[c] * one_minus * pbar / (k[c] * s * s);
      g.d_k[c] += -d_gamma[c] * one_minus * pbar / (k[c] * k[c] * s);
    }

    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t row = (b * M + m) * C;
      const double* p = cache.input.data() + row;
      for (std::size_t c = 0; c < C; ++c) {
        g.via_mean[row + c] = d_mean[c] * inv_m;
        // dS/dp_m = (p_m - p-bar) / ((M - 1) S); epsilon is a constant offset.
        const double sd = cache.moments.stddev_at(b, c);
        g.via_spread[row + c] =
            sd > 0.0 ? d_spread[c] * (p[c] - cache.moments.mean_at(b, c)) * inv_dof / sd : 0.0;
        g.d_input[row + c] = g.direct[row + c] + g.via_mean[row + c] + g.via_spread[row + c];
      }
    }
  }

  for (std::size_t c = 0; c < C; ++c) g.d_raw[c] = g.d_k[c] * logistic(cache.raw[c]);
  return g;
}

std::vector<double> jvp_gate(const VgnForwardCache& cache, std::span<const double> direction) {
  const std::size_t B = cache.samples, M = cache.members, C = cache.classes;
  if (direction.size() != C) {
    throw Error(ErrorCode::kShapeMismatch, "direction needs " + std::to_string(C) + " entries");
  }
  std::vector<double> out(B * M * C);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t row = (b * M + m) * C;
      const double* p = cache.input.data() + row;
      const double* q = cache.gated.data() + row;
      double pd = 0.0;
      for (std::size_t c = 0; c < C; ++c) pd += p[c] * direction[c];
      const double inv_z = 1.0 / cache.normalizer[b * M + m];
      for (std::size_t c = 0; c < C; ++c) out[row + c] = inv_z * (p[c] * direction[c] - q[c] * pd);
    }
  }
  return out;
}

MixtureLoss cross_entropy_loss(std::vector<std::size_t> labels, std::size_t classes) {
  auto shared = std::make_shared<std::vector<std::size_t>>(std::move(labels));
  MixtureLoss loss;
  loss.value = [shared, classes](std::span<const double> qbar) {
    const auto& y = *shared;
    double total = 0.0;
    for (std::size_t b = 0; b < y.size(); ++b) total -= std::log(qbar[b * classes + y[b]]);
    return total / static_cast<double>(y.size());
  };
  loss.gradient = [shared, classes](std::span<const double> qbar) {
    const auto& y = *shared;
    std::vector<double> g(qbar.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(y.size());
    for (std::size_t b = 0; b < y.size(); ++b) {
      g[b * classes + y[b]] = -inv_n / qbar[b * classes + y[b]];
    }
    return g;
  };
  return loss;
}

MixtureLoss constant_loss(double value) {
  MixtureLoss loss;
  loss.value = [value](std::span<const double>) { return value; };
  loss.gradient = [](std::span<const double> qbar) {
    return std::vector<double>(qbar.size(), 0.0);
  };
  return loss;
}

std::vector<double> softmax_rows(std::span<const double> logits, std::size_t classes) {
  std::vector<double> out(logits.size());
  for (std::size_t r = 0; r * classes < logits.size(); ++r) {
    const auto z = logits.subspan(r * classes, classes);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      out[r * classes + c] = std::exp(z[c] - zmax);
      sum += out[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) out[r * classes + c] /= sum;
  }
  return out;
}

std::vector<double> softmax_backward(std::span<const double> probs,
                                     std::span<const double> d_probs, std::size_t classes) {
  std::vector<double> out(probs.size());
  for (std::size_t r = 0; r * classes < probs.size(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < classes; ++c) dot += probs[r * classes + c] * d_probs[r * classes + c];
    for (std::size_t c = 0; c < classes; ++c) {
      out[r * classes + c] = probs[r * classes + c] * (d_probs[r * classes + c] - dot);
    }
  }
  return out;
}

namespace {

double eval_loss(std::span<const double> logits, std::size_t B, std::size_t M, std::size_t C,
                 const GateParams& params, const MixtureLoss& loss) {
  const auto probs = softmax_rows(logits, C);
  const auto batch = EnsembleBatch::create(B, M, C, probs, 1e-6);
  return loss.value(vgn_forward(batch, params).mixture);
}

double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

}  // namespace

GradcheckReport finite_diff_gradcheck(std::span<const double> logits, std::size_t samples,
                                      std::size_t members, std::size_t classes,
                                      const GateParams& params, const MixtureLoss& loss,
                                      double h, double floor) {
  if (logits.size() != samples * members * classes) {
    throw Error(ErrorCode::kShapeMismatch, "logits length does not match B*M*C");
  }
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be positive");

  const auto probs = softmax_rows(logits, classes);
  const auto batch = EnsembleBatch::create(samples, members, classes, probs, 1e-6);
  const auto cache = vgn_forward(batch, params);
  const auto grads = vgn_backward(cache, loss.gradient(cache.mixture));
  const auto d_logits = softmax_backward(batch.data(), grads.d_input, classes);

  GradcheckReport report;
  std::vector<double> z(logits.begin(), logits.end());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double saved = z[i];
    z[i] = saved + h;
    const double up = eval_loss(z, samples, members, classes, params, loss);
    z[i] = saved - h;
    const double down = eval_loss(z, samples, members, classes, params, loss);
    z[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    report.max_rel_error_input =
        std::max(report.max_rel_error_input, rel_error(d_logits[i], numeric, floor));
    report.max_abs_error = std::max(report.max_abs_error, std::abs(d_logits[i] - numeric));
    ++report.checked;
  }

  GateParams shifted = params;
  for (std::size_t c = 0; c < classes; ++c) {
    const double saved = shifted.raw[c];
    shifted.raw[c] = saved + h;
    const double up = eval_loss(logits, samples, members, classes, shifted, loss);
    shifted.raw[c] = saved - h;
    const double down = eval_loss(logits, samples, members, classes, shifted, loss);
    shifted.raw[c] = saved;
    const double numeric = (up - down) / (2.0 * h);
    report.max_rel_error_raw =
        std::max(report.max_rel_error_raw, rel_error(grads.d_raw[c], numeric, floor));
    report.max_abs_error = std::max(report.max_abs_error, std::abs(grads.d_raw[c] - numeric));
    ++report.checked;
  }
  return report;
}

}  // namespace vge
