#include "vge/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "vge/error.hpp"
#include "vge/vgn.hpp"

namespace vge {

namespace {

double safe_log(double x) { return std::log(std::max(x, kLogFloor)); }

std::vector<double> flatten(std::span<const ProbVector> members) {
  if (members.empty()) throw Error(ErrorCode::kEmptyEnsemble, "no members");
  const std::size_t c = members.front().size();
  std::vector<double> out;
  out.reserve(members.size() * c);
  for (const auto& p : members) {
    if (p.size() != c) throw Error(ErrorCode::kShapeMismatch, "members differ in class count");
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return out;
}

std::size_t member_count(std::span<const double> members, std::size_t classes) {
  if (classes == 0 || members.size() % classes != 0) {
    throw Error(ErrorCode::kShapeMismatch, "member block is not a multiple of C");
  }
  return members.size() / classes;
}

}  // namespace

double entropy(std::span<const double> p, bool normalize) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * safe_log(x);
  }
  if (normalize && p.size() > 1) h /= std::log(static_cast<double>(p.size()));
  return h;
}

double entropy(const ProbVector& p, bool normalize) { return entropy(p.values(), normalize); }

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] > 0.0) d += p[c] * (safe_log(p[c]) - safe_log(q[c]));
  }
  return d;
}

Decomposition decompose(std::span<const double> members, std::size_t classes, bool normalize) {
  const std::size_t m = member_count(members, classes);
  if (m == 0) throw Error(ErrorCode::kEmptyEnsemble, "no members");
  // Averages are taken as offsets from the first member so that identical
  // members reproduce it bit for bit and eu comes out exactly 0.
  const double inv_m = 1.0 / static_cast<double>(m);
  const auto first = members.subspan(0, classes);
  std::vector<double> offset(classes, 0.0);
  const double h0 = entropy(first, normalize);
  double h_offset = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    const auto row = members.subspan(i * classes, classes);
    for (std::size_t c = 0; c < classes; ++c) offset[c] += row[c] - first[c];
    h_offset += entropy(row, normalize) - h0;
  }
  std::vector<double> mix(classes);
  for (std::size_t c = 0; c < classes; ++c) mix[c] = first[c] + offset[c] * inv_m;
  Decomposition d;
  d.tu = entropy(mix, normalize);
  d.au = h0 + h_offset * inv_m;
  d.eu = d.tu - d.au;
  return d;
}

Decomposition decompose(std::span<const ProbVector> members, bool normalize) {
  const auto flat = flatten(members);
  return decompose(flat, members.front().size(), normalize);
}

double mean_kl_to_mixture(std::span<const double> members, std::size_t classes) {
  const std::size_t m = member_count(members, classes);
  std::vector<double> mix(members.begin(), members.begin() + classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double offset = 0.0;
    for (std::size_t i = 1; i < m; ++i) offset += members[i * classes + c] - members[c];
    mix[c] += offset / static_cast<double>(m);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) total += kl_divergence(members.subspan(i * classes, classes), mix);
  return total / static_cast<double>(m);
}

double epkl(std::span<const double> members, std::size_t classes) {
  const std::size_t m = member_count(members, classes);
  if (m < 2) throw Error(ErrorCode::kTooFewMembers, "EPKL needs M >= 2");
  std::vector<double> logs(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) logs[i] = safe_log(members[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* p = members.data() + i * classes;
    const double* lp = logs.data() + i * classes;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double* lq = logs.data() + j * classes;
      double kl = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        if (p[c] > 0.0) kl += p[c] * (lp[c] - lq[c]);
      }
      total += kl;
    }
  }
  return total / static_cast<double>(m * (m - 1));
}

double epkl(std::span<const ProbVector> members) {
  const auto flat = flatten(members);
  return epkl(flat, members.front().size());
}

double epjs(std::span<const double> members, std::size_t classes) {
  const std::size_t m = member_count(members, classes);
  if (m < 2) throw Error(ErrorCode::kTooFewMembers, "EPJS needs M >= 2");
  std::vector<double> mid(classes);
  double total = 0.0;
  // JS is symmetric, so each unordered pair counts twice in the ordered mean.
  for (std::size_t i = 0; i < m; ++i) {
    const auto p = members.subspan(i * classes, classes);
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto q = members.subspan(j * classes, classes);
      for (std::size_t c = 0; c < classes; ++c) mid[c] = 0.5 * (p[c] + q[c]);
      total += 2.0 * (0.5 * kl_divergence(p, mid) + 0.5 * kl_divergence(q, mid));
    }
  }
  return total / static_cast<double>(m * (m - 1));
}

double epjs(std::span<const ProbVector> members) {
  const auto flat = flatten(members);
  return epjs(flat, members.front().size());
}

SnrDecision snr_decision(std::span<const double> mean, std::span<const double> stddev,
                         double threshold, double epsilon) {
  if (mean.size() < 2 || stddev.size() != mean.size()) {
    throw Error(ErrorCode::kShapeMismatch, "SNR needs C >= 2 matching mean/stddev");
  }
  SnrDecision out;
  // Strict comparisons keep the lowest index on ties.
  std::size_t first = 0, second = 1;
  if (mean[1] > mean[0]) std::swap(first, second);
  for (std::size_t c = 2; c < mean.size(); ++c) {
    if (mean[c] > mean[first]) {
      second = first;
      first = c;
    } else if (mean[c] > mean[second]) {
      second = c;
    }
  }
  out.top1 = first;
  out.top2 = second;
  out.snr = (mean[first] - mean[second]) / (stddev[first] + stddev[second] + epsilon);
  if (out.snr > threshold) out.decision = first;
  return out;
}

std::vector<SnrDecision> snr_decision(const EnsembleMoments& moments, double threshold) {
  std::vector<SnrDecision> out;
  out.reserve(moments.samples);
  for (std::size_t b = 0; b < moments.samples; ++b) {
    out.push_back(snr_decision(moments.mean_row(b), moments.stddev_row(b), threshold,
                               moments.epsilon));
  }
  return out;
}

double vgmu(std::span<const double> mean, std::span<const double> stddev, double epsilon) {
  const auto d = snr_decision(mean, stddev, 0.0, epsilon);
  const double gamma = -std::expm1(-d.snr);
  return 1.0 - gamma * mean[d.top1];
}

std::vector<double> vgmu(const EnsembleMoments& moments) {
  std::vector<double> out(moments.samples);
  for (std::size_t b = 0; b < moments.samples; ++b) {
    out[b] = vgmu(moments.mean_row(b), moments.stddev_row(b), moments.epsilon);
  }
  return out;
}

std::vector<UncertaintyReport> score_batch(const EnsembleBatch& batch,
                                           const ScoreOptions& options) {
  const std::size_t C = batch.classes(), M = batch.members();
  const double eps = options.gate ? options.gate->epsilon : kDefaultEpsilon;
  const auto moments = ensemble_moments(batch, eps);
  const auto regions = classify_region(moments, options.regions);
  std::optional<VgnForwardCache> cache;
  if (options.gate) cache = vgn_forward(batch, *options.gate);

  std::vector<UncertaintyReport> out(batch.samples());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      auto& r = out[b];
      const auto members = batch.sample(b);
      r.plain = decompose(members, C, options.normalize);
      if (cache) {
        r.gated = decompose(std::span<const double>(cache->gated).subspan(b * M * C, M * C), C,
                            options.normalize);
      } else {
        r.gated = r.plain;
      }
      r.epkl = epkl(members, C);
      r.epjs = epjs(members, C);
      const auto d = snr_decision(moments.mean_row(b), moments.stddev_row(b),
                                  options.snr_threshold, moments.epsilon);
      r.snr = d.snr;
      r.decision = d.decision;
      r.vgmu = vgmu(moments.mean_row(b), moments.stddev_row(b), moments.epsilon);
      r.region = regions[b];
    }
  };
  const std::size_t n = batch.samples();
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    score_range(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(score_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace vge
