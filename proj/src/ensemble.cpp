#include "vge/ensemble.hpp"

#include <cmath>
#include <string>

#include "vge/error.hpp"

namespace vge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kMassMismatch: return "MassMismatch";
    case ErrorCode::kTooFewMembers: return "TooFewMembers";
    case ErrorCode::kEmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kAllZero: return "AllZero";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kInfeasibleConstruction: return "InfeasibleConstruction";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInconsistentShape: return "InconsistentShape";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ProbVector validate_simplex(std::span<const double> raw, double tol) {
  if (raw.empty()) throw Error(ErrorCode::kEmptyInput, "empty probability vector");
  std::vector<double> v(raw.begin(), raw.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::kNonFinite, "entry " + std::to_string(i) + " is not finite");
    }
    if (v[i] < -tol) {
      throw Error(ErrorCode::kNegativeMass,
                  "entry " + std::to_string(i) + " = " + std::to_string(v[i]));
    }
    if (v[i] < 0.0) v[i] = 0.0;
    sum += v[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    throw Error(ErrorCode::kMassMismatch, "entries sum to " + std::to_string(sum));
  }
  // Exact simplex points are returned bit-for-bit.
  if (sum != 1.0) {
    for (double& x : v) x /= sum;
  }
  return ProbVector(std::move(v));
}

ProbVector mixture(std::span<const ProbVector> members) {
  if (members.empty()) throw Error(ErrorCode::kEmptyEnsemble, "mixture of zero members");
  const std::size_t c = members.front().size();
  const auto& first = members.front();
  std::vector<double> offset(c, 0.0);
  for (const auto& p : members) {
    if (p.size() != c) throw Error(ErrorCode::kShapeMismatch, "members differ in class count");
    for (std::size_t i = 0; i < c; ++i) offset[i] += p[i] - first[i];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  std::vector<double> out(c);
  for (std::size_t i = 0; i < c; ++i) out[i] = first[i] + offset[i] * inv;
  return ProbVector(std::move(out));
}

EnsembleBatch EnsembleBatch::create(std::size_t samples, std::size_t members,
                                    std::size_t classes, std::span<const double> data,
                                    double tol) {
  if (members < 2) {
    throw Error(ErrorCode::kTooFewMembers, "ensemble needs M >= 2, got " + std::to_string(members));
  }
  if (classes < 2) throw Error(ErrorCode::kShapeMismatch, "need C >= 2");
  if (data.size() != samples * members * classes) {
    throw Error(ErrorCode::kShapeMismatch, "data length does not match B*M*C");
  }
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t r = 0; r < samples * members; ++r) {
    const auto row = validate_simplex(data.subspan(r * classes, classes), tol);
    out.insert(out.end(), row.values().begin(), row.values().end());
  }
  return EnsembleBatch(samples, members, classes, std::move(out));
}

EnsembleBatch EnsembleBatch::from_rows(std::size_t samples, std::size_t members,
                                       std::span<const ProbVector> rows) {
  if (members < 2) {
    throw Error(ErrorCode::kTooFewMembers, "ensemble needs M >= 2, got " + std::to_string(members));
  }
  if (rows.size() != samples * members || rows.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "row count does not match B*M");
  }
  const std::size_t classes = rows.front().size();
  if (classes < 2) throw Error(ErrorCode::kShapeMismatch, "need C >= 2");
  std::vector<double> out;
  out.reserve(rows.size() * classes);
  for (const auto& r : rows) {
    if (r.size() != classes) throw Error(ErrorCode::kShapeMismatch, "rows differ in class count");
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return EnsembleBatch(samples, members, classes, std::move(out));
}

std::vector<ProbVector> EnsembleBatch::sample_members(std::size_t b) const {
  std::vector<ProbVector> out;
  out.reserve(members_);
  for (std::size_t m = 0; m < members_; ++m) {
    const auto row = member(b, m);
    out.push_back(ProbVector(std::vector<double>(row.begin(), row.end())));
  }
  return out;
}

void sample_moments(std::span<const double> members, std::size_t m, std::size_t c,
                    double epsilon, std::span<double> mean, std::span<double> stddev,
                    std::span<double> spread) {
  const double inv_m = 1.0 / static_cast<double>(m);
  const double inv_dof = 1.0 / static_cast<double>(m - 1);
  for (std::size_t k = 0; k < c; ++k) {
    // Offsets from the first member keep identical members exact.
    const double base = members[k];
    double offset = 0.0;
    for (std::size_t i = 1; i < m; ++i) offset += members[i * c + k] - base;
    const double mu = base + offset * inv_m;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = members[i * c + k] - mu;
      ss += d * d;
    }
    const double sd = std::sqrt(ss * inv_dof);
    mean[k] = mu;
    stddev[k] = sd;
    spread[k] = sd + epsilon;
  }
}

EnsembleMoments ensemble_moments(const EnsembleBatch& batch, double epsilon) {
  if (batch.members() < 2) throw Error(ErrorCode::kTooFewMembers, "M < 2");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  EnsembleMoments mom;
  mom.samples = batch.samples();
  mom.classes = batch.classes();
  mom.epsilon = epsilon;
  const std::size_t n = mom.samples * mom.classes;
  mom.mean.resize(n);
  mom.stddev.resize(n);
  mom.spread.resize(n);
  const std::size_t c = batch.classes();
  for (std::size_t b = 0; b < batch.samples(); ++b) {
    sample_moments(batch.sample(b), batch.members(), c, epsilon,
                   std::span(mom.mean).subspan(b * c, c),
                   std::span(mom.stddev).subspan(b * c, c),
                   std::span(mom.spread).subspan(b * c, c));
  }
  return mom;
}

}  // namespace vge
