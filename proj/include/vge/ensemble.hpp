#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vge {

class EnsembleBatch;

inline constexpr double kDefaultEpsilon = 1e-8;

// A point on the (C-1)-simplex. Only obtainable through validate_simplex or
// operations that preserve the simplex (mixture).
class ProbVector {
 public:
  ProbVector() = default;

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  explicit ProbVector(std::vector<double> v) : values_(std::move(v)) {}

  std::vector<double> values_;

  friend ProbVector validate_simplex(std::span<const double>, double);
  friend ProbVector mixture(std::span<const ProbVector>);
  friend class EnsembleBatch;
};

// Clips entries in [-tol, 0) to zero and renormalizes. Throws kNonFinite,
// kNegativeMass (entry < -tol) or kMassMismatch (|sum - 1| > tol).
ProbVector validate_simplex(std::span<const double> raw, double tol = 1e-6);

// Arithmetic mean of member distributions. Throws kEmptyEnsemble.
ProbVector mixture(std::span<const ProbVector> members);

// B samples x M members x C classes, sample-major. Every (b, m) row is a
// validated simplex point and M >= 2.
class EnsembleBatch {
 public:
  // Validates every row with validate_simplex(tol) and stores the cleaned row.
  static EnsembleBatch create(std::size_t samples, std::size_t members,
                              std::size_t classes, std::span<const double> data,
                              double tol = 1e-6);

  // Same layout, taking already-validated rows. Shapes must agree.
  static EnsembleBatch from_rows(std::size_t samples, std::size_t members,
                                 std::span<const ProbVector> rows);

  std::size_t samples() const { return samples_; }
  std::size_t members() const { return members_; }
  std::size_t classes() const { return classes_; }

  double at(std::size_t b, std::size_t m, std::size_t c) const {
    return data_[(b * members_ + m) * classes_ + c];
  }
  std::span<const double> member(std::size_t b, std::size_t m) const {
    return {data_.data() + (b * members_ + m) * classes_, classes_};
  }
  // All M x C values of sample b, contiguous.
  std::span<const double> sample(std::size_t b) const {
    return {data_.data() + b * members_ * classes_, members_ * classes_};
  }
  std::span<const double> data() const { return data_; }

  // Rows of sample b as ProbVectors (for decomposition and pairwise scores).
  std::vector<ProbVector> sample_members(std::size_t b) const;

 private:
  EnsembleBatch(std::size_t b, std::size_t m, std::size_t c, std::vector<double> d)
      : samples_(b), members_(m), classes_(c), data_(std::move(d)) {}

  std::size_t samples_ = 0;
  std::size_t members_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> data_;
};

// Per-sample, per-class ensemble statistics, each stored B x C row-major.
struct EnsembleMoments {
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::vector<double> mean;    // p-bar
  std::vector<double> stddev;  // S, Bessel-corrected
  std::vector<double> spread;  // s = S + epsilon
  double epsilon = kDefaultEpsilon;

  double mean_at(std::size_t b, std::size_t c) const { return mean[b * classes + c]; }
  double stddev_at(std::size_t b, std::size_t c) const { return stddev[b * classes + c]; }
  double spread_at(std::size_t b, std::size_t c) const { return spread[b * classes + c]; }
  std::span<const double> mean_row(std::size_t b) const {
    return {mean.data() + b * classes, classes};
  }
  std::span<const double> stddev_row(std::size_t b) const {
    return {stddev.data() + b * classes, classes};
  }
  std::span<const double> spread_row(std::size_t b) const {
    return {spread.data() + b * classes, classes};
  }
};

// Throws kTooFewMembers when M < 2 and kInvalidArgument when epsilon <= 0.
EnsembleMoments ensemble_moments(const EnsembleBatch& batch,
                                 double epsilon = kDefaultEpsilon);

// Moments of a single sample given as raw member rows (M x C, row-major).
// No validation; used by hot paths that already hold validated data.
void sample_moments(std::span<const double> members, std::size_t m, std::size_t c,
                    double epsilon, std::span<double> mean, std::span<double> stddev,
                    std::span<double> spread);

}  // namespace vge
