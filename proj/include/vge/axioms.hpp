#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vge/ensemble.hpp"

namespace vge {

// Target moments of one constructed ensemble.
struct AxiomMoments {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// A pair of ensembles (P before, Q after a transformation) over C = 3.
struct AxiomCase {
  std::string name;
  EnsembleBatch p;  // one sample, M members
  EnsembleBatch q;
  AxiomMoments p_target;
  AxiomMoments q_target;
};

// Constructs M = 3 members with the given per-class mean and Bessel-corrected
// stddev. With deviations constrained to sum to zero over members and over
// classes, the three class deviation vectors form a triangle with sides
// sqrt(M - 1) * stddev_c, leaving one rotation angle free; the feasible angle
// (all probabilities >= 0) that maximizes the ungated epistemic term is used.
// Throws kInfeasibleConstruction when no angle keeps the members on the simplex.
EnsembleBatch moment_matched_ensemble(const std::vector<double>& mean,
                                      const std::vector<double>& stddev);

// name in {A2, A3, A4, A5}; throws kInvalidArgument otherwise.
AxiomCase build_axiom_case(const std::string& name);

// Gate settings evaluated by the suite: nullopt = gating disabled.
inline const std::array<std::optional<double>, 3> kAxiomKGrid{std::nullopt, 1.0, 2.0};

struct AxiomRow {
  std::string case_name;
  std::string ensemble;  // "P" or "Q"
  std::optional<double> k;
  double tu = 0.0, au = 0.0, eu = 0.0;  // normalized by ln C, gated members
  double vgmu = 0.0;
};

struct AxiomCheck {
  std::string description;
  bool passed = false;
  bool informational = false;  // magnitude comparisons when moments are not hit exactly
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
};

struct AxiomSuiteResult {
  std::vector<AxiomRow> rows;
  std::vector<AxiomCheck> checks;
  bool all_passed() const;
  const AxiomRow& row(const std::string& case_name, const std::string& ensemble,
                      std::optional<double> k) const;
};

AxiomSuiteResult run_axiom_suite();

}  // namespace vge
