#include "vge/axioms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vge/error.hpp"
#include "vge/gate.hpp"
#include "vge/uncertainty.hpp"
#include "vge/vgn.hpp"

namespace vge {

namespace {

constexpr std::size_t kMembers = 3;
constexpr std::size_t kClasses = 3;
constexpr std::size_t kAngleGrid = 20000;

using Vec2 = std::array<double, 2>;

// Orthonormal basis of zero-sum vectors over three members.
const std::array<double, 3> kBasis1{1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2, 0.0};
const std::array<double, 3> kBasis2{1.0 / std::numbers::sqrt3 / std::numbers::sqrt2,
                                    1.0 / std::numbers::sqrt3 / std::numbers::sqrt2,
                                    -2.0 / std::numbers::sqrt3 / std::numbers::sqrt2};

// Three vectors with the given lengths summing to zero.
std::array<Vec2, 3> closed_triangle(const std::array<double, 3>& r) {
  const double tol = 1e-12;
  for (std::size_t c = 0; c < 3; ++c) {
    if (r[c] > r[(c + 1) % 3] + r[(c + 2) % 3] + tol) {
      throw Error(ErrorCode::kInfeasibleConstruction,
                  "per-class spreads violate the triangle inequality");
    }
  }
  std::array<Vec2, 3> v{};
  if (r[0] > 0.0 && r[1] > 0.0) {
    const double cos_g = std::clamp((r[2] * r[2] - r[0] * r[0] - r[1] * r[1]) / (2.0 * r[0] * r[1]),
                                    -1.0, 1.0);
    const double g = std::acos(cos_g);
    v[0] = {r[0], 0.0};
    v[1] = {r[1] * std::cos(g), r[1] * std::sin(g)};
  } else if (r[0] > 0.0) {
    v[0] = {r[0], 0.0};
  } else {
    v[1] = {r[1], 0.0};
  }
  v[2] = {-v[0][0] - v[1][0], -v[0][1] - v[1][1]};
  return v;
}

std::array<double, 9> members_at(const std::vector<double>& mean, const std::array<Vec2, 3>& v,
                                 double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  std::array<double, 9> out{};
  for (std::size_t c = 0; c < kClasses; ++c) {
    const double a = cs * v[c][0] - sn * v[c][1];
    const double b = sn * v[c][0] + cs * v[c][1];
    for (std::size_t m = 0; m < kMembers; ++m) {
      out[m * kClasses + c] = mean[c] + a * kBasis1[m] + b * kBasis2[m];
    }
  }
  return out;
}

double min_entry(const std::array<double, 9>& x) { return *std::min_element(x.begin(), x.end()); }

double ungated_eu(const std::array<double, 9>& x) {
  std::array<double, 9> clipped = x;
  for (double& e : clipped) e = std::max(e, 0.0);
  return decompose(clipped, kClasses).eu;
}

EnsembleBatch identical_members(const std::vector<double>& p) {
  std::vector<double> data;
  for (std::size_t m = 0; m < kMembers; ++m) data.insert(data.end(), p.begin(), p.end());
  return EnsembleBatch::create(1, kMembers, p.size(), data);
}

AxiomMoments achieved(const EnsembleBatch& batch) {
  const auto mom = ensemble_moments(batch);
  return {mom.mean, mom.stddev};
}

}  // namespace

EnsembleBatch moment_matched_ensemble(const std::vector<double>& mean,
                                      const std::vector<double>& stddev) {
  if (mean.size() != kClasses || stddev.size() != kClasses) {
    throw Error(ErrorCode::kShapeMismatch, "axiom ensembles are defined over three classes");
  }
  std::array<double, 3> r{};
  for (std::size_t c = 0; c < kClasses; ++c) {
    r[c] = std::sqrt(static_cast<double>(kMembers - 1)) * stddev[c];
  }
  const auto tri = closed_triangle(r);

  const double step = 2.0 * std::numbers::pi / static_cast<double>(kAngleGrid);
  std::optional<double> best_angle;
  double best_eu = -1.0;
  auto consider = [&](double angle) {
    const auto x = members_at(mean, tri, angle);
    if (min_entry(x) < -1e-12) return;
    const double eu = ungated_eu(x);
    if (eu > best_eu) {
      best_eu = eu;
      best_angle = angle;
    }
  };
  for (std::size_t i = 0; i < kAngleGrid; ++i) consider(step * static_cast<double>(i));
  if (!best_angle) {
    throw Error(ErrorCode::kInfeasibleConstruction,
                "no member configuration with these moments stays on the simplex");
  }
  // The optimum usually sits on the simplex boundary; walk each neighbouring
  // grid interval to its feasibility edge by bisection.
  const double centre = *best_angle;
  for (double dir : {-1.0, 1.0}) {
    double lo = centre, hi = centre + dir * step;
    if (min_entry(members_at(mean, tri, hi)) >= -1e-12) {
      consider(hi);
      continue;
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (min_entry(members_at(mean, tri, mid)) >= -1e-12) lo = mid; else hi = mid;
    }
    consider(lo);
  }

  auto x = members_at(mean, tri, *best_angle);
  for (double& e : x) e = std::max(e, 0.0);
  return EnsembleBatch::create(1, kMembers, kClasses, x, 1e-9);
}

AxiomCase build_axiom_case(const std::string& name) {
  const std::vector<double> base{0.70, 0.20, 0.10};
  const std::vector<double> base_spread{0.10, 0.05, 0.05};
  const std::vector<double> zero(kClasses, 0.0);

  auto make = [&](std::string n, EnsembleBatch p, EnsembleBatch q, AxiomMoments pt,
                  AxiomMoments qt) {
    return AxiomCase{std::move(n), std::move(p), std::move(q), std::move(pt), std::move(qt)};
  };

  if (name == "A2") {
    const double third = 1.0 / 3.0;
    const std::vector<double> vertices{1, 0, 0, 0, 1, 0, 0, 0, 1};
    const std::vector<double> uniform(kClasses, third);
    const std::vector<double> vertex_sd(kClasses, std::sqrt(third));
    return make(name, EnsembleBatch::create(1, kMembers, kClasses, vertices),
                identical_members(uniform), {uniform, vertex_sd}, {uniform, zero});
  }
  if (name == "A3") {
    const std::vector<double> spread{0.17, 0.10, 0.10};
    return make(name, identical_members(base), moment_matched_ensemble(base, spread),
                {base, zero}, {base, spread});
  }
  if (name == "A4" || name == "A5") {
    const std::vector<double> shifted =
        name == "A4" ? std::vector<double>{0.40, 0.35, 0.25} : std::vector<double>{0.90, 0.05, 0.05};
    return make(name, moment_matched_ensemble(base, base_spread),
                moment_matched_ensemble(shifted, base_spread), {base, base_spread},
                {shifted, base_spread});
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown axiom case '" + name + "'");
}

bool AxiomSuiteResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AxiomCheck& c) { return c.passed || c.informational; });
}

const AxiomRow& AxiomSuiteResult::row(const std::string& case_name, const std::string& ensemble,
                                      std::optional<double> k) const {
  for (const auto& r : rows) {
    if (r.case_name == case_name && r.ensemble == ensemble && r.k == k) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, "no axiom row " + case_name + "/" + ensemble);
}

namespace {

AxiomRow evaluate(const std::string& case_name, const std::string& which,
                  const EnsembleBatch& batch, std::optional<double> k) {
  AxiomRow row;
  row.case_name = case_name;
  row.ensemble = which;
  row.k = k;
  Decomposition d;
  if (k) {
    const auto cache = vgn_forward(batch, GateParams::from_k(*k, batch.classes()));
    d = decompose(cache.gated, batch.classes(), true);
  } else {
    d = decompose(batch.sample(0), batch.classes(), true);
  }
  row.tu = d.tu;
  row.au = d.au;
  row.eu = d.eu;
  const auto mom = ensemble_moments(batch);
  row.vgmu = vgmu(mom.mean_row(0), mom.stddev_row(0), mom.epsilon);
  return row;
}

bool moments_hit(const EnsembleBatch& batch, const AxiomMoments& target) {
  const auto got = achieved(batch);
  for (std::size_t c = 0; c < kClasses; ++c) {
    if (std::abs(got.mean[c] - target.mean[c]) > 1e-6) return false;
    if (std::abs(got.stddev[c] - target.stddev[c]) > 1e-6) return false;
  }
  return true;
}

std::string k_label(std::optional<double> k) {
  return k ? "k=" + std::to_string(static_cast<int>(*k)) : "k=disabled";
}

}  // namespace

AxiomSuiteResult run_axiom_suite() {
  AxiomSuiteResult result;
  std::vector<AxiomCase> cases;
  for (const char* n : {"A2", "A3", "A4", "A5"}) cases.push_back(build_axiom_case(n));

  for (const auto& c : cases) {
    for (const auto& k : kAxiomKGrid) {
      result.rows.push_back(evaluate(c.name, "P", c.p, k));
      result.rows.push_back(evaluate(c.name, "Q", c.q, k));
    }
  }

  auto& checks = result.checks;
  auto near = [&](std::string what, double observed, double expected, double tol, bool info) {
    checks.push_back({std::move(what), std::abs(observed - expected) <= tol, info, observed,
                      expected, tol});
  };
  auto holds = [&](std::string what, bool ok, double observed = 0.0) {
    checks.push_back({std::move(what), ok, false, observed, 0.0, 0.0});
  };
  auto row = [&](const char* c, const char* e, std::optional<double> k) -> const AxiomRow& {
    return result.row(c, e, k);
  };
  const std::optional<double> off;

  // A0 / A1 across every case and gate setting.
  for (const auto& r : result.rows) {
    holds("A0 non-negative " + r.case_name + "." + r.ensemble + " " + k_label(r.k),
          r.tu >= -1e-9 && r.au >= -1e-9 && r.eu >= -1e-9, r.eu);
  }
  for (const auto& k : kAxiomKGrid) {
    holds("A1 identical members eu=0 (A3.P) " + k_label(k), std::abs(row("A3", "P", k).eu) <= 1e-9,
          row("A3", "P", k).eu);
    holds("A1 identical members eu=0 (A2.Q) " + k_label(k), std::abs(row("A2", "Q", k).eu) <= 1e-9,
          row("A2", "Q", k).eu);
  }

  const auto& a2 = cases[0];
  const bool a2_info = !moments_hit(a2.p, a2.p_target) || !moments_hit(a2.q, a2.q_target);
  for (const auto& k : kAxiomKGrid) {
    near("A2 P eu " + k_label(k), row("A2", "P", k).eu, 1.0, 0.02, a2_info);
    near("A2 Q eu " + k_label(k), row("A2", "Q", k).eu, 0.0, 0.02, a2_info);
    near("A2 Q tu " + k_label(k), row("A2", "Q", k).tu, 1.0, 0.02, a2_info);
    near("A2 Q au " + k_label(k), row("A2", "Q", k).au, 1.0, 0.02, a2_info);
    holds("A2 P eu invariant to gating " + k_label(k),
          std::abs(row("A2", "P", k).eu - row("A2", "P", off).eu) <= 1e-9);
  }

  const auto& a3 = cases[1];
  const bool a3_info = !moments_hit(a3.q, a3.q_target);
  const std::array<double, 3> a3_eu{0.070, 0.055, 0.045};
  for (std::size_t i = 0; i < kAxiomKGrid.size(); ++i) {
    near("A3 Q eu " + k_label(kAxiomKGrid[i]), row("A3", "Q", kAxiomKGrid[i]).eu, a3_eu[i], 0.02,
         a3_info);
  }
  holds("A3 Q eu strictly decreasing over k grid",
        row("A3", "Q", off).eu > row("A3", "Q", 1.0).eu &&
            row("A3", "Q", 1.0).eu > row("A3", "Q", 2.0).eu);
  holds("A3 mean-preserving spread raises eu", row("A3", "Q", off).eu > row("A3", "P", off).eu);
  near("A3 P vgmu", row("A3", "P", off).vgmu, 0.300, 0.01, false);
  near("A3 Q vgmu", row("A3", "Q", off).vgmu, 0.412, 0.01, a3_info);

  const auto& a4 = cases[2];
  const bool a4_info = !moments_hit(a4.p, a4.p_target) || !moments_hit(a4.q, a4.q_target);
  near("A4 P tu", row("A4", "P", off).tu, 0.730, 0.02, a4_info);
  near("A4 Q tu", row("A4", "Q", off).tu, 0.984, 0.02, a4_info);
  near("A4 P au", row("A4", "P", off).au, 0.714, 0.02, a4_info);
  near("A4 Q au", row("A4", "Q", off).au, 0.971, 0.02, a4_info);
  for (const auto& k : kAxiomKGrid) {
    const auto& p = row("A4", "P", k);
    const auto& q = row("A4", "Q", k);
    near("A4 |eu_P - eu_Q| " + k_label(k), std::abs(p.eu - q.eu), 0.0, 0.01, false);
    holds("A4 tu and au increase P->Q " + k_label(k), q.tu > p.tu && q.au > p.au);
  }

  const auto& a5 = cases[3];
  const bool a5_info = !moments_hit(a5.p, a5.p_target) || !moments_hit(a5.q, a5.q_target);
  std::array<double, 3> gaps{};
  for (std::size_t i = 0; i < kAxiomKGrid.size(); ++i) {
    gaps[i] = std::abs(row("A5", "P", kAxiomKGrid[i]).eu - row("A5", "Q", kAxiomKGrid[i]).eu);
  }
  holds("A5 eu gap shrinks over k grid", gaps[0] > gaps[1] && gaps[1] > gaps[2], gaps[2]);
  near("A5 P vgmu", row("A5", "P", off).vgmu, 0.325, 0.02, a5_info);
  near("A5 Q vgmu", row("A5", "Q", off).vgmu, 0.103, 0.02, a5_info);

  return result;
}

}  // namespace vge
