#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vge/axioms.hpp"
#include "vge/commands.hpp"
#include "vge/error.hpp"
#include "vge/io.hpp"
#include "vge/metrics.hpp"
#include "vge/traindemo.hpp"
#include "vge/uncertainty.hpp"
#include "vge/vgn.hpp"

namespace py = pybind11;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

vge::EnsembleBatch to_batch(const Array& probs) {
  if (probs.ndim() == 2) {
    return vge::EnsembleBatch::create(1, probs.shape(0), probs.shape(1),
                                      {probs.data(), static_cast<std::size_t>(probs.size())},
                                      vge::io::kIngestTolerance);
  }
  if (probs.ndim() != 3) throw py::value_error("probs must have shape (B, M, C) or (M, C)");
  return vge::EnsembleBatch::create(probs.shape(0), probs.shape(1), probs.shape(2),
                                    {probs.data(), static_cast<std::size_t>(probs.size())},
                                    vge::io::kIngestTolerance);
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

Array from_vector(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

using KSpec = std::optional<std::variant<double, std::vector<double>>>;

// None disables the gate; a scalar or per-class list sets k.
std::optional<vge::GateParams> gate_params(const KSpec& k, std::size_t classes) {
  if (!k) return std::nullopt;
  if (const auto* scalar = std::get_if<double>(&*k)) return vge::GateParams::from_k(*scalar, classes);
  const auto& list = std::get<std::vector<double>>(*k);
  if (list.size() != classes) {
    throw vge::Error(vge::ErrorCode::kShapeMismatch, "k has " + std::to_string(list.size()) +
                                                         " entries, expected " + std::to_string(classes));
  }
  return vge::GateParams::from_k(list);
}

vge::GateParams gate_or_raw(const KSpec& k, const std::optional<std::vector<double>>& raw,
                            std::size_t classes) {
  if (raw) {
    vge::GateParams p;
    p.raw = *raw;
    if (p.raw.size() != classes) throw vge::Error(vge::ErrorCode::kShapeMismatch, "raw must have C entries");
    return p;
  }
  auto p = gate_params(k, classes);
  if (!p) throw py::value_error("the VGN layer needs a gate: pass k or raw");
  return *p;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict decomposition_dict(const vge::Decomposition& d) {
  py::dict out;
  out["tu"] = d.tu;
  out["au"] = d.au;
  out["eu"] = d.eu;
  return out;
}

}  // namespace

PYBIND11_MODULE(_vge, m) {
  m.doc() = "Variance-gated ensemble uncertainty: native core";

  static py::exception<vge::Error> error_type(m, "VgeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const vge::Error& e) {
      py::object exc = py::handle(error_type.ptr())(e.what());
      exc.attr("code") = std::string(vge::error_code_name(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def(
      "moments",
      [](const Array& probs, double epsilon) {
        const auto batch = to_batch(probs);
        const auto mom = vge::ensemble_moments(batch, epsilon);
        const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(mom.samples),
                                             static_cast<py::ssize_t>(mom.classes)};
        py::dict out;
        out["mean"] = from_vector(mom.mean, shape);
        out["stddev"] = from_vector(mom.stddev, shape);
        out["spread"] = from_vector(mom.spread, shape);
        return out;
      },
      py::arg("probs"), py::arg("epsilon") = vge::kDefaultEpsilon,
      "Per-class mean, Bessel-corrected stddev and spread (stddev + epsilon), each (B, C).");

  m.def(
      "gate",
      [](const Array& probs, KSpec k, std::optional<std::vector<double>> raw) {
        const auto batch = to_batch(probs);
        const auto g = vge::compute_gate(vge::ensemble_moments(batch),
                                         gate_or_raw(k, raw, batch.classes()));
        return from_vector(g.gamma, {static_cast<py::ssize_t>(g.samples),
                                     static_cast<py::ssize_t>(g.classes)});
      },
      py::arg("probs"), py::arg("k") = 1.0, py::arg("raw") = py::none(),
      "Gate values Gamma, (B, C).");

  m.def(
      "vgn_forward",
      [](const Array& probs, KSpec k, std::optional<std::vector<double>> raw) {
        const auto batch = to_batch(probs);
        const auto cache = vgn_forward(batch, gate_or_raw(k, raw, batch.classes()));
        const auto B = static_cast<py::ssize_t>(cache.samples);
        const auto M = static_cast<py::ssize_t>(cache.members);
        const auto C = static_cast<py::ssize_t>(cache.classes);
        py::dict out;
        out["gated"] = from_vector(cache.gated, {B, M, C});
        out["mixture"] = from_vector(cache.mixture, {B, C});
        out["gamma"] = from_vector(cache.gate.gamma, {B, C});
        return out;
      },
      py::arg("probs"), py::arg("k") = 1.0, py::arg("raw") = py::none(),
      "Gated members (B, M, C), their mixture (B, C) and the gate (B, C).");

  m.def(
      "vgn_backward",
      [](const Array& probs, const Array& upstream, KSpec k, std::optional<std::vector<double>> raw) {
        const auto batch = to_batch(probs);
        const auto cache = vgn_forward(batch, gate_or_raw(k, raw, batch.classes()));
        const auto g = vgn_backward(cache, to_vector(upstream));
        const auto B = static_cast<py::ssize_t>(cache.samples);
        const auto M = static_cast<py::ssize_t>(cache.members);
        const auto C = static_cast<py::ssize_t>(cache.classes);
        py::dict out;
        out["d_input"] = from_vector(g.d_input, {B, M, C});
        out["direct"] = from_vector(g.direct, {B, M, C});
        out["via_mean"] = from_vector(g.via_mean, {B, M, C});
        out["via_spread"] = from_vector(g.via_spread, {B, M, C});
        out["d_raw"] = from_vector(g.d_raw, {C});
        out["d_k"] = from_vector(g.d_k, {C});
        return out;
      },
      py::arg("probs"), py::arg("upstream"), py::arg("k") = 1.0, py::arg("raw") = py::none(),
      "Gradients of a loss with dL/d(mixture) = upstream, per path and in total.");

  m.def(
      "decompose",
      [](const Array& members, bool normalize) {
        const auto batch = to_batch(members);
        return decomposition_dict(vge::decompose(batch.sample(0), batch.classes(), normalize));
      },
      py::arg("members"), py::arg("normalize") = false, "TU, AU and EU of one ensemble (M, C).");

  m.def(
      "epkl",
      [](const Array& members) {
        const auto batch = to_batch(members);
        return vge::epkl(batch.sample(0), batch.classes());
      },
      py::arg("members"));
  m.def(
      "epjs",
      [](const Array& members) {
        const auto batch = to_batch(members);
        return vge::epjs(batch.sample(0), batch.classes());
      },
      py::arg("members"));
  m.def(
      "vgmu",
      [](const std::vector<double>& mean, const std::vector<double>& stddev, double epsilon) {
        return vge::vgmu(mean, stddev, epsilon);
      },
      py::arg("mean"), py::arg("stddev"), py::arg("epsilon") = vge::kDefaultEpsilon);

  m.def(
      "score",
      [](const Array& probs, KSpec k, double snr_threshold, bool normalize, std::size_t threads) {
        const auto batch = to_batch(probs);
        vge::ScoreOptions opts;
        opts.gate = gate_params(k, batch.classes());
        opts.snr_threshold = snr_threshold;
        opts.normalize = normalize;
        opts.threads = threads;
        py::list rows;
        for (const auto& r : vge::score_batch(batch, opts)) {
          py::dict row;
          row["tu"] = r.plain.tu;
          row["au"] = r.plain.au;
          row["eu"] = r.plain.eu;
          row["tu_gated"] = r.gated.tu;
          row["au_gated"] = r.gated.au;
          row["eu_gated"] = r.gated.eu;
          row["epkl"] = r.epkl;
          row["epjs"] = r.epjs;
          row["snr"] = r.snr;
          row["vgmu"] = r.vgmu;
          row["decision"] = r.decision ? py::object(py::int_(*r.decision)) : py::object(py::none());
          row["region"] = std::string(vge::region_name(r.region));
          rows.append(row);
        }
        return rows;
      },
      py::arg("probs"), py::arg("k") = 1.0, py::arg("snr_threshold") = 1.0,
      py::arg("normalize") = false, py::arg("threads") = 1,
      "Per-sample report; decision is None when the ensemble abstains.");

  m.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) { return vge::spearman(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "kendall",
      [](const std::vector<double>& a, const std::vector<double>& b) { return vge::kendall(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "aucc", [](const std::vector<double>& s) { return vge::aucc(s); }, py::arg("scores"));
  m.def(
      "ece",
      [](const std::vector<double>& conf, const std::vector<int>& correct, std::size_t bins) {
        return vge::ece(conf, correct, bins);
      },
      py::arg("confidences"), py::arg("correct"), py::arg("bins") = 15);
  m.def(
      "roc_auc_fpr95",
      [](const std::vector<double>& id, const std::vector<double>& ood) {
        const auto r = vge::roc_auc_fpr95(id, ood);
        return py::make_tuple(r.auc, r.fpr_at_95_tpr);
      },
      py::arg("id_scores"), py::arg("ood_scores"), "(AUC, FPR at 95% TPR); OOD is the positive class.");

  m.def("run_axioms", []() {
    const auto result = vge::run_axiom_suite();
    py::list rows;
    for (const auto& r : result.rows) {
      py::dict row;
      row["case"] = r.case_name;
      row["ensemble"] = r.ensemble;
      row["k"] = r.k ? py::object(py::float_(*r.k)) : py::object(py::none());
      row["tu"] = r.tu;
      row["au"] = r.au;
      row["eu"] = r.eu;
      row["vgmu"] = r.vgmu;
      rows.append(row);
    }
    py::list checks;
    for (const auto& c : result.checks) {
      py::dict d;
      d["description"] = c.description;
      d["passed"] = c.passed;
      d["informational"] = c.informational;
      d["observed"] = c.observed;
      checks.append(d);
    }
    py::dict out;
    out["passed"] = result.all_passed();
    out["rows"] = rows;
    out["checks"] = checks;
    return out;
  });

  m.def(
      "gradcheck",
      [](std::size_t configurations, std::uint64_t seed, double tolerance) {
        vge::cli::GradcheckConfig cfg;
        cfg.configurations = configurations;
        cfg.seed = seed;
        cfg.tolerance = tolerance;
        return to_python(vge::cli::gradcheck_summary(vge::cli::random_gradchecks(cfg), tolerance));
      },
      py::arg("configurations") = 100, py::arg("seed") = 0, py::arg("tolerance") = 1e-5);

  m.def(
      "train_demo",
      [](std::size_t members, std::size_t classes, std::size_t epochs, double learning_rate,
         std::uint64_t seed, bool learn_k, bool identical_init) {
        vge::TrainConfig cfg;
        cfg.members = members;
        cfg.classes = classes;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        cfg.learn_k = learn_k;
        cfg.identical_init = identical_init;
        const auto result = vge::train_toy_ensemble(cfg);
        py::list history;
        for (const auto& rec : result.history) {
          py::dict d;
          d["epoch"] = rec.epoch;
          d["loss"] = rec.loss;
          d["accuracy"] = rec.accuracy;
          d["mean_eu"] = rec.mean_eu;
          d["max_abs_eu"] = rec.max_abs_eu;
          d["k"] = rec.k;
          history.append(d);
        }
        py::dict out;
        out["history"] = history;
        out["k"] = result.gate.k_values();
        out["learning_rate"] = result.learning_rate;
        return out;
      },
      py::arg("members") = 5, py::arg("classes") = 3, py::arg("epochs") = 200,
      py::arg("learning_rate") = 0.5, py::arg("seed") = 7, py::arg("learn_k") = true,
      py::arg("identical_init") = false);
}
