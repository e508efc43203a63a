// Copyright 2026 The vmfmil Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "vmfmil/background.hpp"
#include "vmfmil/col.hpp"
#include "vmfmil/dataio.hpp"
#include "vmfmil/directional.hpp"
#include "vmfmil/eval.hpp"

namespace py = pybind11;
using namespace vmfmil;

namespace {

using BoxArray = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

Box to_box(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

BoxArray boxes_to_array(const std::vector<Box>& boxes) {
  BoxArray out(static_cast<Eigen::Index>(boxes.size()), 4);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) << boxes[i].x_min, boxes[i].y_min, boxes[i].x_max,
        boxes[i].y_max;
  }
  return out;
}

std::vector<Box> array_to_boxes(const BoxArray& a) {
  std::vector<Box> out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back({a(i, 0), a(i, 1), a(i, 2), a(i, 3)});
  return out;
}

ColModel parse_model(const std::string& name, double sigma, double beta) {
  if (name == "vmf") return ColModel::vmf();
  if (name == "gaussian") return ColModel::gaussian(sigma);
  if (name == "tukey-gaussian") return ColModel::tukey_gaussian(beta, sigma);
  throw DomainError("unknown model '" + name + "'");
}

py::dict run_col_py(const std::vector<ProposalSet>& support, const BackgroundModel& background,
                    std::optional<double> kappa, const std::string& kappa_rule, int em_iters,
                    double tol, const std::string& model, double sigma, double tukey_beta,
                    const std::string& init, std::uint64_t seed) {
  ColConfig config;
  config.kappa_init = kappa;
  config.kappa_rule =
      kappa_rule == "constant" ? KappaRule::constant(kappa.value_or(0.0)) : KappaRule::parse(kappa_rule);
  config.max_iters = em_iters;
  config.convergence_tol = tol;
  config.model = parse_model(model, sigma, tukey_beta);
  if (init == "random") {
    config.init = {ColInit::Kind::random, seed};
  } else if (init != "prototypical") {
    throw DomainError("unknown init '" + init + "'");
  }
  ColResult r;
  {
    py::gil_scoped_release release;
    r = run_col(config, support, background);
  }
  py::dict out;
  out["theta"] = r.theta;
  out["kappa"] = r.kappa_final;
  out["top_index"] = r.top_index;
  out["soft_labels"] = r.soft_labels;
  out["loglik_trace"] = r.loglik_trace;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vMF multiple-instance learning core";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", data_error.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", error.ptr());
  py::register_exception<DegenerateResultant>(m, "DegenerateResultant", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", error.ptr());

  // directional
  m.def("log_bessel_i", &log_bessel_i, py::arg("nu"), py::arg("x"));
  m.def("log_normalizer", &log_normalizer, py::arg("d"), py::arg("kappa"));
  m.def("bessel_ratio", &bessel_ratio, py::arg("d"), py::arg("kappa"));
  m.def(
      "estimate_kappa",
      [](double rbar, int d, const std::string& rule) {
        return estimate_kappa(rbar, d, KappaRule::parse(rule)).kappa;
      },
      py::arg("rbar"), py::arg("d"), py::arg("rule") = "exact");
  m.def(
      "fit_vmf",
      [](const Matrix& points, std::optional<std::vector<double>> weights,
         const std::string& rule) {
        const std::vector<double> w = weights.value_or(std::vector<double>{});
        const VmfFit fit = fit_vmf(points, w, KappaRule::parse(rule));
        return py::make_tuple(fit.params.theta, fit.params.kappa);
      },
      py::arg("points"), py::arg("weights") = py::none(), py::arg("rule") = "exact");
  m.def(
      "sample_vmf",
      [](const Vector& theta, double kappa, int n, std::uint64_t seed) {
        Rng rng(seed);
        return sample_vmf({theta, kappa}, n, rng);
      },
      py::arg("theta"), py::arg("kappa"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "vmf_log_density",
      [](const Vector& theta, double kappa, const Vector& x) {
        return vmf_log_density({theta, kappa}, x);
      },
      py::arg("theta"), py::arg("kappa"), py::arg("x"));

  // data
  py::class_<ProposalSet>(m, "ProposalSet")
      .def(py::init([](std::string image_id, const BoxArray& boxes, const Matrix& features,
                       std::optional<Vector> objectness) {
             ProposalSet set{std::move(image_id), array_to_boxes(boxes), features, objectness};
             set.validate();
             return set;
           }),
           py::arg("image_id"), py::arg("boxes"), py::arg("features"),
           py::arg("objectness") = py::none())
      .def_readonly("image_id", &ProposalSet::image_id)
      .def_property_readonly("boxes", [](const ProposalSet& s) { return boxes_to_array(s.boxes); })
      .def_readonly("features", &ProposalSet::features)
      .def_readonly("objectness", &ProposalSet::objectness)
      .def("__len__", &ProposalSet::size)
      .def("__repr__", [](const ProposalSet& s) {
        return "<ProposalSet '" + s.image_id + "' P=" + std::to_string(s.size()) +
               " d=" + std::to_string(s.dim()) + ">";
      });

  m.def("read_proposals",
        [](const std::filesystem::path& path) { return read_proposals(path); }, py::arg("path"));
  m.def("write_proposals",
        [](const std::vector<ProposalSet>& sets, const std::filesystem::path& path) {
          write_proposals(sets, path);
        },
        py::arg("sets"), py::arg("path"));
  m.def(
      "synthetic_world",
      [](int d, int num_classes, int num_base_classes, double kappa_class,
         double kappa_background, int proposals, double full_image_mix, int images_per_class,
         std::uint64_t seed) {
        SyntheticWorldSpec spec;
        spec.d = d;
        spec.num_classes = num_classes;
        spec.num_base_classes = num_base_classes;
        spec.kappa_class = kappa_class;
        spec.kappa_background = kappa_background;
        spec.proposals = proposals;
        spec.full_image_mix = full_image_mix;
        spec.seed = seed;
        spec.validate();
        SyntheticWorld world = generate_synthetic(spec, images_per_class);
        py::dict labels;
        for (const auto& r : world.index.images) labels[py::str(r.image_id)] = r.labels;
        py::dict out;
        out["proposals"] = world.proposals;
        out["labels"] = labels;
        out["positives"] = world.truth.positives;
        out["class_directions"] = world.truth.class_directions;
        out["background_direction"] = world.truth.background_direction;
        out["base_classes"] = world.index.base_classes;
        out["novel_classes"] = world.index.novel_classes;
        return out;
      },
      py::arg("d") = 16, py::arg("num_classes") = 10, py::arg("num_base_classes") = 5,
      py::arg("kappa_class") = 50.0, py::arg("kappa_background") = 5.0,
      py::arg("proposals") = 20, py::arg("full_image_mix") = 0.6,
      py::arg("images_per_class") = 20, py::arg("seed") = 0);

  // background and COL
  py::class_<BackgroundModel>(m, "BackgroundModel")
      .def_static("uniform", &BackgroundModel::uniform)
      .def_static(
          "vmf", [](const Vector& theta, double kappa) { return BackgroundModel::vmf({theta, kappa}); },
          py::arg("theta"), py::arg("kappa"))
      .def_static("objectness", &BackgroundModel::objectness, py::arg("alpha"))
      .def_property_readonly("name", &BackgroundModel::name)
      .def("log_scores", [](const BackgroundModel& bg, const ProposalSet& image) {
        return bg_log_scores(bg, image);
      });

  m.def("run_col", &run_col_py, py::arg("support"),
        py::arg("background") = BackgroundModel::uniform(), py::arg("kappa") = py::none(),
        py::arg("kappa_rule") = "constant", py::arg("em_iters") = 8, py::arg("tol") = 1e-6,
        py::arg("model") = "vmf", py::arg("sigma") = 0.1, py::arg("tukey_beta") = 0.5,
        py::arg("init") = "prototypical", py::arg("seed") = 0);
  m.def(
      "score_query",
      [](const Vector& theta, double kappa, const BackgroundModel& bg, const ProposalSet& query,
         double lambda) {
        const QueryScores s = score_query(theta, kappa, bg, lambda, query);
        return py::make_tuple(s.logit, s.probability);
      },
      py::arg("theta"), py::arg("kappa"), py::arg("background"), py::arg("query"),
      py::arg("lambda_") = 1.0);

  // boxes
  m.def(
      "iou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
        return iou(to_box(a), to_box(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "nms",
      [](const BoxArray& boxes, const std::vector<double>& scores, double iou_thresh) {
        return nms(array_to_boxes(boxes), scores, iou_thresh);
      },
      py::arg("boxes"), py::arg("scores"), py::arg("iou_thresh") = 0.5);

#ifdef VMFMIL_VERSION
  m.attr("__version__") = VMFMIL_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
