#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "fedssta/compare.hpp"
#include "fedssta/config.hpp"
#include "fedssta/experiment.hpp"
#include "fedssta/fl.hpp"
#include "fedssta/hog.hpp"
#include "fedssta/metrics.hpp"
#include "fedssta/synth.hpp"
#include "fedssta/tensor.hpp"

namespace py = pybind11;
using namespace fedssta;

namespace {

Frame frame_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array (H x W)");
  Frame f = Frame::zeros(static_cast<std::size_t>(arr.shape(0)),
                         static_cast<std::size_t>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + f.pixels(), f.data.begin());
  return f;
}

py::array_t<double> vector_to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

HogConfig hog_config_from_kwargs(std::size_t cell_size, std::size_t bins,
                                 std::size_t block_cells, std::size_t block_stride,
                                 double eta, bool signed_orientation) {
  HogConfig cfg;
  cfg.cell_size = cell_size;
  cfg.bins = bins;
  cfg.block_cells = block_cells;
  cfg.block_stride = block_stride;
  cfg.eta = eta;
  cfg.signed_orientation = signed_orientation;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "federated drowsiness-detection simulator core";

  m.def(
      "hog_descriptor",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& frame,
         std::size_t cell_size, std::size_t bins, std::size_t block_cells,
         std::size_t block_stride, double eta, bool signed_orientation) {
        Frame f = frame_from_array(frame);
        HogDescriptor d = hog_descriptor(
            f, hog_config_from_kwargs(cell_size, bins, block_cells, block_stride, eta,
                                      signed_orientation));
        return vector_to_array(d.values);
      },
      py::arg("frame"), py::arg("cell_size") = 8, py::arg("bins") = 9,
      py::arg("block_cells") = 4, py::arg("block_stride") = 1, py::arg("eta") = 1e-5,
      py::arg("signed_orientation") = false,
      "Dense HoG descriptor of a 2-d intensity array (values in [0, 1]).");

  m.def(
      "softmax",
      [](const std::vector<double>& v, double tau) {
        return vector_to_array(softmax(std::span<const double>(v), tau));
      },
      py::arg("values"), py::arg("tau") = 1.0);

  m.def(
      "cosine",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine(std::span<const double>(a), std::span<const double>(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "gsc_report",
      [](const std::vector<std::vector<double>>& grads, double theta, double tau) {
        SimilarityReport rep = gsc_weights(grads, theta, tau);
        py::dict out;
        py::array_t<double> matrix({rep.count, rep.count});
        std::copy(rep.matrix.begin(), rep.matrix.end(), matrix.mutable_data());
        out["matrix"] = matrix;
        out["avg"] = vector_to_array(rep.avg);
        std::vector<bool> valid(rep.valid.begin(), rep.valid.end());
        out["valid"] = valid;
        out["delta"] = vector_to_array(rep.delta);
        out["none_valid"] = rep.none_valid;
        return out;
      },
      py::arg("gradients"), py::arg("theta") = 0.0, py::arg("tau") = 1.0,
      "Pairwise-similarity report and aggregation weights for a list of flat gradients.");

  m.def(
      "recover_gradient",
      [](const std::vector<double>& w_new, const std::vector<double>& w_prev, double mu) {
        return vector_to_array(recover_gradient(w_new, w_prev, mu));
      },
      py::arg("w_new"), py::arg("w_prev"), py::arg("mu"));

  m.def(
      "generate_sequence",
      [](std::uint64_t seed, std::size_t participant, std::size_t cls, std::size_t index,
         std::size_t frame_size, std::size_t sequence_length, double noise_sigma,
         double heterogeneity) {
        SstaConfig model;
        model.frame_height = frame_size;
        model.frame_width = frame_size;
        model.sequence_length = sequence_length;
        Rng master(seed);
        ParticipantProfile prof = make_participant(participant, heterogeneity, master);
        FrameSequence seq = gen_sequence(prof, cls, index, model, noise_sigma, master);
        py::array_t<double> out({sequence_length, frame_size, frame_size});
        double* dst = out.mutable_data();
        for (const Frame& f : seq.frames) dst = std::copy(f.data.begin(), f.data.end(), dst);
        return out;
      },
      py::arg("seed"), py::arg("participant"), py::arg("cls"), py::arg("index") = 0,
      py::arg("frame_size") = 16, py::arg("sequence_length") = 5,
      py::arg("noise_sigma") = 0.02, py::arg("heterogeneity") = 1.0,
      "Synthetic frame sequence as an (L, H, W) array.");

  m.def(
      "metrics_from_counts",
      [](const std::vector<std::vector<std::size_t>>& counts) {
        std::size_t n = counts.size();
        ConfusionMatrix cm(n);
        for (std::size_t t = 0; t < n; ++t) {
          if (counts[t].size() != n) throw std::invalid_argument("confusion matrix must be square");
          for (std::size_t p = 0; p < n; ++p)
            for (std::size_t k = 0; k < counts[t][p]; ++k) cm.add(t, p);
        }
        py::dict out;
        out["accuracy"] = accuracy(cm);
        out["precision"] = precision(cm).value;
        out["recall"] = recall(cm).value;
        return out;
      },
      py::arg("counts"), "accuracy / macro precision / macro recall from a nested count list");

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& out_dir) {
        std::vector<ExpandedRun> runs = parse_experiment_json(config_json, "<string>");
        py::list results;
        for (const ExpandedRun& run : runs) {
          ExperimentResult res = run_experiment(run.config);
          if (!out_dir.empty()) {
            std::filesystem::path dir =
                run.name.empty() ? std::filesystem::path(out_dir)
                                 : std::filesystem::path(out_dir) / run.name;
            write_experiment_outputs(dir, res);
          }
          py::dict d;
          d["name"] = run.name;
          d["rounds_completed"] = res.rounds.size();
          d["stalled_rounds"] = res.stalled_rounds;
          d["val_accuracy"] = res.final_val.accuracy;
          d["test_accuracy"] = res.final_test_overall.accuracy;
          d["test_trained_accuracy"] = res.final_test_trained.accuracy;
          d["test_untrained_accuracy"] = res.final_test_untrained.accuracy;
          py::list acc;
          for (const RoundLog& log : res.rounds) acc.append(log.val_accuracy);
          d["round_val_accuracy"] = acc;
          results.append(d);
        }
        return results;
      },
      py::arg("config_json"), py::arg("out_dir") = std::string(),
      "Run experiments from a JSON config string; optionally write the run artifacts.");

  m.attr("__version__") = "0.1.0";
}
