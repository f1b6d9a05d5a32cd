#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <iostream>

#include "pcm/checkpoint.hpp"
#include "pcm/cli/commands.hpp"
#include "pcm/drivers.hpp"
#include "pcm/error.hpp"
#include "pcm/metrics.hpp"
#include "pcm/protocol.hpp"
#include "pcm/shapley.hpp"
#include "pcm/synthetic.hpp"

namespace py = pybind11;
using namespace pcm;

namespace {

BinaryMask to_mask(const std::vector<bool>& bits, double threshold = 0.0) {
  BinaryMask m;
  m.threshold = threshold;
  for (bool b : bits) m.bits.push_back(b ? 1 : 0);
  return m;
}

std::vector<bool> from_mask(const BinaryMask& m) { return {m.bits.begin(), m.bits.end()}; }

Dataset make_dataset(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw ShapeError("x and y row counts differ");
  Dataset d;
  d.schema = DatasetSchema::generic(static_cast<std::size_t>(x.cols()));
  d.inputs = x;
  d.targets = y;
  d.split = Split::kTrain;
  return d;
}

py::dict history_dict(const TrainingHistory& h) {
  py::list epochs;
  for (const auto& e : h.epochs) {
    epochs.append(py::dict(py::arg("epoch") = e.epoch, py::arg("lr") = e.lr, py::arg("mse") = e.train.mse,
                           py::arg("l1_penalty") = e.train.l1_penalty, py::arg("total") = e.train.total,
                           py::arg("val_mse") = e.val_mse));
  }
  return py::dict(py::arg("initial_total") = h.initial.total, py::arg("final_total") = h.final.total,
                  py::arg("final_mse") = h.final.mse, py::arg("epochs") = epochs,
                  py::arg("warnings") = h.warnings);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-phase input-masking training for sparse neural emulators.";

  static py::exception<Error> base(m, "PcmError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(error_code_name(e.code())) + ": " + e.what();
      if (e.code() == ErrorCode::kShape || e.code() == ErrorCode::kValidation || e.code() == ErrorCode::kUsage) {
        PyErr_SetString(PyExc_ValueError, msg.c_str());
      } else {
        py::set_error(base, msg.c_str());
      }
    }
  });

  py::enum_<Mode>(m, "Mode").value("PREMASK", Mode::kPreMask).value("MASK", Mode::kMask);

  py::class_<Network>(m, "Network")
      .def_property_readonly("mode", [](const Network& n) { return n.mode; })
      .def_property_readonly("input_dim", &Network::input_dim)
      .def_property_readonly("parameter_count", &Network::parameter_count)
      .def_property_readonly("hidden_widths", [](const Network& n) { return architecture_of(n).hidden_widths; })
      .def_property_readonly("mask", [](const Network& n) -> std::optional<std::vector<bool>> {
        if (!n.mask) return std::nullopt;
        return from_mask(*n.mask);
      })
      .def_property_readonly("input_kernel", [](const Network& n) -> std::optional<Matrix> {
        if (!n.input_kernel) return std::nullopt;
        return n.input_kernel->weights;
      })
      .def("predict", [](const Network& n, const Matrix& x, std::size_t chunk) { return predict(n, x, chunk); },
           py::arg("x"), py::arg("chunk") = 8192)
      .def("loss", [](const Network& n, const Matrix& x, const Vector& y, double lambda) {
             const auto l = loss(n, x, y, lambda);
             return py::dict(py::arg("mse") = l.mse, py::arg("l1_penalty") = l.l1_penalty, py::arg("total") = l.total);
           }, py::arg("x"), py::arg("y"), py::arg("lam") = 0.0)
      .def("save", [](const Network& n, const std::filesystem::path& p, std::uint64_t seed) { save_checkpoint(p, n, seed); },
           py::arg("path"), py::arg("seed") = 0);

  m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p).network; });

  m.def("make_premask_network",
        [](std::size_t d, std::vector<std::size_t> hidden, double slope, std::uint64_t seed) {
          return make_premask_network(Architecture{d, std::move(hidden), slope}, seed);
        },
        py::arg("d"), py::arg("hidden") = std::vector<std::size_t>(9, 256), py::arg("negative_slope") = 0.3,
        py::arg("seed") = 42);
  m.def("make_mask_network",
        [](std::size_t d, const std::vector<bool>& mask, std::vector<std::size_t> hidden, double slope,
           std::uint64_t seed) {
          return make_mask_network(Architecture{d, std::move(hidden), slope}, to_mask(mask), seed);
        },
        py::arg("d"), py::arg("mask"), py::arg("hidden") = std::vector<std::size_t>(9, 256),
        py::arg("negative_slope") = 0.3, py::arg("seed") = 42);

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("lam", &TrainingConfig::lambda)
      .def_readwrite("epochs_premask", &TrainingConfig::epochs_premask)
      .def_readwrite("epochs_mask", &TrainingConfig::epochs_mask)
      .def_property("initial_lr", [](const TrainingConfig& c) { return c.lr_schedule.initial_lr; },
                    [](TrainingConfig& c, double v) { c.lr_schedule.initial_lr = v; })
      .def_readwrite("train_batch", &TrainingConfig::train_batch)
      .def_readwrite("eval_batch", &TrainingConfig::eval_batch)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_readwrite("n_thresholds", &TrainingConfig::n_thresholds)
      .def_readwrite("hidden_widths", &TrainingConfig::hidden_widths)
      .def_readwrite("negative_slope", &TrainingConfig::negative_slope)
      .def_readwrite("jobs", &TrainingConfig::jobs)
      .def("validate", &TrainingConfig::validate);

  m.def("train_premask",
        [](const Matrix& x, const Vector& y, const TrainingConfig& cfg) {
          py::gil_scoped_release release;
          auto t = train_premask(make_dataset(x, y), cfg);
          py::gil_scoped_acquire acquire;
          return py::make_tuple(t.network, history_dict(t.history));
        },
        py::arg("x"), py::arg("y"), py::arg("config"));
  m.def("train_mask",
        [](const Network& premask, const std::vector<bool>& mask, const Matrix& x, const Vector& y,
           const TrainingConfig& cfg) {
          py::gil_scoped_release release;
          auto t = train_mask(premask, to_mask(mask), make_dataset(x, y), cfg);
          py::gil_scoped_acquire acquire;
          return py::make_tuple(t.network, history_dict(t.history));
        },
        py::arg("premask"), py::arg("mask"), py::arg("x"), py::arg("y"), py::arg("config"));

  m.def("extract_mask_vector", [](const Network& n) { return extract_mask_vector(n).values; });
  m.def("binarize", [](const std::vector<double>& v, double t) { return from_mask(binarize(MaskVector{v}, t)); },
        py::arg("mask_vector"), py::arg("threshold"));
  m.def("build_threshold_grid",
        [](const std::vector<double>& v, std::size_t n) {
          const auto g = build_threshold_grid(MaskVector{v}, n);
          return py::make_tuple(g.thresholds, g.p70);
        },
        py::arg("mask_vector"), py::arg("n") = 20);

  m.def("sweep_thresholds",
        [](const Network& premask, const Matrix& x, const Vector& y, const TrainingConfig& cfg) {
          SweepResult sweep;
          {
            py::gil_scoped_release release;
            sweep = sweep_thresholds(premask, make_dataset(x, y), cfg);
          }
          const auto best = select_best(sweep);
          py::list runs;
          for (const auto& r : sweep.records) {
            runs.append(py::dict(py::arg("threshold") = r.threshold, py::arg("mask") = from_mask(r.mask),
                                 py::arg("selected_count") = r.selected_count,
                                 py::arg("final_train_loss") = r.final_train_loss, py::arg("error") = r.error,
                                 py::arg("network") = r.error ? py::none() : py::cast(r.network)));
          }
          return py::dict(py::arg("mask_vector") = sweep.mask_vector.values, py::arg("p70") = sweep.grid.p70,
                          py::arg("runs") = runs, py::arg("best_index") = best.index);
        },
        py::arg("premask"), py::arg("x"), py::arg("y"), py::arg("config"));

  m.def("shapley_exact",
        [](const Network& n, const Vector& x, const Matrix& bg) {
          return shapley_exact(as_predictor(n), std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), bg);
        },
        py::arg("network"), py::arg("x"), py::arg("background"));
  m.def("shapley_exact",
        [](const Predictor& f, const Vector& x, const Matrix& bg) {
          return shapley_exact(f, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), bg);
        },
        py::arg("model"), py::arg("x"), py::arg("background"));
  m.def("shapley_sampled",
        [](const Network& n, const Vector& x, const Matrix& bg, std::size_t perms, std::uint64_t seed) {
          const auto e = shapley_sampled(as_predictor(n), std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                         bg, perms, seed);
          return py::make_tuple(e.values, e.standard_error);
        },
        py::arg("network"), py::arg("x"), py::arg("background"), py::arg("n_permutations") = 64,
        py::arg("seed") = 42);
  m.def("mean_abs_attribution",
        [](const Network& n, const Matrix& samples, const Matrix& bg, std::size_t perms, std::uint64_t seed, bool exact) {
          AttributionOptions o;
          o.method = exact ? ShapleyMethod::kExact : ShapleyMethod::kSampled;
          o.permutations = perms;
          o.seed = seed;
          py::gil_scoped_release release;
          return mean_abs_attribution(as_predictor(n), samples, bg, o);
        },
        py::arg("network"), py::arg("samples"), py::arg("background"), py::arg("n_permutations") = 64,
        py::arg("seed") = 42, py::arg("exact") = false);

  m.def("r2",
        [](const Vector& pred, const Vector& y) { return r2(pred, y).r2; },
        py::arg("predictions"), py::arg("targets"));
  m.def("driver_recovery",
        [](const std::vector<bool>& selected, const std::vector<std::size_t>& truth) {
          const auto r = driver_recovery(to_mask(selected), truth);
          return py::make_tuple(r.precision, r.recall);
        },
        py::arg("selected"), py::arg("truth"));
  m.def("jaccard",
        [](const std::vector<bool>& a, const std::vector<bool>& b) { return compare_masks(to_mask(a), to_mask(b)).jaccard; },
        py::arg("a"), py::arg("b"));

  m.def("generate_synthetic",
        [](const std::string& mechanism, std::size_t d, std::size_t n, std::vector<std::size_t> drivers,
           double spurious_corr, double noise_std, int shift, std::uint64_t seed) {
          SyntheticSpec s;
          s.mechanism = parse_mechanism(mechanism);
          s.d = d;
          s.n_samples = n;
          s.driver_set = std::move(drivers);
          s.spurious_corr = spurious_corr;
          s.noise_std = noise_std;
          s.shift = shift;
          s.seed = seed;
          s.validate();
          auto data = generate_synthetic(s);
          return py::make_tuple(data.inputs, data.targets, data.truth_drivers.value_or(std::vector<std::size_t>{}));
        },
        py::arg("mechanism"), py::arg("d"), py::arg("n_samples"), py::arg("drivers") = std::vector<std::size_t>{},
        py::arg("spurious_corr") = 0.8, py::arg("noise_std") = 0.1, py::arg("shift") = 0, py::arg("seed") = 42);

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          py::gil_scoped_release release;
          return cli::run_cli(args, std::cout, std::cerr);
        },
        py::arg("args"));

  m.attr("__version__") = cli::tool_version();
}
