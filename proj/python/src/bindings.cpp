#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "napts/cadam.hpp"
#include "napts/dataset.hpp"
#include "napts/driver.hpp"
#include "napts/globalization.hpp"
#include "napts/metrics.hpp"
#include "napts/model.hpp"
#include "napts/partition.hpp"

namespace py = pybind11;
using namespace napts;

namespace {

py::array_t<double> to_array(const Tensor& t) {
  py::array_t<double> a({t.rows(), t.cols()});
  auto out = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out(i, j) = t.at(i, j);
  return a;
}

Tensor from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const std::size_t r = a.shape(0), c = a.shape(1);
  return Tensor({r, c}, std::vector<double>(a.data(), a.data() + r * c));
}

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["k"] = r.k;
  d["epoch"] = r.epoch;
  d["batch"] = r.batch;
  d["loss"] = r.loss;
  d["val_acc"] = r.val_acc;
  d["delta"] = r.delta;
  d["rho_c"] = r.rho_c;
  d["rho_h"] = r.rho_h;
  d["accepted"] = r.accepted;
  d["rejections"] = r.rejections;
  d["t_phase1"] = r.t_phase1;
  d["t_phase2"] = r.t_phase2;
  d["t_phase3"] = r.t_phase3;
  return d;
}

RunRecord record_from(const py::dict& d) {
  RunRecord r;
  r.k = d["k"].cast<std::size_t>();
  r.epoch = d["epoch"].cast<std::size_t>();
  r.batch = d["batch"].cast<std::size_t>();
  r.loss = d["loss"].cast<double>();
  r.val_acc = d["val_acc"].cast<double>();
  r.delta = d["delta"].cast<double>();
  r.rho_c = d["rho_c"].cast<double>();
  r.rho_h = d["rho_h"].cast<double>();
  r.accepted = d["accepted"].cast<bool>();
  r.rejections = d["rejections"].cast<std::size_t>();
  r.t_phase1 = d["t_phase1"].cast<double>();
  r.t_phase2 = d["t_phase2"].cast<double>();
  r.t_phase3 = d["t_phase3"].cast<double>();
  return r;
}

Batch batch_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                 std::vector<int> labels) {
  Batch b;
  b.inputs = from_array(x);
  b.labels = std::move(labels);
  return b;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-monotone additively preconditioned trust-region training";

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("name", &Dataset::name)
      .def_readonly("features", &Dataset::features)
      .def_readonly("classes", &Dataset::classes)
      .def_property_readonly("train_inputs", [](const Dataset& d) { return to_array(d.train_inputs); })
      .def_readonly("train_labels", &Dataset::train_labels)
      .def_property_readonly("val_inputs", [](const Dataset& d) { return to_array(d.val_inputs); })
      .def_readonly("val_labels", &Dataset::val_labels)
      .def_readonly("train_indices", &Dataset::train_indices)
      .def_readonly("val_indices", &Dataset::val_indices);

  m.def("generate_dataset", &generate_dataset, py::arg("kind"), py::arg("size"),
        py::arg("seed") = 0);

  py::class_<SequentialNet>(m, "Net")
      .def(py::init([](std::vector<std::size_t> widths, const std::string& activation,
                       const std::string& loss, std::size_t blocks) {
             return SequentialNet::mlp(widths, parse_activation(activation), parse_loss(loss),
                                       blocks);
           }),
           py::arg("widths"), py::arg("activation") = "tanh", py::arg("loss") = "ce",
           py::arg("blocks") = 1)
      .def_property_readonly("parameter_count", &SequentialNet::parameter_count)
      .def_property_readonly("block_count", &SequentialNet::block_count)
      .def("block_offset", &SequentialNet::block_offset)
      .def("block_parameter_count", &SequentialNet::block_parameter_count)
      .def("initial_parameters", &SequentialNet::initial_parameters, py::arg("seed") = 0)
      .def("predict",
           [](const SequentialNet& net, const std::vector<double>& theta,
              const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
             return to_array(net.predict(theta, from_array(x)));
           })
      .def("loss",
           [](const SequentialNet& net, const std::vector<double>& theta,
              const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
              std::vector<int> labels) { return net.loss(theta, batch_from(x, labels)); })
      .def("value_and_gradient",
           [](const SequentialNet& net, const std::vector<double>& theta,
              const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
              std::vector<int> labels) {
             const Evaluation e = value_and_gradient(net, theta, batch_from(x, labels));
             return py::make_tuple(e.loss, e.gradient);
           })
      .def("block_gradients",
           [](const SequentialNet& net, const std::vector<double>& theta,
              const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
              std::vector<int> labels, std::optional<std::vector<double>> local) {
             // Frozen-cache block gradients at theta, or at `local` if given.
             const auto cache = evaluate_with_cache(net, theta, batch_from(x, labels));
             const ParamPartition p = net.partition();
             std::vector<std::vector<double>> out;
             for (std::size_t d = 0; d < net.block_count(); ++d) {
               const auto theta_d = p.restrict(local ? *local : theta, d);
               out.push_back(local_block_gradient(net, *cache, d, theta_d));
             }
             return out;
           },
           py::arg("theta"), py::arg("inputs"), py::arg("labels"), py::arg("at") = py::none())
      .def("accuracy",
           [](const SequentialNet& net, const std::vector<double>& theta,
              const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
              std::vector<int> labels) { return net.accuracy(theta, from_array(x), labels); })
      .def("__repr__", &SequentialNet::describe);

  py::class_<ParamPartition>(m, "ParamPartition")
      .def(py::init<std::vector<std::vector<std::size_t>>, std::size_t>())
      .def_property_readonly("cell_count", &ParamPartition::cell_count)
      .def_property_readonly("total_size", &ParamPartition::total_size)
      .def("cell", &ParamPartition::cell)
      .def("restrict", [](const ParamPartition& p, const std::vector<double>& theta,
                          std::size_t d) { return p.restrict(theta, d); })
      .def("prolong", [](const ParamPartition& p, const std::vector<double>& local,
                         std::size_t d) { return p.prolong(local, d); })
      .def("lift_sum", [](const ParamPartition& p, const std::vector<std::vector<double>>& s) {
        return p.lift_sum(s);
      });

  m.def("clip_step", [](const std::vector<double>& raw, double bound) {
    return clip_step(raw, bound);
  });
  m.def("model_decrease", [](const std::vector<double>& g, const std::vector<double>& s) {
    return model_decrease(g, s);
  });
  m.def(
      "agreement_ratios",
      [](double f_k, double f_trial, double f_ref, double pred, double sigma_h) -> py::object {
        const auto r = agreement_ratios(f_k, f_trial, f_ref, pred, sigma_h);
        if (!r) return py::none();
        return py::make_tuple(r->current, r->historical, r->combined);
      },
      py::arg("f_k"), py::arg("f_trial"), py::arg("f_ref"), py::arg("pred"), py::arg("sigma_h"));
  m.def("radius_update", [](double delta, double rho) {
    return radius_update(delta, rho, NtrConstants{});
  });
  m.def("correction_candidate", [](const std::vector<double>& g, const std::vector<double>& s,
                                   double delta, double alpha, double beta) {
    return correction_candidate(g, s, delta, {alpha, beta});
  });

  m.def(
      "train",
      [](const std::string& method, const std::string& dataset, std::size_t size,
         std::vector<std::size_t> hidden, const std::string& activation, std::size_t subdomains,
         std::size_t inner_iters, std::optional<std::size_t> nu, double delta0, double lr,
         std::size_t batch_size, std::size_t epochs, std::uint64_t seed, bool full_batch,
         bool sequential, bool zero_timings) {
        MethodConfig config;
        config.method = parse_method(method);
        config.subdomains = subdomains;
        config.inner_iterations = inner_iters;
        if (nu) config.constants.memory = *nu;
        config.constants.delta0 = delta0;
        config.adam.learning_rate = lr;
        config.parallel_subdomains = !sequential;
        config.seed = seed;
        config.validate();
        const Dataset data = load_dataset(dataset, size, seed);
        std::vector<std::size_t> widths{data.features};
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(data.classes);
        const SequentialNet net =
            SequentialNet::mlp(widths, parse_activation(activation), LossKind::cross_entropy,
                               config.uses_decomposition() ? subdomains : 1);
        TrainingOptions options;
        options.epochs = epochs;
        options.batch_size = batch_size;
        options.full_batch = full_batch;
        options.record_timings = !zero_timings;
        TrainingResult result;
        {
          py::gil_scoped_release release;
          result = run_training(net, config, data, options);
        }
        py::list records;
        for (const RunRecord& r : result.records) records.append(record_dict(r));
        py::dict out;
        out["records"] = records;
        out["status"] = to_string(result.status);
        out["message"] = result.message;
        out["theta"] = result.theta;
        return out;
      },
      py::arg("method") = "napts", py::arg("dataset") = "moons", py::arg("size") = 1000,
      py::arg("hidden") = std::vector<std::size_t>{16, 16}, py::arg("activation") = "tanh",
      py::arg("subdomains") = 3, py::arg("inner_iters") = 3, py::arg("nu") = py::none(),
      py::arg("delta0") = 0.1, py::arg("lr") = 1e-3, py::arg("batch_size") = 100,
      py::arg("epochs") = 50, py::arg("seed") = 0, py::arg("full_batch") = false,
      py::arg("sequential") = false, py::arg("zero_timings") = false);

  m.def("format_metrics_csv", [](const py::list& records) {
    std::vector<RunRecord> rs;
    for (const auto& r : records) rs.push_back(record_from(r.cast<py::dict>()));
    return format_metrics_csv(rs);
  });
}
