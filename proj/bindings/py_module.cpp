#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opkit/burgers.hpp"
#include "opkit/checkpoint.hpp"
#include "opkit/darcy.hpp"
#include "opkit/dataset.hpp"
#include "opkit/fft.hpp"
#include "opkit/grf.hpp"
#include "opkit/grid.hpp"
#include "opkit/loss.hpp"
#include "opkit/model.hpp"
#include "opkit/processor.hpp"
#include "opkit/rng.hpp"
#include "opkit/tensor.hpp"
#include "opkit/trainer.hpp"

namespace py = pybind11;
using cd = std::complex<double>;
using opkit::Shape;
using opkit::Tensor;
namespace data = opkit::data;
namespace fft = opkit::fft;
namespace grid = opkit::grid;
namespace models = opkit::models;
namespace train = opkit::train;

namespace {

Shape shape_of(const py::array& a) {
  Shape s;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) s.push_back(a.shape(i));
  return s;
}

Tensor to_tensor(const py::array_t<double, py::array::c_style |
                                               py::array::forcecast>& a) {
  std::vector<double> v(a.data(), a.data() + a.size());
  return Tensor::from_values(shape_of(a), std::move(v));
}

Tensor to_ctensor(const py::array_t<cd, py::array::c_style |
                                            py::array::forcecast>& a) {
  std::vector<cd> v(a.data(), a.data() + a.size());
  return Tensor::from_complex(shape_of(a), std::move(v));
}

py::array from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> dims(t.shape().begin(), t.shape().end());
  if (t.is_real()) {
    py::array_t<double> out(dims);
    std::copy(t.rdata(), t.rdata() + t.numel(), out.mutable_data());
    return out;
  }
  py::array_t<cd> out(dims);
  std::copy(t.cdata(), t.cdata() + t.numel(), out.mutable_data());
  return out;
}

data::GrfSpec grf_spec(double alpha, double tau, double sigma) {
  data::GrfSpec spec;
  spec.alpha = alpha;
  spec.tau = tau;
  spec.sigma = sigma;
  return spec;
}

struct PyFno {
  models::FnoModel model;
  data::DataProcessor proc{{false, false, false, std::nullopt}};

  py::array forward(const py::array_t<double, py::array::c_style |
                                                  py::array::forcecast>& x,
                    std::optional<std::vector<std::int64_t>> output_sizes) {
    std::optional<Shape> sizes;
    if (output_sizes) sizes = Shape(output_sizes->begin(), output_sizes->end());
    grid::GridFunction in = grid::make_grid(to_tensor(x));
    return from_tensor(train::predict(model, in, proc, sizes).data);
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "operator-learning toolkit: spectral and graph neural operators "
            "with their own autodiff, FFT, and PDE data generators";

  m.def(
      "sample_grf_1d",
      [](std::int64_t n, double alpha, double tau, double sigma,
         std::uint64_t seed) {
        opkit::Rng rng(seed);
        return from_tensor(data::sample_grf_1d(n, grf_spec(alpha, tau, sigma),
                                               rng));
      },
      py::arg("n"), py::arg("alpha") = 2.0, py::arg("tau") = 3.0,
      py::arg("sigma") = 1.0, py::arg("seed") = 0,
      "Periodic 1-D Gaussian random field with spectral density "
      "sigma^2 (4 pi^2 k^2 + tau^2)^(-alpha).");

  m.def(
      "sample_grf_2d",
      [](std::int64_t n, double alpha, double tau, double sigma,
         std::uint64_t seed) {
        opkit::Rng rng(seed);
        return from_tensor(data::sample_grf_2d(n, grf_spec(alpha, tau, sigma),
                                               rng));
      },
      py::arg("n"), py::arg("alpha") = 2.0, py::arg("tau") = 3.0,
      py::arg("sigma") = 1.0, py::arg("seed") = 0,
      "Periodic 2-D Gaussian random field on an n-by-n grid.");

  m.def(
      "darcy_coefficient",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             g,
         double high, double low) {
        return from_tensor(data::darcy_coefficient(to_tensor(g), high, low));
      },
      py::arg("field"), py::arg("high") = 12.0, py::arg("low") = 3.0,
      "Thresholds a field into a two-level permeability coefficient.");

  m.def(
      "solve_darcy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             a,
         std::optional<py::array_t<double, py::array::c_style |
                                               py::array::forcecast>>
             f) {
        if (f) return from_tensor(data::solve_darcy(to_tensor(a),
                                                    to_tensor(*f)));
        return from_tensor(data::solve_darcy(to_tensor(a)));
      },
      py::arg("coefficient"), py::arg("forcing") = py::none(),
      "Finite-volume Darcy solve with zero boundary values; the forcing "
      "defaults to one.");

  m.def(
      "solve_burgers",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             u0,
         double nu, double t_final) {
        return from_tensor(data::solve_burgers(to_tensor(u0), nu, t_final));
      },
      py::arg("u0"), py::arg("nu"), py::arg("t_final"),
      "Pseudo-spectral viscous Burgers integration on a periodic grid.");

  m.def(
      "generate_dataset",
      [](const std::string& kind, std::int64_t count, std::int64_t resolution,
         std::uint64_t seed, const std::string& path) {
        data::GenerateSpec spec;
        if (kind == "darcy")
          spec.kind = data::DatasetKind::Darcy;
        else if (kind == "burgers")
          spec.kind = data::DatasetKind::Burgers;
        else
          throw std::invalid_argument("unknown dataset kind " + kind);
        spec.count = count;
        spec.resolution = resolution;
        spec.seed = seed;
        data::generate_dataset(spec, path);
      },
      py::arg("kind"), py::arg("count"), py::arg("resolution"),
      py::arg("seed"), py::arg("path"),
      "Writes a dataset of input/solution pairs to a .nodf file.");

  m.def(
      "read_dataset",
      [](const std::string& path) {
        data::DatasetFile file = data::read_nodf(path);
        py::dict meta, tensors;
        for (const auto& [k, v] : file.metadata) meta[py::str(k)] = v;
        for (const auto& [k, t] : file.tensors)
          tensors[py::str(k)] = from_tensor(t);
        py::dict out;
        out["metadata"] = meta;
        out["tensors"] = tensors;
        return out;
      },
      py::arg("path"), "Loads a .nodf dataset into numpy arrays.");

  m.def(
      "rfftn",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             x,
         int spatial_dims) {
        return from_tensor(fft::rfftn(to_tensor(x), spatial_dims));
      },
      py::arg("x"), py::arg("spatial_dims"),
      "Unnormalized real-input FFT over the trailing spatial axes; the last "
      "axis holds floor(n/2)+1 bins.");

  m.def(
      "irfftn",
      [](const py::array_t<cd, py::array::c_style | py::array::forcecast>& s,
         const std::vector<std::int64_t>& sizes) {
        return from_tensor(fft::irfftn(to_ctensor(s),
                                       Shape(sizes.begin(), sizes.end())));
      },
      py::arg("spectrum"), py::arg("sizes"),
      "Inverse of rfftn, normalized by the grid size.");

  m.def(
      "relative_l2",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>&
             target) {
        return train::relative_lp_loss(to_tensor(pred), to_tensor(target), 2.0)
            .rat(0);
      },
      py::arg("pred"), py::arg("target"),
      "Batch-mean relative L2 distance; inputs are [batch, ...] arrays.");

  py::class_<PyFno>(m, "Fno")
      .def(py::init([](int d, std::int64_t in_channels,
                       std::int64_t out_channels,
                       std::int64_t hidden_channels, std::int64_t n_layers,
                       const std::vector<std::int64_t>& modes,
                       double padding_fraction, const std::string& factorization,
                       double rank_fraction, bool positional_embedding,
                       std::uint64_t seed) {
             models::FnoConfig cfg;
             cfg.d = d;
             cfg.in_channels = in_channels;
             cfg.out_channels = out_channels;
             cfg.hidden_channels = hidden_channels;
             cfg.n_layers = n_layers;
             cfg.modes.modes = modes;
             cfg.padding_fraction = padding_fraction;
             if (factorization == "tucker") {
               cfg.factorization.kind = models::Factorization::Kind::Tucker;
               cfg.factorization.rank_fraction = rank_fraction;
             } else if (factorization != "none") {
               throw std::invalid_argument("factorization must be none or "
                                           "tucker");
             }
             cfg.positional_embedding = positional_embedding;
             cfg.seed = seed;
             auto holder = std::make_unique<PyFno>();
             holder->model = models::make_fno(cfg);
             return holder;
           }),
           py::arg("d"), py::arg("in_channels") = 1, py::arg("out_channels") = 1,
           py::arg("hidden_channels") = 32, py::arg("n_layers") = 4,
           py::arg("modes") = std::vector<std::int64_t>{8, 8},
           py::arg("padding_fraction") = 0.0, py::arg("factorization") = "none",
           py::arg("rank_fraction") = 1.0,
           py::arg("positional_embedding") = true, py::arg("seed") = 0)
      .def("forward", &PyFno::forward, py::arg("x"),
           py::arg("output_sizes") = py::none(),
           "Applies the operator to a [batch, channels, spatial...] array; "
           "output_sizes resamples the result onto a different grid.")
      .def("parameter_count",
           [](const PyFno& f) { return models::parameter_count(f.model); })
      .def("save",
           [](const PyFno& f, const std::string& path) {
             models::save_checkpoint(f.model, path, &f.proc);
           },
           py::arg("path"))
      .def_static("load", [](const std::string& path) {
        auto holder = std::make_unique<PyFno>();
        holder->model = models::load_fno_checkpoint(path, &holder->proc);
        return holder;
      }, py::arg("path"));
}
