#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "ks/bdf.hpp"
#include "ks/config.hpp"
#include "ks/errors.hpp"
#include "ks/grid.hpp"
#include "ks/manufactured.hpp"
#include "ks/scheme.hpp"
#include "ks/simulate.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const ks::Field& f, const ks::Grid2D& g) {
  Array out({static_cast<py::ssize_t>(g.ny), static_cast<py::ssize_t>(g.nx)});
  std::memcpy(out.mutable_data(), f.values().data(), f.size() * sizeof(double));
  return out;
}

ks::Field to_field(const Array& a, const ks::Grid2D& g) {
  if (a.ndim() != 2 || a.shape(0) != g.ny || a.shape(1) != g.nx)
    throw ks::ShapeError("expected an array of shape (ny, nx) = (" + std::to_string(g.ny) + ", " +
                         std::to_string(g.nx) + ")");
  return ks::Field(std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict diagnostics_dict(const ks::StepDiagnostics& d) {
  py::dict out;
  out["step"] = d.step;
  out["time"] = d.time;
  out["mass"] = d.mass;
  out["min_rho"] = d.min_rho;
  out["energy"] = d.energy;
  out["dissipation"] = d.dissipation;
  out["lambda"] = d.lambda;
  out["mu"] = d.mu;
  out["step1_iters"] = d.step1.iterations;
  out["step2_iters"] = d.step2.iterations;
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keller-Segel solver core";

  auto error = py::register_exception<ks::Error>(m, "Error");
  py::register_exception<ks::ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ks::NumericalError>(m, "NumericalError", error.ptr());

  py::class_<ks::Grid2D>(m, "Grid")
      .def_readonly("xmin", &ks::Grid2D::xmin)
      .def_readonly("xmax", &ks::Grid2D::xmax)
      .def_readonly("ymin", &ks::Grid2D::ymin)
      .def_readonly("ymax", &ks::Grid2D::ymax)
      .def_readonly("nx", &ks::Grid2D::nx)
      .def_readonly("ny", &ks::Grid2D::ny)
      .def_readonly("hx", &ks::Grid2D::hx)
      .def_readonly("hy", &ks::Grid2D::hy)
      .def_property_readonly("x", [](const ks::Grid2D& g) {
        std::vector<double> x(static_cast<std::size_t>(g.nx));
        for (int i = 0; i < g.nx; ++i)
          x[static_cast<std::size_t>(i)] = g.x(i);
        return x;
      })
      .def_property_readonly("y", [](const ks::Grid2D& g) {
        std::vector<double> y(static_cast<std::size_t>(g.ny));
        for (int j = 0; j < g.ny; ++j)
          y[static_cast<std::size_t>(j)] = g.y(j);
        return y;
      });

  m.def("build_grid", &ks::build_grid, py::arg("xmin"), py::arg("xmax"), py::arg("ymin"), py::arg("ymax"),
        py::arg("nx"), py::arg("ny"));
  m.def("laplacian", [](const Array& f, const ks::Grid2D& g) {
    return to_array(ks::apply_laplacian(to_field(f, g), g), g);
  });
  m.def("gradient", [](const Array& f, const ks::Grid2D& g) {
    const ks::VectorField v = ks::gradient(to_field(f, g), g);
    return py::make_tuple(to_array(v.dx, g), to_array(v.dy, g));
  });
  m.def("integrate", [](const Array& f, const ks::Grid2D& g) { return ks::integrate(to_field(f, g), g); });

  m.def("bdf_coefficients", [](int k) {
    const ks::BdfScheme s = ks::bdf_coefficients(k);
    return py::make_tuple(s.alpha, s.a_weights, s.b_weights);
  }, py::arg("k"), "Returns (alpha_k, A_k weights, B_k weights), newest level first.");

  m.def("compute_energy",
        [](const Array& rho, const Array& c, const ks::Grid2D& g, double mu, double alpha) {
          ks::ModelParams p;
          p.alpha = alpha;
          return ks::compute_energy(to_field(rho, g), to_field(c, g), mu, p, g);
        },
        py::arg("rho"), py::arg("c"), py::arg("grid"), py::arg("mu") = 1.0, py::arg("alpha") = 1.0);

  py::class_<ks::RunConfig>(m, "RunConfig")
      .def_property_readonly("eps", [](const ks::RunConfig& c) { return c.params.eps; })
      .def_property_readonly("alpha", [](const ks::RunConfig& c) { return c.params.alpha; })
      .def_property_readonly("beta", [](const ks::RunConfig& c) { return c.params.beta; })
      .def_property_readonly("gamma", [](const ks::RunConfig& c) { return c.params.gamma; })
      .def_readonly("nx", &ks::RunConfig::nx)
      .def_readonly("ny", &ks::RunConfig::ny)
      .def_readonly("tau", &ks::RunConfig::tau)
      .def_readonly("T", &ks::RunConfig::T)
      .def_readonly("k", &ks::RunConfig::k)
      .def_readonly("epc", &ks::RunConfig::epc)
      .def_readonly("initial", &ks::RunConfig::initial)
      .def_readonly("out_dir", &ks::RunConfig::out_dir)
      .def_property_readonly("steps", &ks::RunConfig::steps)
      .def_property_readonly("grid", &ks::RunConfig::grid);

  m.def("parse_config", [](const std::string& text) { return ks::parse_config(text); });
  m.def("load_config", [](const std::filesystem::path& p) { return ks::load_config(p); });

  py::class_<ks::Simulation>(m, "Simulation")
      .def(py::init<ks::RunConfig>())
      .def_property_readonly("grid", &ks::Simulation::grid)
      .def_property_readonly("total_steps", &ks::Simulation::total_steps)
      .def_property_readonly("n", [](const ks::Simulation& s) { return s.state().n; })
      .def_property_readonly("time", [](const ks::Simulation& s) { return s.state().time(); })
      .def("done", &ks::Simulation::done)
      .def("step", [](ks::Simulation& s) { return diagnostics_dict(s.step()); })
      .def("startup_rows", [](const ks::Simulation& s) {
        py::list rows;
        for (const auto& d : s.startup_rows())
          rows.append(diagnostics_dict(d));
        return rows;
      })
      .def_property_readonly("rho", [](const ks::Simulation& s) { return to_array(s.state().rho.newest(), s.grid()); })
      .def_property_readonly("c", [](const ks::Simulation& s) { return to_array(s.state().c.newest(), s.grid()); })
      .def_property_readonly("cbar",
                             [](const ks::Simulation& s) { return to_array(s.state().cbar.newest(), s.grid()); })
      .def_property_readonly("u", [](const ks::Simulation& s) { return to_array(s.state().u.newest(), s.grid()); });

  m.def("simulate",
        [](const ks::RunConfig& cfg, std::optional<std::filesystem::path> out_dir) {
          py::gil_scoped_release release;
          const ks::SimulationResult r = ks::simulate(cfg, out_dir);
          return r.steps;
        },
        py::arg("config"), py::arg("out_dir") = py::none(), "Runs to T, writes output files, returns the step count.");

  m.def("run_convergence",
        [](int k, const std::vector<double>& taus, const std::string& policy, int nx, double T, int threads,
           double solver_tol) {
          ks::ConvergenceConfig cfg;
          cfg.solver.tol = solver_tol;
          cfg.nx = cfg.ny = nx;
          cfg.T = T;
          cfg.threads = threads;
          ks::ConvergenceTable t;
          {
            py::gil_scoped_release release;
            t = ks::run_convergence(k, taus, policy == "coupled" ? ks::GridPolicy::coupled : ks::GridPolicy::fixed,
                                    cfg);
          }
          py::list rows;
          for (const auto& r : t.rows) {
            py::dict row;
            row["k"] = r.k;
            row["tau"] = r.tau;
            row["nx"] = r.nx;
            for (const auto& col : ks::convergence_columns())
              row[py::str(col)] = ks::column_value(r, col);
            rows.append(row);
          }
          py::dict orders;
          for (const auto& f : t.fits)
            orders[py::str(f.column)] = py::make_tuple(f.order, f.residual);
          return py::make_tuple(rows, orders);
        },
        py::arg("k"), py::arg("taus"), py::arg("grid_policy") = "fixed", py::arg("nx") = 129, py::arg("T") = 1.0,
        py::arg("threads") = 0, py::arg("solver_tol") = 1e-10, "Returns (rows, {column: (order, fit residual)}).");
}
