// Python bindings for the core operations.
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stvel/analytic.hpp"
#include "stvel/covariance.hpp"
#include "stvel/grid.hpp"
#include "stvel/io.hpp"
#include "stvel/simulate.hpp"
#include "stvel/spatial.hpp"
#include "stvel/stfit.hpp"
#include "stvel/temporal.hpp"
#include "stvel/velocity.hpp"

namespace py = pybind11;
using namespace stvel;

namespace {

// field values as an (nx, ny, nt) array; the storage order is C-contiguous
// for exactly that shape
py::array_t<double> field_array(const SpatioTemporalGrid& g,
                                const std::vector<double>& v) {
  py::array_t<double> out({g.nx(), g.ny(), g.nt()});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ScalarField field_from_array(const SpatioTemporalGrid& g,
                             py::array_t<double, py::array::c_style> values) {
  if (values.ndim() != 3 || values.shape(0) != g.nx() ||
      values.shape(1) != g.ny() || values.shape(2) != g.nt())
    throw std::invalid_argument("values must have shape (nx, ny, nt)");
  std::vector<double> v(values.data(), values.data() + values.size());
  return ScalarField(g, std::move(v));
}

py::array_t<double> eigen_array(const Eigen::MatrixXd& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out.mutable_at(i, j) = m(i, j);
  return out;
}

}  // namespace

PYBIND11_MODULE(_stvel, m) {
  m.doc() = "Spatio-temporal LGCP intensity and spread-velocity estimation";

  py::class_<Window>(m, "Window")
      .def(py::init<double, double, double, double>(), py::arg("xmin"),
           py::arg("xmax"), py::arg("ymin"), py::arg("ymax"))
      .def_readwrite("xmin", &Window::xmin)
      .def_readwrite("xmax", &Window::xmax)
      .def_readwrite("ymin", &Window::ymin)
      .def_readwrite("ymax", &Window::ymax);

  py::class_<TimeSpan>(m, "TimeSpan")
      .def(py::init<double, double>(), py::arg("tmin"), py::arg("tmax"))
      .def_readwrite("tmin", &TimeSpan::tmin)
      .def_readwrite("tmax", &TimeSpan::tmax);

  py::class_<SpatioTemporalGrid>(m, "Grid")
      .def(py::init([](double x0, double y0, double t0, int nx, int ny, int nt,
                       double dx, double dy, double dt,
                       std::vector<std::uint8_t> mask) {
             return SpatioTemporalGrid(x0, y0, t0, nx, ny, nt, dx, dy, dt,
                                       std::move(mask));
           }),
           py::arg("x0"), py::arg("y0"), py::arg("t0"), py::arg("nx"),
           py::arg("ny"), py::arg("nt"), py::arg("dx"), py::arg("dy"),
           py::arg("dt"), py::arg("mask") = std::vector<std::uint8_t>{})
      .def_property_readonly("nx", &SpatioTemporalGrid::nx)
      .def_property_readonly("ny", &SpatioTemporalGrid::ny)
      .def_property_readonly("nt", &SpatioTemporalGrid::nt)
      .def_property_readonly("dx", &SpatioTemporalGrid::dx)
      .def_property_readonly("dy", &SpatioTemporalGrid::dy)
      .def_property_readonly("dt", &SpatioTemporalGrid::dt)
      .def("cell_volume", &SpatioTemporalGrid::cell_volume)
      .def("center", [](const SpatioTemporalGrid& g, int i, int j, int n) {
        return py::make_tuple(g.center_x(i), g.center_y(j), g.center_t(n));
      });

  py::class_<PointPattern>(m, "PointPattern")
      .def(py::init([](py::array_t<double, py::array::c_style> events, Window w,
                       TimeSpan ts) {
             if (events.ndim() != 2 || events.shape(1) != 3)
               throw std::invalid_argument("events must be an (n, 3) array");
             std::vector<Event> ev(events.shape(0));
             for (py::ssize_t k = 0; k < events.shape(0); ++k)
               ev[k] = {events.at(k, 0), events.at(k, 1), events.at(k, 2)};
             return PointPattern(std::move(ev), w, ts);
           }),
           py::arg("events"), py::arg("window"), py::arg("tspan"))
      .def_property_readonly("events",
                             [](const PointPattern& p) {
                               py::array_t<double> out(
                                   {static_cast<py::ssize_t>(p.size()),
                                    static_cast<py::ssize_t>(3)});
                               for (std::size_t k = 0; k < p.size(); ++k) {
                                 out.mutable_at(k, 0) = p.events()[k].x;
                                 out.mutable_at(k, 1) = p.events()[k].y;
                                 out.mutable_at(k, 2) = p.events()[k].t;
                               }
                               return out;
                             })
      .def("__len__", &PointPattern::size);

  py::class_<ScalarField>(m, "ScalarField")
      .def(py::init(&field_from_array), py::arg("grid"), py::arg("values"))
      .def_property_readonly("grid", &ScalarField::grid)
      .def_property_readonly("values", [](const ScalarField& f) {
        return field_array(f.grid(), f.values());
      });

  py::class_<VectorField>(m, "VectorField")
      .def_property_readonly("grid", &VectorField::grid)
      .def_property_readonly("magnitude",
                             [](const VectorField& f) {
                               return field_array(f.grid(), f.magnitudes());
                             })
      .def_property_readonly("vx",
                             [](const VectorField& f) {
                               return field_array(f.grid(), f.vxs());
                             })
      .def_property_readonly("vy", [](const VectorField& f) {
        return field_array(f.grid(), f.vys());
      });

  m.def("bin_counts",
        [](const PointPattern& p, const SpatioTemporalGrid& g) {
          const auto counts = bin_counts(p, g);
          py::array_t<std::int64_t> out({g.nx(), g.ny(), g.nt()});
          std::copy(counts.begin(), counts.end(), out.mutable_data());
          return out;
        },
        py::arg("pattern"), py::arg("grid"));
  m.def("cell_centers", [](const SpatioTemporalGrid& g) {
    const auto centers = cell_centers(g);
    py::array_t<double> out({static_cast<py::ssize_t>(centers.size()),
                             static_cast<py::ssize_t>(3)});
    for (std::size_t k = 0; k < centers.size(); ++k) {
      out.mutable_at(k, 0) = centers[k].x;
      out.mutable_at(k, 1) = centers[k].y;
      out.mutable_at(k, 2) = centers[k].t;
    }
    return out;
  });

  py::class_<CovarianceSpec>(m, "CovarianceSpec")
      .def(py::init<double, double, double, double, bool>(), py::arg("sigma2"),
           py::arg("kappa"), py::arg("nu"), py::arg("a"),
           py::arg("allow_small_nu") = false)
      .def_readwrite("sigma2", &CovarianceSpec::sigma2)
      .def_readwrite("kappa", &CovarianceSpec::kappa)
      .def_readwrite("nu", &CovarianceSpec::nu)
      .def_readwrite("a", &CovarianceSpec::a);

  m.def("matern_rho1", &matern_rho1, py::arg("h1"), py::arg("kappa"), py::arg("nu"));
  m.def("ar1_rho2", &ar1_rho2, py::arg("h2"), py::arg("a"));
  m.def("ar1_corr", &ar1_corr, py::arg("h2"), py::arg("a"));
  m.def("cov", &cov, py::arg("spec"), py::arg("h1"), py::arg("h2"));
  m.def("cov_matrices",
        [](const CovarianceSpec& spec, const SpatioTemporalGrid& g,
           bool normalized_temporal) {
          const CovMatrices cm = cov_matrices(spec, g, normalized_temporal);
          return py::make_tuple(eigen_array(cm.spatial), eigen_array(cm.temporal));
        },
        py::arg("spec"), py::arg("grid"), py::arg("normalized_temporal") = false);

  py::class_<SimIntensityParams>(m, "SimIntensityParams")
      .def(py::init<>())
      .def_static("benchmark", &SimIntensityParams::benchmark)
      .def_readwrite("lambda0", &SimIntensityParams::lambda0)
      .def_readwrite("beta0", &SimIntensityParams::beta0)
      .def_readwrite("beta1", &SimIntensityParams::beta1)
      .def_readwrite("beta2", &SimIntensityParams::beta2)
      .def_readwrite("beta3", &SimIntensityParams::beta3);

  py::class_<VelocityValue>(m, "VelocityValue")
      .def_readonly("magnitude", &VelocityValue::magnitude)
      .def_readonly("vx", &VelocityValue::vx)
      .def_readonly("vy", &VelocityValue::vy)
      .def("defined", &VelocityValue::defined);

  py::class_<SimIntensity>(m, "SimIntensity")
      .def(py::init<SimIntensityParams>(), py::arg("params"))
      .def("lambda_at", &SimIntensity::lambda, py::arg("x"), py::arg("y"), py::arg("t"))
      .def("grad_xy", &SimIntensity::grad_xy)
      .def("dlambda_dt", &SimIntensity::dlambda_dt)
      .def("true_velocity", &SimIntensity::true_velocity)
      .def("integral", &SimIntensity::integral, py::arg("window"), py::arg("tspan"),
           py::arg("n_cells_per_axis") = 64);
  m.def("calibrated_lambda0", &calibrated_lambda0, py::arg("base"),
        py::arg("target_total"), py::arg("n_cells_per_axis") = 64);

  py::class_<Seed>(m, "Seed").def(py::init<std::uint64_t>(), py::arg("value"));

  m.def("sample_poisson",
        [](const std::function<double(double, double, double)>& intensity,
           const Window& w, const TimeSpan& ts, double lambda_max,
           std::uint64_t seed) {
          return sample_poisson(intensity, w, ts, lambda_max, Seed{seed});
        },
        py::arg("intensity"), py::arg("window"), py::arg("tspan"),
        py::arg("lambda_max"), py::arg("seed"));
  m.def("sample_gaussian_field",
        [](const CovarianceSpec& spec, const SpatioTemporalGrid& g, double beta,
           std::uint64_t seed) {
          return sample_gaussian_field(spec, g, beta, Seed{seed});
        },
        py::arg("spec"), py::arg("grid"), py::arg("beta"), py::arg("seed"));
  m.def("sample_lgcp",
        [](const std::function<double(double, double)>& eta,
           const std::function<double(double)>& mu, const CovarianceSpec& spec,
           const SpatioTemporalGrid& g, double beta, std::uint64_t seed) {
          return sample_lgcp(eta, mu, spec, g, beta, Seed{seed});
        },
        py::arg("eta"), py::arg("mu"), py::arg("spec"), py::arg("grid"),
        py::arg("beta"), py::arg("seed"));

  py::class_<TemporalBasisSpec>(m, "TemporalBasisSpec")
      .def(py::init<>())
      .def_readwrite("day_of_week", &TemporalBasisSpec::day_of_week)
      .def_readwrite("day0_weekday", &TemporalBasisSpec::day0_weekday)
      .def_readwrite("fourier_order", &TemporalBasisSpec::fourier_order)
      .def_readwrite("omega", &TemporalBasisSpec::omega)
      .def_readwrite("poly_degree", &TemporalBasisSpec::poly_degree)
      .def_readwrite("include_intercept", &TemporalBasisSpec::include_intercept)
      .def("basis_count", &TemporalBasisSpec::basis_count);

  py::class_<TemporalFit>(m, "TemporalFit")
      .def_property_readonly("coefficients",
                             [](const TemporalFit& f) {
                               return std::vector<double>(
                                   f.coefficients.data(),
                                   f.coefficients.data() + f.coefficients.size());
                             })
      .def_property_readonly("std_errors",
                             [](const TemporalFit& f) {
                               return std::vector<double>(
                                   f.std_errors.data(),
                                   f.std_errors.data() + f.std_errors.size());
                             })
      .def_readonly("deviance", &TemporalFit::deviance)
      .def_readonly("iterations", &TemporalFit::iterations);

  m.def("design_row", &design_row, py::arg("spec"), py::arg("t"));
  m.def("design_names", &design_names, py::arg("spec"));
  m.def("fit_temporal",
        [](const std::vector<double>& times, const std::vector<double>& counts,
           const TemporalBasisSpec& spec) {
          return fit_temporal(times, counts, spec);
        },
        py::arg("times"), py::arg("counts"), py::arg("spec"));
  m.def("eval_mu", &eval_mu, py::arg("fit"), py::arg("t"));

  m.def("kernel_density",
        [](py::array_t<double, py::array::c_style> pts, double h, double qx,
           double qy) {
          if (pts.ndim() != 2 || pts.shape(1) != 2)
            throw std::invalid_argument("points must be an (n, 2) array");
          std::vector<Point2> p(pts.shape(0));
          for (py::ssize_t k = 0; k < pts.shape(0); ++k)
            p[k] = {pts.at(k, 0), pts.at(k, 1)};
          return kernel_density(p, h, {qx, qy});
        },
        py::arg("points"), py::arg("h"), py::arg("qx"), py::arg("qy"));

  py::class_<Raster>(m, "Raster")
      .def_readonly("ncols", &Raster::ncols)
      .def_readonly("nrows", &Raster::nrows)
      .def_readonly("cellsize", &Raster::cellsize);
  m.def("read_esri_ascii", &read_esri_ascii, py::arg("path"));
  m.def("raster_offset",
        [](const Raster& r, const SpatioTemporalGrid& g) {
          RasterOffset ro = raster_offset(r, g);
          return py::make_tuple(std::move(ro.offset), ro.nodata_cells);
        },
        py::arg("raster"), py::arg("grid"));

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init([](const CovarianceSpec& spec, int max_iterations,
                       double tolerance) {
             return FitConfig{.spec = spec, .max_iterations = max_iterations,
                              .tolerance = tolerance};
           }),
           py::arg("spec"), py::arg("max_iterations") = 100,
           py::arg("tolerance") = 1e-8);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("beta", &FitResult::beta)
      .def_readonly("log_evidence", &FitResult::log_evidence)
      .def_readonly("gradient_norm", &FitResult::gradient_norm)
      .def_readonly("iterations", &FitResult::iterations)
      .def_property_readonly("zeta",
                             [](const FitResult& r) {
                               return field_array(r.grid, r.zeta);
                             })
      .def_property_readonly("zeta_variance", [](const FitResult& r) {
        return field_array(r.grid, r.zeta_variance);
      });

  m.def("fit",
        [](py::array_t<std::int64_t, py::array::c_style> counts,
           const ScalarField& offset, const FitConfig& cfg) {
          std::vector<std::int64_t> c(counts.data(), counts.data() + counts.size());
          return fit(c, offset, cfg);
        },
        py::arg("counts"), py::arg("offset"), py::arg("config"));
  m.def("predict_intensity", &predict_intensity, py::arg("result"),
        py::arg("lognormal_mean") = false);

  py::enum_<TimeScheme>(m, "TimeScheme")
      .value("symmetric", TimeScheme::Symmetric)
      .value("symmetric_with_endpoint", TimeScheme::SymmetricWithEndpoint);
  py::enum_<BoundaryPolicy>(m, "BoundaryPolicy")
      .value("mask", BoundaryPolicy::Mask)
      .value("one_sided", BoundaryPolicy::OneSided);

  py::class_<VelocityOptions>(m, "VelocityOptions")
      .def(py::init<>())
      .def_readwrite("time_scheme", &VelocityOptions::time_scheme)
      .def_readwrite("gradient_floor", &VelocityOptions::gradient_floor)
      .def_readwrite("boundary", &VelocityOptions::boundary);

  m.def("time_derivative",
        [](const ScalarField& f, int n, const VelocityOptions& opt) {
          const SpatialSlice s = time_derivative(f, n, opt);
          py::array_t<double> out({s.nx, s.ny});
          std::copy(s.values.begin(), s.values.end(), out.mutable_data());
          return out;
        },
        py::arg("field"), py::arg("n"), py::arg("options") = VelocityOptions{});
  m.def("gradient_norm",
        [](const ScalarField& f, int n, const VelocityOptions& opt) {
          const SpatialSlice s = gradient_norm(f, n, opt);
          py::array_t<double> out({s.nx, s.ny});
          std::copy(s.values.begin(), s.values.end(), out.mutable_data());
          return out;
        },
        py::arg("field"), py::arg("n"), py::arg("options") = VelocityOptions{});
  m.def("min_velocity", &min_velocity, py::arg("field"),
        py::arg("options") = VelocityOptions{});
  m.def("directional_velocity", &directional_velocity, py::arg("field"),
        py::arg("vx"), py::arg("vy"), py::arg("options") = VelocityOptions{});
}
