// Python bindings: NumPy arrays in, NumPy arrays out. Sinograms are
// (n_theta, n_t) float64 arrays over [0, pi); images are (n, n).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tomopipe/bst.hpp"
#include "tomopipe/cli.hpp"
#include "tomopipe/fbp.hpp"
#include "tomopipe/io.hpp"
#include "tomopipe/phantom.hpp"
#include "tomopipe/pipeline.hpp"
#include "tomopipe/preprocess.hpp"
#include "tomopipe/radon.hpp"

namespace py = pybind11;
using namespace tomopipe;

namespace {

using Doubles = py::array_t<double, py::array::c_style | py::array::forcecast>;

RealArray to_real(const Doubles& a, const char* what) {
    if (a.ndim() != 2) throw std::invalid_argument(std::string(what) + ": expected a 2D array");
    const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
    return RealArray(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Doubles to_numpy(const RealArray& a) {
    Doubles out({a.rows(), a.cols()});
    std::copy(a.values().begin(), a.values().end(), out.mutable_data());
    return out;
}

Sinogram to_sinogram(const Doubles& a) {
    RealArray data = to_real(a, "sinogram");
    return Sinogram(DetectorAxis(data.cols()), AngleAxis(data.rows()), std::move(data));
}

ImageGrid to_image(const Doubles& a) {
    RealArray data = to_real(a, "image");
    if (data.rows() != data.cols()) throw std::invalid_argument("image: expected a square array");
    return ImageGrid(data.rows(), std::move(data));
}

Ellipsoid make_ellipsoid(double a, double b, double c, double rho, std::tuple<double, double, double> center) {
    return Ellipsoid(a, b, c, rho, {std::get<0>(center), std::get<1>(center), std::get<2>(center)});
}

BstOptions bst_options(std::size_t pad_factor, double kb_beta, double kb_support, std::size_t sigma_min_bins,
                       const std::string& interp) {
    BstOptions o;
    o.pad_factor = pad_factor;
    o.kb_beta = kb_beta;
    o.kb_support = kb_support;
    o.sigma_min_bins = sigma_min_bins;
    if (interp == "bilinear") o.interp = Interpolation::bilinear;
    else if (interp == "nearest") o.interp = Interpolation::nearest;
    else throw std::invalid_argument("interp must be 'bilinear' or 'nearest'");
    return o;
}

FilterPlan filter_plan(double rolloff) {
    return rolloff >= 1.0 ? FilterPlan{} : FilterPlan{FilterKind::ramp_apodized, rolloff};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tomographic reconstruction kernels and I/O";

    static py::exception<IoError> io_error(m, "TomoIOError", PyExc_OSError);
    static py::exception<FormatError> format_error(m, "FormatError", PyExc_ValueError);
    static py::exception<MemoryBudgetError> budget_error(m, "MemoryBudgetError", PyExc_RuntimeError);
    static py::exception<PipelineError> pipeline_error(m, "PipelineError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const IoError& e) {
            io_error(e.what());
        } catch (const FormatError& e) {
            format_error(e.what());
        } catch (const MemoryBudgetError& e) {
            budget_error(e.what());
        } catch (const PipelineError& e) {
            pipeline_error(e.what());
        }
    });

    m.def("detector_coordinates", [](std::size_t n_t) {
        const DetectorAxis d(n_t);
        std::vector<double> t(n_t);
        for (std::size_t i = 0; i < n_t; ++i) t[i] = d.coordinate(i);
        return t;
    }, py::arg("n_t"));
    m.def("pixel_coordinates", [](std::size_t n) {
        std::vector<double> u(n);
        for (std::size_t k = 0; k < n; ++k) u[k] = pixel_coordinate(n, k);
        return u;
    }, py::arg("n"));

    m.def("analytic_sinogram",
          [](std::size_t n_t, std::size_t n_theta, double a, double b, double c, double rho,
             std::tuple<double, double, double> center, double s) {
              return to_numpy(analytic_sinogram(make_ellipsoid(a, b, c, rho, center), s, DetectorAxis(n_t),
                                                AngleAxis(n_theta)).data());
          },
          py::arg("n_t"), py::arg("n_theta"), py::arg("a") = 0.5, py::arg("b") = 0.5, py::arg("c") = 0.5,
          py::arg("rho") = 1.0, py::arg("center") = std::make_tuple(0.0, 0.0, 0.0), py::arg("s") = 0.0);
    m.def("render_slice",
          [](std::size_t n, double a, double b, double c, double rho, std::tuple<double, double, double> center,
             double s) { return to_numpy(render_slice(make_ellipsoid(a, b, c, rho, center), s, n).data()); },
          py::arg("n"), py::arg("a") = 0.5, py::arg("b") = 0.5, py::arg("c") = 0.5, py::arg("rho") = 1.0,
          py::arg("center") = std::make_tuple(0.0, 0.0, 0.0), py::arg("s") = 0.0);

    m.def("forward_radon",
          [](const Doubles& image, std::size_t n_t, std::size_t n_theta, unsigned workers) {
              return to_numpy(forward_radon(to_image(image), DetectorAxis(n_t), AngleAxis(n_theta), {}, workers).data());
          },
          py::arg("image"), py::arg("n_t"), py::arg("n_theta"), py::arg("workers") = 1);
    m.def("backproject_ss",
          [](const Doubles& sino, std::optional<std::size_t> n, unsigned workers) {
              const Sinogram y = to_sinogram(sino);
              ImageGrid b(1);
              {
                  py::gil_scoped_release release;
                  b = backproject_ss(y, n.value_or(y.n_t()), workers);
              }
              return to_numpy(b.data());
          },
          py::arg("sinogram"), py::arg("n") = py::none(), py::arg("workers") = 1);
    m.def("bst_backproject",
          [](const Doubles& sino, std::optional<std::size_t> n, unsigned workers, std::size_t pad_factor,
             double kb_beta, double kb_support, std::size_t sigma_min_bins, const std::string& interp) {
              const Sinogram y = to_sinogram(sino);
              const BstPlan plan(y.detector(), y.angles(), n.value_or(y.n_t()),
                                 bst_options(pad_factor, kb_beta, kb_support, sigma_min_bins, interp));
              ImageGrid b(1);
              {
                  py::gil_scoped_release release;
                  b = bst_backproject(y, plan, workers);
              }
              return to_numpy(b.data());
          },
          py::arg("sinogram"), py::arg("n") = py::none(), py::arg("workers") = 1, py::arg("pad_factor") = 2,
          py::arg("kb_beta") = 10.0, py::arg("kb_support") = 0.1, py::arg("sigma_min_bins") = 1,
          py::arg("interp") = "bilinear");
    m.def("ramp_filter",
          [](const Doubles& sino, double rolloff) { return to_numpy(ramp_filter(to_sinogram(sino), filter_plan(rolloff)).data()); },
          py::arg("sinogram"), py::arg("rolloff") = 1.0);
    m.def("fbp",
          [](const Doubles& sino, const std::string& kernel, std::optional<std::size_t> n, double rolloff,
             unsigned workers) {
              const Sinogram y = to_sinogram(sino);
              const BstPlan plan(y.detector(), y.angles(), n.value_or(y.n_t()));
              const Kernel k = parse_kernel(kernel);
              ImageGrid b(1);
              {
                  py::gil_scoped_release release;
                  b = fbp(y, plan, filter_plan(rolloff), k, workers);
              }
              return to_numpy(b.data());
          },
          py::arg("sinogram"), py::arg("kernel") = "bst", py::arg("n") = py::none(), py::arg("rolloff") = 1.0,
          py::arg("workers") = 1);

    m.def("normalize",
          [](const Doubles& counts, const Doubles& flat, const Doubles& dark, double eps) {
              return to_numpy(normalize(to_real(counts, "counts"), {to_real(flat, "flat"), to_real(dark, "dark")}, eps));
          },
          py::arg("counts"), py::arg("flat"), py::arg("dark"), py::arg("eps") = kNormalizeEps);
    m.def("estimate_center",
          [](const Doubles& sino) {
              const CenteringResult r = estimate_center(to_sinogram(sino));
              py::dict d;
              d["beta"] = r.beta;
              d["beta_bins"] = r.beta_bins;
              d["confidence"] = r.confidence;
              return d;
          },
          py::arg("sinogram"));
    m.def("apply_center", [](const Doubles& sino, double beta) { return to_numpy(apply_center(to_sinogram(sino), beta).data()); },
          py::arg("sinogram"), py::arg("beta"));
    m.def("suppress_rings",
          [](const Doubles& sino, std::size_t window) { return to_numpy(suppress_rings(to_sinogram(sino), window).data()); },
          py::arg("sinogram"), py::arg("window") = 9);

    m.def("read_volume",
          [](const std::filesystem::path& path) {
              Volume v = read_volume(path);
              py::array_t<float> out({v.header.dims[0], v.header.dims[1], v.header.dims[2]});
              std::copy(v.data.begin(), v.data.end(), out.mutable_data());
              return py::make_tuple(v.header.layout == Layout::frames ? "frames" : "slices", out);
          },
          py::arg("path"), "Returns (layout, float32 array shaped by the header dims).");
    m.def("write_volume",
          [](const std::filesystem::path& path, py::array_t<float, py::array::c_style | py::array::forcecast> data,
             const std::string& layout) {
              if (data.ndim() != 3) throw std::invalid_argument("write_volume: expected a 3D array");
              if (layout != "frames" && layout != "slices") throw std::invalid_argument("layout must be 'frames' or 'slices'");
              VolumeHeader h;
              h.layout = layout == "frames" ? Layout::frames : Layout::slices;
              for (int k = 0; k < 3; ++k) h.dims[k] = static_cast<std::uint32_t>(data.shape(k));
              write_volume(path, h, std::span<const float>(data.data(), static_cast<std::size_t>(data.size())));
          },
          py::arg("path"), py::arg("data"), py::arg("layout") = "frames",
          "frames: (n_angle, n_slice, n_detector); slices: (n_slice, rows, columns).");

    m.def("run_cli",
          [](const std::vector<std::string>& args) {
              std::vector<const char*> argv{"tomopipe"};
              for (const auto& a : args) argv.push_back(a.c_str());
              std::ostringstream out, err;
              int code = 0;
              {
                  py::gil_scoped_release release;
                  code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
              }
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Runs the command line with these arguments; returns (exit_code, stdout, stderr).");
}
