#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "a3fr/bench.hpp"

namespace py = pybind11;
using namespace a3fr;

namespace {

py::array_t<float> frame_image(const FrameState& f) {
  py::array_t<float> arr({f.height, f.width, 3});
  std::copy(f.color.begin(), f.color.end(), arr.mutable_data());
  return arr;
}

py::array_t<std::uint8_t> frame_levels(const FrameState& f) {
  py::array_t<std::uint8_t> arr({f.tiles_y(), f.tiles_x()});
  std::copy(f.level_map.begin(), f.level_map.end(), arr.mutable_data());
  return arr;
}

std::span<const float> image_span(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), std::size_t(a.size())};
}

}  // namespace

PYBIND11_MODULE(_a3fr, m) {
  m.doc() = "Gaze-tracked foveated Gaussian-splat renderer";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<Mode>(m, "Mode")
      .value("FRR", Mode::FRR)
      .value("SFR", Mode::SFR)
      .value("A3FR", Mode::A3FR);
  py::enum_<ClockMode>(m, "ClockMode")
      .value("WALLCLOCK", ClockMode::Wallclock)
      .value("EVENT", ClockMode::Event);

  py::class_<Scene>(m, "Scene")
      .def_readonly("name", &Scene::name)
      .def("__len__", [](const Scene& s) { return s.gaussians.size(); });

  py::class_<Camera>(m, "Camera")
      .def_readonly("width", &Camera::width)
      .def_readonly("height", &Camera::height)
      .def_readonly("fov_deg", &Camera::fov_deg);

  py::class_<FrameState>(m, "FrameState")
      .def_readonly("width", &FrameState::width)
      .def_readonly("height", &FrameState::height)
      .def_property_readonly("image", &frame_image)
      .def_property_readonly("level_map", &frame_levels);

  py::class_<ExitModel>(m, "ExitModel")
      .def_static("preset", [](const std::string& n) { return ExitModel::preset(n); })
      .def_static("load", &ExitModel::load)
      .def_readonly("name", &ExitModel::name)
      .def_readonly("embed_ms", &ExitModel::embed_ms)
      .def_property_readonly("n_exits", &ExitModel::n_exits)
      .def("cumulative_ms", &ExitModel::cumulative_ms)
      .def("total_latency_ms", &ExitModel::total_latency_ms);

  py::class_<FoveationConfig>(m, "FoveationConfig")
      .def(py::init<>())
      .def_readwrite("rho_d", &FoveationConfig::rho_d)
      .def_readwrite("theta_i_deg", &FoveationConfig::theta_i_deg)
      .def_readwrite("delta_theta_deg", &FoveationConfig::delta_theta_deg)
      .def("deg_to_px", &FoveationConfig::deg_to_px)
      .def("px_to_deg", &FoveationConfig::px_to_deg);

  py::class_<FoveationProfile>(m, "FoveationProfile")
      .def_readonly("n_exits", &FoveationProfile::n_exits)
      .def_readonly("expected_dist_deg", &FoveationProfile::expected_dist_deg)
      .def_readonly("expected_dist_px", &FoveationProfile::expected_dist_px)
      .def_readonly("r_f_px", &FoveationProfile::r_f_px)
      .def_readonly("r_max_px", &FoveationProfile::r_max_px);

  py::class_<LatencyBreakdown>(m, "LatencyBreakdown")
      .def_readonly("t_s_c_ms", &LatencyBreakdown::t_s_c_ms)
      .def_readonly("t_d_ms", &LatencyBreakdown::t_d_ms)
      .def_readonly("t_r_ms", &LatencyBreakdown::t_r_ms)
      .def_readonly("t_tot_ms", &LatencyBreakdown::t_tot_ms);

  py::class_<FrameSchedule>(m, "FrameSchedule")
      .def_readonly("mode", &FrameSchedule::mode)
      .def_readonly("latency", &FrameSchedule::latency)
      .def_readonly("speculative_rounds", &FrameSchedule::speculative_rounds)
      .def_readonly("pixels_composited_total", &FrameSchedule::pixels_composited_total)
      .def("to_json", &FrameSchedule::to_json);

  py::class_<FrameResult>(m, "FrameResult")
      .def_readonly("frame", &FrameResult::frame)
      .def_readonly("schedule", &FrameResult::schedule);

  m.def("load_scene",
        [](const std::filesystem::path& p) { return load_scene(p); });
  m.def("make_synthetic_scene", &make_synthetic_scene, py::arg("seed"),
        py::arg("n_gaussians") = 300, py::arg("sh_degree") = 1,
        py::arg("clusters") = 6);
  m.def("make_orbit_poses", &make_orbit_poses, py::arg("scene"),
        py::arg("count"), py::arg("width"), py::arg("height"),
        py::arg("fov_deg") = 120.0);

  m.def("foveal_radius_px", &foveal_radius_px);
  m.def("profile_exits", &profile_exits, py::arg("sigmas_deg"),
        py::arg("samples"), py::arg("seed"), py::arg("cfg"));

  m.def(
      "render_frame",
      [](const Scene& scene, const Camera& cam, Mode mode, std::uint64_t seed,
         const std::string& exit_preset, double anchor_frr_ms) {
        SchedulerConfig cfg;
        cfg.mode = mode;
        cfg.clock = ClockMode::Event;
        cfg.cost = EventCost::calibrate(anchor_frr_ms, cam.width, cam.height);
        cfg.seed = seed;
        if (mode != Mode::FRR) {
          cfg.exit_model = ExitModel::preset(exit_preset);
          cfg.fov_cfg = FoveationConfig::for_camera(cam);
          cfg.profile = profile_exits(cfg.exit_model.sigmas_deg(), 20000, seed,
                                      cfg.fov_cfg);
        }
        const GazeTruth truth{{cam.width / 2.0f, cam.height / 2.0f},
                              GazeTruth::Source::Model};
        return run_frame(scene, cam, truth, cfg);
      },
      py::arg("scene"), py::arg("camera"), py::arg("mode"), py::arg("seed") = 1,
      py::arg("exit_preset") = "table2-unpruned",
      py::arg("anchor_frr_ms") = 151.239,
      "Render one frame in event-clock mode with gaze truth at image center.");

  m.def(
      "psnr",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& b,
         int width, int height) {
        const auto r = psnr(image_span(a), image_span(b), width, height);
        return py::make_tuple(r.db, r.bit_exact);
      },
      py::arg("a"), py::arg("b"), py::arg("width"), py::arg("height"));
  m.def(
      "ssim",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& b,
         int width, int height) {
        return ssim(image_span(a), image_span(b), width, height);
      },
      py::arg("a"), py::arg("b"), py::arg("width"), py::arg("height"));

  m.def(
      "run_benchmark",
      [](const std::filesystem::path& out_dir, int width, int height,
         std::vector<Mode> modes, std::uint64_t seed, int pose_count,
         int n_gaussians) {
        BenchOptions opt;
        opt.out_dir = out_dir;
        opt.resolutions = {{width, height}};
        if (!modes.empty()) opt.modes = std::move(modes);
        opt.seed = seed;
        opt.pose_count = pose_count;
        opt.synthetic_gaussians = n_gaussians;
        opt.profile_samples = 20000;
        return run_benchmark(opt).to_csv();
      },
      py::arg("out_dir"), py::arg("width") = 640, py::arg("height") = 384,
      py::arg("modes") = std::vector<Mode>{}, py::arg("seed") = 1,
      py::arg("pose_count") = 2, py::arg("n_gaussians") = 120,
      "Synthetic-scene benchmark; returns the summary CSV text.");
}
