#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "a3fr/scene.hpp"
#include "doctest.h"

using namespace a3fr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("a3fr_scene_" + name);
}

// Minimal degree-0 ascii PLY with raw (pre-activation) values.
void write_raw_ply(const fs::path& path, float raw_opacity, float raw_scale0,
                   const std::string& drop_field = "") {
  std::ofstream out(path);
  out << "ply\nformat ascii 1.0\nelement vertex 1\n";
  for (const char* f :
       {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
        "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    if (f != drop_field) out << "property float " << f << "\n";
  out << "end_header\n";
  out << "1 2 3 0.1 0.2 0.3 " << raw_opacity << " " << raw_scale0
      << " 0 0 1 0 0 0\n";
}

Gaussian3D random_gaussian(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<float> u(0.05f, 0.95f);
  std::normal_distribution<float> n(0.0f, 1.0f);
  Gaussian3D g;
  g.mean = {n(rng), n(rng), n(rng)};
  g.scale = {u(rng), u(rng), u(rng)};
  g.rotation = Eigen::Quaternionf(n(rng), n(rng), n(rng), n(rng)).normalized();
  g.opacity = u(rng);
  g.sh.assign(std::size_t(3 * (degree + 1) * (degree + 1)), 0.0f);
  for (auto& c : g.sh) c = n(rng) * 0.3f;
  return g;
}

}  // namespace

TEST_CASE("raw opacity 0 loads as logistic(0) = 0.5") {
  const auto p = temp_file("op0.ply");
  write_raw_ply(p, 0.0f, 0.0f);
  const Scene s = load_scene(p);
  REQUIRE(s.gaussians.size() == 1);
  CHECK(s.gaussians[0].opacity == doctest::Approx(0.5f).epsilon(1e-7));
}

TEST_CASE("raw scale 0 loads as exp(0) = 1") {
  const auto p = temp_file("sc0.ply");
  write_raw_ply(p, 0.0f, 0.0f);
  CHECK(load_scene(p).gaussians[0].scale.x() == doctest::Approx(1.0f));
}

TEST_CASE("missing field error names the field") {
  const auto p = temp_file("missing.ply");
  write_raw_ply(p, 0.0f, 0.0f, "rot_2");
  CHECK_THROWS_WITH_AS(load_scene(p),
                       doctest::Contains("missing field 'rot_2'"), FormatError);
}

TEST_CASE("non-finite values rejected with point index") {
  const auto p = temp_file("nan.ply");
  std::ofstream out(p);
  out << "ply\nformat ascii 1.0\nelement vertex 2\n";
  for (const char* f :
       {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
        "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    out << "property float " << f << "\n";
  out << "end_header\n";
  out << "0 0 0 0 0 0 0 0 0 0 1 0 0 0\n";
  out << "0 nan 0 0 0 0 0 0 0 0 1 0 0 0\n";
  out.close();
  CHECK_THROWS_WITH_AS(load_scene(p), doctest::Contains("at point 1"),
                       FormatError);
}

TEST_CASE("zero points is an empty-scene error") {
  const auto p = temp_file("empty.ply");
  std::ofstream out(p);
  out << "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\n"
         "end_header\n";
  out.close();
  CHECK_THROWS_WITH_AS(load_scene(p), doctest::Contains("empty scene"),
                       FormatError);
}

TEST_CASE("writer round-trip reproduces activated values") {
  std::mt19937_64 rng(11);
  Scene scene;
  scene.name = "rt";
  for (int i = 0; i < 3; ++i) scene.gaussians.push_back(random_gaussian(rng, 2));
  scene.recompute_bbox();

  for (const bool ascii : {false, true}) {
    const auto p = temp_file(ascii ? "rt.ascii.ply" : "rt.bin.ply");
    write_scene(p, scene, ascii);
    const Scene back = load_scene(p);
    REQUIRE(back.gaussians.size() == scene.gaussians.size());
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
      const auto& a = scene.gaussians[i];
      const auto& b = back.gaussians[i];
      // Mean and SH are stored raw: binary round-trip is bit-exact.
      if (!ascii) {
        CHECK(a.mean == b.mean);
        CHECK(a.sh == b.sh);
      }
      CHECK((a.mean - b.mean).norm() == doctest::Approx(0.0f).epsilon(1e-6));
      CHECK(a.opacity == doctest::Approx(b.opacity).epsilon(1e-6));
      for (int k = 0; k < 3; ++k)
        CHECK(a.scale[k] == doctest::Approx(b.scale[k]).epsilon(1e-6));
      CHECK(std::abs(a.rotation.dot(b.rotation)) ==
            doctest::Approx(1.0f).epsilon(1e-6));
    }
  }
}

TEST_CASE("repeated loads are identical") {
  std::mt19937_64 rng(12);
  Scene scene;
  scene.gaussians.push_back(random_gaussian(rng, 1));
  const auto p = temp_file("det.ply");
  write_scene(p, scene);
  const Scene a = load_scene(p), b = load_scene(p);
  CHECK(a.gaussians[0].mean == b.gaussians[0].mean);
  CHECK(a.gaussians[0].sh == b.gaussians[0].sh);
  CHECK(a.gaussians[0].opacity == b.gaussians[0].opacity);
}

TEST_CASE("sh_degree_limit truncates higher bands") {
  std::mt19937_64 rng(13);
  Scene scene;
  scene.gaussians.push_back(random_gaussian(rng, 3));
  const auto p = temp_file("trunc.ply");
  write_scene(p, scene);
  LoadStats stats;
  const Scene back = load_scene(p, 1, &stats);
  CHECK(stats.sh_degree == 1);
  REQUIRE(back.gaussians[0].sh.size() == 12);
  for (int k = 0; k < 12; ++k)
    CHECK(back.gaussians[0].sh[k] == scene.gaussians[0].sh[k]);
}

TEST_CASE("evaluate_sh: zero DC gives (0.5, 0.5, 0.5)") {
  Gaussian3D g;  // default sh = {0,0,0}, degree 0
  const auto c = evaluate_sh(g, Eigen::Vector3f::UnitZ());
  CHECK(c.x() == doctest::Approx(0.5f));
  CHECK(c.y() == doctest::Approx(0.5f));
  CHECK(c.z() == doctest::Approx(0.5f));
}

TEST_CASE("evaluate_sh: degree 0 is direction independent") {
  Gaussian3D g;
  g.sh = {0.7f, -0.2f, 1.4f};
  std::mt19937_64 rng(14);
  std::normal_distribution<float> n(0.0f, 1.0f);
  const auto ref = evaluate_sh(g, Eigen::Vector3f::UnitX());
  for (int k = 0; k < 32; ++k) {
    const Eigen::Vector3f d =
        Eigen::Vector3f(n(rng), n(rng), n(rng)).normalized();
    CHECK((evaluate_sh(g, d) - ref).norm() == doctest::Approx(0.0f));
  }
}

TEST_CASE("evaluate_sh: degree 3 matches direct polynomial oracle") {
  // Independent evaluation of the 16 real SH basis polynomials.
  auto basis = [](int c, float x, float y, float z) -> double {
    switch (c) {
      case 0: return 0.28209479177387814;
      case 1: return -0.4886025119029199 * y;
      case 2: return 0.4886025119029199 * z;
      case 3: return -0.4886025119029199 * x;
      case 4: return 1.0925484305920792 * x * y;
      case 5: return -1.0925484305920792 * y * z;
      case 6: return 0.31539156525252005 * (2 * z * z - x * x - y * y);
      case 7: return -1.0925484305920792 * x * z;
      case 8: return 0.5462742152960396 * (x * x - y * y);
      case 9: return -0.5900435899266435 * y * (3 * x * x - y * y);
      case 10: return 2.890611442640554 * x * y * z;
      case 11: return -0.4570457994644658 * y * (4 * z * z - x * x - y * y);
      case 12:
        return 0.3731763325901154 * z * (2 * z * z - 3 * x * x - 3 * y * y);
      case 13: return -0.4570457994644658 * x * (4 * z * z - x * x - y * y);
      case 14: return 1.445305721320277 * z * (x * x - y * y);
      case 15: return -0.5900435899266435 * x * (x * x - 3 * y * y);
    }
    return 0;
  };

  std::mt19937_64 rng(15);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    const Gaussian3D g = random_gaussian(rng, 3);
    const Eigen::Vector3f d =
        Eigen::Vector3f(n(rng), n(rng), n(rng)).normalized();
    Eigen::Vector3d expect = Eigen::Vector3d::Zero();
    for (int c = 0; c < 16; ++c)
      for (int ch = 0; ch < 3; ++ch)
        expect[ch] += basis(c, d.x(), d.y(), d.z()) * g.sh[std::size_t(3 * c + ch)];
    expect.array() += 0.5;
    expect = expect.cwiseMax(0.0).cwiseMin(1.0);
    const Eigen::Vector3f got = evaluate_sh(g, d);
    for (int ch = 0; ch < 3; ++ch)
      CHECK(got[ch] == doctest::Approx(float(expect[ch])).epsilon(1e-5));
  }
}

TEST_CASE("poses: identity 1280x720 fov 90 has fx = 640") {
  const Camera cam =
      Camera::from_fov(Eigen::Matrix4f::Identity(), 90.0f, 1280, 720);
  CHECK(cam.fx == doctest::Approx(640.0f).epsilon(1e-6));

  const auto p = temp_file("poses.json");
  write_poses(p, {cam, cam, cam});
  const auto back = load_poses(p);
  REQUIRE(back.size() == 3);
  CHECK(back[0].fx == doctest::Approx(640.0f));
  CHECK(back[0].width == 1280);
}

TEST_CASE("poses: order preserved over many cameras") {
  std::vector<Camera> cams;
  for (int i = 0; i < 100; ++i) {
    Eigen::Matrix4f w2c = Eigen::Matrix4f::Identity();
    w2c(0, 3) = float(i);
    cams.push_back(Camera::from_fov(w2c, 90.0f, 640, 480));
  }
  const auto p = temp_file("poses100.json");
  write_poses(p, cams);
  const auto back = load_poses(p);
  REQUIRE(back.size() == 100);
  for (int i = 0; i < 100; ++i)
    CHECK(back[std::size_t(i)].world_to_camera(0, 3) == doctest::Approx(float(i)));
}

TEST_CASE("camera: unaligned height rejected") {
  CHECK_THROWS_AS(Camera::from_fov(Eigen::Matrix4f::Identity(), 90.0f, 1280, 700),
                  ConfigError);
}

TEST_CASE("camera: fov inconsistent with focal rejected") {
  Camera cam = Camera::from_fov(Eigen::Matrix4f::Identity(), 90.0f, 640, 480);
  cam.fov_deg = 60.0f;
  CHECK_THROWS_AS(cam.validate(), ConfigError);
}
