#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <filesystem>
#include <string>
#include <vector>

#include "a3fr/errors.hpp"

namespace a3fr {

// One anisotropic 3D Gaussian in world space. Stored post-activation:
// scale holds per-axis std-devs, opacity is in (0,1], rotation is unit.
struct Gaussian3D {
  Eigen::Vector3f mean = Eigen::Vector3f::Zero();
  Eigen::Vector3f scale = Eigen::Vector3f::Ones();
  Eigen::Quaternionf rotation = Eigen::Quaternionf::Identity();  // (w,x,y,z)
  float opacity = 1.0f;
  // SH color coefficients, coefficient-major: sh[3*c + channel],
  // 3*(deg+1)^2 floats total, deg in 0..3.
  std::vector<float> sh{0.0f, 0.0f, 0.0f};

  int sh_degree() const;
  Eigen::Matrix3f covariance() const;  // R * diag(scale^2) * R^T
};

struct Camera {
  Eigen::Matrix4f world_to_camera = Eigen::Matrix4f::Identity();
  float fx = 0, fy = 0;
  float cx = 0, cy = 0;
  int width = 0, height = 0;
  float fov_deg = 0;  // horizontal, consistent with fx

  // Throws ConfigError when the invariants do not hold: positive focal,
  // dimensions divisible by the block alignment, fov consistent with fx.
  void validate() const;

  Eigen::Matrix3f rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Eigen::Vector3f translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  Eigen::Vector3f camera_center() const;  // world-space eye position

  static Camera make(const Eigen::Matrix4f& world_to_camera, float fx, float fy,
                     float cx, float cy, int width, int height);
  // Pinhole with the given horizontal fov, principal point at the center.
  static Camera from_fov(const Eigen::Matrix4f& world_to_camera, float fov_deg,
                         int width, int height);
};

struct Scene {
  std::string name;
  std::vector<Gaussian3D> gaussians;
  Eigen::AlignedBox3f bbox;

  void recompute_bbox();
  void validate() const;  // non-empty, bbox contains all means
};

// Per-point stats from the most recent load, for reporting.
struct LoadStats {
  std::size_t points = 0;
  int sh_degree = 0;
};

// Reads a 3DGS point-cloud export (PLY, binary little-endian or ascii).
// Applies the standard activations: logistic opacity, exp scale, quaternion
// normalization. SH bands above sh_degree_limit are truncated.
Scene load_scene(const std::filesystem::path& path, int sh_degree_limit = 3,
                 LoadStats* stats = nullptr);

// Writes a scene in the same layout load_scene reads (inverse activations).
void write_scene(const std::filesystem::path& path, const Scene& scene,
                 bool ascii = false);

// JSON array of {world_to_camera (16 floats row-major), fx, fy, cx, cy, W, H}.
std::vector<Camera> load_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, const std::vector<Camera>& cams);

// Evaluates the real SH color of a Gaussian toward view_dir (unit vector),
// including the 3DGS DC offset of +0.5, clamped at zero.
Eigen::Vector3f evaluate_sh(const Gaussian3D& g, const Eigen::Vector3f& view_dir);

}  // namespace a3fr
