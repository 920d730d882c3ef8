#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "a3fr/scene.hpp"
#include "a3fr/splat.hpp"

namespace a3fr {

// Geometry of the eccentricity bands. rho_d is the pixels-per-unit-tan
// factor (display pixel density times viewing distance).
struct FoveationConfig {
  double rho_d = 0;
  double theta_i_deg = 18.0;     // high-acuity eccentricity
  double delta_theta_deg = 0.0;  // tracker-error margin
  std::array<double, 3> band_edges_deg{18.0, 27.0, 33.0};
  std::array<int, 4> band_levels{4, 3, 2, 1};  // fovea outward

  double theta_f_deg() const { return theta_i_deg + delta_theta_deg; }
  void validate() const;

  double deg_to_px(double deg) const;
  double px_to_deg(double px) const;

  // rho_d such that the horizontal half-fov maps to W/2 pixels, i.e. fx.
  static FoveationConfig for_camera(const Camera& cam);
};

// r_f = rho_d * tan(theta_i + delta_theta). Throws ConfigError at >= 90 deg.
double foveal_radius_px(const FoveationConfig& cfg);

// Per-exit radii profiled offline from the tracker error statistics.
struct FoveationProfile {
  int n_exits = 0;
  std::vector<double> expected_dist_deg;  // E[dist(u_i, u_N)]
  std::vector<double> expected_dist_px;
  std::vector<double> r_f_px;    // incremental foveal radius per exit
  std::vector<double> r_max_px;  // speculative cap per exit

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static FoveationProfile load(const std::filesystem::path& path);
};

// Monte-Carlo estimate of E[dist(u_i, u_N)] with independent bivariate
// normal errors per exit (sigmas in degrees), then radii from the
// incremental and speculative formulas. Deterministic per seed.
FoveationProfile profile_exits(const std::vector<Eigen::Vector2d>& sigmas_deg,
                               long samples, std::uint64_t seed,
                               const FoveationConfig& cfg);

// Dense per-tile level request: tiles whose center lies within outer_r of
// the gaze get their eccentricity band's level, the rest the peripheral
// level. inner_r is caller bookkeeping only; requests are absolute.
std::vector<std::uint8_t> level_requests(const Eigen::Vector2f& gaze,
                                         double inner_r, double outer_r,
                                         const FoveationConfig& cfg,
                                         const Camera& cam);

// Conservative foveal-disk request: every tile whose rectangle intersects
// the disk gets level 4. Used for incremental and speculative disks so the
// rendered region always covers the requested circle.
std::vector<std::uint8_t> disk_request(const Eigen::Vector2f& gaze, double radius,
                                       const Camera& cam, int level = 4);

int band_level(const FoveationConfig& cfg, double eccentricity_deg);

}  // namespace a3fr
