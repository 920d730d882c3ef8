#include "a3fr/foveation.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace a3fr {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

void FoveationConfig::validate() const {
  if (rho_d <= 0) throw ConfigError("foveation: rho_d must be positive");
  if (theta_i_deg <= 0) throw ConfigError("foveation: theta_i must be positive");
  if (delta_theta_deg < 0) throw ConfigError("foveation: negative delta_theta");
  if (!(band_edges_deg[0] < band_edges_deg[1] &&
        band_edges_deg[1] < band_edges_deg[2]))
    throw ConfigError("foveation: band edges must be strictly increasing");
  if (band_edges_deg[0] != theta_i_deg)
    throw ConfigError("foveation: first band edge must equal theta_i");
}

double FoveationConfig::deg_to_px(double deg) const {
  return rho_d * std::tan(deg * kDegToRad);
}

double FoveationConfig::px_to_deg(double px) const {
  return std::atan(px / rho_d) / kDegToRad;
}

FoveationConfig FoveationConfig::for_camera(const Camera& cam) {
  FoveationConfig cfg;
  cfg.rho_d = cam.width / (2.0 * std::tan(cam.fov_deg * kDegToRad / 2.0));
  return cfg;
}

double foveal_radius_px(const FoveationConfig& cfg) {
  cfg.validate();
  if (cfg.theta_f_deg() >= 90.0)
    throw ConfigError("foveal_radius: theta_i + delta_theta must be < 90 deg");
  return cfg.deg_to_px(cfg.theta_f_deg());
}

void FoveationProfile::validate() const {
  if (n_exits < 2) throw ConfigError("profile: need at least 2 exits");
  const double r_fn = r_f_px.back();
  for (int i = 0; i < n_exits; ++i) {
    if (i > 0 && r_f_px[std::size_t(i)] < r_f_px[std::size_t(i - 1)] - 1e-9)
      throw ConfigError("profile: r_f must be non-decreasing");
    if (r_max_px[std::size_t(i)] < r_fn - 1e-9)
      throw ConfigError("profile: r_max below r_f[N]");
    const double bound = std::max(0.0, r_fn - expected_dist_px[std::size_t(i)]);
    if (r_f_px[std::size_t(i)] > bound + 1e-9)
      throw ConfigError("profile: r_f exceeds incremental bound");
  }
}

FoveationProfile profile_exits(const std::vector<Eigen::Vector2d>& sigmas_deg,
                               long samples, std::uint64_t seed,
                               const FoveationConfig& cfg) {
  cfg.validate();
  const int n = int(sigmas_deg.size());
  if (n < 2) throw ConfigError("profile_exits: need at least 2 exits");
  if (samples < 1) throw ConfigError("profile_exits: need at least 1 sample");
  for (const auto& s : sigmas_deg)
    if (s.x() < 0 || s.y() < 0)
      throw ConfigError("profile_exits: negative sigma");

  const double r_fn = foveal_radius_px(cfg);
  FoveationProfile prof;
  prof.n_exits = n;
  prof.expected_dist_deg.assign(std::size_t(n), 0.0);
  prof.expected_dist_px.assign(std::size_t(n), 0.0);

  const Eigen::Vector2d sig_n = sigmas_deg.back();
  for (int i = 0; i < n - 1; ++i) {
    // Independent draws per exit pair; the final exit's own distance is 0.
    std::mt19937_64 rng(seed + std::uint64_t(i) * 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> unit(0.0, 1.0);
    const Eigen::Vector2d sig_i = sigmas_deg[std::size_t(i)];
    double sum_deg = 0.0, sum_px = 0.0;
    for (long k = 0; k < samples; ++k) {
      const double dx = unit(rng) * sig_i.x() - unit(rng) * sig_n.x();
      const double dy = unit(rng) * sig_i.y() - unit(rng) * sig_n.y();
      const double dist_deg = std::hypot(dx, dy);
      sum_deg += dist_deg;
      sum_px += cfg.deg_to_px(dist_deg);
    }
    prof.expected_dist_deg[std::size_t(i)] = sum_deg / double(samples);
    prof.expected_dist_px[std::size_t(i)] = sum_px / double(samples);
  }

  prof.r_f_px.resize(std::size_t(n));
  prof.r_max_px.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const double e = prof.expected_dist_px[std::size_t(i)];
    prof.r_f_px[std::size_t(i)] = std::max(0.0, r_fn - e);
    prof.r_max_px[std::size_t(i)] = r_fn + e;
  }
  prof.validate();
  return prof;
}

void FoveationProfile::save(const std::filesystem::path& path) const {
  nlohmann::json j{{"n_exits", n_exits},
                   {"expected_dist_deg", expected_dist_deg},
                   {"expected_dist_px", expected_dist_px},
                   {"r_f_px", r_f_px},
                   {"r_max_px", r_max_px}};
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << j.dump(1) << "\n";
}

FoveationProfile FoveationProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open");
  nlohmann::json j;
  in >> j;
  FoveationProfile p;
  p.n_exits = j.at("n_exits").get<int>();
  p.expected_dist_deg = j.at("expected_dist_deg").get<std::vector<double>>();
  p.expected_dist_px = j.at("expected_dist_px").get<std::vector<double>>();
  p.r_f_px = j.at("r_f_px").get<std::vector<double>>();
  p.r_max_px = j.at("r_max_px").get<std::vector<double>>();
  p.validate();
  return p;
}

int band_level(const FoveationConfig& cfg, double eccentricity_deg) {
  for (int b = 0; b < 3; ++b)
    if (eccentricity_deg <= cfg.band_edges_deg[std::size_t(b)])
      return cfg.band_levels[std::size_t(b)];
  return cfg.band_levels[3];
}

std::vector<std::uint8_t> level_requests(const Eigen::Vector2f& gaze,
                                         double inner_r, double outer_r,
                                         const FoveationConfig& cfg,
                                         const Camera& cam) {
  if (inner_r > outer_r)
    throw ConfigError("level_requests: inner_r exceeds outer_r");
  cfg.validate();
  const int tiles_x = tiles_x_for(cam.width), tiles_y = tiles_y_for(cam.height);
  std::vector<std::uint8_t> req(std::size_t(tiles_x) * tiles_y,
                                std::uint8_t(cfg.band_levels[3]));
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const double x0 = tx * kTileSize, y0 = ty * kTileSize;
      const double cx = (x0 + std::min(x0 + kTileSize, double(cam.width))) / 2.0;
      const double cy = (y0 + std::min(y0 + kTileSize, double(cam.height))) / 2.0;
      const double d = std::hypot(cx - gaze.x(), cy - gaze.y());
      if (d > outer_r) continue;
      const int level = band_level(cfg, cfg.px_to_deg(d));
      req[std::size_t(ty) * tiles_x + tx] = std::uint8_t(level);
    }
  }
  return req;
}

std::vector<std::uint8_t> disk_request(const Eigen::Vector2f& gaze, double radius,
                                       const Camera& cam, int level) {
  const int tiles_x = tiles_x_for(cam.width), tiles_y = tiles_y_for(cam.height);
  std::vector<std::uint8_t> req(std::size_t(tiles_x) * tiles_y, 0);
  if (radius <= 0) return req;
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const double x0 = tx * kTileSize, y0 = ty * kTileSize;
      const double x1 = std::min(x0 + kTileSize, double(cam.width));
      const double y1 = std::min(y0 + kTileSize, double(cam.height));
      // Distance from the gaze to the tile rectangle.
      const double dx = std::max({x0 - gaze.x(), 0.0, gaze.x() - x1});
      const double dy = std::max({y0 - gaze.y(), 0.0, gaze.y() - y1});
      if (dx * dx + dy * dy <= radius * radius)
        req[std::size_t(ty) * tiles_x + tx] = std::uint8_t(level);
    }
  }
  return req;
}

}  // namespace a3fr
