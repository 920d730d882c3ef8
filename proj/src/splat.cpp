#include "a3fr/splat.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace a3fr {

namespace {
// Anti-aliasing floor added to the 2D covariance diagonal before inversion.
constexpr float kCovDilation = 0.3f;
}

std::vector<Splat2D> project(const Scene& scene, const Camera& cam,
                             float near_plane, ProjectStats* stats) {
  cam.validate();
  const Eigen::Matrix3f w = cam.rotation();
  const Eigen::Vector3f t = cam.translation();
  const Eigen::Vector3f eye = cam.camera_center();

  std::vector<Splat2D> splats;
  splats.reserve(scene.gaussians.size());
  ProjectStats local;

  for (const auto& g : scene.gaussians) {
    const Eigen::Vector3f p = w * g.mean + t;  // camera space
    if (p.z() <= near_plane) {
      ++local.dropped_near_plane;
      continue;
    }
    const float iz = 1.0f / p.z();

    // Affine Jacobian of the pinhole projection at the point.
    Eigen::Matrix<float, 2, 3> jac;
    jac << cam.fx * iz, 0, -cam.fx * p.x() * iz * iz,
           0, cam.fy * iz, -cam.fy * p.y() * iz * iz;

    const Eigen::Matrix<float, 2, 3> jw = jac * w;
    Eigen::Matrix2f cov2d = jw * g.covariance() * jw.transpose();
    cov2d(0, 0) += kCovDilation;
    cov2d(1, 1) += kCovDilation;

    const float det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
    if (!(det > 0.0f) || !(cov2d(0, 0) > 0.0f) || !std::isfinite(det)) {
      ++local.dropped_degenerate;
      continue;
    }

    const float mid = 0.5f * (cov2d(0, 0) + cov2d(1, 1));
    const float lambda_max =
        mid + std::sqrt(std::max(0.01f, mid * mid - det));

    Splat2D s;
    s.mean2d = {cam.fx * p.x() * iz + cam.cx, cam.fy * p.y() * iz + cam.cy};
    const float inv_det = 1.0f / det;
    s.conic_a = cov2d(1, 1) * inv_det;
    s.conic_b = -cov2d(0, 1) * inv_det;
    s.conic_c = cov2d(0, 0) * inv_det;
    s.depth = p.z();
    s.opacity = g.opacity;
    s.radius_px = std::max(1.0f, std::ceil(3.0f * std::sqrt(lambda_max)));
    s.color = evaluate_sh(g, (g.mean - eye).normalized());
    splats.push_back(s);
  }
  if (stats) *stats = local;
  return splats;
}

void TileWorkset::tile_rect(int tile, int& x0, int& y0, int& x1, int& y1) const {
  const int tx = tile % tiles_x, ty = tile / tiles_x;
  x0 = tx * kTileSize;
  y0 = ty * kTileSize;
  x1 = std::min(x0 + kTileSize, camera.width);
  y1 = std::min(y0 + kTileSize, camera.height);
}

TileWorkset build_workset(std::vector<Splat2D> splats, const Camera& cam) {
  const auto t0 = std::chrono::steady_clock::now();
  TileWorkset ws;
  ws.camera = cam;
  ws.tiles_x = tiles_x_for(cam.width);
  ws.tiles_y = tiles_y_for(cam.height);
  ws.splats = std::move(splats);
  ws.tile_splats.assign(std::size_t(ws.tile_count()), {});

  for (std::uint32_t i = 0; i < ws.splats.size(); ++i) {
    const auto& s = ws.splats[i];
    // Axis-aligned square of half-width radius_px, clipped to the grid.
    const int tx0 = std::clamp(int(std::floor((s.mean2d.x() - s.radius_px) / kTileSize)),
                               0, ws.tiles_x - 1);
    const int tx1 = std::clamp(int(std::floor((s.mean2d.x() + s.radius_px) / kTileSize)),
                               0, ws.tiles_x - 1);
    const int ty0 = std::clamp(int(std::floor((s.mean2d.y() - s.radius_px) / kTileSize)),
                               0, ws.tiles_y - 1);
    const int ty1 = std::clamp(int(std::floor((s.mean2d.y() + s.radius_px) / kTileSize)),
                               0, ws.tiles_y - 1);
    if (s.mean2d.x() + s.radius_px < 0 || s.mean2d.y() + s.radius_px < 0 ||
        s.mean2d.x() - s.radius_px > float(cam.width) ||
        s.mean2d.y() - s.radius_px > float(cam.height))
      continue;  // fully off screen
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        ws.tile_splats[std::size_t(ty) * ws.tiles_x + tx].push_back(i);
  }

  for (auto& list : ws.tile_splats) {
    std::sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) {
      const float da = ws.splats[a].depth, db = ws.splats[b].depth;
      return da != db ? da < db : a < b;
    });
  }

  ws.build_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return ws;
}

void dump_workset(std::ostream& os, const TileWorkset& ws) {
  os << "workset " << ws.tiles_x << "x" << ws.tiles_y << " splats "
     << ws.splats.size() << "\n";
  for (int t = 0; t < ws.tile_count(); ++t) {
    const auto& list = ws.tile_splats[std::size_t(t)];
    if (list.empty()) continue;
    os << "tile " << t % ws.tiles_x << "," << t / ws.tiles_x << ":";
    for (auto i : list) os << " " << i << "/" << ws.splats[i].depth;
    os << "\n";
  }
}

}  // namespace a3fr
